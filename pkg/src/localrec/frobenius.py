"""Semisimple canonical-coordinate data and the symplectic R-matrix.

The input datum consists of pairwise distinct critical values ``u_j``, a flat
Gram matrix ``eta``, the isometry ``psi`` from the normalized canonical frame
to flat coordinates (so that psi^T eta psi = 1), the flat components of the
unit vector, and optionally the diagonal of the grading operator in flat
coordinates.  Hessian factors are never stored separately: they enter only
through ``psi``, which keeps every coefficient rational.

The R-matrix is primarily an input.  :func:`complete_r` solves for as much of
it as a fixed semisimple point determines (off-diagonal parts from the
commutator relation, even-order diagonals from the symplectic condition); the
odd-order diagonals are genuinely free here and must be supplied as seeds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .linalg import (
    Matrix,
    identity,
    mat_add,
    mat_eq,
    mat_inv,
    mat_mul,
    mat_scale,
    mat_sub,
    transpose,
    zeros,
)
from .report import Report

Rat = Fraction


class DatumError(Exception):
    """The canonical datum or R-matrix violates a structural requirement."""


@dataclass(frozen=True)
class CanonicalData:
    """Semisimple datum at a fixed point: (u, eta, psi, unit[, theta])."""

    n: int
    u: tuple[Rat, ...]
    eta: tuple[tuple[Rat, ...], ...]
    psi: tuple[tuple[Rat, ...], ...]
    unit: tuple[Rat, ...]
    theta: tuple[Rat, ...] | None = None

    @staticmethod
    def make(u, eta, psi, unit, theta=None) -> "CanonicalData":
        u = tuple(Rat(x) for x in u)
        n = len(u)
        return CanonicalData(
            n=n,
            u=u,
            eta=tuple(tuple(Rat(x) for x in row) for row in eta),
            psi=tuple(tuple(Rat(x) for x in row) for row in psi),
            unit=tuple(Rat(x) for x in unit),
            theta=tuple(Rat(x) for x in theta) if theta is not None else None,
        )

    def eta_m(self) -> Matrix:
        return [list(row) for row in self.eta]

    def psi_m(self) -> Matrix:
        return [list(row) for row in self.psi]


def airy_datum() -> CanonicalData:
    """The one-dimensional datum: a single nondegenerate critical point at 0."""
    return CanonicalData.make(u=[0], eta=[[1]], psi=[[1]], unit=[1], theta=[0])


def decoupled_datum(u_values) -> CanonicalData:
    """N independent nondegenerate critical points (eta = psi = 1)."""
    n = len(u_values)
    return CanonicalData.make(
        u=u_values, eta=identity(n), psi=identity(n), unit=[1] * n
    )


@dataclass(frozen=True)
class RMatrix:
    """Truncated symplectic series R(z) = R_0 + R_1 z + ... + R_L z^L, R_0 = 1.

    ``exact`` declares that the series genuinely terminates at order L (all
    higher coefficients are zero), which widens every downstream window to
    infinity.  Over the rationals only R = 1 can be exactly symplectic, but
    that case (and decoupled copies of it) is the workhorse test datum.
    """

    n: int
    mats: tuple[tuple[tuple[Rat, ...], ...], ...]
    exact: bool = False

    @property
    def order(self) -> int:
        return len(self.mats) - 1

    @staticmethod
    def make(mats, exact: bool = False) -> "RMatrix":
        frozen = tuple(tuple(tuple(Rat(x) for x in row) for row in m) for m in mats)
        n = len(frozen[0])
        r = RMatrix(n=n, mats=frozen, exact=exact)
        if not mat_eq(r.mat(0), identity(n)):
            raise DatumError("R_0 must be the identity")
        return r

    @staticmethod
    def identity_r(n: int) -> "RMatrix":
        return RMatrix.make([identity(n)], exact=True)

    def mat(self, k: int) -> Matrix:
        if 0 <= k <= self.order:
            return [list(row) for row in self.mats[k]]
        if self.exact:
            return zeros(self.n)
        raise DatumError(f"R_{k} beyond truncation order {self.order}")


def validate_canonical(d: CanonicalData) -> Report:
    """Check every structural invariant; reports the offending entry on failure."""
    rep = Report()
    sizes_ok = (
        len(d.u) == d.n
        and len(d.unit) == d.n
        and len(d.eta) == d.n
        and all(len(r) == d.n for r in d.eta)
        and len(d.psi) == d.n
        and all(len(r) == d.n for r in d.psi)
        and (d.theta is None or len(d.theta) == d.n)
    )
    rep.add("shapes", sizes_ok, "" if sizes_ok else f"inconsistent sizes for N={d.n}")
    if not sizes_ok:
        return rep

    coincident = [
        (i + 1, j + 1)
        for i in range(d.n)
        for j in range(i + 1, d.n)
        if d.u[i] == d.u[j]
    ]
    rep.add(
        "distinct-critical-values",
        not coincident,
        "" if not coincident else f"coincident critical values at {coincident[0]}",
    )

    sym_bad = next(
        (
            (i + 1, j + 1)
            for i in range(d.n)
            for j in range(i + 1, d.n)
            if d.eta[i][j] != d.eta[j][i]
        ),
        None,
    )
    rep.add(
        "eta-symmetric", sym_bad is None, "" if sym_bad is None else f"entry {sym_bad}"
    )

    try:
        mat_inv(d.eta_m())
        rep.add("eta-invertible", True)
    except ValueError:
        rep.add("eta-invertible", False, "eta is singular")
        return rep

    gram = mat_mul(mat_mul(transpose(d.psi_m()), d.eta_m()), d.psi_m())
    bad = next(
        (
            (i + 1, j + 1, gram[i][j])
            for i in range(d.n)
            for j in range(d.n)
            if gram[i][j] != (1 if i == j else 0)
        ),
        None,
    )
    rep.add(
        "psi-isometry",
        bad is None,
        "" if bad is None else f"(psi^T eta psi)[{bad[0]},{bad[1]}] = {bad[2]}",
    )
    return rep


def symplectic_defect(r: RMatrix, m: int) -> Matrix:
    """sum_{a+b=m} (-1)^b R_a R_b^T, which must vanish for m >= 1."""
    acc = zeros(r.n)
    for a in range(0, m + 1):
        b = m - a
        if a > r.order or b > r.order:
            if r.exact:
                continue
            raise DatumError(f"order {m} not determined by truncation {r.order}")
        term = mat_mul(r.mat(a), transpose(r.mat(b)))
        acc = mat_add(acc, term if b % 2 == 0 else mat_scale(-1, term))
    return acc


def check_symplectic(r: RMatrix) -> Report:
    """Verify R(z) R(-z)^T = 1 order by order, exactly.

    For a truncated R only orders 1..L are determined; an exact R must satisfy
    every order up to 2L (beyond that the condition is vacuous).
    """
    rep = Report()
    top = 2 * r.order if r.exact else r.order
    for m in range(1, top + 1):
        defect = symplectic_defect(r, m)
        bad = next(
            (
                (i + 1, j + 1, defect[i][j])
                for i in range(r.n)
                for j in range(r.n)
                if defect[i][j] != 0
            ),
            None,
        )
        rep.add(
            f"symplectic-order-{m}",
            bad is None,
            "" if bad is None else f"defect[{bad[0]},{bad[1]}] = {bad[2]}",
        )
        if bad is not None:
            break
    if not rep.checks:
        rep.add("symplectic-trivial", True, "order 0 only")
    return rep


def random_symplectic_r(n: int, order: int, seed: int, coeff_bound: int = 3) -> RMatrix:
    """exp of a random infinitesimal-symplectic series, truncated at ``order``.

    The generator A(z) = sum_{k>=1} A_k z^k has A_k^T = (-1)^(k+1) A_k with
    small random rational entries, so R(z) R(-z)^T = 1 holds at every order
    the truncation determines.  Deterministic in the seed.
    """
    if order < 0:
        raise DatumError("order must be >= 0")
    rng = random.Random(seed)

    def draw() -> Rat:
        return Rat(rng.randint(-coeff_bound, coeff_bound), rng.randint(1, coeff_bound))

    a_ser: list[Matrix] = [zeros(n)]
    for k in range(1, order + 1):
        raw = [[draw() for _ in range(n)] for _ in range(n)]
        sgn = 1 if k % 2 == 1 else -1
        a_k = mat_scale(
            Rat(1, 2), mat_add(raw, mat_scale(sgn, transpose(raw)))
        )
        a_ser.append(a_k)

    # exp(A) as a z-polynomial mod z^(order+1)
    result: list[Matrix] = [identity(n)] + [zeros(n) for _ in range(order)]
    term: list[Matrix] = [identity(n)] + [zeros(n) for _ in range(order)]
    for m in range(1, order + 1):
        nxt: list[Matrix] = [zeros(n) for _ in range(order + 1)]
        for i in range(order + 1):
            if mat_eq(term[i], zeros(n)):
                continue
            for j in range(1, order + 1 - i):
                nxt[i + j] = mat_add(nxt[i + j], mat_mul(term[i], a_ser[j]))
        term = [mat_scale(Rat(1, m), x) for x in nxt]
        result = [mat_add(x, y) for x, y in zip(result, term)]
    return RMatrix.make(result, exact=False)


def grading_canonical(d: CanonicalData) -> Matrix:
    """Theta = psi^{-1} diag(theta) psi, the grading in the canonical frame."""
    if d.theta is None:
        raise DatumError("datum carries no grading data theta")
    n = d.n
    psi = d.psi_m()
    theta_flat = [[d.theta[i] if i == j else Rat(0) for j in range(n)] for i in range(n)]
    return mat_mul(mat_mul(mat_inv(psi), theta_flat), psi)


def solve_r_step(
    d: CanonicalData, theta_can: Matrix, mats: list[Matrix], k: int, diag_seed
) -> Matrix:
    """One step of R-completion: R_{k+1} from R_0..R_k.

    Off-diagonal entries come from [U, R_{k+1}] = (Theta - k) R_k with
    U = diag(u); this is solvable only when the right side has zero diagonal
    (otherwise the datum is not integrable at this order).  The diagonal of
    R_{k+1} comes from the symplectic condition at even orders and from
    ``diag_seed`` at odd orders, where a single fixed point leaves it free.
    """
    n = d.n
    rhs = mat_mul(mat_sub(theta_can, mat_scale(k, identity(n))), mats[k])
    for i in range(n):
        if rhs[i][i] != 0:
            raise DatumError(
                f"datum not integrable: diag((Theta - {k}) R_{k})[{i + 1}] = {rhs[i][i]}"
            )
    m = k + 1
    nxt = zeros(n)
    for i in range(n):
        for j in range(n):
            if i != j:
                nxt[i][j] = rhs[i][j] / (d.u[i] - d.u[j])
    mid = zeros(n)
    for a in range(1, m):
        b = m - a
        term = mat_mul(mats[a], transpose(mats[b]))
        mid = mat_add(mid, term if b % 2 == 0 else mat_scale(-1, term))
    if m % 2 == 0:
        # R_m + R_m^T = -mid fixes the diagonal (and constrains the rest,
        # which the final symplectic check enforces)
        for i in range(n):
            nxt[i][i] = -mid[i][i] / 2
    else:
        seed = diag_seed if diag_seed is not None else [Rat(0)] * n
        for i in range(n):
            nxt[i][i] = Rat(seed[i])
    return nxt


def complete_r(d: CanonicalData, order: int, diag_seeds=None) -> RMatrix:
    """Solve for R order by order from the fixed-point data.

    ``diag_seeds`` supplies the odd-order diagonals (one length-N vector per
    odd order 1, 3, 5, ..., defaulting to zero).  Raises when the datum is
    not integrable or when the assembled series fails the symplectic check;
    over the rationals that check is restrictive (a rational isometry forces
    a positive-definite eta, which rules out a nonzero antisymmetric grading),
    so nontrivial completions mostly live at N = 1 or theta = 0.
    """
    theta_can = grading_canonical(d)
    seeds: list[list[Rat]] = []
    if diag_seeds is not None:
        seeds = [[Rat(x) for x in vec] for vec in diag_seeds]

    mats: list[Matrix] = [identity(d.n)]
    for k in range(order):
        m = k + 1
        seed = None
        if m % 2 == 1:
            idx = (m - 1) // 2
            seed = seeds[idx] if idx < len(seeds) else None
        mats.append(solve_r_step(d, theta_can, mats, k, seed))

    result = RMatrix.make(mats, exact=False)
    rep = check_symplectic(result)
    if not rep.ok:
        bad = rep.failures()[0]
        raise DatumError(f"completed R violates the symplectic condition: {bad.line()}")
    return result


@dataclass(frozen=True)
class VTable:
    """Closing matrices V_{kl} with sum V_{kl} w^k z^l = (1 - R(-w)^T R(-z)) / (z + w)."""

    n: int
    top: int  # entries with k + l <= top are stored
    mats: tuple  # flattened dict as tuple of ((k, l), matrix) pairs

    def mat(self, k: int, l: int) -> Matrix:
        if k < 0 or l < 0:
            raise KeyError((k, l))
        for (kk, ll), m in self.mats:
            if (kk, ll) == (k, l):
                return [list(row) for row in m]
        if k + l <= self.top:
            return zeros(self.n)
        raise KeyError((k, l))


def compute_vkl(r: RMatrix, top: int) -> VTable:
    """Expand (1 - R(-w)^T R(-z)) / (z + w) as exact matrix power series.

    The numerator vanishes at z = -w by the symplectic condition, so the
    division is exact; if it is not, the input was not symplectic.  For a
    truncated R only k + l <= L - 1 is certified; an exact R yields the whole
    (finite) table.
    """
    n = r.n
    if not r.exact and top > r.order - 1:
        raise DatumError(
            f"V_(k,l) certified only for k+l <= {r.order - 1}; requested {top}"
        )
    a_top = top + 1  # numerator degrees needed

    def n_ab(a: int, b: int) -> Matrix:
        base = identity(n) if (a == 0 and b == 0) else zeros(n)
        if (a <= r.order and b <= r.order) or r.exact:
            ra = r.mat(a) if a <= r.order else zeros(n)
            rb = r.mat(b) if b <= r.order else zeros(n)
            prod = mat_mul(transpose(ra), rb)
            sgn = -1 if (a + b) % 2 == 0 else 1
            return mat_add(base, mat_scale(sgn, prod))
        raise DatumError(f"numerator coefficient ({a},{b}) not certified")

    v: dict[tuple[int, int], Matrix] = {}

    def v_at(k: int, l: int) -> Matrix:
        if k < 0 or l < 0:
            return zeros(n)
        return v.get((k, l), zeros(n))

    # N_{a,b} = V_{a,b-1} + V_{a-1,b}; solve row by row in a.
    for a in range(0, a_top + 1):
        for b in range(0, a_top + 1 - a):
            if a == 0 and b == 0:
                if not mat_eq(n_ab(0, 0), zeros(n)):
                    raise DatumError("numerator has a constant term; R_0 != 1?")
                continue
            if b == 0:
                # coefficient of w^a z^0: equals V_{a-1,0}
                expect = v_at(a - 1, 0)
                if not mat_eq(n_ab(a, 0), expect):
                    raise DatumError(
                        f"numerator not divisible by z+w at w^{a}: symplectic condition broken"
                    )
                continue
            v[(a, b - 1)] = mat_sub(n_ab(a, b), v_at(a - 1, b))

    out = {}
    for (k, l), m in v.items():
        if k + l <= top:
            out[(k, l)] = m
    for (k, l), m in sorted(out.items()):
        if not mat_eq(m, transpose(out[(l, k)])):
            raise DatumError(f"V_({k},{l}) != V_({l},{k})^T; symplectic condition broken")
    frozen = tuple(
        ((k, l), tuple(tuple(x for x in row) for row in m))
        for (k, l), m in sorted(out.items())
    )
    return VTable(n=n, top=top, mats=frozen)


def double_factorial(n: int) -> int:
    """(2k-1)!! style odd double factorial; defined as 1 for n in {-1, 0}."""
    if n <= 0:
        return 1
    out = 1
    while n > 0:
        out *= n
        n -= 2
    return out
