"""Ancestor correlators: extraction from the n-point table and the
residue-identity checkers that tie the table to the quadratic constraints.

Extraction inverts the expansion of an n-point form in terms of insertion
weights.  The weight of the insertion (psi power k, flat index a) at branch j
is a Laurent series with leading term -2 (2k+1)!! psi[a][j] s^(-2k-2); each
R-correction climbs by two in the exponent, so the linear system is
triangular in total pole depth and the tensor of leading weights factorizes
slotwise through psi, which a single matrix inverse undoes.  The solve is
deliberately overdetermined: after all keys are recovered, the full predicted
expansion must reproduce every certified coefficient of every branch tuple.

The quadratic-constraint checker reassembles its residue weight directly from
period pairings (sharing no code with the engine's kernel object) and
compares against the correlator-level left side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product

from .frobenius import double_factorial
from .linalg import mat_inv, transpose
from .localforms import FormContext, propagator_p0
from .recursion import ConsistencyError, OmegaTable, TruncationOrderError, stable_entries
from .report import Report
from .series import (
    MultiForm,
    Rat,
    Var,
    WindowError,
    agreement_mismatch,
    invert,
    monomial,
    zero_form,
)

Insertion = tuple[int, int]  # (psi power k, flat index a)


@dataclass(frozen=True)
class CorrelatorKey:
    g: int
    insertions: tuple[Insertion, ...]

    @staticmethod
    def make(g: int, insertions) -> "CorrelatorKey":
        return CorrelatorKey(g, tuple(sorted((int(k), int(a)) for k, a in insertions)))

    @property
    def n(self) -> int:
        return len(self.insertions)

    def psi_degree(self) -> int:
        return sum(k for k, _ in self.insertions)

    def tame(self) -> bool:
        return self.psi_degree() <= 3 * self.g - 3 + self.n


@dataclass
class CorrelatorTable:
    """Exact correlator values keyed by genus and insertion multiset."""

    values: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def put(self, key: CorrelatorKey, value: Rat, source: str) -> None:
        if key in self.values and self.values[key] != value:
            raise ConsistencyError(
                f"conflicting values for {key}: {self.values[key]} vs {value}"
            )
        self.values[key] = value
        self.provenance[key] = source

    def get(self, g: int, insertions) -> Rat:
        key = CorrelatorKey.make(g, insertions)
        if not key.tame():
            return Rat(0)
        if 2 * key.g - 2 + key.n <= 0:
            return Rat(0)
        if key not in self.values:
            raise ConsistencyError(f"correlator {key} has not been extracted")
        return self.values[key]

    def items(self):
        return sorted(
            self.values.items(), key=lambda kv: (kv[0].g, kv[0].n, kv[0].insertions)
        )


def insertion_weight(ctx: FormContext, j: int, k: int, a: int, v: Var) -> MultiForm:
    """Series multiplying <... v_a psi^k ...> in the branch-j expansion."""
    dlam = monomial(v, 1, 1, deg=1)
    return (ctx.period_dual(j, k + 1, a, v) * dlam).scale((-1) ** k)


def _weight_data(ctx, cache, j: int, k: int, a: int):
    """Weight series as a plain dict with its window, for fast convolution."""
    key = (j, k, a)
    if key not in cache:
        w = insertion_weight(ctx, j, k, a, Var("w", j))
        cache[key] = ({e: c for (e,), c in w.coeffs.items()}, w.lo[0], w.hi[0])
    return cache[key]


def _weight_coeff(ctx, cache, j: int, k: int, a: int, e: int) -> Rat:
    d, lo, hi = _weight_data(ctx, cache, j, k, a)
    if e > hi:
        raise WindowError(f"weight ({k},{a}) at branch {j} not certified at {e}")
    return d.get(e, Rat(0))


def _arrangements(pairs: tuple[Insertion, ...]):
    return sorted(set(permutations(pairs)))


def extract_correlators(
    table: OmegaTable, g: int, n: int, into: CorrelatorTable | None = None
) -> CorrelatorTable:
    """Solve the coefficient-matching system for all (g, n) correlators.

    Keys are processed by decreasing total psi degree so that each leading
    exponent tuple only sees already-solved deeper keys.  Keys beyond the
    tameness bound must come out zero, and the fully reassembled expansion
    must match the computed table entry on its certified window; both are
    hard errors otherwise.
    """
    ctx = table.ctx
    nb = ctx.data.n
    out = into if into is not None else CorrelatorTable()
    kslot = 3 * g - 3 + n
    if kslot < 0:
        raise ConsistencyError(f"({g},{n}) is unstable")
    source = f"omega({g},{n})"

    inv_psi_t = transpose(mat_inv(ctx.data.psi_m()))
    jvecs = list(product(range(1, nb + 1), repeat=n))
    omegas = {jv: table.omega(g, jv) for jv in jvecs}
    wcache: dict = {}

    solved: dict[tuple[Insertion, ...], Rat] = {}

    def predicted_at(jv, exps) -> Rat:
        total = Rat(0)
        for pairs, val in solved.items():
            if val == 0:
                continue
            for arr in _arrangements(pairs):
                prod_c = val
                for m in range(n):
                    prod_c *= _weight_coeff(ctx, wcache, jv[m], arr[m][0], arr[m][1], exps[m])
                    if prod_c == 0:
                        break
                total += prod_c
        return total

    kvecs: list[tuple[int, ...]] = []

    def gen(start, left, acc):
        if left == 0:
            kvecs.append(tuple(acc))
            return
        for k in range(start, kslot + 1):
            gen(k, left - 1, acc + [k])

    gen(0, n, [])
    kvecs.sort(key=lambda kv: (-sum(kv), kv))

    for kvec in kvecs:
        exps = tuple(-2 * k - 2 for k in kvec)
        try:
            resid = {
                jv: omegas[jv].coefficient(exps) - predicted_at(jv, exps)
                for jv in jvecs
            }
        except WindowError as exc:
            raise TruncationOrderError(
                f"extraction at ({g},{n}) psi-degrees {kvec} not certified: {exc}"
            ) from exc
        staged: dict[tuple[Insertion, ...], Rat] = {}
        for avec in product(range(1, nb + 1), repeat=n):
            val = Rat(0)
            for jv, r in resid.items():
                if r == 0:
                    continue
                c = r
                for m in range(n):
                    c *= inv_psi_t[avec[m] - 1][jv[m] - 1]
                val += c
            scale = 1
            for k in kvec:
                scale *= -2 * double_factorial(2 * k + 1)
            val = val / scale
            pairs = tuple(sorted(zip(kvec, avec)))
            if pairs in staged:
                if staged[pairs] != val:
                    raise ConsistencyError(
                        f"extraction inconsistent at {pairs}: {staged[pairs]} vs {val}"
                    )
            else:
                staged[pairs] = val
        for pairs, val in staged.items():
            solved[pairs] = val
            if sum(k for k, _ in pairs) > kslot:
                if val != 0:
                    raise ConsistencyError(
                        f"nonzero correlator {pairs} beyond the tameness bound: {val}"
                    )
            else:
                out.put(CorrelatorKey(g, pairs), val, source)

    # overdetermined residual: every certified coefficient must be explained.
    # Assembled with plain-dict convolutions (one MultiForm per branch tuple);
    # the window of the reassembly is the usual sum rule over all summands,
    # computed first so the convolution can prune outside it as it goes.
    from .series import INF

    live = [(pairs, val) for pairs, val in solved.items() if val != 0]
    for jv in jvecs:
        form = omegas[jv]
        his = [INF] * n
        los = [0] * n
        for pairs, val in live:
            for arr in _arrangements(pairs):
                for m in range(n):
                    _, wlo, whi = _weight_data(ctx, wcache, jv[m], arr[m][0], arr[m][1])
                    his[m] = min(his[m], whi)
                    los[m] = min(los[m], wlo)
        acc: dict[tuple, Rat] = {}
        for pairs, val in live:
            for arr in _arrangements(pairs):
                partial: dict[tuple, Rat] = {(): val}
                for m in range(n):
                    d, _, _ = _weight_data(ctx, wcache, jv[m], arr[m][0], arr[m][1])
                    nxt: dict[tuple, Rat] = {}
                    for e, c in partial.items():
                        for ew, cw in d.items():
                            if ew > his[m]:
                                continue
                            key = e + (ew,)
                            nxt[key] = nxt.get(key, Rat(0)) + c * cw
                    partial = nxt
                for e, c in partial.items():
                    acc[e] = acc.get(e, Rat(0)) + c
        trimmed = {e: c for e, c in acc.items() if c != 0}
        predicted = MultiForm(form.vars, form.degs, trimmed, tuple(los), tuple(his))
        bad = agreement_mismatch(predicted, form)
        if bad is not None:
            raise ConsistencyError(
                f"extraction residual at branches {jv} of ({g},{n}): "
                f"coefficient {bad[0]} predicted {bad[1]}, computed {bad[2]}"
            )
    return out


def extract_all(table: OmegaTable, bound: int | None = None) -> CorrelatorTable:
    """Extract every correlator with 2g - 2 + n up to the table bound."""
    out = CorrelatorTable()
    for g, n in stable_entries(bound if bound is not None else table.bound):
        extract_correlators(table, g, n, into=out)
    return out


def insertion_reconstruct_check(
    ctx: FormContext, k: int, a: int, m_hi: int | None = None
) -> Report:
    """Half-loop residues against the negative-frequency pairing rebuild an
    insertion: the residue sum over branches of the pairing of v_a z^k with
    the descending series, times the full local expansion series, must return
    exactly v_a psi^k.  Exactness is required component by component."""
    rep = Report()
    n = ctx.data.n
    if m_hi is None:
        m_hi = k + 2
    name = f"insertion-reconstruction-(k={k},a={a})"
    for m in range(-2, m_hi + 1):
        for b in range(1, n + 1):
            expected = Rat(1) if (m == k and b == a) else Rat(0)
            total = Rat(0)
            try:
                for j in range(1, n + 1):
                    y = Var("y", j)
                    pair_neg = ctx.period_basis(j, -k - 1, a, y)
                    phi_comp = ctx.period_dual(j, m + 1, b, y)
                    f = pair_neg * phi_comp * monomial(y, 1, 1, deg=1)
                    total += f.residue_half_loop(y).coefficient(())
            except WindowError:
                rep.add(name, False, f"window exhausted at psi power {m}")
                return rep
            got = Fraction(-1, 2) * (-1) ** m * total
            if got != expected:
                rep.add(
                    name, False, f"psi power {m}, component {b}: {got} != {expected}"
                )
                return rep
    rep.add(name, True)
    return rep


def _constraint_weight(
    ctx: FormContext, i_ext: int, j: int, rv: Var, y: Var, kmax: int
) -> MultiForm:
    """Residue weight of the quadratic constraints, rebuilt from periods.

    Quarter of the positive/negative commutator pairing over the normalizing
    one-point pairing, with the global orientation folded in; intentionally
    assembled from scratch rather than through the engine's kernel.
    """
    drv = monomial(rv, 1, 1, deg=1)
    acc = zero_form((rv, y), (1, 0))
    for k in range(kmax + 1):
        pair = zero_form((rv, y), (0, 0))
        for c in range(1, ctx.data.n + 1):
            pair = pair + ctx.period_dual(i_ext, k + 1, c, rv) * ctx.period_basis(
                j, -k - 1, c, y
            )
        acc = acc + (pair * drv).scale((-1) ** (k + 1))
    acc = acc.cap_hi(y, 2 * kmax + 2)
    denom = ctx.period_unit(j, -1, y) * monomial(y, 1, 1, deg=1)
    if denom.is_zero() or denom.coefficient((2,)) == 0:
        raise ConsistencyError(f"degenerate normalizing pairing at branch {j}")
    if ctx.r.exact:
        inv_order = 2 * kmax + 2
    else:
        inv_order = min(2 * ctx.r.order + 1, 2 * kmax + 2)
    return (acc * invert(denom, y, order=inv_order)).scale(Fraction(-1, 4))


def _assembled_factor(
    ctx: FormContext,
    corr: CorrelatorTable,
    g1: int,
    sub: tuple[Insertion, ...],
    j: int,
    y: Var,
    wcache: dict,
) -> MultiForm | None:
    """One splitting factor of the constraint bracket, as a y-series."""
    n1 = len(sub) + 1
    if 2 * g1 - 2 + n1 <= 0:
        if (g1, n1) == (0, 2):
            k, a = sub[0]
            return (ctx.period_basis(j, -k, a, y) * monomial(y, 1, 1, deg=1)).scale(-1)
        return None
    budget = 3 * g1 - 3 + n1 - sum(k for k, _ in sub)
    acc = zero_form((y,), (1,))
    if budget < 0:
        return acc
    for k in range(budget + 1):
        for b in range(1, ctx.data.n + 1):
            val = corr.get(g1, ((k, b),) + sub)
            if val == 0:
                continue
            acc = acc + _cached_weight(ctx, wcache, j, k, b, y).scale(val)
    return acc


def _cached_weight(ctx, wcache, j, k, b, y: Var) -> MultiForm:
    key = (j, k, b, y.name, y.branch)
    if key not in wcache:
        wcache[key] = insertion_weight(ctx, j, k, b, y)
    return wcache[key]


def virasoro_check(
    ctx: FormContext,
    corr: CorrelatorTable,
    g: int,
    insertions,
    i_ext: int = 1,
) -> Report:
    """Exact identity between the assembled constraint sides.

    Left: the branch-i series of (g, n+1)-correlators with the given
    insertions.  Right: branch residues of the period-assembled weight times
    the loop term plus all ordered splittings, with the two unstable
    conventions (negative-frequency pairing and the diagonal propagator).
    Both sides are Laurent series in the external variable; they must agree
    on the certified window, which must reach the full pole depth.
    """
    rep = Report()
    ins = tuple((int(k), int(a)) for k, a in insertions)
    n = len(ins)
    name = f"constraint-(g={g},ins={ins},branch={i_ext})"
    if 2 * g - 2 + (n + 1) <= 0:
        raise ConsistencyError("constraint check needs a stable left side")
    rv = Var("r", i_ext)
    wcache: dict = {}

    lhs = zero_form((rv,), (1,))
    lhs_budget = 3 * g - 3 + (n + 1) - sum(k for k, _ in ins)
    for k in range(max(lhs_budget, -1) + 1):
        for a in range(1, ctx.data.n + 1):
            val = corr.get(g, ((k, a),) + ins)
            if val == 0:
                continue
            lhs = lhs + _cached_weight(ctx, wcache, i_ext, k, a, rv).scale(val)

    rhs: MultiForm | None = None
    for j in range(1, ctx.data.n + 1):
        y = Var("y", j)
        pieces: list[MultiForm] = []
        if g >= 1:
            if g == 1 and n == 0:
                pieces.append(propagator_p0(ctx, j, y))
            else:
                loop_budget = 3 * (g - 1) - 3 + (n + 2) - sum(k for k, _ in ins)
                acc = zero_form((y,), (2,))
                for k1 in range(max(loop_budget, -1) + 1):
                    for b1 in range(1, ctx.data.n + 1):
                        w1 = _cached_weight(ctx, wcache, j, k1, b1, y)
                        for k2 in range(max(loop_budget - k1, -1) + 1):
                            for b2 in range(1, ctx.data.n + 1):
                                val = corr.get(g - 1, ((k1, b1), (k2, b2)) + ins)
                                if val == 0:
                                    continue
                                acc = acc + (
                                    w1 * _cached_weight(ctx, wcache, j, k2, b2, y)
                                ).scale(val)
                pieces.append(acc)
        for g1 in range(0, g + 1):
            for mask in range(1 << n):
                left = tuple(ins[m] for m in range(n) if mask >> m & 1)
                right = tuple(ins[m] for m in range(n) if not mask >> m & 1)
                if g1 == 0 and not left:
                    continue
                if g - g1 == 0 and not right:
                    continue
                f1 = _assembled_factor(ctx, corr, g1, left, j, y, wcache)
                f2 = _assembled_factor(ctx, corr, g - g1, right, j, y, wcache)
                pieces.append(f1 * f2)
        if not pieces:
            continue
        bracket = pieces[0]
        for p in pieces[1:]:
            bracket = bracket + p
        iy = bracket.index_of(y)
        depth = -bracket.lo[iy] if bracket.lo[iy] < 0 else 0
        kmax = max(depth // 2, (2 * (3 * g - 2 + n + 1) - 2) // 2, 0)
        weight = _constraint_weight(ctx, i_ext, j, rv, y, kmax)
        term = (weight * bracket).residue_half_loop(y)
        rhs = term if rhs is None else rhs + term

    if rhs is None:
        rhs = zero_form((rv,), (1,))
    deepest = min((e for (e,) in lhs.coeffs), default=0)
    hi_common = min(lhs.hi[0], rhs.hi[0])
    if hi_common < -2 or rhs.lo[0] > deepest:
        rep.add(name, False, "window exhausted before the identity is visible")
        return rep
    bad = agreement_mismatch(lhs, rhs)
    rep.add(
        name,
        bad is None,
        "" if bad is None else f"sides differ at {bad[0]}: {bad[1]} vs {bad[2]}",
    )
    return rep
