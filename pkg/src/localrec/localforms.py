"""Local expansions at the branch points: periods, one- and two-point forms,
the regularized diagonal propagator, and the recursion kernel.

Everything is expanded in the double-cover coordinate s with
lambda = u_j + s**2 / 2, dlambda = s ds.  That substitution turns every
half-integer power of (lambda - u_j) into an integer power of s with rational
coefficient, so the entire pipeline stays over the rationals.  The fixed
positive-s branch is the reference section; the deck transformation
s -> -s (``MultiForm.reflect``) realizes the local monodromy.

Sign convention.  A single global orientation is free in the residue setup;
it is fixed once by requiring the three-point genus-zero output of the
recursion to give <tau_0^3> = +1, and every other sign (kernel prefactor,
unstable pairing orientation) is locked to that choice by unit tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .frobenius import CanonicalData, RMatrix, VTable, compute_vkl, double_factorial
from .linalg import mat_vec
from .report import Report
from .series import (
    INF,
    MultiForm,
    Rat,
    SeriesError,
    Var,
    WindowError,
    agreement_mismatch,
    d_unit,
    geometric_expand,
    invert,
    monomial,
    zero_form,
)


class RouteDisagreement(SeriesError):
    """Two independent constructions of the same object differ."""


class DegenerateDatum(SeriesError):
    """A leading coefficient required to be nonzero vanished."""


def a1_period(k: int, v: Var) -> MultiForm:
    """Local period of the one-dimensional model, pulled back to s.

    For k >= 0 this is 2 (-1)^k (2k-1)!! s^(-2k-1); for k = -(m+1) it is
    2 s^(2m+1) / (2m+1)!!.  Exact monomials, so the window is unbounded.
    """
    if k >= 0:
        return monomial(v, -2 * k - 1, Rat(2 * (-1) ** k * double_factorial(2 * k - 1)))
    m = -k - 1
    return monomial(v, 2 * m + 1, Fraction(2, double_factorial(2 * m + 1)))


def _a1_data(k: int) -> tuple[int, Rat]:
    if k >= 0:
        return -2 * k - 1, Rat(2 * (-1) ** k * double_factorial(2 * k - 1))
    m = -k - 1
    return 2 * m + 1, Fraction(2, double_factorial(2 * m + 1))


@dataclass
class FormContext:
    """Shared datum + R-matrix together with the caches every builder uses."""

    data: CanonicalData
    r: RMatrix
    _columns: dict = field(default_factory=dict, repr=False)
    _vtables: dict = field(default_factory=dict, repr=False)
    _one_point: dict = field(default_factory=dict, repr=False)
    _periods: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.data.n != self.r.n:
            raise DegenerateDatum("datum and R-matrix have different sizes")

    # -- pairing ingredients ------------------------------------------------

    def column(self, l: int, j: int) -> tuple[Rat, ...]:
        """Flat components of psi R_l e_j."""
        key = (l, j)
        if key not in self._columns:
            rl = self.r.mat(l)
            e = [rl[i][j - 1] for i in range(self.data.n)]
            self._columns[key] = tuple(mat_vec(self.data.psi_m(), e))
        return self._columns[key]

    def eta_column(self, l: int, j: int) -> tuple[Rat, ...]:
        key = ("eta", l, j)
        if key not in self._columns:
            self._columns[key] = tuple(
                mat_vec(self.data.eta_m(), list(self.column(l, j)))
            )
        return self._columns[key]

    def unit_pairing(self, l: int, j: int) -> Rat:
        """(psi R_l e_j, 1) evaluated through eta."""
        ec = self.eta_column(l, j)
        return sum((x * y for x, y in zip(ec, self.data.unit)), Rat(0))

    def vtable(self, top: int) -> VTable:
        if top not in self._vtables:
            self._vtables[top] = compute_vkl(self.r, top)
        return self._vtables[top]

    def max_vkl_top(self) -> int:
        return 2 * self.r.order - 1 if self.r.exact else self.r.order - 1

    # -- period expansions ----------------------------------------------------

    def _period_series(self, kind, j: int, k: int, extra, v: Var, weights) -> MultiForm:
        key = (kind, j, k, extra, v.name, v.branch)
        cached = self._periods.get(key)
        if cached is not None:
            return cached
        coeffs: dict[tuple, Rat] = {}
        for l in range(self.r.order + 1):
            w = weights(l)
            if w == 0:
                continue
            exp, c = _a1_data(k - l)
            val = (-1) ** l * w * c
            if val:
                coeffs[(exp,)] = coeffs.get((exp,), Rat(0)) + val
        lo = -2 * k - 1
        hi = INF if self.r.exact else 2 * self.r.order - 2 * k
        out = MultiForm((v,), (0,), coeffs, (lo,), (hi,))
        self._periods[key] = out
        return out

    def period_dual(self, j: int, k: int, a: int, v: Var) -> MultiForm:
        """Flat component a of the period I^(k) at branch j, i.e. (I^(k), v^a)."""
        return self._period_series(
            "dual", j, k, a, v, lambda l: self.column(l, j)[a - 1]
        )

    def period_basis(self, j: int, k: int, a: int, v: Var) -> MultiForm:
        """(I^(k), v_a): the eta-lowered component."""
        return self._period_series(
            "basis", j, k, a, v, lambda l: self.eta_column(l, j)[a - 1]
        )

    def period_unit(self, j: int, k: int, v: Var) -> MultiForm:
        """(I^(k), 1)."""
        return self._period_series(
            "unit", j, k, 0, v, lambda l: self.unit_pairing(l, j)
        )


def period_vector(ctx: FormContext, j: int, k: int, v: Var) -> tuple[MultiForm, ...]:
    """All N flat components of the period I^(k) at branch j."""
    return tuple(
        ctx.period_dual(j, k, a, v) for a in range(1, ctx.data.n + 1)
    )


def one_point_form(ctx: FormContext, j: int, v: Var) -> MultiForm:
    """The one-point form P^j(lambda) dlambda as an s-series with one ds.

    Built by two routes that must agree: 4 (I^(-1), 1) dlambda, and the
    closing Taylor expansion whose half powers of 2 cancel exactly against
    the pullback (the cancellation is asserted, not assumed).
    """
    key = (j, v.name, v.branch)
    if key in ctx._one_point:
        return ctx._one_point[key]
    dlam = monomial(v, 1, 1, deg=1)
    route1 = (ctx.period_unit(j, -1, v) * dlam).scale(4)

    coeffs: dict[tuple, Rat] = {}
    for k in range(ctx.r.order + 1):
        pair = ctx.unit_pairing(k, j)
        if pair == 0:
            continue
        # 8 (-1)^k 2^(k+1/2) / (2k+1)!! times the pullback of
        # (lambda - u_j)^(k+1/2), which is s^(2k+1) 2^(-k-1/2)
        half_twos = (2 * k + 1) + (-(2 * k + 1))
        assert half_twos % 2 == 0
        two_power = Rat(2) ** (half_twos // 2)
        c = Rat(8 * (-1) ** k, double_factorial(2 * k + 1)) * pair * two_power
        coeffs[(2 * k + 2,)] = c  # the trailing dlambda = s ds adds one power
    hi = INF if ctx.r.exact else 2 * ctx.r.order + 3
    route2 = MultiForm((v,), (1,), coeffs, (2,), (hi,))

    bad = agreement_mismatch(route1, route2)
    if bad is not None:
        raise RouteDisagreement(f"one-point form routes differ at {bad}")
    ctx._one_point[key] = route1
    return route1


def _pairing_sum(
    ctx: FormContext, i: int, j: int, k_r: int, k_s: int, rv: Var, sv: Var
) -> MultiForm:
    """sum_c (I^(k_r) at branch i in rv, v^c) (I^(k_s) at branch j in sv, v_c)."""
    acc = zero_form((rv, sv), (0, 0))
    for c in range(1, ctx.data.n + 1):
        term = ctx.period_dual(i, k_r, c, rv) * ctx.period_basis(j, k_s, c, sv)
        acc = acc + term
    return acc


def two_point_form(
    ctx: FormContext, i: int, j: int, rv: Var, sv: Var, s_hi: int
) -> MultiForm:
    """The two-point form B(rv, sv) drv dsv, singular in rv, regular in sv.

    Route A is the mode sum of period pairings; route B is the universal
    double-pole part (for i = j) plus the polynomial part carried by the
    closing matrices.  They are compared coefficient for coefficient on the
    common window and route A (the wider one) is returned.  For i = j the
    expansion is taken in the annulus |sv| < |rv|.
    """
    kmax = max(s_hi // 2, 0)
    drv = monomial(rv, 1, 1, deg=1)
    dsv = monomial(sv, 1, 1, deg=1)
    acc = zero_form((rv, sv), (1, 1))
    for k in range(kmax + 1):
        term = _pairing_sum(ctx, i, j, k + 1, -k, rv, sv)
        acc = acc + (term * drv * dsv).scale((-1) ** (k + 1))
    route_a = acc.cap_hi(sv, 2 * kmax + 1)

    top = ctx.max_vkl_top()
    vt = ctx.vtable(top) if top >= 0 else None
    parts = []
    if i == j:
        geo = geometric_expand(2, rv, sv, 2 * kmax + 1)
        sing = (geo + geo.reflect(sv)).scale(2)
        parts.append(sing * d_unit(rv) * d_unit(sv))
    if vt is not None:
        # the polynomial part: 4 V_(k,l)[i,j] r^2k s^2l / ((2k-1)!! (2l-1)!!),
        # restricted to a box inside the certified triangle k + l <= top
        a_cap = top if ctx.r.exact else top // 2
        b_cap = top if ctx.r.exact else top - top // 2
        coeffs: dict[tuple, Rat] = {}
        for kk in range(0, a_cap + 1):
            for ll in range(0, min(b_cap, top - kk) + 1):
                val = vt.mat(kk, ll)[i - 1][j - 1]
                if val:
                    c = Rat(4) * val / (
                        double_factorial(2 * kk - 1) * double_factorial(2 * ll - 1)
                    )
                    coeffs[(2 * kk, 2 * ll)] = c
        hi_r = INF if ctx.r.exact else 2 * a_cap + 1
        hi_s = INF if ctx.r.exact else 2 * b_cap + 1
        parts.append(MultiForm((rv, sv), (1, 1), coeffs, (0, 0), (hi_r, hi_s)))
    if parts:
        route_b = parts[0]
        for p in parts[1:]:
            route_b = route_b + p
    else:
        route_b = zero_form((rv, sv), (1, 1))

    bad = agreement_mismatch(route_a, route_b)
    if bad is not None:
        raise RouteDisagreement(
            f"two-point form routes differ for branches ({i},{j}) at {bad}"
        )
    return route_a


def _sqrt_one_plus(v: Var, order: int) -> MultiForm:
    """(1 + x)^(1/2) as an exact truncated series."""
    coeffs: dict[tuple, Rat] = {(0,): Rat(1)}
    c = Rat(1)
    for m in range(1, order + 1):
        c = c * (Fraction(1, 2) - (m - 1)) / m
        coeffs[(m,)] = c
    return MultiForm((v,), (0,), coeffs, (0,), (order,))


def diagonal_expansion_weights(order: int) -> dict[int, Rat]:
    """Coefficients W_m of the universal double-pole part near the diagonal.

    Substituting r = s (1 + x)^(1/2), x = 2 eps / s^2, into the i = j
    singular part gives 2 s^-4 W(x) with
    W = ((sqrt(1+x) - 1)^-2 + (sqrt(1+x) + 1)^-2) / sqrt(1+x); the
    coefficient of eps^m in the diagonal expansion is then
    2 W_m 2^m s^(-4-2m).  W_-2 = 4 and W_-1 = 0 encode the normalized
    second-order pole with no residue, which is asserted by the caller.
    """
    x = Var("_x", 0)
    u = _sqrt_one_plus(x, order + 4)
    one = monomial(x, 0, 1)
    um1 = u - one
    up1 = u + one
    inv_m = invert(um1 * um1, x)
    inv_p = invert(up1 * up1, x)
    w = (inv_m + inv_p) * invert(u, x, order=order + 3)
    out: dict[int, Rat] = {}
    for m in range(-2, order + 1):
        out[m] = w.coefficient((m,))
    return out


def propagator_p0(ctx: FormContext, j: int, v: Var) -> MultiForm:
    """The coinciding-argument two-point value P_0 dlambda.dlambda at branch j.

    The free term of the diagonal expansion has a universal piece from the
    double pole (expanded via :func:`diagonal_expansion_weights`) and an
    analytic piece from the closing matrices evaluated on the diagonal.
    """
    w = diagonal_expansion_weights(0)
    if w[-2] != 4 or w[-1] != 0:
        raise RouteDisagreement(
            f"diagonal normalization broken: eps^-2 weight {w[-2]}, eps^-1 weight {w[-1]}"
        )
    coeffs: dict[tuple, Rat] = {(-4,): 2 * w[0]}

    top = ctx.max_vkl_top()
    if top >= 0:
        vt = ctx.vtable(top)
        for d in range(0, top + 1):
            c = Rat(0)
            for kk in range(0, d + 1):
                ll = d - kk
                c += Rat(4) * vt.mat(kk, ll)[j - 1][j - 1] / (
                    double_factorial(2 * kk - 1) * double_factorial(2 * ll - 1)
                )
            if c:
                coeffs[(2 * d - 2,)] = coeffs.get((2 * d - 2,), Rat(0)) + c
    hi = INF if ctx.r.exact else 2 * ctx.r.order - 3
    p0 = MultiForm((v,), (0,), coeffs, (-4,), (hi,))
    dlam2 = monomial(v, 2, 1, deg=2)
    return p0 * dlam2


def recursion_kernel(
    ctx: FormContext, i: int, j: int, rv: Var, sv: Var, kmax: int
) -> MultiForm:
    """The residue-recursion weight K(rv, sv), one drv and one inverse dsv.

    Assembled as -(1/2) times the commutator mode sum divided by the
    one-point form; the overall sign is the global orientation choice (see
    the module docstring).  ``kmax`` bounds the pole depth retained in rv,
    which must reach the pole depth of whatever K multiplies.
    """
    drv = monomial(rv, 1, 1, deg=1)
    acc = zero_form((rv, sv), (1, 0))
    for k in range(kmax + 1):
        term = _pairing_sum(ctx, i, j, k + 1, -k - 1, rv, sv)
        acc = acc + (term * drv).scale(2 * (-1) ** (k + 1))
    num = acc.cap_hi(sv, 2 * kmax + 2)

    pj = one_point_form(ctx, j, sv)
    if pj.coefficient((2,)) == 0:
        raise DegenerateDatum(
            f"one-point form at branch {j} has vanishing lead; kernel undefined"
        )
    if ctx.r.exact:
        inv_order = 2 * kmax + 2
    else:
        inv_order = min(2 * ctx.r.order + 1, 2 * kmax + 2)
    inv_pj = invert(pj, sv, order=inv_order)
    return (num * inv_pj).scale(Fraction(-1, 2))


def ope_normalization_check(ctx: FormContext, j: int, s_hi: int = 8) -> Report:
    """Resum the diagonal double pole out of the computed two-point form.

    Multiplying the annulus expansion B(r, s) by (r^2 - s^2)^2, i.e. by
    4 (mu - lambda)^2, must telescope every pole away and leave exactly
    4 (r^2 + s^2) plus the polynomial part times (r^2 - s^2)^2; this is
    verified coefficient for coefficient on the certified window.  Together
    with the universal diagonal weights (a second-order pole of strength 2
    and no residue, asserted here from the closed resummation) this pins the
    (mu - lambda)^-2 coefficient of the diagonal expansion to exactly 2.
    """
    rep = Report()
    rv, sv = Var("r", j), Var("s", j)
    if not ctx.r.exact:
        # keep some positive r window: the r window of the mode sum closes as
        # the pole depth grows, and the telescoped polynomial lives at r >= 0
        s_hi = min(s_hi, max(2 * (ctx.r.order - 2), 2))
    b = two_point_form(ctx, j, j, rv, sv, s_hi)
    poly = MultiForm(
        (rv, sv), (0, 0), {(4, 0): 1, (2, 2): -2, (0, 4): 1}, (0, 0), (INF, INF)
    )
    telescoped = b * poly

    expected = MultiForm(
        (rv, sv), (1, 1), {(2, 0): 4, (0, 2): 4}, (0, 0), (INF, INF)
    )
    top = ctx.max_vkl_top()
    if top >= 0:
        vt = ctx.vtable(top)
        a_cap = top if ctx.r.exact else top // 2
        b_cap = top if ctx.r.exact else top - top // 2
        coeffs: dict[tuple, Rat] = {}
        for kk in range(0, a_cap + 1):
            for ll in range(0, min(b_cap, top - kk) + 1):
                val = vt.mat(kk, ll)[j - 1][j - 1]
                if val:
                    coeffs[(2 * kk, 2 * ll)] = Rat(4) * val / (
                        double_factorial(2 * kk - 1) * double_factorial(2 * ll - 1)
                    )
        hi_r = INF if ctx.r.exact else 2 * a_cap + 1
        hi_s = INF if ctx.r.exact else 2 * b_cap + 1
        vpart = MultiForm((rv, sv), (1, 1), coeffs, (0, 0), (hi_r, hi_s))
        expected = expected + vpart * poly

    name = f"ope-normalization-branch-{j}"
    hi_common = tuple(min(a, b) for a, b in zip(telescoped.hi, expected.hi))
    if hi_common[telescoped.index_of(sv)] < 2:
        rep.add(name, False, "window too small to certify the diagonal slice")
        return rep
    bad = agreement_mismatch(telescoped, expected)
    if bad is not None:
        rep.add(name, False, f"telescoped expansion differs at {bad}")
        return rep
    w = diagonal_expansion_weights(0)
    # 2 W_m 2^m s^(-4-2m) is the eps^m diagonal coefficient of the universal
    # part; m = -2 must give the bare constant 2 and m = -1 must vanish
    pole_coeff = 2 * w[-2] * Fraction(1, 4)
    ok = pole_coeff == 2 and w[-1] == 0
    rep.add(
        name,
        ok,
        "" if ok else f"diagonal pole coefficient {pole_coeff}, residue weight {w[-1]}",
    )
    return rep


def hrp_check(
    ctx: FormContext, k_bound: int = 5, a_range=None, b_range=None
) -> Report:
    """Residue-pairing orthogonality of the periods.

    For every pair (k1, k2) with |k1|, |k2| <= k_bound and every flat pair
    (a, b), the half-loop residues summed over branches must give
    2 (-1)^k1 delta_ab delta_{k1+k2,0}.  Pairs whose certified window cannot
    reach the pole slice are reported as skipped rather than silently passed;
    they become certifiable once the truncation order exceeds k1 + k2.
    """
    rep = Report()
    n = ctx.data.n
    a_range = a_range or range(1, n + 1)
    b_range = b_range or range(1, n + 1)
    skipped = 0
    for k1 in range(-k_bound, k_bound + 1):
        for k2 in range(-k_bound, k_bound + 1):
            for a in a_range:
                for b in b_range:
                    expected = Rat(0)
                    if a == b and k1 + k2 == 0:
                        expected = Rat(2 * (-1) ** k1)
                    total = Rat(0)
                    try:
                        for j in range(1, n + 1):
                            sv = Var("s", j)
                            f = (
                                ctx.period_basis(j, k1, a, sv)
                                * ctx.period_dual(j, k2, b, sv)
                                * monomial(sv, 1, 1, deg=1)
                            )
                            total += f.residue_half_loop(sv).coefficient(())
                    except WindowError:
                        skipped += 1
                        continue
                    if total != expected:
                        rep.add(
                            "period-residue-orthogonality",
                            False,
                            f"(k1,k2,a,b)=({k1},{k2},{a},{b}): {total} != {expected}",
                        )
                        return rep
    rep.add(
        "period-residue-orthogonality",
        True,
        f"all certified pairs up to |k| <= {k_bound}; {skipped} window-limited pairs skipped",
    )
    return rep
