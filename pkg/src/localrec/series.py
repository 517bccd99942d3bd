"""Sparse multivariate Laurent forms over exact rationals, with truncation windows.

Every quantity in this package is a finite Laurent expansion in local branch
variables ``s_j`` attached to the double cover ``lambda = u_j + s_j**2 / 2``.
A :class:`MultiForm` stores such an expansion together with

* a form degree per variable (the number of ``ds`` factors carried, from -1
  for kernel denominators up to 2 for the symmetric square ``dlambda.dlambda``),
* a per-variable *window* ``[lo, hi]`` recording which coefficients are
  certified.

Window semantics (the propagation rule used throughout):

* a coefficient at exponent tuple ``E`` is certified exact whenever
  ``E[v] <= hi[v]`` for every variable; unstored certified coefficients are 0;
* ``lo[v]`` is a support bound: within the certified region nothing lives
  below ``lo``; it exists so that products can propagate ``hi`` honestly;
* coefficients with some ``E[v] > hi[v]`` are unknown, never zero.  Truncated
  input series (the R-matrix) make the high-order tail untrustworthy, and the
  window is what stops a silent truncation error from looking like a result.

Addition takes ``lo = min``, ``hi = min``.  Multiplication takes
``lo = a.lo + b.lo`` and ``hi = min(a.hi + b.lo, b.hi + a.lo)`` per variable:
an unknown coefficient of one factor can first contaminate the product at its
own exponent plus the other factor's support bound.  This rule is sound as
long as at most one variable is finitely windowed in both factors at once
(checked at runtime); every product formed by this package satisfies it.

All values are immutable after construction and all operations are pure, so
forms may be shared freely across threads.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

Rat = Fraction

#: Window sentinel meaning "certified at every exponent in this direction".
INF = 10**9


class SeriesError(Exception):
    """Base class for exact-series failures."""


class WindowError(SeriesError):
    """A coefficient outside the certified window was required."""


class DegreeError(SeriesError):
    """Form degrees or variable sets are incompatible."""


class MonodromyError(SeriesError):
    """An integrand fed to a branch residue is not single valued."""


class Var:
    """A local expansion variable tagged with the branch point it lives at."""

    __slots__ = ("name", "branch")

    def __init__(self, name: str, branch: int = 1):
        self.name = name
        self.branch = branch

    def __repr__(self) -> str:
        return f"Var({self.name!r}, {self.branch})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Var)
            and self.name == other.name
            and self.branch == other.branch
        )

    def __hash__(self) -> int:
        return hash((self.name, self.branch))

    def __lt__(self, other: "Var") -> bool:
        return self.name < other.name


def _wadd(a: int, b: int) -> int:
    """Add window bounds, saturating at the +infinity sentinel."""
    if a >= INF or b >= INF:
        return INF
    return a + b


class MultiForm:
    """Sparse Laurent form: exponent tuples -> rationals, plus degrees and windows.

    Instances are immutable; arithmetic returns fresh objects.  Variables are
    kept sorted by name and exponent tuples follow that order, which makes
    iteration (and serialized output) deterministic.
    """

    __slots__ = ("vars", "degs", "lo", "hi", "coeffs")

    def __init__(
        self,
        vars: Iterable[Var],
        degs: Iterable[int],
        coeffs: Mapping[tuple, Rat | int],
        lo: Iterable[int],
        hi: Iterable[int],
    ):
        vs = tuple(vars)
        dg = tuple(degs)
        lo_t = tuple(lo)
        hi_t = tuple(hi)
        if not (len(vs) == len(dg) == len(lo_t) == len(hi_t)):
            raise DegreeError("vars, degs and windows must have equal length")
        names = [v.name for v in vs]
        if len(set(names)) != len(names):
            raise DegreeError(f"duplicate variable names: {names}")
        order = sorted(range(len(vs)), key=lambda i: vs[i].name)
        self.vars = tuple(vs[i] for i in order)
        self.degs = tuple(dg[i] for i in order)
        self.lo = tuple(lo_t[i] for i in order)
        self.hi = tuple(hi_t[i] for i in order)
        for d in self.degs:
            if d < -1 or d > 2:
                raise DegreeError(f"form degree {d} outside [-1, 2]")
        clean: dict[tuple, Rat] = {}
        for exps, c in coeffs.items():
            c = Rat(c)
            if c == 0:
                continue
            e = tuple(exps[i] for i in order)
            for x, l, h in zip(e, self.lo, self.hi):
                if x < l or x > h:
                    raise WindowError(f"exponent {e} outside window")
            clean[e] = c
        self.coeffs = clean

    # -- basic queries ----------------------------------------------------

    def index_of(self, v: Var) -> int:
        try:
            return self.vars.index(v)
        except ValueError:
            raise DegreeError(f"{v!r} not a variable of this form") from None

    def coefficient(self, exps: tuple) -> Rat:
        """Certified coefficient at an exponent tuple (0 if absent)."""
        if len(exps) != len(self.vars):
            raise DegreeError("exponent tuple has wrong length")
        for x, h in zip(exps, self.hi):
            if x > h:
                raise WindowError(f"coefficient at {exps} not certified")
        return self.coeffs.get(tuple(exps), Rat(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def support_min(self, v: Var) -> int | None:
        """Smallest stored exponent of ``v``, or None for no stored terms."""
        i = self.index_of(v)
        if not self.coeffs:
            return None
        return min(e[i] for e in self.coeffs)

    def support_max(self, v: Var) -> int | None:
        i = self.index_of(v)
        if not self.coeffs:
            return None
        return max(e[i] for e in self.coeffs)

    def items(self):
        """Deterministic (exponents, coefficient) iteration."""
        return sorted(self.coeffs.items())

    def __repr__(self) -> str:
        names = ",".join(f"{v.name}@{v.branch}" for v in self.vars)
        return f"MultiForm({names}; degs={self.degs}; {len(self.coeffs)} terms)"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiForm)
            and self.vars == other.vars
            and self.degs == other.degs
            and self.lo == other.lo
            and self.hi == other.hi
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.vars, self.degs, self.lo, self.hi, tuple(self.items())))

    # -- ring operations --------------------------------------------------

    def __neg__(self) -> "MultiForm":
        return MultiForm(
            self.vars, self.degs, {e: -c for e, c in self.coeffs.items()}, self.lo, self.hi
        )

    def __add__(self, other: "MultiForm") -> "MultiForm":
        if not isinstance(other, MultiForm):
            return NotImplemented
        if self.vars != other.vars or self.degs != other.degs:
            raise DegreeError("sum requires identical variables and degrees")
        lo = tuple(min(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        out: dict[tuple, Rat] = {}
        for e, c in self.coeffs.items():
            if all(x <= h for x, h in zip(e, hi)):
                out[e] = c
        for e, c in other.coeffs.items():
            if all(x <= h for x, h in zip(e, hi)):
                out[e] = out.get(e, Rat(0)) + c
        return MultiForm(self.vars, self.degs, out, lo, hi)

    def __sub__(self, other: "MultiForm") -> "MultiForm":
        return self + (-other)

    def scale(self, c: Rat | int) -> "MultiForm":
        c = Rat(c)
        return MultiForm(
            self.vars, self.degs, {e: c * v for e, v in self.coeffs.items()}, self.lo, self.hi
        )

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, MultiForm):
            return NotImplemented
        return _mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    # -- form-specific operations ------------------------------------------

    def reflect(self, v: Var) -> "MultiForm":
        """Deck transformation s -> -s of one branch variable.

        Each ``ds`` factor contributes a sign along with the exponent, so a
        coefficient at exponent e flips by (-1)**(e + deg).
        """
        i = self.index_of(v)
        d = self.degs[i]
        out = {}
        for e, c in self.coeffs.items():
            out[e] = -c if (e[i] + d) % 2 else c
        return MultiForm(self.vars, self.degs, out, self.lo, self.hi)

    def residue_half_loop(self, v: Var) -> "MultiForm":
        """Residue in lambda at the branch point of ``v``.

        One lambda-loop around the branch point lifts to half an s-loop on the
        double cover, hence the factor 1/2 on the s**-1 coefficient.  The
        integrand must carry exactly one ds factor, must be certified at
        exponent -1, and must be invariant under :meth:`reflect` (otherwise it
        is not single valued in lambda and the residue is meaningless).
        """
        i = self.index_of(v)
        if self.degs[i] != 1:
            raise DegreeError(f"residue needs degree 1 in {v.name}, got {self.degs[i]}")
        if self.hi[i] < -1:
            raise WindowError(
                f"window of {v.name} tops out at {self.hi[i]}, cannot certify the pole slice"
            )
        for e, c in self.coeffs.items():
            if (e[i] + 1) % 2:
                raise MonodromyError(
                    f"integrand not reflection invariant in {v.name}: term {e} -> {c}"
                )
        keep = [j for j in range(len(self.vars)) if j != i]
        out: dict[tuple, Rat] = {}
        for e, c in self.coeffs.items():
            if e[i] == -1:
                out[tuple(e[j] for j in keep)] = c / 2
        return MultiForm(
            tuple(self.vars[j] for j in keep),
            tuple(self.degs[j] for j in keep),
            out,
            tuple(self.lo[j] for j in keep),
            tuple(self.hi[j] for j in keep),
        )

    def cap_hi(self, v: Var, new_hi: int) -> "MultiForm":
        """Shrink the certified window of ``v`` (used after truncating a sum)."""
        i = self.index_of(v)
        if new_hi >= self.hi[i]:
            return self
        hi = list(self.hi)
        hi[i] = new_hi
        out = {e: c for e, c in self.coeffs.items() if e[i] <= new_hi}
        return MultiForm(self.vars, self.degs, out, self.lo, tuple(hi))

    def raise_lo(self, v: Var, new_lo: int) -> "MultiForm":
        """Tighten the support bound of ``v``; stored terms below it must not exist."""
        i = self.index_of(v)
        if new_lo <= self.lo[i]:
            return self
        for e in self.coeffs:
            if e[i] < new_lo:
                raise SeriesError(
                    f"cannot raise lo of {v.name} to {new_lo}: term at {e} present"
                )
        lo = list(self.lo)
        lo[i] = new_lo
        return MultiForm(self.vars, self.degs, self.coeffs, tuple(lo), self.hi)

    def rename(self, mapping: Mapping[str, Var]) -> "MultiForm":
        """Rename (and possibly re-brand) variables; exponents follow along."""
        new_vars = tuple(mapping.get(v.name, v) for v in self.vars)
        perm = sorted(range(len(new_vars)), key=lambda i: new_vars[i].name)
        return MultiForm(
            tuple(new_vars[i] for i in perm),
            tuple(self.degs[i] for i in perm),
            {tuple(e[i] for i in perm): c for e, c in self.coeffs.items()},
            tuple(self.lo[i] for i in perm),
            tuple(self.hi[i] for i in perm),
        )

    def merge_diagonal(self, v1: Var, v2: Var, target: Var) -> "MultiForm":
        """Evaluate two variables on the diagonal: substitute both by ``target``.

        Exponents and degrees add; the window follows the multiplication rule
        since the merged coefficient is a convolution of the two slots.
        """
        i1, i2 = self.index_of(v1), self.index_of(v2)
        if v1.branch != v2.branch:
            raise DegreeError("diagonal merge requires variables at the same branch")
        keep = [j for j in range(len(self.vars)) if j not in (i1, i2)]
        new_vars = tuple(self.vars[j] for j in keep) + (target,)
        new_degs = tuple(self.degs[j] for j in keep) + (self.degs[i1] + self.degs[i2],)
        lo = tuple(self.lo[j] for j in keep) + (_wadd(self.lo[i1], self.lo[i2]),)
        hi = tuple(self.hi[j] for j in keep) + (
            min(_wadd(self.hi[i1], self.lo[i2]), _wadd(self.hi[i2], self.lo[i1])),
        )
        out: dict[tuple, Rat] = {}
        top = hi[-1]
        for e, c in self.coeffs.items():
            m = e[i1] + e[i2]
            if m > top:
                continue
            key = tuple(e[j] for j in keep) + (m,)
            out[key] = out.get(key, Rat(0)) + c
        return MultiForm(new_vars, new_degs, out, lo, hi)


def _mul(a: MultiForm, b: MultiForm) -> MultiForm:
    """Cauchy product with window propagation (rule in the module docstring)."""
    union: dict[str, Var] = {}
    for v in a.vars + b.vars:
        seen = union.get(v.name)
        if seen is not None and seen.branch != v.branch:
            raise DegreeError(f"variable {v.name} used at two branches")
        union[v.name] = v
    vs = tuple(sorted(union.values()))

    def lift(f: MultiForm):
        # Position of each union variable inside f, or None (then exponent 0,
        # degree 0, window [0, INF]: f is exactly constant in that direction).
        pos = []
        for v in vs:
            pos.append(f.vars.index(v) if v in f.vars else None)
        degs = [f.degs[p] if p is not None else 0 for p in pos]
        lo = [f.lo[p] if p is not None else 0 for p in pos]
        hi = [f.hi[p] if p is not None else INF for p in pos]
        return pos, degs, lo, hi

    pa, da, la, ha = lift(a)
    pb, db, lb, hb = lift(b)

    shared_finite = sum(1 for i in range(len(vs)) if ha[i] < INF and hb[i] < INF)
    if shared_finite > 1:
        raise SeriesError(
            "product of two truncated expansions sharing several variables; "
            "window propagation would be unsound"
        )

    degs = tuple(x + y for x, y in zip(da, db))
    for d in degs:
        if d < -1 or d > 2:
            raise DegreeError(f"resulting form degree {d} outside [-1, 2]")
    lo = tuple(_wadd(x, y) for x, y in zip(la, lb))
    hi = tuple(
        min(_wadd(ha[i], lb[i]), _wadd(hb[i], la[i])) for i in range(len(vs))
    )

    out: dict[tuple, Rat] = {}
    bs = [
        (tuple(e[p] if p is not None else 0 for p in pb), c)
        for e, c in b.coeffs.items()
    ]
    for ea, ca in a.coeffs.items():
        ea_l = tuple(ea[p] if p is not None else 0 for p in pa)
        for eb_l, cb in bs:
            e = tuple(x + y for x, y in zip(ea_l, eb_l))
            if any(x > h for x, h in zip(e, hi)):
                continue
            out[e] = out.get(e, Rat(0)) + ca * cb
    return MultiForm(vs, degs, out, lo, hi)


# -- constructors ----------------------------------------------------------


def monomial(v: Var, exp: int, coeff: Rat | int = 1, deg: int = 0) -> MultiForm:
    """Exact single-term form ``coeff * v**exp`` with ``deg`` ds factors."""
    return MultiForm((v,), (deg,), {(exp,): Rat(coeff)}, (exp,), (INF,))


def d_unit(v: Var) -> MultiForm:
    """The bare differential factor attached to ``v`` (exponent 0, degree 1)."""
    return MultiForm((v,), (1,), {(0,): Rat(1)}, (0,), (INF,))


def constant(c: Rat | int) -> MultiForm:
    return MultiForm((), (), {(): Rat(c)}, (), ())


def zero_form(vars: Iterable[Var], degs: Iterable[int]) -> MultiForm:
    vs = tuple(vars)
    return MultiForm(vs, tuple(degs), {}, (0,) * len(vs), (INF,) * len(vs))


def laurent(v: Var, terms: Mapping[int, Rat | int], deg: int = 0) -> MultiForm:
    """Exact finite Laurent polynomial in one variable."""
    exps = list(terms) or [0]
    return MultiForm(
        (v,), (deg,), {(e,): Rat(c) for e, c in terms.items()}, (min(exps),), (INF,)
    )


def geometric_expand(m: int, r: Var, s: Var, s_max: int) -> MultiForm:
    """Annulus expansion of 1/(r - s)**m in the region |s| < |r|.

    Sum over k >= 0 of C(m-1+k, m-1) s**k r**(-m-k), truncated at s**s_max.
    The r window reaches down to the deepest materialized pole; above -m the
    true coefficients vanish identically, so the r window is open upward.
    """
    if m < 1:
        raise SeriesError("geometric_expand needs a positive pole order")
    if s_max < 0:
        raise WindowError("empty s window")
    coeffs: dict[tuple, Rat] = {}
    c = Rat(1)
    for k in range(s_max + 1):
        # C(m-1+k, m-1), built incrementally
        if k > 0:
            c = c * (m - 1 + k) / k
        coeffs[(-m - k, k)] = c
    f = MultiForm(
        (r, s), (0, 0), coeffs, (-m - s_max, 0), (INF, s_max)
    )
    return f


def invert(f: MultiForm, v: Var, order: int | None = None) -> MultiForm:
    """Exact reciprocal of a single-variable expansion with invertible lead.

    ``order`` is the number of certified corrections past the leading term; it
    defaults to everything the window of ``f`` supports and is mandatory when
    ``f`` is an exact polynomial (whose reciprocal is an infinite series).
    The result valuation is minus the input valuation, and the input must
    actually have a nonzero coefficient there.
    """
    if f.vars != (v,):
        raise DegreeError("invert expects a form in exactly the given variable")
    if f.is_zero():
        raise SeriesError("cannot invert the zero series")
    val = min(e[0] for e in f.coeffs)
    lead = f.coeffs[(val,)]
    max_order = f.hi[0] - val if f.hi[0] < INF else None
    if order is None:
        if max_order is None:
            raise WindowError("invert of an exact polynomial needs an explicit order")
        order = max_order
    elif max_order is not None and order > max_order:
        raise WindowError(
            f"requested {order} reciprocal terms, window certifies only {max_order}"
        )
    g: dict[int, Rat] = {-val: 1 / lead}
    for t in range(1, order + 1):
        acc = Rat(0)
        for i in range(1, t + 1):
            ci = f.coeffs.get((val + i,))
            if ci:
                gj = g.get(-val + t - i)
                if gj:
                    acc += ci * gj
        if acc:
            g[-val + t] = -acc / lead
    out = {(e,): c for e, c in g.items() if c != 0}
    return MultiForm((v,), (-f.degs[0],), out, (-val,), (-val + order,))


def agreement_mismatch(a: MultiForm, b: MultiForm):
    """First disagreement of two forms on their common certified window.

    Returns None when they agree, else ``(exponents, value_a, value_b)``.
    Variables and degrees must match; windows may differ.
    """
    if a.vars != b.vars or a.degs != b.degs:
        raise DegreeError("cannot compare forms over different variables/degrees")
    hi = tuple(min(x, y) for x, y in zip(a.hi, b.hi))
    keys = set(a.coeffs) | set(b.coeffs)
    for e in sorted(keys):
        if all(x <= h for x, h in zip(e, hi)):
            va = a.coeffs.get(e, Rat(0))
            vb = b.coeffs.get(e, Rat(0))
            if va != vb:
                return e, va, vb
    return None
