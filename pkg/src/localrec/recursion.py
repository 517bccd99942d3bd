"""The residue recursion: assembling the n-point form table.

Entries are memoized under sorted branch tuples (the raw keyspace is
factorially redundant by symmetry) and retrieved with the permutation applied
on the fly.  Each stable entry ``omega_{g,n}`` is produced by summing, over
the branch points, the half-loop residue of the kernel against a bracket made
of one loop term and all ordered splittings, with the two coinciding-argument
conventions hard-coded: a dropped one-point term and the stored diagonal
propagator for the residue-variable pair.

Window budgeting: before a truncated-R computation starts, the same code is
dry-run against a zero-dressed R of equal order (windows depend only on the
truncation order and the combination pattern, never on coefficient values),
which gives a faithful fail-fast check and a minimal sufficient order to
report.  Exact R data have unbounded windows and skip the plan.

The table is a logical map with idempotent insertion; branch residues inside
one step are independent and may be evaluated concurrently, with results
identical to sequential evaluation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations

from .frobenius import RMatrix
from .linalg import identity, zeros
from .localforms import FormContext, propagator_p0, recursion_kernel, two_point_form
from .report import Report
from .series import MultiForm, SeriesError, Var, agreement_mismatch, zero_form


class TruncationOrderError(SeriesError):
    """The R truncation cannot certify the requested object."""

    def __init__(self, message: str, min_order: int | None = None):
        super().__init__(message)
        self.min_order = min_order


class ConsistencyError(SeriesError):
    """A computed object violates a structural invariant (a math bug)."""


def pole_bound(g: int, n: int) -> int:
    """Maximal pole order per variable of a stable n-point form."""
    return 2 * (3 * g - 2 + n)


def stable_entries(bound: int) -> list[tuple[int, int]]:
    """All stable (g, n) with 2g - 2 + n <= bound, ordered by complexity."""
    out = []
    for c in range(1, bound + 1):
        for g in range(0, (c + 1) // 2 + 1):
            n = c + 2 - 2 * g
            if n >= 1 and 2 * g - 2 + n == c:
                out.append((g, n))
    return out


@dataclass
class OmegaTable:
    """Memoized table of n-point forms for one datum and R-matrix."""

    ctx: FormContext
    bound: int = 4
    parallel: bool = False
    check_plan: bool = True
    min_budget: int = 0  # extra window request beyond the pole-bound budget
    _store: dict = field(default_factory=dict, repr=False)
    _bseeds: dict = field(default_factory=dict, repr=False)
    _p0: dict = field(default_factory=dict, repr=False)
    _plan: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.budget = max(
            max(pole_bound(g, n) for g, n in stable_entries(self.bound)),
            self.min_budget,
        )

    def hi_target(self, g: int, n: int) -> int:
        # entries feeding later loop terms need headroom above the pole part
        return self.budget - pole_bound(g, n)

    # -- seeds ------------------------------------------------------------

    def two_point_seed(self, i: int, j: int) -> MultiForm:
        """B(a, b) da db with a singular at branch i, b regular at branch j."""
        key = (i, j)
        if key not in self._bseeds:
            self._bseeds[key] = two_point_form(
                self.ctx, i, j, Var("a", i), Var("b", j), self.budget
            )
        return self._bseeds[key]

    def p0_seed(self, j: int) -> MultiForm:
        if j not in self._p0:
            self._p0[j] = propagator_p0(self.ctx, j, Var("b", j))
        return self._p0[j]

    # -- retrieval ----------------------------------------------------------

    def omega(self, g: int, branches, vars: tuple[Var, ...] | None = None) -> MultiForm:
        """The n-point form for an arbitrary branch tuple.

        ``vars`` names the slots (defaults to x0..x(n-1) at the given
        branches); the stored representative is computed for the sorted
        tuple and renamed through the sorting permutation.
        """
        branches = tuple(branches)
        n = len(branches)
        if 2 * g - 2 + n <= 0:
            raise ConsistencyError(f"({g},{n}) is not a stable entry")
        if 2 * g - 2 + n > self.bound:
            raise ConsistencyError(
                f"complexity {2 * g - 2 + n} beyond the table bound {self.bound}"
            )
        if n > 10:
            raise ConsistencyError("slot naming supports at most 10 points")
        if vars is None:
            vars = tuple(Var(f"x{i}", b) for i, b in enumerate(branches))
        order = sorted(range(n), key=lambda i: branches[i])
        key = (g, tuple(branches[i] for i in order))
        if key not in self._store:
            self._store[key] = self._compute(g, key[1])
        stored = self._store[key]
        mapping = {f"x{slot}": vars[order[slot]] for slot in range(n)}
        return stored.rename(mapping)

    # -- the recursion ------------------------------------------------------

    def _factor(self, g1: int, positions, branches, xs, j: int, y: Var):
        """One splitting factor with first leg at the residue variable."""
        n1 = len(positions) + 1
        if 2 * g1 - 2 + n1 <= 0:
            if (g1, n1) == (0, 2):
                m = positions[0]
                return self.two_point_seed(branches[m], j).rename(
                    {"a": xs[m], "b": y}
                )
            return None  # dropped one-point leg
        sub_branches = (j,) + tuple(branches[m] for m in positions)
        sub_vars = (y,) + tuple(xs[m] for m in positions)
        return self.omega(g1, sub_branches, sub_vars)

    def _bracket(self, g: int, branches, xs, j: int, y: Var) -> MultiForm | None:
        """Loop term plus ordered splittings, a degree-2 object in y."""
        n_rest = len(branches)
        pieces: list[MultiForm] = []
        if g >= 1:
            if g == 1 and n_rest == 0:
                pieces.append(self.p0_seed(j).rename({"b": y}))
            else:
                ya, yb = Var("ya", j), Var("yb", j)
                child = self.omega(
                    g - 1, (j, j) + tuple(branches), (ya, yb) + tuple(xs)
                )
                pieces.append(child.merge_diagonal(ya, yb, y))
        positions = tuple(range(n_rest))
        for g1 in range(0, g + 1):
            for mask in range(1 << n_rest):
                left = tuple(p for p in positions if mask >> p & 1)
                right = tuple(p for p in positions if not mask >> p & 1)
                # a dropped one-point leg kills the term; decide before
                # materializing anything (the full-complement factor is the
                # entry itself and must not be requested)
                if g1 == 0 and not left:
                    continue
                if g - g1 == 0 and not right:
                    continue
                f1 = self._factor(g1, left, branches, xs, j, y)
                f2 = self._factor(g - g1, right, branches, xs, j, y)
                pieces.append(f1 * f2)
        if not pieces:
            return None
        total = pieces[0]
        for p in pieces[1:]:
            total = total + p
        return total

    def _residue_at(self, g, rest, xs, x0, j0, j) -> MultiForm | None:
        y = Var("y", j)
        bracket = self._bracket(g, rest, xs, j, y)
        if bracket is None:
            return None
        iy = bracket.index_of(y)
        depth = -bracket.lo[iy] if bracket.lo[iy] < 0 else 0
        p = pole_bound(g, len(rest) + 1)
        kmax = max(depth // 2, (p - 2) // 2, 0)
        kern = recursion_kernel(self.ctx, j0, j, x0, y, kmax)
        return (kern * bracket).residue_half_loop(y)

    def _compute(self, g: int, branches: tuple[int, ...]) -> MultiForm:
        n = len(branches)
        if not self.ctx.r.exact and self.check_plan:
            need = self.required_order(g, n)
            if self.ctx.r.order < need:
                raise TruncationOrderError(
                    f"entry ({g},{branches}) needs truncation order {need}, "
                    f"have {self.ctx.r.order}",
                    min_order=need,
                )
        j0, rest = branches[0], branches[1:]
        x0 = Var("x0", j0)
        xs = tuple(Var(f"x{i + 1}", b) for i, b in enumerate(rest))

        jobs = list(range(1, self.ctx.data.n + 1))
        if self.parallel and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
                terms = list(
                    pool.map(lambda j: self._residue_at(g, rest, xs, x0, j0, j), jobs)
                )
        else:
            terms = [self._residue_at(g, rest, xs, x0, j0, j) for j in jobs]

        total: MultiForm | None = None
        for t in terms:
            if t is None:
                continue
            total = t if total is None else total + t
        if total is None:
            total = zero_form((x0,) + xs, (1,) * n)

        return self._finalize(g, n, total)

    def _finalize(self, g: int, n: int, form: MultiForm) -> MultiForm:
        p = pole_bound(g, n)
        for e, c in form.items():
            if any(x < -p for x in e):
                raise ConsistencyError(
                    f"pole bound {p} violated at {e} in a ({g},{n}) entry"
                )
            if any(x % 2 for x in e):
                raise ConsistencyError(
                    f"odd exponent tuple {e} -> {c} in a ({g},{n}) entry"
                )
        for v in form.vars:
            form = form.raise_lo(v, -p)
        hi_need = self.hi_target(g, n)
        for v, h in zip(form.vars, form.hi):
            if h < hi_need:
                shortfall = hi_need - h
                raise TruncationOrderError(
                    f"({g},{n}) window tops out at {h} in {v.name}, need {hi_need}",
                    min_order=self.ctx.r.order + (shortfall + 1) // 2,
                )
        return form

    # -- window planning ------------------------------------------------------

    def required_order(self, g: int, n: int) -> int:
        """Minimal truncation order that certifies the (g, n) entries.

        Determined by dry-running this very code against a zero-dressed R of
        increasing order: the windows depend only on the truncation order and
        the assembly pattern, so the dry run is faithful by construction.
        """
        key = (g, n)
        if key in self._plan:
            return self._plan[key]
        for order in range(0, 2 * self.budget + 8):
            if self._plan_ok(g, n, order):
                self._plan[key] = order
                return order
        raise TruncationOrderError(
            f"no truncation order up to {2 * self.budget + 8} certifies ({g},{n})"
        )

    def _plan_ok(self, g: int, n: int, order: int) -> bool:
        shadow_r = RMatrix.make(
            [identity(self.ctx.data.n)] + [zeros(self.ctx.data.n)] * order
        )
        shadow = OmegaTable(
            FormContext(self.ctx.data, shadow_r),
            bound=self.bound,
            parallel=False,
            check_plan=False,
            min_budget=self.min_budget,
        )
        try:
            shadow.omega(g, (1,) * n)
        except SeriesError:
            return False
        return True


def _branch_multisets(n_branches: int, slots: int):
    def rec(start, left):
        if left == 0:
            yield ()
            return
        for b in range(start, n_branches + 1):
            for tail in rec(b, left - 1):
                yield (b,) + tail

    return list(rec(1, slots))


def symmetry_check(table: OmegaTable, g: int, branches) -> Report:
    """Permutation symmetry, evenness and the pole bound for one entry.

    Symmetry is compared on the common certified window of the entry and its
    permuted image: slot windows are generally asymmetric (the pivot slot of
    the computation sees further than the external ones), and coefficients
    beyond a slot window are unknown rather than zero.
    """
    rep = Report()
    branches = tuple(sorted(branches))
    n = len(branches)
    form = table.omega(g, branches)
    name = f"symmetry-({g},{branches})"
    base_vars = tuple(Var(f"x{i}", b) for i, b in enumerate(branches))
    bad = None
    for perm in permutations(range(n)):
        if tuple(branches[p] for p in perm) != branches:
            continue  # only stabilizing permutations map the entry to itself
        permuted = form.rename({f"x{i}": base_vars[perm[i]] for i in range(n)})
        mismatch = agreement_mismatch(form, permuted)
        if mismatch is not None:
            bad = (perm, mismatch)
            break
    rep.add(name, bad is None, "" if bad is None else f"asymmetric at {bad}")

    p = pole_bound(g, n)
    parity_bad = [e for e, _ in form.items() if any(x % 2 for x in e)]
    rep.add(
        f"parity-({g},{branches})",
        not parity_bad,
        "" if not parity_bad else f"odd exponents at {parity_bad[0]}",
    )
    depth_bad = [e for e, _ in form.items() if any(x < -p for x in e)]
    rep.add(
        f"pole-bound-({g},{branches})",
        not depth_bad,
        "" if not depth_bad else f"pole beyond {p} at {depth_bad[0]}",
    )
    return rep
