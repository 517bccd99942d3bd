"""Exact Laurent-form algebra: frozen examples and algebraic properties."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localrec.series import (
    INF,
    DegreeError,
    MonodromyError,
    MultiForm,
    Var,
    WindowError,
    agreement_mismatch,
    geometric_expand,
    invert,
    laurent,
    zero_form,
)

S = Var("s", 1)
R = Var("r", 1)


def F(var, terms, deg=0, lo=None, hi=INF):
    exps = list(terms) or [0]
    return MultiForm(
        (var,),
        (deg,),
        {(e,): Fraction(c) for e, c in terms.items()},
        (min(min(exps), 0) if lo is None else lo,),
        (hi,),
    )


def test_add_cancellation_and_window():
    a = F(S, {-1: 2}, lo=-3, hi=3)
    b = F(S, {-1: -2}, lo=-1, hi=5)
    c = a + b
    assert c.coeffs == {}
    assert c.hi == (3,)
    assert c.lo == (-3,)  # support bound is the union of supports
    # certified zero across the whole region up to hi
    for e in range(-3, 4):
        assert c.coefficient((e,)) == 0


def test_add_identity_intersects_window():
    a = F(S, {2: 4}, hi=7)
    z = zero_form([S], [0]).cap_hi(S, 5)
    c = a + z
    assert c.coefficient((2,)) == 4
    assert c.hi == (5,)


def test_add_coefficientwise():
    a = MultiForm((R, S), (0, 0), {(-2, 0): 4, (-4, 2): 12}, (-4, 0), (INF, 6))
    b = MultiForm((R, S), (0, 0), {(-4, 2): 4}, (-4, 0), (INF, 6))
    c = a + b
    assert c.coefficient((-2, 0)) == 4
    assert c.coefficient((-4, 2)) == 16


def test_add_requires_matching_vars_and_degs():
    a = F(S, {0: 1})
    b = F(R, {0: 1})
    with pytest.raises(DegreeError):
        a + b
    with pytest.raises(DegreeError):
        F(S, {0: 1}, deg=1) + F(S, {0: 1}, deg=0)


def test_mul_simple_poles():
    a = F(S, {-1: 2})
    c = a * a
    assert c.coefficient((-2,)) == 4
    assert c.degs == (0,)


def test_mul_ds_squared():
    a = F(S, {1: 1}, deg=1)
    c = a * a
    assert c.degs == (2,)
    assert c.coefficient((2,)) == 1
    with pytest.raises(DegreeError):
        c * a  # degree would exceed 2


def test_geometric_expand_binomials():
    g2 = geometric_expand(2, R, S, 6)
    # r^-2 + 2 s r^-3 + 3 s^2 r^-4 + ...
    assert g2.coefficient((-2, 0)) == 1
    assert g2.coefficient((-3, 1)) == 2
    assert g2.coefficient((-4, 2)) == 3
    g1 = geometric_expand(1, R, S, 4)
    assert g1.coefficient((-1, 0)) == 1
    assert g1.coefficient((-3, 2)) == 1


def test_geometric_even_part():
    g = geometric_expand(2, R, S, 6)
    sym = g + g.reflect(S)
    # 2 r^-2 + 6 s^2 r^-4 + ... (odd powers cancel)
    assert sym.coefficient((-2, 0)) == 2
    assert sym.coefficient((-3, 1)) == 0
    assert sym.coefficient((-4, 2)) == 6


def test_geometric_times_pole_is_one():
    m = 2
    g = geometric_expand(m, R, S, 8)
    pole = MultiForm(
        (R, S), (0, 0), {(2, 0): 1, (1, 1): -2, (0, 2): 1}, (0, 0), (INF, INF)
    )  # (r - s)^2
    prod = g * pole
    assert prod.coefficient((0, 0)) == 1
    for e, c in prod.items():
        if e != (0, 0):
            assert c == 0


def test_reflect_examples():
    f = F(S, {1: 1}, deg=1)  # s ds
    assert f.reflect(S) == f
    g = F(S, {-1: 4}, deg=1)  # 4 ds / s
    assert g.reflect(S) == g
    h = F(S, {1: 2})  # 2 s, plain function
    assert h.reflect(S).coefficient((1,)) == -2


def test_reflect_involution():
    f = MultiForm((R, S), (1, 0), {(-2, 3): Fraction(5, 7), (0, 1): -2}, (-2, 0), (4, 9))
    assert f.reflect(S).reflect(S) == f
    assert f.reflect(R).reflect(R) == f


def test_residue_half_loop():
    f = F(S, {-1: 4}, deg=1)
    out = f.residue_half_loop(S)
    assert out.vars == ()
    assert out.coefficient(()) == 2


def test_residue_no_pole_is_zero():
    f = F(S, {1: 7}, deg=1)  # invariant, no pole
    assert f.residue_half_loop(S).coefficient(()) == 0


def test_residue_rejects_multivalued():
    f = F(S, {0: 1}, deg=1)  # odd under the deck map
    with pytest.raises(MonodromyError):
        f.residue_half_loop(S)


def test_residue_window_guard():
    f = F(S, {1: 1}, deg=1, lo=1, hi=INF).cap_hi(S, -2)
    with pytest.raises(WindowError):
        f.residue_half_loop(S)


def test_residue_multivariate():
    # (16 / s) ds dr0 dr1 dr2 * r-poles -> half-loop residue keeps the rest
    r0, r1, r2 = Var("r0", 1), Var("r1", 1), Var("r2", 1)
    f = MultiForm(
        (S, r0, r1, r2),
        (1, 1, 1, 1),
        {(-1, -2, -2, -2): 16},
        (-1, -2, -2, -2),
        (INF, INF, INF, INF),
    )
    out = f.residue_half_loop(S)
    assert out.vars == (r0, r1, r2)
    assert out.coefficient((-2, -2, -2)) == 8


def test_invert_series():
    f = F(S, {2: 8, 4: 2}, deg=1, hi=8)
    g = invert(f, S)
    assert g.degs == (-1,)
    prod = f * g
    assert prod.coefficient((0,)) == 1
    for e in range(1, 4):
        assert prod.coefficient((e,)) == 0


def test_invert_needs_order_for_polynomials():
    f = laurent(S, {2: 8})
    with pytest.raises(WindowError):
        invert(f, S)
    g = invert(f, S, order=5)
    assert g.coefficient((-2,)) == Fraction(1, 8)


def test_merge_diagonal():
    f = MultiForm((R, S), (1, 1), {(-2, 0): 3, (0, -2): 5}, (-2, -2), (6, 6))
    t = Var("t", 1)
    g = f.merge_diagonal(R, S, t)
    assert g.degs == (2,)
    assert g.coefficient((-2,)) == 8
    assert g.hi == (4,)  # 6 + (-2)


def test_rename_permutes():
    f = MultiForm((R, S), (1, 0), {(-2, 3): 7}, (-2, 0), (INF, 5))
    x, y = Var("a", 2), Var("z", 1)
    g = f.rename({"r": y, "s": x})
    assert g.vars == (x, y)
    assert g.coefficient((3, -2)) == 7


def test_mul_unsound_window_sharing_rejected():
    a = F(S, {0: 1}, hi=4)
    b = F(S, {0: 1}, hi=4)
    ra = MultiForm((R, S), (0, 0), {(0, 0): 1}, (0, 0), (4, 4))
    rb = MultiForm((R, S), (0, 0), {(0, 0): 1}, (0, 0), (4, 4))
    assert (a * b).coefficient((0,)) == 1  # one shared truncated variable: fine
    from localrec.series import SeriesError

    with pytest.raises(SeriesError):
        ra * rb  # two shared truncated variables: unsound


small_rats = st.builds(
    Fraction, st.integers(min_value=-9, max_value=9), st.integers(min_value=1, max_value=5)
)


@st.composite
def sparse_forms(draw):
    n_terms = draw(st.integers(min_value=0, max_value=5))
    coeffs = {}
    for _ in range(n_terms):
        e = draw(st.integers(min_value=-6, max_value=6))
        c = draw(small_rats)
        if c:
            coeffs[(e,)] = coeffs.get((e,), Fraction(0)) + c
    hi = draw(st.integers(min_value=6, max_value=12))
    exps = [e for (e,) in coeffs] or [0]
    return MultiForm((S,), (0,), coeffs, (min(min(exps), -6),), (hi,))


@given(sparse_forms(), sparse_forms(), sparse_forms())
@settings(max_examples=60, deadline=None)
def test_ring_axioms_on_windows(a, b, c):
    left = (a + b) + c
    right = a + (b + c)
    assert agreement_mismatch(left, right) is None
    dist_l = a * (b + c)
    dist_r = a * b + a * c
    assert agreement_mismatch(dist_l, dist_r) is None
    comm = agreement_mismatch(a * b, b * a)
    assert comm is None


@given(sparse_forms())
@settings(max_examples=40, deadline=None)
def test_reflect_is_involution(f):
    assert f.reflect(S).reflect(S) == f


def test_determinism_bit_identical():
    def build():
        g = geometric_expand(3, R, S, 12)
        h = g * laurent(S, {0: 1, 2: Fraction(-7, 3)})
        return sorted(h.coeffs.items())

    assert build() == build()


def test_residue_invariant_under_pre_reflect():
    f = MultiForm(
        (R, S), (0, 1), {(-2, -1): Fraction(4), (0, 3): 7}, (-2, -1), (6, 6)
    )
    assert f.reflect(S).residue_half_loop(S) == f.residue_half_loop(S)


def test_geometric_simple_pole_times_difference():
    g = geometric_expand(1, R, S, 8)
    diff = MultiForm((R, S), (0, 0), {(1, 0): 1, (0, 1): -1}, (0, 0), (INF, INF))
    prod = g * diff
    assert prod.coefficient((0, 0)) == 1
    assert all(c == 0 for e, c in prod.items() if e != (0, 0))
