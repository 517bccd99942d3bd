"""Acceptance suite: one test per criterion, exact rational equality throughout.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one status line per
criterion.  Every expected value is produced by an independent route (the
intersection-number oracle, closed forms, or dual constructions); nothing is
tuned to the pipeline under test.
"""

import itertools
import json
from fractions import Fraction

from localrec.cli import main
from localrec.correlators import (
    CorrelatorKey,
    extract_all,
    virasoro_check,
)
from localrec.dvv import dvv_intersection
from localrec.frobenius import (
    RMatrix,
    airy_datum,
    decoupled_datum,
    random_symplectic_r,
)
from localrec.localforms import (
    FormContext,
    hrp_check,
    one_point_form,
    ope_normalization_check,
    two_point_form,
)
from localrec.recursion import OmegaTable, pole_bound, stable_entries, symmetry_check
from localrec.series import Var

Q = Fraction
BOUND = 4


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}" + (f" [{detail}]" if detail else "")
    print(line)
    assert ok, line


def _airy_table(bound=BOUND):
    return OmegaTable(FormContext(airy_datum(), RMatrix.identity_r(1)), bound=bound)


def _k_multisets(n, budget):
    def rec(start, left, total):
        if left == 0:
            yield ()
            return
        for k in range(start, budget + 1):
            if total + k > budget:
                break
            for tail in rec(k, left - 1, total + k):
                yield (k,) + tail

    return list(rec(0, n, 0))


def test_criterion_1_wk_oracle_match():
    """Extracted one-point-datum correlators equal the independent oracle."""
    corr = extract_all(_airy_table())
    checked = 0
    for key, value in corr.items():
        ks = [k for k, _ in key.insertions]
        assert value == dvv_intersection(key.g, ks), (key, value)
        checked += 1
    # completeness: every tame key of every stable entry up to the bound
    for g, n in stable_entries(BOUND):
        for ks in _k_multisets(n, 3 * g - 3 + n):
            key = CorrelatorKey.make(g, [(k, 1) for k in ks])
            assert key in corr.values, key
    named = [
        (corr.get(0, [(0, 1)] * 3), dvv_intersection(0, [0, 0, 0]), Q(1)),
        (corr.get(1, [(1, 1)]), dvv_intersection(1, [1]), Q(1, 24)),
        (corr.get(1, [(0, 1), (2, 1)]), dvv_intersection(1, [0, 2]), Q(1, 24)),
        (corr.get(1, [(1, 1), (1, 1)]), dvv_intersection(1, [1, 1]), Q(1, 24)),
        (corr.get(2, [(4, 1)]), dvv_intersection(2, [4]), Q(1, 1152)),
    ]
    for got, oracle, literature in named:
        assert got == oracle == literature
    _report(
        "criterion-1 oracle match (complexity <= 4)", True, f"{checked} correlators"
    )


def test_criterion_2_hrp_residue_identity():
    """Period residue pairing orthogonality, |k'|,|k''| <= 5, N in {1,2,3}."""
    pairs_seen = 0
    for n in (1, 2, 3):
        for seed in (1, 2, 3):
            ctx6 = FormContext(
                decoupled_datum(list(range(n))), random_symplectic_r(n, 6, seed)
            )
            rep6 = hrp_check(ctx6, k_bound=5)
            assert rep6.ok, (n, seed, rep6.failures())
            # pairs with k' + k'' beyond the truncation order are window
            # limited at order 6; a deeper run certifies the full grid
            ctx12 = FormContext(
                decoupled_datum(list(range(n))), random_symplectic_r(n, 12, seed)
            )
            rep12 = hrp_check(ctx12, k_bound=5)
            assert rep12.ok, (n, seed, rep12.failures())
            assert "0 window-limited" in rep12.checks[0].detail
            pairs_seen += 121 * n * n
    _report("criterion-2 residue orthogonality", True, f"{pairs_seen} pairs certified")


def test_criterion_3_dual_route_agreement():
    """One- and two-point constructions agree between independent routes."""
    built = 0
    for n in (1, 2, 3):
        for seed in (1, 2, 3):
            for order in (2, 4):
                ctx = FormContext(
                    decoupled_datum(list(range(n))),
                    random_symplectic_r(n, order, seed),
                )
                for j in range(1, n + 1):
                    one_point_form(ctx, j, Var("s", j))  # raises on mismatch
                    built += 1
                for i in range(1, n + 1):
                    for j in range(1, n + 1):
                        two_point_form(ctx, i, j, Var("r", i), Var("s", j), 6)
                        built += 1
    _report("criterion-3 dual-route agreement", True, f"{built} constructions")


def test_criterion_4_two_point_normalization():
    """The diagonal double pole carries coefficient exactly 2."""
    ctx1 = FormContext(airy_datum(), RMatrix.identity_r(1))
    rep = ope_normalization_check(ctx1, 1)
    assert rep.ok, rep.failures()
    ctx2 = FormContext(decoupled_datum([0, 1]), random_symplectic_r(2, 5, 4))
    for j in (1, 2):
        rep = ope_normalization_check(ctx2, j)
        assert rep.ok, rep.failures()
    _report("criterion-4 coinciding-argument normalization", True)


def test_criterion_5_symmetry_parity_tameness():
    """Every table entry is symmetric, even, and within the pole bound."""
    table = _airy_table()
    for g, n in stable_entries(BOUND):
        rep = symmetry_check(table, g, (1,) * n)
        assert rep.ok, (g, n, rep.failures())
        form = table.omega(g, (1,) * n)
        deepest = max(max(-x for x in e) for e in form.coeffs)
        assert deepest == pole_bound(g, n), (g, n)
    # truncated-R entries stay within the bound as well
    ctx = FormContext(decoupled_datum([0, 1]), random_symplectic_r(2, 6, 1))
    t2 = OmegaTable(ctx, bound=2)
    for g, n in stable_entries(2):
        for branches in itertools.combinations_with_replacement((1, 2), n):
            rep = symmetry_check(t2, g, branches)
            assert rep.ok, (g, branches, rep.failures())
    # extraction beyond the tameness degree is identically zero
    corr = extract_all(table)
    assert corr.get(1, [(2, 1)]) == 0
    assert corr.get(2, [(5, 1), (1, 1)]) == 0
    _report("criterion-5 symmetry, parity, pole bound, tameness", True)


def test_criterion_6_constraint_equivalence():
    """The residue recursion agrees with the quadratic-constraint assembly."""
    table = _airy_table()
    corr = extract_all(table)
    ctx = table.ctx
    count = 0
    for g, n in [(0, 3), (0, 4), (1, 1), (1, 2), (2, 1)]:
        budget = 3 * g - 3 + (n + 1)
        for ks in _k_multisets(n, budget):
            rep = virasoro_check(ctx, corr, g, [(k, 1) for k in ks])
            assert rep.ok, (g, ks, rep.failures())
            count += 1

    for seed in (1, 2, 3):
        ctx2 = FormContext(decoupled_datum([0, 1]), random_symplectic_r(2, 6, seed))
        t2 = OmegaTable(ctx2, bound=2)
        assert t2.required_order(1, 2) <= 6  # the plan admits this truncation
        corr2 = extract_all(t2)
        for g, n in [(0, 3), (1, 1)]:
            budget = 3 * g - 3 + (n + 1)
            for ks in _k_multisets(n, budget):
                for avec in itertools.product((1, 2), repeat=n):
                    ins = list(zip(ks, avec))
                    for ext in (1, 2):
                        rep = virasoro_check(ctx2, corr2, g, ins, i_ext=ext)
                        assert rep.ok, (seed, g, ins, ext, rep.failures())
                        count += 1
    _report("criterion-6 constraint equivalence", True, f"{count} identities")


def test_criterion_7_decoupling():
    """Identity dressing over two points reproduces two independent copies."""
    ctx = FormContext(decoupled_datum([0, 7]), RMatrix.identity_r(2))
    t2 = OmegaTable(ctx, bound=2)
    airy = _airy_table(bound=2)
    mixed = same = 0
    for g, n in stable_entries(2):
        for branches in itertools.combinations_with_replacement((1, 2), n):
            form = t2.omega(g, branches)
            if len(set(branches)) > 1:
                assert form.is_zero(), (g, branches)
                mixed += 1
            else:
                ref = airy.omega(g, (1,) * n)
                assert sorted(form.coeffs.items()) == sorted(ref.coeffs.items()), (
                    g,
                    branches,
                )
                same += 1
    _report("criterion-7 decoupling", True, f"{mixed} mixed zero, {same} matching")


def test_criterion_8_determinism(tmp_path):
    """Byte-identical reruns; parallel and sequential evaluation agree."""
    cfg = {
        "N": 2,
        "u": ["0/1", "1/1"],
        "eta": [["1/1", "0/1"], ["0/1", "1/1"]],
        "psi": [["1/1", "0/1"], ["0/1", "1/1"]],
        "unit": ["1/1", "1/1"],
        "theta": None,
        "R": "random",
        "L": 6,
        "seed": 11,
        "coeff_bound": 3,
        "g_max_complexity": 2,
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out1, out2 = tmp_path / "c1.json", tmp_path / "c2.json"
    assert main(["correlators", "--config", str(path), "--out", str(out1)]) == 0
    assert main(["correlators", "--config", str(path), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    mk = lambda par: OmegaTable(
        FormContext(decoupled_datum([0, 1]), random_symplectic_r(2, 6, 11)),
        bound=2,
        parallel=par,
    )
    seq, par = mk(False), mk(True)
    for g, n in stable_entries(2):
        for branches in itertools.combinations_with_replacement((1, 2), n):
            assert seq.omega(g, branches) == par.omega(g, branches), (g, branches)
    _report("criterion-8 determinism", True, "byte-identical outputs")
