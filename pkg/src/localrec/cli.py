"""Batch front end: datum ingestion, command dispatch, exact serialization.

Exit codes: 0 success, 1 validation failure, 2 window exhaustion (message
names the minimal sufficient truncation order), 3 internal consistency
failure.  All runs are deterministic given the config file and seed; output
bytes are canonical JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .correlators import (
    extract_all,
    insertion_reconstruct_check,
    virasoro_check,
)
from .frobenius import (
    DatumError,
    RMatrix,
    check_symplectic,
    complete_r,
    random_symplectic_r,
    validate_canonical,
)
from .localforms import (
    FormContext,
    RouteDisagreement,
    hrp_check,
    one_point_form,
    ope_normalization_check,
    two_point_form,
)
from .recursion import (
    ConsistencyError,
    OmegaTable,
    TruncationOrderError,
    _branch_multisets,
    stable_entries,
    symmetry_check,
)
from .report import Report
from .serialize import (
    datum_from_json,
    dumps_canonical,
    form_to_json,
    matrix_to_json,
    rat_to_str,
    rmatrix_from_json,
    vector_from_json,
)
from .series import MonodromyError, SeriesError, Var, WindowError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_WINDOW = 2
EXIT_INCONSISTENT = 3


class RunConfig:
    """Parsed configuration: datum, R source, bounds."""

    def __init__(self, raw: dict, seed_override: int | None = None):
        self.raw = raw
        self.datum = datum_from_json(raw)
        self.bound = int(raw.get("g_max_complexity", 4))
        self.window = raw.get("window")
        self.seed = seed_override if seed_override is not None else raw.get("seed", 0)
        self.coeff_bound = int(raw.get("coeff_bound", 3))
        self.order = int(raw.get("L", 0))
        self.r = self._resolve_r(raw)

    def _resolve_r(self, raw) -> RMatrix:
        source = raw.get("R")
        exact = bool(raw.get("R_exact", False))
        if source is None:
            return RMatrix.identity_r(self.datum.n)
        if source == "random":
            return random_symplectic_r(
                self.datum.n, self.order, int(self.seed), self.coeff_bound
            )
        if isinstance(source, dict) and "complete" in source:
            seeds = source["complete"].get("diag_seeds")
            seeds = [vector_from_json(v) for v in seeds] if seeds else None
            return complete_r(self.datum, self.order, diag_seeds=seeds)
        return rmatrix_from_json(source, exact=exact)

    def context(self) -> FormContext:
        return FormContext(self.datum, self.r)

    def table(self) -> OmegaTable:
        extra = int(self.window) if self.window is not None else 0
        return OmegaTable(self.context(), bound=self.bound, min_budget=extra)


def _load_config(path: str, seed_override=None) -> RunConfig:
    raw = json.loads(Path(path).read_text())
    return RunConfig(raw, seed_override)


def _emit(payload: dict, out: str | None) -> None:
    text = dumps_canonical(payload)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_validate(cfg: RunConfig, out: str | None) -> int:
    rep = validate_canonical(cfg.datum)
    srep = check_symplectic(cfg.r)
    payload = {"datum": rep.as_dict(), "symplectic": srep.as_dict()}
    _emit(payload, out)
    return EXIT_OK if rep.ok and srep.ok else EXIT_VALIDATION


def cmd_omega(cfg: RunConfig, g: int, n: int, out: str | None) -> int:
    if g < 0 or n < 1 or 2 * g - 2 + n <= 0 or 2 * g - 2 + n > cfg.bound:
        sys.stderr.write(
            f"(g,n)=({g},{n}) is outside the stable range or the configured "
            f"complexity bound {cfg.bound}\n"
        )
        return EXIT_VALIDATION
    table = cfg.table()
    entries = []
    for branches in _branch_multisets(cfg.datum.n, n):
        form = table.omega(g, branches)
        entries.append({"branches": list(branches), "form": form_to_json(form)})
    _emit({"g": g, "n": n, "entries": entries}, out)
    return EXIT_OK


def cmd_correlators(cfg: RunConfig, out: str | None) -> int:
    table = cfg.table()
    corr = extract_all(table)
    entries = []
    for key, value in corr.items():
        entries.append(
            {
                "g": key.g,
                "insertions": [list(p) for p in key.insertions],
                "value": rat_to_str(value),
                "provenance": corr.provenance[key],
            }
        )
    _emit({"g_max_complexity": cfg.bound, "entries": entries}, out)
    return EXIT_OK


def _check_battery(cfg: RunConfig) -> Report:
    ctx = cfg.context()
    n = cfg.datum.n
    rep = Report()

    base = validate_canonical(cfg.datum)
    rep.checks.extend(base.checks)
    rep.checks.extend(check_symplectic(cfg.r).checks)
    if not rep.ok:
        return rep

    rep.checks.extend(hrp_check(ctx, k_bound=3).checks)

    for j in range(1, n + 1):
        one_point_form(ctx, j, Var("s", j))  # raises on route disagreement
        rep.checks.extend(ope_normalization_check(ctx, j).checks)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            two_point_form(ctx, i, j, Var("r", i), Var("s", j), 6)
    rep.add("dual-route-agreement", True, "one- and two-point constructions")

    for k in range(0, 3):
        for a in range(1, n + 1):
            rep.checks.extend(insertion_reconstruct_check(ctx, k, a).checks)

    table = OmegaTable(ctx, bound=cfg.bound)
    sym_bound = min(cfg.bound, 2 if n > 1 or not cfg.r.exact else 4)
    for g, nn in stable_entries(sym_bound):
        for branches in _branch_multisets(n, nn):
            rep.checks.extend(symmetry_check(table, g, branches).checks)

    corr = extract_all(table, bound=sym_bound)
    lhs_pairs = [(0, 2), (1, 1)] if (n > 1 or not cfg.r.exact) else [
        (0, 2),
        (0, 3),
        (1, 1),
        (1, 2),
        (2, 1),
    ]
    for g, nn in lhs_pairs:
        if 2 * g - 2 + (nn + 1) > sym_bound:
            continue
        budget = 3 * g - 3 + (nn + 1)
        for ks in _psi_multisets(nn, budget):
            for avec in _flat_tuples(n, nn):
                ins = tuple(zip(ks, avec))
                for ext in range(1, n + 1):
                    rep.checks.extend(
                        virasoro_check(ctx, corr, g, ins, i_ext=ext).checks
                    )
    return rep


def _psi_multisets(n, budget):
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


def _flat_tuples(n_branches, slots):
    def rec(left):
        if left == 0:
            yield ()
            return
        for a in range(1, n_branches + 1):
            for tail in rec(left - 1):
                yield (a,) + tail

    return list(rec(slots))


def cmd_check(cfg: RunConfig, out: str | None) -> int:
    rep = _check_battery(cfg)
    _emit(rep.as_dict(), out)
    return EXIT_OK if rep.ok else EXIT_INCONSISTENT


def cmd_random_r(cfg: RunConfig, out: str | None) -> int:
    r = random_symplectic_r(cfg.datum.n, cfg.order, int(cfg.seed), cfg.coeff_bound)
    payload = {
        "N": cfg.datum.n,
        "L": r.order,
        "seed": int(cfg.seed),
        "coeff_bound": cfg.coeff_bound,
        "R": [matrix_to_json(m) for m in r.mats],
    }
    _emit(payload, out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="localrec",
        description="Exact local topological recursion for semisimple data",
    )
    parser.add_argument("command", choices=["validate", "omega", "correlators", "check", "random-r"])
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--g", type=int, default=None, help="genus (omega)")
    parser.add_argument("--n", type=int, default=None, help="number of points (omega)")
    parser.add_argument("--out", default=None, help="output path (stdout if omitted)")
    parser.add_argument("--seed", type=int, default=None, help="seed override")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # keep exit code 2 reserved for window exhaustion
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION

    try:
        cfg = _load_config(args.config, args.seed)
    except (DatumError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_VALIDATION

    try:
        if args.command == "validate":
            return cmd_validate(cfg, args.out)
        if args.command == "omega":
            if args.g is None or args.n is None:
                sys.stderr.write("omega needs --g and --n\n")
                return EXIT_VALIDATION
            return cmd_omega(cfg, args.g, args.n, args.out)
        if args.command == "correlators":
            return cmd_correlators(cfg, args.out)
        if args.command == "check":
            return cmd_check(cfg, args.out)
        if args.command == "random-r":
            return cmd_random_r(cfg, args.out)
    except (TruncationOrderError, WindowError) as exc:
        hint = ""
        if isinstance(exc, TruncationOrderError) and exc.min_order is not None:
            hint = f" (minimal sufficient truncation order: {exc.min_order})"
        sys.stderr.write(f"window exhausted: {exc}{hint}\n")
        return EXIT_WINDOW
    except (ConsistencyError, RouteDisagreement, MonodromyError) as exc:
        sys.stderr.write(f"internal consistency failure: {exc}\n")
        return EXIT_INCONSISTENT
    except DatumError as exc:
        sys.stderr.write(f"invalid datum: {exc}\n")
        return EXIT_VALIDATION
    except SeriesError as exc:
        sys.stderr.write(f"series failure: {exc}\n")
        return EXIT_INCONSISTENT
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
