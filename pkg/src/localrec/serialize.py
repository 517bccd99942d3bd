"""Exact JSON encoding: rationals as "p/q" strings, canonical byte output.

Every rational is written as the string "p/q" with q > 0 and gcd(|p|, q) = 1,
never as a float; matrices are row-major arrays of such strings; series
coefficients are arrays of [exponent-tuple, "p/q"] pairs sorted
lexicographically, with explicit window arrays (null marks an unbounded
side).  Serialization is canonical (sorted keys, fixed separators), so equal
objects produce identical bytes and files diff cleanly.
"""

from __future__ import annotations

import json
from fractions import Fraction

from .frobenius import CanonicalData, RMatrix
from .series import INF, MultiForm, Var


def rat_to_str(x: Fraction | int) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def rat_from_str(s) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise ValueError(f"rational must be a 'p/q' string, got {s!r}")
    return Fraction(s)


def vector_to_json(v) -> list:
    return [rat_to_str(x) for x in v]


def vector_from_json(v) -> list[Fraction]:
    return [rat_from_str(x) for x in v]


def matrix_to_json(m) -> list:
    return [[rat_to_str(x) for x in row] for row in m]


def matrix_from_json(m) -> list[list[Fraction]]:
    return [[rat_from_str(x) for x in row] for row in m]


def _bound_to_json(x: int):
    return None if abs(x) >= INF else x


def _bound_from_json(x, sign: int) -> int:
    return sign * INF if x is None else int(x)


def form_to_json(f: MultiForm) -> dict:
    return {
        "vars": [[v.name, v.branch] for v in f.vars],
        "degs": list(f.degs),
        "window": {
            "lo": [_bound_to_json(x) for x in f.lo],
            "hi": [_bound_to_json(x) for x in f.hi],
        },
        "coeffs": [[list(e), rat_to_str(c)] for e, c in f.items()],
    }


def form_from_json(d: dict) -> MultiForm:
    vars = tuple(Var(name, branch) for name, branch in d["vars"])
    return MultiForm(
        vars,
        tuple(d["degs"]),
        {tuple(e): rat_from_str(c) for e, c in d["coeffs"]},
        tuple(_bound_from_json(x, -1) for x in d["window"]["lo"]),
        tuple(_bound_from_json(x, +1) for x in d["window"]["hi"]),
    )


def datum_to_json(d: CanonicalData) -> dict:
    return {
        "N": d.n,
        "u": vector_to_json(d.u),
        "eta": matrix_to_json(d.eta),
        "psi": matrix_to_json(d.psi),
        "unit": vector_to_json(d.unit),
        "theta": vector_to_json(d.theta) if d.theta is not None else None,
    }


def datum_from_json(cfg: dict) -> CanonicalData:
    d = CanonicalData.make(
        u=vector_from_json(cfg["u"]),
        eta=matrix_from_json(cfg["eta"]),
        psi=matrix_from_json(cfg["psi"]),
        unit=vector_from_json(cfg["unit"]),
        theta=vector_from_json(cfg["theta"]) if cfg.get("theta") is not None else None,
    )
    if "N" in cfg and cfg["N"] != d.n:
        raise ValueError(f"declared N={cfg['N']} but u has length {d.n}")
    return d


def rmatrix_to_json(r: RMatrix) -> dict:
    return {
        "R": [matrix_to_json(m) for m in r.mats],
        "L": r.order,
        "R_exact": r.exact,
    }


def rmatrix_from_json(mats, exact: bool = False) -> RMatrix:
    return RMatrix.make([matrix_from_json(m) for m in mats], exact=exact)


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"
