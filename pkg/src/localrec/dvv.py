"""Psi-class intersection numbers on moduli of curves via the DVV recursion.

Standalone oracle: pure rational recursion, no series machinery.  Pivoting on
the largest insertion tau_m, the recursion expresses <tau_m tau_k1 ... tau_kn>_g
through a boundary sum (double-factorial weighted), an insertion-removal sum
that reproduces the string and dilaton equations at m = 0, 1, and the two
regularization constants of the unstable range: the diagonal constant feeding
<tau_1>_1 and the n = 2 contact term feeding <tau_0^3>_0.  Everything reduces
to those constants; nothing else is hard-coded.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

Rat = Fraction


def _df(n: int) -> int:
    """Odd double factorial with (-1)!! = 1."""
    if n <= 0:
        return 1
    out = 1
    while n > 0:
        out *= n
        n -= 2
    return out


def _subsets(items: tuple[int, ...]):
    """All sub-multisets by position, as (chosen, rest) pairs."""
    n = len(items)
    for mask in range(1 << n):
        chosen = tuple(items[i] for i in range(n) if mask >> i & 1)
        rest = tuple(items[i] for i in range(n) if not mask >> i & 1)
        yield chosen, rest


@lru_cache(maxsize=None)
def _dvv(g: int, ks: tuple[int, ...]) -> Rat:
    n = len(ks)
    if g < 0 or 2 * g - 2 + n <= 0:
        return Rat(0)
    if sum(ks) != 3 * g - 3 + n:
        return Rat(0)

    m = ks[-1]  # pivot: the largest insertion (ks arrives sorted)
    rest = ks[:-1]
    acc = Rat(0)

    # boundary: pinch a handle
    if g >= 1:
        for k1 in range(0, m - 1):
            k2 = m - 2 - k1
            acc += 4 * _df(2 * k1 + 1) * _df(2 * k2 + 1) * dvv_intersection(
                g - 1, rest + (k1, k2)
            )
        if g == 1 and not rest and m == 1:
            acc += 1  # diagonal regularization constant of the two-point range

    # boundary: split into two stable components (ordered pairs)
    if m >= 2:
        for k1 in range(0, m - 1):
            k2 = m - 2 - k1
            w = 4 * _df(2 * k1 + 1) * _df(2 * k2 + 1)
            for gp in range(0, g + 1):
                gpp = g - gp
                for left, right in _subsets(rest):
                    if 2 * gp - 2 + len(left) + 1 <= 0:
                        continue
                    if 2 * gpp - 2 + len(right) + 1 <= 0:
                        continue
                    acc += (
                        w
                        * dvv_intersection(gp, left + (k1,))
                        * dvv_intersection(gpp, right + (k2,))
                    )

    # remove one insertion (string at m = 0, dilaton at m = 1)
    for j, kj in enumerate(rest):
        if m + kj - 1 < 0:
            continue
        others = rest[:j] + rest[j + 1 :]
        acc += (
            8
            * Rat(_df(2 * (m + kj) - 1), _df(2 * kj - 1))
            * dvv_intersection(g, others + (m + kj - 1,))
        )

    # contact term of two unstable two-point factors
    if m == 0 and g == 0 and rest == (0, 0):
        acc += 8

    return acc / (8 * _df(2 * m + 1))


def dvv_intersection(g: int, ks) -> Rat:
    """Exact <tau_{k_1} ... tau_{k_n}>_g; zero off the dimension constraint."""
    ks = tuple(sorted(int(k) for k in ks))
    if any(k < 0 for k in ks):
        raise ValueError("psi powers must be nonnegative")
    return _dvv(g, ks)


def genus0_closed_form(ks) -> Rat:
    """(n-3)! / prod(k_i!) on the dimension shell; an independent cross-check."""
    ks = tuple(int(k) for k in ks)
    n = len(ks)
    if n < 3 or sum(ks) != n - 3:
        return Rat(0)
    num = 1
    for i in range(1, n - 2):
        num *= i
    den = 1
    for k in ks:
        f = 1
        for i in range(1, k + 1):
            f *= i
        den *= f
    return Rat(num, den)
