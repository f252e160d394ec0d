"""Exact phase-1 simplex for equality systems with nonnegative variables.

Decides feasibility of ``A v = b, v >= 0`` over the rationals with Bland's
anti-cycling rule, returning either a feasible point or a Farkas certificate
``y`` with ``y^T A_j <= 0`` for every column and ``y^T b > 0``.  Dimensions
here are tiny (dozens of rows), so a dense fraction tableau is plenty.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

__all__ = ["feasible_combination"]

ZERO = Fraction(0)
ONE = Fraction(1)


def feasible_combination(
    columns: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> tuple[Optional[list[Fraction]], Optional[list[Fraction]]]:
    """Solve ``sum_j v_j * columns[j] = rhs`` with ``v >= 0`` exactly.

    Returns ``(v, None)`` when feasible, else ``(None, y)`` where ``y`` is a
    Farkas certificate for the original (unnormalized) system.
    """
    n = len(columns)
    r = len(rhs)
    if any(len(col) != r for col in columns):
        raise ValueError("column length mismatch")

    # normalize to b >= 0, remembering flipped rows for the certificate
    flip = [-ONE if b < 0 else ONE for b in rhs]
    tab = [
        [flip[row] * Fraction(columns[j][row]) for j in range(n)]
        + [ONE if k == row else ZERO for k in range(r)]
        + [flip[row] * Fraction(rhs[row])]
        for row in range(r)
    ]
    basis = [n + row for row in range(r)]  # artificials, cost 1 each

    # objective row holds z_j - c_j; entering improves while some entry > 0
    obj = [ZERO] * (n + r) + [ZERO]
    for row in range(r):
        for j in range(n + r + 1):
            obj[j] += tab[row][j]
    for row in range(r):
        obj[n + row] -= ONE  # c_j = 1 on artificial columns

    while True:
        enter = next((j for j in range(n + r) if obj[j] > 0), None)
        if enter is None:
            break
        # ratio test, Bland tie-break on the leaving basis variable
        leave, best = None, None
        for row in range(r):
            coef = tab[row][enter]
            if coef > 0:
                ratio = tab[row][-1] / coef
                if best is None or ratio < best or (
                    ratio == best and basis[row] < basis[leave]
                ):
                    leave, best = row, ratio
        if leave is None:
            raise AssertionError("phase-1 objective is bounded by construction")
        _pivot(tab, obj, basis, leave, enter)

    value = obj[-1]
    if value == 0:
        v = [ZERO] * n
        for row, var in enumerate(basis):
            if var < n:
                v[var] = tab[row][-1]
        return v, None

    # infeasible: prices off the artificial columns give the Farkas direction
    y = [flip[row] * (obj[n + row] + ONE) for row in range(r)]
    return None, y


def _pivot(
    tab: list[list[Fraction]], obj: list[Fraction], basis: list[int], row: int, col: int
) -> None:
    piv = tab[row][col]
    tab[row] = [v / piv for v in tab[row]]
    for other in range(len(tab)):
        if other != row and tab[other][col] != 0:
            factor = tab[other][col]
            tab[other] = [a - factor * b for a, b in zip(tab[other], tab[row])]
    if obj[col] != 0:
        factor = obj[col]
        for j in range(len(obj)):
            obj[j] -= factor * tab[row][j]
    basis[row] = col
