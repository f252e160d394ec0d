"""Tiny-instance ground truth: enumeration, hull membership, brute-force opt.

Everything here is exhaustive and exact, intended for instances small enough
to list every feasible integer solution; family-scale midpoint membership is
certified constructively by the rounding module instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .corevec import FracVector
from .instance import CostVector, Instance
from .rounding import IntSolution, solution_violations
from .simplex import feasible_combination

__all__ = [
    "MembershipResult",
    "EnumerationBoundError",
    "InfeasibleInstanceError",
    "enumerate_integer_solutions",
    "membership_lp",
    "brute_force_opt",
    "solution_coordinates",
    "verify_membership",
]

ZERO = Fraction(0)
ONE = Fraction(1)


class EnumerationBoundError(ValueError):
    """Instance too large for exhaustive integer-solution enumeration."""


class InfeasibleInstanceError(ValueError):
    """No feasible integer solution exists."""


@dataclass(frozen=True)
class MembershipResult:
    """Hull-membership decision with a checkable certificate.

    Members carry convex weights recombining exactly to the query; non-members
    carry ``(coefficients, offset)`` with ``coeffs . vec(s) <= offset`` for
    every enumerated solution and ``coeffs . query > offset``.
    """

    member: bool
    convex_weights: Optional[dict[int, Fraction]] = None
    separating_inequality: Optional[tuple[tuple[Fraction, ...], Fraction]] = None


def enumerate_integer_solutions(
    inst: Instance, *, max_facilities: int = 4, max_clients: int = 8
) -> list[IntSolution]:
    """Every (open set, assignment) pair respecting openings and capacities.

    Open facilities serving nobody are included.  Assignments are enumerated
    in client order with no symmetry reduction; the size bound keeps the
    search exhaustive yet instant.
    """
    if inst.facility_count > max_facilities or inst.client_count > max_clients:
        raise EnumerationBoundError(
            f"instance ({inst.facility_count} facilities, {inst.client_count} clients) "
            f"exceeds the enumeration bound ({max_facilities}, {max_clients})"
        )
    n_f, m, cap = inst.facility_count, inst.client_count, inst.capacity
    out: list[IntSolution] = []
    for mask in range(1 << n_f):
        open_list = [i for i in range(n_f) if mask >> i & 1]
        if m and not open_list:
            continue
        open_set = frozenset(open_list)
        assign = [0] * m
        load = {i: 0 for i in open_list}

        def extend(j: int) -> None:
            if j == m:
                out.append(IntSolution(open=open_set, assign=tuple(assign)))
                return
            for i in open_list:
                if load[i] + inst.demand <= cap:
                    assign[j] = i
                    load[i] += inst.demand
                    extend(j + 1)
                    load[i] -= inst.demand

        extend(0)
    return out


def solution_coordinates(
    sol: IntSolution, facility_count: int, client_count: int
) -> list[Fraction]:
    """0/1 coordinates of a solution: openings then assignments, row-major."""
    y = [ONE if i in sol.open else ZERO for i in range(facility_count)]
    x = [ZERO] * (facility_count * client_count)
    for j, i in enumerate(sol.assign):
        x[i * client_count + j] = ONE
    return y + x


def _vector_coordinates(v: FracVector) -> list[Fraction]:
    dense = v.to_dense()
    return list(dense.y_dense) + [x for row in dense.x_dense for x in row]


def membership_lp(v: FracVector, solutions: Sequence[IntSolution]) -> MembershipResult:
    """Exact decision of ``v in conv(solutions)`` by rational pivoting."""
    if not solutions:
        raise ValueError("empty solution list")
    n_f, m = v.facility_count, v.client_count
    for sol in solutions:
        if len(sol.assign) != m or any(i >= n_f for i in sol.open):
            raise ValueError("solution dimensions do not match the vector")
    columns = [solution_coordinates(sol, n_f, m) + [ONE] for sol in solutions]
    rhs = _vector_coordinates(v) + [ONE]
    weights, farkas = feasible_combination(columns, rhs)
    if weights is not None:
        nonzero = {idx: w for idx, w in enumerate(weights) if w != 0}
        return MembershipResult(member=True, convex_weights=nonzero)
    coeffs = tuple(farkas[:-1])
    offset = -farkas[-1]
    return MembershipResult(
        member=False, separating_inequality=(coeffs, offset)
    )


def verify_membership(
    v: FracVector, solutions: Sequence[IntSolution], result: MembershipResult
) -> bool:
    """Re-check a membership certificate by direct arithmetic only."""
    n_f, m = v.facility_count, v.client_count
    target = _vector_coordinates(v)
    if result.member:
        weights = result.convex_weights
        if weights is None or any(w < 0 for w in weights.values()):
            return False
        if sum(weights.values(), ZERO) != 1:
            return False
        combo = [ZERO] * len(target)
        for idx, w in weights.items():
            for pos, coord in enumerate(solution_coordinates(solutions[idx], n_f, m)):
                combo[pos] += w * coord
        return combo == target
    if result.separating_inequality is None:
        return False
    coeffs, offset = result.separating_inequality
    for sol in solutions:
        value = sum(
            (c * coord for c, coord in zip(coeffs, solution_coordinates(sol, n_f, m))),
            ZERO,
        )
        if value > offset:
            return False
    query_value = sum((c * coord for c, coord in zip(coeffs, target)), ZERO)
    return query_value > offset


def brute_force_opt(
    inst: Instance,
    cost: CostVector,
    *,
    max_facilities: int = 4,
    max_clients: int = 8,
) -> tuple[Fraction, IntSolution]:
    """Exact optimum over all enumerated integer solutions, with a witness."""
    solutions = enumerate_integer_solutions(
        inst, max_facilities=max_facilities, max_clients=max_clients
    )
    if not solutions:
        raise InfeasibleInstanceError("no feasible integer solution exists")
    best_value: Optional[Fraction] = None
    best_sol: Optional[IntSolution] = None
    for sol in solutions:
        if solution_violations(inst, sol):
            raise AssertionError("enumerator produced an infeasible solution")
        value = cost.solution_cost(sol.open, sol.assign)
        if best_value is None or value < best_value:
            best_value, best_sol = value, sol
    return best_value, best_sol
