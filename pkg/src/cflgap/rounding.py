"""Randomized rounding of the midpoint of two colliding core vectors.

For a colliding pair of core indices, a coin chooses one of two mirror-image
experiments.  Each experiment serves the designated clients with one side's
high set plus exactly one facility drawn from its low set, and serves the
remaining clients with the outside facilities plus (with probability
``t*eps``) one pivot facility borrowed from the other pair.  Fractional slot
targets are rounded to floor/ceil with the expectation-preserving coin, and
leftover clients are spread in near-even splits.

Three views of the same distribution are provided and cross-checked:

* :func:`sample_D` draws one integer solution (seed-deterministic),
* :func:`expected_vector` computes the exact closed-form expectation by
  linearity over the experiment steps, and
* :func:`enumerate_outcome_classes` lists every floor/ceil branch with its
  exact probability, collapsing exchangeable client and bin choices.

Together they certify constructively that the midpoint of a colliding pair
is a convex combination of feasible integer solutions
(:func:`verify_midpoint`).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corevec import CoreIndex, FracVector, collides, make_core_vector, midpoint
from .instance import Instance, validate_params
from .randomness import ExactRng

__all__ = [
    "IntSolution",
    "OutcomeClass",
    "MidpointCertificate",
    "NonCollidingPairError",
    "SampleDraw",
    "pivot_facilities",
    "round_slots",
    "split_slots",
    "sample_D",
    "sample_outcome",
    "outcome_class_key",
    "expected_vector",
    "enumerate_outcome_classes",
    "verify_midpoint",
    "solution_violations",
]

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


class NonCollidingPairError(ValueError):
    """Raised when an operation needs a colliding pair and gets none."""


@dataclass(frozen=True)
class IntSolution:
    """Open facilities plus a total client-to-facility assignment."""

    open: frozenset[int]
    assign: tuple[int, ...]


def solution_violations(inst: Instance, sol: IntSolution) -> list[str]:
    """Violated integer-solution invariants (empty list = feasible)."""
    out: list[str] = []
    if len(sol.assign) != inst.client_count:
        out.append(
            f"assignment covers {len(sol.assign)} clients, instance has {inst.client_count}"
        )
        return out
    if not sol.open <= set(inst.facilities):
        out.append("open set contains unknown facility ids")
    if inst.client_count == 0:
        return out
    arr = np.asarray(sol.assign, dtype=np.int64)
    if arr.min() < 0 or arr.max() >= inst.facility_count:
        out.append("assignment targets unknown facility ids")
        return out
    counts = np.bincount(arr, minlength=inst.facility_count)
    used = np.nonzero(counts)[0]
    not_open = [int(i) for i in used if int(i) not in sol.open]
    if not_open:
        out.append(f"clients assigned to closed facilities {not_open}")
    over = [
        (int(i), int(counts[i])) for i in used if counts[i] * inst.demand > inst.capacity
    ]
    if over:
        out.append(f"capacity exceeded at {over} (capacity {inst.capacity})")
    return out


# ---------------------------------------------------------------------------
# Pivots and elementary rounding operations
# ---------------------------------------------------------------------------


def pivot_facilities(c1: CoreIndex, c2: CoreIndex) -> tuple[int, int]:
    """The shared pivot pair: smallest ids of l1 \\ (k2|l2) and l2 \\ (k1|l1).

    The first pivot is the residual-probability member of l1 in experiment A
    and the borrowed facility in experiment B; the second plays the mirror
    roles.  Any fixed consistent choice works; smallest id keeps it
    deterministic.
    """
    side1 = c1.l - (c2.k | c2.l)
    side2 = c2.l - (c1.k | c1.l)
    if not side1 or not side2:
        empty = "l1 \\ (k2|l2)" if not side1 else "l2 \\ (k1|l1)"
        raise NonCollidingPairError(f"no pivot exists: {empty} is empty")
    return min(side1), min(side2)


def round_slots(w: Fraction, rng: ExactRng) -> int:
    """floor(w) with probability 1 - frac(w), else ceil(w); E[result] = w."""
    w = Fraction(w)
    if w < 0:
        raise ValueError(f"slot target must be nonnegative, got {w}")
    floor = w.numerator // w.denominator
    frac = w - floor
    if frac == 0:
        return floor
    return floor + 1 if rng.bernoulli(frac) else floor


def split_slots(
    total: int, bins: Sequence[int], avg: Fraction, rng: ExactRng
) -> list[int]:
    """Near-even split of ``total`` slots over ``bins`` with per-bin mean avg.

    Exactly ``len(bins) * frac(avg)`` uniformly chosen bins get ceil(avg),
    the rest floor(avg); requires total == len(bins) * avg exactly.
    """
    avg = Fraction(avg)
    if avg < 0:
        raise ValueError(f"avg must be nonnegative, got {avg}")
    if len(bins) * avg != total:
        raise ValueError(f"inconsistent split: {len(bins)} bins * {avg} != {total}")
    if not bins:
        return []
    base = avg.numerator // avg.denominator
    extra = total - base * len(bins)
    counts = [base] * len(bins)
    for pos in rng.chosen_positions(len(bins), extra):
        counts[pos] += 1
    return counts


# ---------------------------------------------------------------------------
# Experiment structure shared by sampler, expectation engine and enumerator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Experiment:
    label: str
    always_open: tuple[int, ...]   # the owning high set, opened in step 1
    choice_set: tuple[int, ...]    # the owning low set; exactly one opens
    pivot_choice: int              # choice_set member with residual probability
    pivot_extra: int               # borrowed facility, opened with prob t*eps
    outside_bins: tuple[int, ...]  # remaining facilities, always opened in step 2
    core_pool: tuple[int, ...]     # designated clients, served in step 1
    rest_pool: tuple[int, ...]     # remaining clients, served in step 2
    p_nonpivot: Fraction
    p_pivot: Fraction
    p_extra: Fraction
    w_nonpivot: Fraction
    w_pivot: Fraction
    w_extra: Fraction

    def choice_probability(self, i: int) -> Fraction:
        return self.p_pivot if i == self.pivot_choice else self.p_nonpivot

    def choice_target(self, i: int) -> Fraction:
        return self.w_pivot if i == self.pivot_choice else self.w_nonpivot

    def role_of(self, i: int) -> str:
        if i == self.pivot_extra:
            return "extra"
        if i == self.pivot_choice:
            return "pivot"
        if i in self.always_open:
            return "high"
        if i in self.choice_set:
            return "low"
        return "outside"


def _precondition(inst: Instance, c1: CoreIndex, c2: CoreIndex) -> None:
    violations = validate_params(inst)
    if violations:
        raise ValueError(
            "instance parameters are invalid: " + "; ".join(str(v) for v in violations)
        )
    if not collides(c1, c2):
        # raises with the empty side named
        pivot_facilities(c1, c2)


def _experiment_specs(
    inst: Instance, c1: CoreIndex, c2: CoreIndex
) -> tuple[_Experiment, _Experiment]:
    params = inst.family_params
    t, eps, x_l = params.t, params.eps, params.x_l
    f, g = pivot_facilities(c1, c2)
    q = inst.facility_count - 2 * t
    p_pivot = 1 - (t - 1) * eps
    p_extra = t * eps

    def build(label: str, own: CoreIndex, pivot_choice: int, pivot_extra: int) -> _Experiment:
        core = tuple(sorted(own.core_clients))
        rest = tuple(j for j in inst.clients if j not in own.core_clients)
        n_core, m_rest = len(core), len(rest)
        outside = tuple(
            sorted(set(inst.facilities) - own.k - own.l - {pivot_extra})
        )
        w_base = n_core * x_l
        return _Experiment(
            label=label,
            always_open=tuple(sorted(own.k)),
            choice_set=tuple(sorted(own.l)),
            pivot_choice=pivot_choice,
            pivot_extra=pivot_extra,
            outside_bins=outside,
            core_pool=core,
            rest_pool=rest,
            p_nonpivot=eps,
            p_pivot=p_pivot,
            p_extra=p_extra,
            w_nonpivot=w_base / eps,
            w_pivot=w_base / p_pivot,
            w_extra=Fraction(m_rest, q) / p_extra if m_rest else ZERO,
        )

    return build("A", c1, f, g), build("B", c2, g, f)


# ---------------------------------------------------------------------------
# Sampler
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleDraw:
    """One sampled solution plus the branch identifiers that produced it."""

    solution: IntSolution
    experiment: str
    chosen_l_facility: int
    extra_open: bool


def _assign_run(assign: np.ndarray, perm: np.ndarray, start: int, count: int, fac: int) -> int:
    assign[perm[start : start + count]] = fac
    return start + count


def _run_experiment(inst: Instance, exp: _Experiment, rng: ExactRng) -> SampleDraw:
    cap = inst.capacity
    assign = np.full(inst.client_count, -1, dtype=np.int64)

    # step 1: one low-set facility plus the high set serve the designated pool
    probs = [exp.choice_probability(i) for i in exp.choice_set]
    chosen = exp.choice_set[rng.weighted_index(probs)]
    slots = round_slots(exp.choice_target(chosen), rng)
    n_core = len(exp.core_pool)
    if slots > min(n_core, cap):
        raise RuntimeError(
            f"step-1 slot count {slots} exceeds pool/capacity; invalid parameters upstream"
        )
    perm = rng.permuted(np.asarray(exp.core_pool, dtype=np.int64))
    pos = _assign_run(assign, perm, 0, slots, chosen)
    remaining = n_core - slots
    counts = split_slots(
        remaining, exp.always_open, Fraction(remaining, len(exp.always_open)), rng
    )
    for fac, count in zip(exp.always_open, counts):
        if count > cap:
            raise RuntimeError(
                f"step-1 split count {count} exceeds capacity; invalid parameters upstream"
            )
        pos = _assign_run(assign, perm, pos, count, fac)

    # step 2: outside facilities (plus maybe the borrowed pivot) serve the rest
    extra_open = rng.bernoulli(exp.p_extra)
    m_rest = len(exp.rest_pool)
    perm2 = rng.permuted(np.asarray(exp.rest_pool, dtype=np.int64))
    pos2 = 0
    if extra_open:
        slots2 = round_slots(exp.w_extra, rng)
        if slots2 > min(m_rest, cap):
            raise RuntimeError(
                f"step-2 slot count {slots2} exceeds pool/capacity; invalid parameters upstream"
            )
        pos2 = _assign_run(assign, perm2, 0, slots2, exp.pivot_extra)
    rem2 = m_rest - pos2
    if exp.outside_bins:
        counts2 = split_slots(
            rem2, exp.outside_bins, Fraction(rem2, len(exp.outside_bins)), rng
        )
        for fac, count in zip(exp.outside_bins, counts2):
            if count > cap:
                raise RuntimeError(
                    f"step-2 split count {count} exceeds capacity; invalid parameters upstream"
                )
            pos2 = _assign_run(assign, perm2, pos2, count, fac)
    elif rem2:
        raise RuntimeError(
            "no outside facilities left for remaining clients; invalid parameters upstream"
        )

    open_set = (
        frozenset(exp.always_open)
        | {chosen}
        | frozenset(exp.outside_bins)
        | ({exp.pivot_extra} if extra_open else frozenset())
    )
    solution = IntSolution(open=open_set, assign=tuple(assign.tolist()))
    return SampleDraw(
        solution=solution,
        experiment=exp.label,
        chosen_l_facility=chosen,
        extra_open=extra_open,
    )


def sample_outcome(
    inst: Instance, c1: CoreIndex, c2: CoreIndex, rng: ExactRng
) -> SampleDraw:
    """One draw from the distribution, with its branch identifiers."""
    _precondition(inst, c1, c2)
    exp_a, exp_b = _experiment_specs(inst, c1, c2)
    exp = exp_a if rng.bernoulli(HALF) else exp_b
    return _run_experiment(inst, exp, rng)


def sample_D(inst: Instance, c1: CoreIndex, c2: CoreIndex, rng: ExactRng) -> IntSolution:
    """One integer solution drawn from the distribution."""
    return sample_outcome(inst, c1, c2, rng).solution


# ---------------------------------------------------------------------------
# Closed-form expectation
# ---------------------------------------------------------------------------


def _role_tables(
    exp: _Experiment,
) -> tuple[dict[str, Fraction], dict[str, Fraction], dict[str, Fraction]]:
    """Per-role opening probability and per-client assignment expectations."""
    t = len(exp.always_open)
    n_core = len(exp.core_pool)
    m_rest = len(exp.rest_pool)

    y = {
        "high": ONE,
        "low": exp.p_nonpivot,
        "pivot": exp.p_pivot,
        "extra": exp.p_extra,
        "outside": ONE,
    }

    # expected step-1 slots, divided by the pool size, give E[x] on that pool
    e_high = (
        (t - 1) * exp.p_nonpivot * (n_core - exp.w_nonpivot)
        + exp.p_pivot * (n_core - exp.w_pivot)
    ) / t
    x_core = {
        "high": e_high / n_core,
        "low": exp.p_nonpivot * exp.w_nonpivot / n_core,
        "pivot": exp.p_pivot * exp.w_pivot / n_core,
        "extra": ZERO,
        "outside": ZERO,
    }

    x_rest = {role: ZERO for role in y}
    if m_rest:
        nb = len(exp.outside_bins)
        x_rest["extra"] = exp.p_extra * exp.w_extra / m_rest
        e_outside = (
            exp.p_extra * (m_rest - exp.w_extra) + (1 - exp.p_extra) * m_rest
        ) / nb
        x_rest["outside"] = e_outside / m_rest
    return y, x_core, x_rest


def expected_vector(inst: Instance, c1: CoreIndex, c2: CoreIndex) -> FracVector:
    """Exact expectation of the distribution, by linearity over the steps.

    Built purely from the experiments' opening probabilities and slot
    targets (rounding and splitting preserve expectations, and clients are
    exchangeable within each pool); no sampling, no averaging of the core
    vectors themselves.
    """
    _precondition(inst, c1, c2)
    exp_a, exp_b = _experiment_specs(inst, c1, c2)
    if exp_a.core_pool != exp_b.core_pool:
        raise AssertionError("designated client pools must coincide")

    y_a, xc_a, xr_a = _role_tables(exp_a)
    y_b, xc_b, xr_b = _role_tables(exp_b)

    atoms: dict[tuple[str, str], set[int]] = {}
    for i in inst.facilities:
        atoms.setdefault((exp_a.role_of(i), exp_b.role_of(i)), set()).add(i)

    core = frozenset(exp_a.core_pool)
    rest = frozenset(exp_a.rest_pool)
    cli_classes = [core] + ([rest] if rest else [])

    fac_classes, y_values, x_values = [], [], []
    for (ra, rb), members in sorted(atoms.items(), key=lambda kv: min(kv[1])):
        fac_classes.append(frozenset(members))
        y_values.append(HALF * (y_a[ra] + y_b[rb]))
        row = [HALF * (xc_a[ra] + xc_b[rb])]
        if rest:
            row.append(HALF * (xr_a[ra] + xr_b[rb]))
        x_values.append(row)

    return FracVector.from_classes(
        inst.facility_count,
        inst.client_count,
        fac_classes,
        cli_classes,
        y_values,
        x_values,
    )


# ---------------------------------------------------------------------------
# Outcome-class enumeration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeClass:
    """All outcomes sharing one branch combination and one slot profile.

    Client-subset choices and which-bin-gets-the-extra-slot choices are
    collapsed: the profile stores the canonical representative (ceil slots on
    the lowest-id bins), and ``probability`` covers the whole class.  Only
    nonzero counts appear in the profile.
    """

    experiment: str
    chosen_l_facility: int
    extra_open: bool
    slot_profile: tuple[tuple[int, int], ...]  # (facility, count), sorted
    probability: Fraction
    open_facilities: frozenset[int]
    feasible: bool

    @property
    def key(self) -> tuple:
        return (
            self.experiment,
            self.chosen_l_facility,
            self.extra_open,
            self.slot_profile,
        )


def _round_branches(w: Fraction) -> list[tuple[int, Fraction]]:
    floor = w.numerator // w.denominator
    frac = w - floor
    if frac == 0:
        return [(floor, ONE)]
    return [(floor, 1 - frac), (floor + 1, frac)]


def _split_profile(total: int, bins: Sequence[int]) -> dict[int, int]:
    """Canonical near-even split: ceil counts on the lowest-id bins."""
    if not bins:
        if total:
            raise ValueError("cannot split clients over zero bins")
        return {}
    base, extra = divmod(total, len(bins))
    return {
        fac: base + (1 if idx < extra else 0) for idx, fac in enumerate(bins)
    }


def _class_from_branches(
    inst: Instance,
    exp: _Experiment,
    chosen: int,
    slots1: int,
    extra_open: bool,
    slots2: int,
    probability: Fraction,
) -> OutcomeClass:
    n_core, m_rest = len(exp.core_pool), len(exp.rest_pool)
    profile: dict[int, int] = {}
    if slots1:
        profile[chosen] = slots1
    rem1 = n_core - slots1
    rem2 = m_rest - (slots2 if extra_open else 0)
    feasible = rem1 >= 0 and rem2 >= 0
    if rem1 >= 0:
        profile.update(
            (fac, cnt)
            for fac, cnt in _split_profile(rem1, exp.always_open).items()
            if cnt
        )
    if extra_open and slots2:
        profile[exp.pivot_extra] = slots2
    if exp.outside_bins:
        if rem2 >= 0:
            profile.update(
                (fac, cnt)
                for fac, cnt in _split_profile(rem2, exp.outside_bins).items()
                if cnt
            )
    elif rem2 > 0:
        feasible = False

    open_set = (
        frozenset(exp.always_open)
        | {chosen}
        | frozenset(exp.outside_bins)
        | ({exp.pivot_extra} if extra_open else frozenset())
    )
    served = sum(profile.values())
    feasible = (
        feasible
        and served == inst.client_count
        and all(0 <= cnt * inst.demand <= inst.capacity for cnt in profile.values())
        and set(profile) <= open_set
    )
    return OutcomeClass(
        experiment=exp.label,
        chosen_l_facility=chosen,
        extra_open=extra_open,
        slot_profile=tuple(sorted(profile.items())),
        probability=probability,
        open_facilities=open_set,
        feasible=feasible,
    )


def enumerate_outcome_classes(
    inst: Instance, c1: CoreIndex, c2: CoreIndex
) -> list[OutcomeClass]:
    """Every branch combination with exact probability; probabilities sum to 1.

    Probability-zero branches (e.g. the closed-pivot branch when t*eps = 1)
    are pruned.
    """
    _precondition(inst, c1, c2)
    out: list[OutcomeClass] = []
    for exp in _experiment_specs(inst, c1, c2):
        for chosen in exp.choice_set:
            p_choice = HALF * exp.choice_probability(chosen)
            if p_choice == 0:
                continue
            for slots1, p_r1 in _round_branches(exp.choice_target(chosen)):
                step2: list[tuple[bool, int, Fraction]] = []
                if exp.p_extra > 0:
                    for slots2, p_r2 in _round_branches(exp.w_extra):
                        step2.append((True, slots2, exp.p_extra * p_r2))
                if exp.p_extra < 1:
                    step2.append((False, 0, 1 - exp.p_extra))
                for extra_open, slots2, p_s2 in step2:
                    prob = p_choice * p_r1 * p_s2
                    out.append(
                        _class_from_branches(
                            inst, exp, chosen, slots1, extra_open, slots2, prob
                        )
                    )
    return out


def outcome_class_key(
    inst: Instance, c1: CoreIndex, c2: CoreIndex, draw: SampleDraw
) -> tuple:
    """Canonical class key of a sampled draw, matching OutcomeClass.key.

    Counts within each exchangeable bin group are sorted onto ascending ids,
    collapsing which-bin-got-the-extra-slot choices exactly as the
    enumerator does.
    """
    exp_a, exp_b = _experiment_specs(inst, c1, c2)
    exp = exp_a if draw.experiment == "A" else exp_b
    counts = np.bincount(
        np.asarray(draw.solution.assign, dtype=np.int64),
        minlength=inst.facility_count,
    )
    profile: dict[int, int] = {}
    for fac in (draw.chosen_l_facility, exp.pivot_extra):
        if counts[fac]:
            profile[fac] = int(counts[fac])
    for group in (exp.always_open, exp.outside_bins):
        group_counts = sorted((int(counts[fac]) for fac in group), reverse=True)
        for fac, cnt in zip(sorted(group), group_counts):
            if cnt:
                profile[fac] = cnt
    return (
        draw.experiment,
        draw.chosen_l_facility,
        draw.extra_open,
        tuple(sorted(profile.items())),
    )


# ---------------------------------------------------------------------------
# The midpoint certificate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MidpointCertificate:
    """Constructive evidence that a colliding pair's midpoint is integral-convex.

    Valid iff the closed-form expectation equals the midpoint exactly, every
    outcome class is a feasible integer solution, and the class probabilities
    sum to exactly 1.  Parameter sets whose rounding branches overflow
    capacity yield an (honestly) invalid certificate; the classic family has
    ample slack.
    """

    pair: tuple[CoreIndex, CoreIndex]
    expectation_matches: bool
    all_classes_feasible: bool
    class_count: int
    probability_sum: Fraction

    @property
    def valid(self) -> bool:
        return (
            self.expectation_matches
            and self.all_classes_feasible
            and self.probability_sum == 1
        )


def verify_midpoint(inst: Instance, c1: CoreIndex, c2: CoreIndex) -> MidpointCertificate:
    """Exact midpoint-membership certificate for a colliding pair."""
    _precondition(inst, c1, c2)
    s1 = make_core_vector(inst, c1.k, c1.l)
    s2 = make_core_vector(inst, c2.k, c2.l)
    mid = midpoint(s1, s2)
    expectation = expected_vector(inst, c1, c2)
    classes = enumerate_outcome_classes(inst, c1, c2)
    return MidpointCertificate(
        pair=(c1, c2),
        expectation_matches=expectation.equals(mid),
        all_classes_feasible=all(cl.feasible for cl in classes),
        class_count=len(classes),
        probability_sum=sum((cl.probability for cl in classes), ZERO),
    )
