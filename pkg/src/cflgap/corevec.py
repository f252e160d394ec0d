"""Core fractional vectors, the collision predicate, and the natural LP check.

A core vector is indexed by an ordered pair of disjoint size-``t`` facility
sets ``(k, l)``: facilities of ``k`` and all outside facilities are fully
open, facilities of ``l`` carry opening value ``eps``; each designated client
spreads one unit of assignment mass over ``k`` (``x_k`` each) and ``l``
(``x_l`` each), while every other client spreads it uniformly over the
outside facilities.  Vectors live in [0,1]^(n_f + n_f*m) and are stored
either densely or by symmetry classes (one rational per facility-role x
client-role cell), which agree coordinatewise.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .instance import Instance, validate_params

__all__ = [
    "CoreIndex",
    "FracVector",
    "NaturalLpReport",
    "LpViolation",
    "canonical_client_set",
    "make_core_vector",
    "collides",
    "check_natural_lp",
    "midpoint",
]

ZERO = Fraction(0)
ONE = Fraction(1)

# Dense materialization guard: n_f * m coordinates beyond this is refused.
DENSE_LIMIT = 1_000_000


@dataclass(frozen=True)
class CoreIndex:
    """Ordered pair of disjoint facility t-sets plus its designated clients."""

    k: frozenset[int]
    l: frozenset[int]
    core_clients: frozenset[int]

    @classmethod
    def for_instance(
        cls, inst: Instance, k: Iterable[int], l: Iterable[int]
    ) -> "CoreIndex":
        """Validated index over ``inst`` with the canonical client set."""
        params = inst.family_params
        if params is None:
            raise ValueError("instance has no family_params")
        kf, lf = frozenset(k), frozenset(l)
        t = params.t
        if len(kf) != t or len(lf) != t:
            raise ValueError(f"|k| and |l| must both equal t = {t}, got {len(kf)}, {len(lf)}")
        if kf & lf:
            raise ValueError(f"k and l must be disjoint, share {sorted(kf & lf)}")
        allf = set(inst.facilities)
        if not (kf <= allf and lf <= allf):
            raise ValueError("k and l must be facility ids of the instance")
        clients = canonical_client_set(inst)
        if len(clients) != inst.capacity * t + 1:
            raise AssertionError("canonical client set has the wrong size")
        return cls(k=kf, l=lf, core_clients=clients)


def canonical_client_set(inst: Instance) -> frozenset[int]:
    """The designated client group: the first capacity*t + 1 client ids.

    One shared set serves every (k, l) pair; the collision census and the
    midpoint construction only ever depend on the facility sets.
    """
    params = inst.family_params
    if params is None:
        raise ValueError("instance has no family_params")
    count = inst.capacity * params.t + 1
    if count > inst.client_count:
        raise ValueError(
            f"instance has {inst.client_count} clients, needs {count} designated ones"
        )
    return frozenset(range(count))


def collides(c1: CoreIndex, c2: CoreIndex) -> bool:
    """True iff l1 has an element outside k2|l2 and l2 one outside k1|l1."""
    return bool(c1.l - (c2.k | c2.l)) and bool(c2.l - (c1.k | c1.l))


# ---------------------------------------------------------------------------
# FracVector
# ---------------------------------------------------------------------------


class FracVector:
    """Exact-rational (y, x) point with dense or symmetry-classed storage."""

    def __init__(
        self,
        facility_count: int,
        client_count: int,
        *,
        fac_classes: Optional[Sequence[frozenset[int]]] = None,
        cli_classes: Optional[Sequence[frozenset[int]]] = None,
        y_values: Optional[Sequence[Fraction]] = None,
        x_values: Optional[Sequence[Sequence[Fraction]]] = None,
        y_dense: Optional[Sequence[Fraction]] = None,
        x_dense: Optional[Sequence[Sequence[Fraction]]] = None,
    ):
        self.facility_count = facility_count
        self.client_count = client_count
        self._fac_lookup: Optional[dict[int, int]] = None
        self._cli_lookup: Optional[dict[int, int]] = None
        if fac_classes is not None:
            self.representation = "classed"
            self.fac_classes = tuple(frozenset(c) for c in fac_classes)
            self.cli_classes = tuple(frozenset(c) for c in cli_classes)
            self.y_values = tuple(Fraction(v) for v in y_values)
            self.x_values = tuple(tuple(Fraction(v) for v in row) for row in x_values)
            self._check_partition(self.fac_classes, facility_count, "facility")
            self._check_partition(self.cli_classes, client_count, "client")
            if len(self.y_values) != len(self.fac_classes):
                raise ValueError("one y value per facility class required")
            if len(self.x_values) != len(self.fac_classes) or any(
                len(row) != len(self.cli_classes) for row in self.x_values
            ):
                raise ValueError("x values must be facility-class x client-class")
            entries = list(self.y_values) + [v for row in self.x_values for v in row]
        else:
            self.representation = "dense"
            self.y_dense = tuple(Fraction(v) for v in y_dense)
            self.x_dense = tuple(tuple(Fraction(v) for v in row) for row in x_dense)
            if len(self.y_dense) != facility_count:
                raise ValueError("y length mismatch")
            if len(self.x_dense) != facility_count or any(
                len(row) != client_count for row in self.x_dense
            ):
                raise ValueError("x shape mismatch")
            entries = list(self.y_dense) + [v for row in self.x_dense for v in row]
        bad = next((v for v in entries if not 0 <= v <= 1), None)
        if bad is not None:
            raise ValueError(f"vector entry {bad} outside [0, 1]")

    @staticmethod
    def _check_partition(classes: Sequence[frozenset[int]], n: int, what: str) -> None:
        seen: set[int] = set()
        for c in classes:
            if c & seen:
                raise ValueError(f"overlapping {what} classes")
            seen |= c
        if seen != set(range(n)):
            raise ValueError(f"{what} classes do not partition range({n})")

    @classmethod
    def from_classes(
        cls,
        facility_count: int,
        client_count: int,
        fac_classes: Sequence[frozenset[int]],
        cli_classes: Sequence[frozenset[int]],
        y_values: Sequence[Fraction],
        x_values: Sequence[Sequence[Fraction]],
    ) -> "FracVector":
        return cls(
            facility_count,
            client_count,
            fac_classes=fac_classes,
            cli_classes=cli_classes,
            y_values=y_values,
            x_values=x_values,
        )

    @classmethod
    def from_dense(
        cls, y: Sequence[Fraction], x: Sequence[Sequence[Fraction]]
    ) -> "FracVector":
        return cls(len(y), len(x[0]) if x else 0, y_dense=y, x_dense=x)

    @property
    def dimension(self) -> int:
        return self.facility_count + self.facility_count * self.client_count

    # -- coordinate access ---------------------------------------------------

    def _fac_class_of(self, i: int) -> int:
        if self._fac_lookup is None:
            self._fac_lookup = {
                f: idx for idx, c in enumerate(self.fac_classes) for f in c
            }
        return self._fac_lookup[i]

    def _cli_class_of(self, j: int) -> int:
        if self._cli_lookup is None:
            self._cli_lookup = {
                cj: idx for idx, c in enumerate(self.cli_classes) for cj in c
            }
        return self._cli_lookup[j]

    def y_of(self, i: int) -> Fraction:
        if self.representation == "dense":
            return self.y_dense[i]
        return self.y_values[self._fac_class_of(i)]

    def x_of(self, i: int, j: int) -> Fraction:
        if self.representation == "dense":
            return self.x_dense[i][j]
        return self.x_values[self._fac_class_of(i)][self._cli_class_of(j)]

    # -- conversions and algebra ----------------------------------------------

    def to_dense(self) -> "FracVector":
        if self.representation == "dense":
            return self
        if self.facility_count * self.client_count > DENSE_LIMIT:
            raise ValueError(
                f"refusing to materialize {self.facility_count * self.client_count} coordinates"
            )
        y = [self.y_of(i) for i in range(self.facility_count)]
        x = [
            [self.x_of(i, j) for j in range(self.client_count)]
            for i in range(self.facility_count)
        ]
        return FracVector.from_dense(y, x)

    def set_y(self, i: int, value: Fraction) -> "FracVector":
        """Dense copy with one opening coordinate replaced."""
        d = self.to_dense()
        y = list(d.y_dense)
        y[i] = Fraction(value)
        return FracVector.from_dense(y, d.x_dense)

    def set_x(self, i: int, j: int, value: Fraction) -> "FracVector":
        """Dense copy with one assignment coordinate replaced."""
        d = self.to_dense()
        x = [list(row) for row in d.x_dense]
        x[i][j] = Fraction(value)
        return FracVector.from_dense(d.y_dense, x)

    def _same_dims(self, other: "FracVector") -> None:
        if (
            self.facility_count != other.facility_count
            or self.client_count != other.client_count
        ):
            raise ValueError("vector dimension mismatch")

    def equals(self, other: "FracVector") -> bool:
        """Exact coordinatewise equality, classwise whenever both are classed."""
        self._same_dims(other)
        if self.representation == "classed" and other.representation == "classed":
            for fc, _, _, ya, yb in _refined_y(self, other):
                if ya != yb:
                    return False
            for _, _, xa, xb in _refined_x(self, other):
                if xa != xb:
                    return False
            return True
        for i in range(self.facility_count):
            if self.y_of(i) != other.y_of(i):
                return False
            for j in range(self.client_count):
                if self.x_of(i, j) != other.x_of(i, j):
                    return False
        return True


def _refine(
    parts_a: Sequence[frozenset[int]], parts_b: Sequence[frozenset[int]]
) -> list[tuple[frozenset[int], int, int]]:
    """Common refinement: (atom, index in a, index in b), deterministic order."""
    atoms = []
    for ia, ca in enumerate(parts_a):
        for ib, cb in enumerate(parts_b):
            atom = ca & cb
            if atom:
                atoms.append((atom, ia, ib))
    atoms.sort(key=lambda entry: min(entry[0]))
    return atoms


def _refined_y(a: FracVector, b: FracVector):
    for atom, ia, ib in _refine(a.fac_classes, b.fac_classes):
        yield atom, ia, ib, a.y_values[ia], b.y_values[ib]


def _refined_x(a: FracVector, b: FracVector):
    fac_atoms = _refine(a.fac_classes, b.fac_classes)
    cli_atoms = _refine(a.cli_classes, b.cli_classes)
    for f_atom, fa, fb in fac_atoms:
        for c_atom, ca, cb in cli_atoms:
            yield f_atom, c_atom, a.x_values[fa][ca], b.x_values[fb][cb]


def midpoint(v1: FracVector, v2: FracVector) -> FracVector:
    """Coordinatewise exact average of two vectors of the same shape."""
    v1._same_dims(v2)
    if v1.representation == "classed" and v2.representation == "classed":
        fac_atoms = _refine(v1.fac_classes, v2.fac_classes)
        cli_atoms = _refine(v1.cli_classes, v2.cli_classes)
        fac_classes = [atom for atom, _, _ in fac_atoms]
        cli_classes = [atom for atom, _, _ in cli_atoms]
        y_values = [
            (v1.y_values[ia] + v2.y_values[ib]) / 2 for _, ia, ib in fac_atoms
        ]
        x_values = [
            [
                (v1.x_values[fa][ca] + v2.x_values[fb][cb]) / 2
                for _, ca, cb in cli_atoms
            ]
            for _, fa, fb in fac_atoms
        ]
        return FracVector.from_classes(
            v1.facility_count, v1.client_count, fac_classes, cli_classes, y_values, x_values
        )
    d1, d2 = v1.to_dense(), v2.to_dense()
    y = [(a + b) / 2 for a, b in zip(d1.y_dense, d2.y_dense)]
    x = [
        [(a + b) / 2 for a, b in zip(row1, row2)]
        for row1, row2 in zip(d1.x_dense, d2.x_dense)
    ]
    return FracVector.from_dense(y, x)


# ---------------------------------------------------------------------------
# Core vector construction
# ---------------------------------------------------------------------------


def make_core_vector(
    inst: Instance, k: Iterable[int], l: Iterable[int], *, dense: bool = False
) -> FracVector:
    """The core vector indexed by (k, l), symmetry-classed by default."""
    violations = validate_params(inst)
    if violations:
        raise ValueError(
            "instance parameters are invalid: " + "; ".join(str(v) for v in violations)
        )
    params = inst.family_params
    index = CoreIndex.for_instance(inst, k, l)
    kf, lf = index.k, index.l
    outside = frozenset(inst.facilities) - kf - lf
    core = index.core_clients
    rest = frozenset(inst.clients) - core
    x_out = Fraction(1, inst.facility_count - 2 * params.t)

    fac_classes = [kf, lf] + ([outside] if outside else [])
    cli_classes = [core] + ([rest] if rest else [])
    y_values = [ONE, params.eps] + ([ONE] if outside else [])
    x_rows = {
        "k": [params.x_k] + ([ZERO] if rest else []),
        "l": [params.x_l] + ([ZERO] if rest else []),
        "out": [ZERO] + ([x_out] if rest else []),
    }
    x_values = [x_rows["k"], x_rows["l"]] + ([x_rows["out"]] if outside else [])
    vec = FracVector.from_classes(
        inst.facility_count, inst.client_count, fac_classes, cli_classes, y_values, x_values
    )
    return vec.to_dense() if dense else vec


# ---------------------------------------------------------------------------
# Natural LP feasibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpViolation:
    constraint: str
    where: str
    slack: Fraction

    def __str__(self) -> str:
        return f"{self.constraint} at {self.where}: violated by {self.slack}"


@dataclass(frozen=True)
class NaturalLpReport:
    passed: bool
    violations: tuple[LpViolation, ...]

    def __bool__(self) -> bool:
        return self.passed


def check_natural_lp(inst: Instance, v: FracVector) -> NaturalLpReport:
    """Exact check of the natural relaxation constraints.

    (i) every client's assignment mass is exactly 1, (ii) 0 <= x_ij <= y_i <= 1,
    (iii) every facility's assigned demand is at most capacity * y_i.
    Classed vectors are checked per symmetry class; dense per coordinate.
    """
    if v.facility_count != inst.facility_count or v.client_count != inst.client_count:
        raise ValueError("vector/instance dimension mismatch")
    out: list[LpViolation] = []
    cap = inst.capacity

    if v.representation == "classed":
        for cc_idx, cc in enumerate(v.cli_classes):
            mass = sum(
                (
                    len(fc) * v.x_values[fc_idx][cc_idx]
                    for fc_idx, fc in enumerate(v.fac_classes)
                ),
                ZERO,
            )
            if mass != 1:
                out.append(
                    LpViolation(
                        "assignment_mass",
                        f"client class {min(cc)}..",
                        abs(mass - 1),
                    )
                )
        for fc_idx, fc in enumerate(v.fac_classes):
            y = v.y_values[fc_idx]
            where_f = f"facility class {min(fc)}.."
            if y > 1:
                out.append(LpViolation("opening_bound", where_f, y - 1))
            load = ZERO
            for cc_idx, cc in enumerate(v.cli_classes):
                x = v.x_values[fc_idx][cc_idx]
                if x > y:
                    out.append(
                        LpViolation(
                            "assignment_le_opening",
                            f"{where_f} / client class {min(cc)}..",
                            x - y,
                        )
                    )
                load += len(cc) * inst.demand * x
            if load > cap * y:
                out.append(LpViolation("capacity", where_f, load - cap * y))
    else:
        for j in range(v.client_count):
            mass = sum((v.x_dense[i][j] for i in range(v.facility_count)), ZERO)
            if mass != 1:
                out.append(LpViolation("assignment_mass", f"client {j}", abs(mass - 1)))
        for i in range(v.facility_count):
            y = v.y_dense[i]
            if y > 1:
                out.append(LpViolation("opening_bound", f"facility {i}", y - 1))
            load = ZERO
            for j in range(v.client_count):
                x = v.x_dense[i][j]
                if x > y:
                    out.append(
                        LpViolation(
                            "assignment_le_opening", f"facility {i} / client {j}", x - y
                        )
                    )
                load += inst.demand * x
            if load > cap * y:
                out.append(LpViolation("capacity", f"facility {i}", load - cap * y))

    return NaturalLpReport(passed=not out, violations=tuple(out))
