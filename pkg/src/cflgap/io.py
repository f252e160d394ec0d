"""JSON documents for instances, vectors, solutions, and reports.

Conventions: rationals are strings ``"p/q"`` in lowest terms; census-scale
integers are decimal strings; id sets are either explicit lists or
``{"span": [lo, hi]}`` for contiguous ranges.  Documents are written with
sorted keys and a trailing newline, so identical content yields identical
bytes.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any, Iterable, Optional

from .certify import CensusReport, GapCertificate, McEstimate
from .corevec import CoreIndex, FracVector, NaturalLpReport
from .instance import FamilyParams, Instance
from .polytope import MembershipResult
from .rounding import IntSolution, MidpointCertificate, OutcomeClass

__all__ = [
    "frac_to_str",
    "frac_from_str",
    "instance_to_doc",
    "instance_from_doc",
    "core_file_doc",
    "load_core_doc",
    "solution_to_doc",
    "solution_from_doc",
    "census_report_to_doc",
    "gap_certificate_to_doc",
    "midpoint_certificate_to_doc",
    "outcome_class_to_doc",
    "membership_to_doc",
    "lp_report_to_doc",
    "document_bytes",
    "write_document",
    "read_document",
    "sha256_of",
]


def frac_to_str(f: Fraction) -> str:
    f = Fraction(f)
    return f"{f.numerator}/{f.denominator}"


def frac_from_str(s: str) -> Fraction:
    if "/" in s:
        num, den = s.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(int(s))


def _ids_to_doc(ids: Iterable[int]) -> Any:
    ordered = sorted(ids)
    if ordered and ordered == list(range(ordered[0], ordered[-1] + 1)):
        return {"span": [ordered[0], ordered[-1] + 1]}
    return ordered


def _ids_from_doc(doc: Any) -> frozenset[int]:
    if isinstance(doc, dict):
        lo, hi = doc["span"]
        return frozenset(range(lo, hi))
    return frozenset(int(i) for i in doc)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


def instance_to_doc(inst: Instance) -> dict:
    doc = {
        "facility_count": inst.facility_count,
        "client_count": inst.client_count,
        "capacity": inst.capacity,
    }
    p = inst.family_params
    if p is not None:
        fp = {
            "t": p.t,
            "eps": frac_to_str(p.eps),
            "x_l": frac_to_str(p.x_l),
            "core_client_count": p.core_client_count,
        }
        if p.a is not None:
            fp["a"] = p.a
        doc["family_params"] = fp
    return doc


def instance_from_doc(doc: dict) -> Instance:
    params: Optional[FamilyParams] = None
    if "family_params" in doc and doc["family_params"] is not None:
        fp = doc["family_params"]
        params = FamilyParams(
            t=int(fp["t"]),
            eps=frac_from_str(fp["eps"]),
            x_l=frac_from_str(fp["x_l"]),
            core_client_count=int(fp["core_client_count"]),
            a=int(fp["a"]) if "a" in fp and fp["a"] is not None else None,
        )
    return Instance(
        facility_count=int(doc["facility_count"]),
        client_count=int(doc["client_count"]),
        capacity=int(doc["capacity"]),
        family_params=params,
    )


# ---------------------------------------------------------------------------
# Vectors and core files
# ---------------------------------------------------------------------------


def _vector_to_doc(vec: FracVector) -> dict:
    if vec.representation == "classed":
        return {
            "repr": "classed",
            "y": [
                {"facilities": _ids_to_doc(fc), "value": frac_to_str(y)}
                for fc, y in zip(vec.fac_classes, vec.y_values)
            ],
            "x": [
                {
                    "facilities": _ids_to_doc(fc),
                    "clients": _ids_to_doc(cc),
                    "value": frac_to_str(vec.x_values[fi][ci]),
                }
                for fi, fc in enumerate(vec.fac_classes)
                for ci, cc in enumerate(vec.cli_classes)
            ],
        }
    triplets = [
        [i, j, frac_to_str(vec.x_dense[i][j])]
        for i in range(vec.facility_count)
        for j in range(vec.client_count)
        if vec.x_dense[i][j] != 0
    ]
    return {
        "repr": "dense",
        "y": [frac_to_str(y) for y in vec.y_dense],
        "x": triplets,
    }


def _vector_from_doc(doc: dict, facility_count: int, client_count: int) -> FracVector:
    if doc["repr"] == "classed":
        fac_classes = [_ids_from_doc(entry["facilities"]) for entry in doc["y"]]
        y_values = [frac_from_str(entry["value"]) for entry in doc["y"]]
        cli_classes: list[frozenset[int]] = []
        cell: dict[tuple[int, int], Fraction] = {}
        for entry in doc["x"]:
            fc = _ids_from_doc(entry["facilities"])
            cc = _ids_from_doc(entry["clients"])
            if cc not in cli_classes:
                cli_classes.append(cc)
            cell[(fac_classes.index(fc), cli_classes.index(cc))] = frac_from_str(
                entry["value"]
            )
        x_values = [
            [cell[(fi, ci)] for ci in range(len(cli_classes))]
            for fi in range(len(fac_classes))
        ]
        return FracVector.from_classes(
            facility_count, client_count, fac_classes, cli_classes, y_values, x_values
        )
    y = [frac_from_str(s) for s in doc["y"]]
    x = [[Fraction(0)] * client_count for _ in range(facility_count)]
    for i, j, val in doc["x"]:
        x[int(i)][int(j)] = frac_from_str(val)
    return FracVector.from_dense(y, x)


def core_file_doc(inst: Instance, index: CoreIndex, vec: FracVector) -> dict:
    """Self-contained core-vector document: instance, index, and payload."""
    return {
        "instance": instance_to_doc(inst),
        "k": sorted(index.k),
        "l": sorted(index.l),
        "core_clients": _ids_to_doc(index.core_clients),
        **_vector_to_doc(vec),
    }


def load_core_doc(doc: dict) -> tuple[Instance, CoreIndex, FracVector]:
    inst = instance_from_doc(doc["instance"])
    index = CoreIndex(
        k=frozenset(int(i) for i in doc["k"]),
        l=frozenset(int(i) for i in doc["l"]),
        core_clients=_ids_from_doc(doc["core_clients"]),
    )
    vec = _vector_from_doc(doc, inst.facility_count, inst.client_count)
    return inst, index, vec


# ---------------------------------------------------------------------------
# Solutions and reports
# ---------------------------------------------------------------------------


def solution_to_doc(sol: IntSolution, *, seed: Optional[int] = None) -> dict:
    doc = {"open": sorted(sol.open), "assign": list(sol.assign)}
    if seed is not None:
        doc["seed"] = seed
    return doc


def solution_from_doc(doc: dict) -> IntSolution:
    return IntSolution(
        open=frozenset(int(i) for i in doc["open"]),
        assign=tuple(int(i) for i in doc["assign"]),
    )


def _mc_to_doc(mc: McEstimate) -> dict:
    return {
        "estimate": mc.estimate,
        "half_width": mc.half_width,
        "upper95": mc.upper95,
        "samples": mc.samples,
        "seed": mc.seed,
        "hits": mc.hits,
    }


def census_report_to_doc(report: CensusReport) -> dict:
    return {
        "core_size": str(report.core_size),
        "noncolliding_per_member": str(report.noncolliding_per_member),
        "lambda": str(report.lambda_),
        "noncolliding_upper_bound": frac_to_str(report.noncolliding_upper_bound),
        "lower_bound": str(report.lower_bound),
        "brute_force_count": (
            str(report.brute_force_count)
            if report.brute_force_count is not None
            else None
        ),
        "mc_estimate": _mc_to_doc(report.mc_estimate) if report.mc_estimate else None,
    }


def gap_certificate_to_doc(cert: GapCertificate, index: CoreIndex) -> dict:
    return {
        "k": sorted(index.k),
        "l": sorted(index.l),
        "frac_cost": frac_to_str(cert.frac_cost),
        "opt_value": frac_to_str(cert.opt_value),
        "opt_provenance": cert.opt_provenance,
        "ratio": frac_to_str(cert.ratio),
        "gap_conclusion": cert.gap_conclusion,
    }


def outcome_class_to_doc(cl: OutcomeClass) -> dict:
    return {
        "experiment": cl.experiment,
        "chosen_l_facility": cl.chosen_l_facility,
        "extra_open": cl.extra_open,
        "slot_profile": [list(pair) for pair in cl.slot_profile],
        "probability": frac_to_str(cl.probability),
        "feasible": cl.feasible,
    }


def midpoint_certificate_to_doc(cert: MidpointCertificate) -> dict:
    c1, c2 = cert.pair
    return {
        "pair": [
            {"k": sorted(c1.k), "l": sorted(c1.l)},
            {"k": sorted(c2.k), "l": sorted(c2.l)},
        ],
        "expectation_matches": cert.expectation_matches,
        "all_classes_feasible": cert.all_classes_feasible,
        "class_count": cert.class_count,
        "probability_sum": frac_to_str(cert.probability_sum),
        "valid": cert.valid,
    }


def membership_to_doc(result: MembershipResult) -> dict:
    doc: dict[str, Any] = {"member": result.member}
    if result.convex_weights is not None:
        doc["convex_weights"] = {
            str(idx): frac_to_str(w) for idx, w in sorted(result.convex_weights.items())
        }
    if result.separating_inequality is not None:
        coeffs, offset = result.separating_inequality
        doc["separating_inequality"] = {
            "coefficients": [frac_to_str(c) for c in coeffs],
            "offset": frac_to_str(offset),
        }
    return doc


def lp_report_to_doc(report: NaturalLpReport) -> dict:
    return {
        "passed": report.passed,
        "violations": [
            {
                "constraint": v.constraint,
                "where": v.where,
                "slack": frac_to_str(v.slack),
            }
            for v in report.violations
        ],
    }


# ---------------------------------------------------------------------------
# Canonical bytes and digests
# ---------------------------------------------------------------------------


def document_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_document(path: str, payload: dict) -> str:
    """Write canonical JSON; returns the sha256 hex digest of the bytes."""
    data = document_bytes(payload)
    with open(path, "wb") as handle:
        handle.write(data)
    return hashlib.sha256(data).hexdigest()


def read_document(path: str) -> dict:
    with open(path, "rb") as handle:
        return json.loads(handle.read().decode("utf-8"))


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
