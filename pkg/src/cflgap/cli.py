"""Command-line front end: reproducible experiments with embedded manifests.

Every randomized command takes an explicit ``--seed``; reports are printed
as plain tables and optionally written as canonical JSON via ``-o``.  Output
documents embed a manifest (command, parameters, seed, tool version, input
digests), and identical manifests reproduce byte-identical files.

Exit codes: 0 success (or a true predicate), 1 false predicate / failed
check, 2 invalid parameters or violated preconditions, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from . import __version__
from . import io as docio
from .certify import (
    BRUTE_CENSUS_LIMIT,
    McEstimate,
    build_census_report,
    certify_gap,
    core_size,
    noncolliding_prob_mc,
)
from .corevec import CoreIndex, check_natural_lp, collides, make_core_vector
from .instance import (
    Instance,
    build_family_instance,
    build_gap_costs,
    build_general_instance,
    validate_params,
)
from .polytope import (
    brute_force_opt,
    enumerate_integer_solutions,
    membership_lp,
    verify_membership,
)
from .randomness import ExactRng, derive_worker_seed
from .rounding import (
    enumerate_outcome_classes,
    outcome_class_key,
    sample_outcome,
    solution_violations,
    verify_midpoint,
)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_INVALID = 2
EXIT_IO = 3


def _manifest(command: str, params: dict, seed: Optional[int], inputs: dict) -> dict:
    return {
        "command": command,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "inputs": inputs,
    }


def _write(args, payload: dict) -> None:
    if getattr(args, "output", None):
        digest = docio.write_document(args.output, payload)
        print(f"wrote {args.output} sha256={digest}")


def _load_instance(path: str) -> tuple[Instance, dict]:
    doc = docio.read_document(path)
    return docio.instance_from_doc(doc), {path: docio.sha256_of(path)}


def _load_core(path: str):
    doc = docio.read_document(path)
    inst, index, vec = docio.load_core_doc(doc)
    return inst, index, vec, {path: docio.sha256_of(path)}


def _parse_id_spec(spec: str) -> list[int]:
    """Facility id spec: comma-separated ids and lo..hi ranges, e.g. 0..4,7."""
    out: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _resolve_instance(args) -> tuple[Instance, dict]:
    """Instance from --instance FILE, or built inline from --t/--a."""
    if getattr(args, "instance", None):
        return _load_instance(args.instance)
    if getattr(args, "t", None) is None:
        raise ValueError("provide --instance FILE or --t T")
    return build_family_instance(args.t, args.a), {}


def _canonical_index(inst: Instance) -> CoreIndex:
    t = inst.family_params.t
    return CoreIndex.for_instance(inst, range(t), range(t, 2 * t))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.family == args.general:
        raise ValueError("choose exactly one of --family / --general")
    if args.family:
        inst = build_family_instance(args.t, args.a)
        params = {"mode": "family", "t": args.t, "a": args.a}
    else:
        inst = build_general_instance(
            args.nf, args.t, args.capacity, args.m,
            docio.frac_from_str(args.eps), docio.frac_from_str(args.xl),
        )
        params = {
            "mode": "general", "nf": args.nf, "t": args.t,
            "capacity": args.capacity, "m": args.m, "eps": args.eps, "xl": args.xl,
        }
    violations = validate_params(inst)
    for v in violations:
        print(f"invalid: {v}", file=sys.stderr)
    if violations and args.strict:
        return EXIT_INVALID
    payload = {
        **docio.instance_to_doc(inst),
        "manifest": _manifest("gen", params, None, {}),
    }
    print(
        f"instance: {inst.facility_count} facilities, {inst.client_count} clients, "
        f"capacity {inst.capacity}, valid={not violations}"
    )
    _write(args, payload)
    return EXIT_OK


def cmd_core(args) -> int:
    inst, inputs = _load_instance(args.instance)
    t = inst.family_params.t if inst.family_params else None
    if t is None:
        raise ValueError("instance has no family parameters")
    if args.random:
        if args.seed is None:
            raise ValueError("--random requires --seed")
        rng = ExactRng(args.seed)
        perm = rng.permuted(np.arange(inst.facility_count))
        k = [int(i) for i in perm[:t]]
        l = [int(i) for i in perm[t : 2 * t]]
    else:
        if not args.k or not args.l:
            raise ValueError("provide --k and --l, or --random --seed S")
        k = _parse_id_spec(args.k)
        l = _parse_id_spec(args.l)
    vec = make_core_vector(inst, k, l, dense=args.dense)
    index = CoreIndex.for_instance(inst, k, l)
    payload = {
        **docio.core_file_doc(inst, index, vec),
        "manifest": _manifest(
            "core",
            {"k": sorted(index.k), "l": sorted(index.l), "dense": args.dense},
            args.seed,
            inputs,
        ),
    }
    print(f"core vector: k={sorted(index.k)} l={sorted(index.l)} repr={vec.representation}")
    _write(args, payload)
    return EXIT_OK


def cmd_collide(args) -> int:
    _, c1, _, _ = _load_core(args.first)
    _, c2, _, _ = _load_core(args.second)
    result = collides(c1, c2)
    print(f"collide: {str(result).lower()}")
    return EXIT_OK if result else EXIT_FALSE


def cmd_lpcheck(args) -> int:
    inst, _, vec, inputs = _load_core(args.vector)
    report = check_natural_lp(inst, vec)
    if report.passed:
        print("natural LP check: pass")
    else:
        print(f"natural LP check: fail ({len(report.violations)} violations)")
        for v in report.violations:
            print(f"  {v}")
    payload = {
        **docio.lp_report_to_doc(report),
        "manifest": _manifest("lpcheck", {"vector": args.vector}, None, inputs),
    }
    _write(args, payload)
    return EXIT_OK if report.passed else EXIT_FALSE


def cmd_verify_midpoint(args) -> int:
    inst, c1, _, in1 = _load_core(args.first)
    inst2, c2, _, in2 = _load_core(args.second)
    if docio.instance_to_doc(inst) != docio.instance_to_doc(inst2):
        raise ValueError("core files describe different instances")
    cert = verify_midpoint(inst, c1, c2)
    print(
        f"midpoint certificate: expectation_matches={cert.expectation_matches} "
        f"all_classes_feasible={cert.all_classes_feasible} classes={cert.class_count} "
        f"probability_sum={docio.frac_to_str(cert.probability_sum)} valid={cert.valid}"
    )
    payload = {
        **docio.midpoint_certificate_to_doc(cert),
        "manifest": _manifest(
            "verify-midpoint",
            {"first": args.first, "second": args.second},
            None,
            {**in1, **in2},
        ),
    }
    _write(args, payload)
    return EXIT_OK if cert.valid else EXIT_FALSE


def _sample_chunk(
    inst: Instance,
    c1: CoreIndex,
    c2: CoreIndex,
    seed: int,
    count: int,
    solutions_dir: Optional[str],
    start_index: int,
) -> tuple[int, Counter, list[str]]:
    rng = ExactRng(seed)
    feasible = 0
    freq: Counter = Counter()
    problems: list[str] = []
    for offset in range(count):
        draw = sample_outcome(inst, c1, c2, rng)
        violations = solution_violations(inst, draw.solution)
        if violations:
            if len(problems) < 5:
                problems.append(f"sample {start_index + offset}: {violations}")
        else:
            feasible += 1
        freq[outcome_class_key(inst, c1, c2, draw)] += 1
        if solutions_dir:
            path = os.path.join(solutions_dir, f"sol_{start_index + offset:06d}.json")
            docio.write_document(
                path, docio.solution_to_doc(draw.solution, seed=seed)
            )
    return feasible, freq, problems


def cmd_sample(args) -> int:
    inst, c1, _, in1 = _load_core(args.first)
    _, c2, _, in2 = _load_core(args.second)
    if args.solutions_dir:
        os.makedirs(args.solutions_dir, exist_ok=True)
    jobs = max(1, args.jobs)
    counts = [args.n // jobs + (1 if w < args.n % jobs else 0) for w in range(jobs)]
    chunks = []
    start = 0
    for worker, count in enumerate(counts):
        if count:
            chunks.append((derive_worker_seed(args.seed, worker), count, start))
            start += count
    if jobs == 1:
        results = [
            _sample_chunk(inst, c1, c2, seed, count, args.solutions_dir, start)
            for seed, count, start in chunks
        ]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(
                    _sample_chunk, inst, c1, c2, seed, count, args.solutions_dir, start
                )
                for seed, count, start in chunks
            ]
            results = [f.result() for f in futures]  # merged in worker order

    feasible = sum(r[0] for r in results)
    freq: Counter = Counter()
    problems: list[str] = []
    for _, chunk_freq, chunk_problems in results:
        freq.update(chunk_freq)
        problems.extend(chunk_problems)

    classes = enumerate_outcome_classes(inst, c1, c2)
    class_docs = []
    for cl in classes:
        doc = docio.outcome_class_to_doc(cl)
        doc["observed"] = freq.get(cl.key, 0)
        class_docs.append(doc)
    unmatched = sum(freq.values()) - sum(d["observed"] for d in class_docs)

    print(f"samples: {args.n}, feasible: {feasible}, infeasible: {args.n - feasible}")
    payload = {
        "samples": args.n,
        "feasible": feasible,
        "infeasible": args.n - feasible,
        "violation_examples": problems,
        "unmatched_class_draws": unmatched,
        "classes": class_docs,
        "manifest": _manifest(
            "sample",
            {
                "first": args.first,
                "second": args.second,
                "n": args.n,
                "jobs": jobs,
                "solutions_dir": args.solutions_dir,
            },
            args.seed,
            {**in1, **in2},
        ),
    }
    _write(args, payload)
    return EXIT_OK if feasible == args.n else EXIT_FALSE


def _mc_parallel(inst: Instance, samples: int, seed: int, jobs: int) -> McEstimate:
    if jobs <= 1:
        return noncolliding_prob_mc(inst, samples, seed)
    counts = [samples // jobs + (1 if w < samples % jobs else 0) for w in range(jobs)]
    plans = [
        (derive_worker_seed(seed, w), c) for w, c in enumerate(counts) if c
    ]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(noncolliding_prob_mc, inst, count, wseed)
            for wseed, count in plans
        ]
        parts = [f.result() for f in futures]
    hits = sum(p.hits for p in parts)
    p_hat = hits / samples
    half = 1.96 * (p_hat * (1 - p_hat) / samples) ** 0.5
    upper = p_hat + half if hits else 3.0 / samples
    return McEstimate(
        estimate=p_hat, half_width=half, upper95=upper,
        samples=samples, seed=seed, hits=hits,
    )


def cmd_census(args) -> int:
    inst, inputs = _resolve_instance(args)
    if args.exact:
        brute = not args.formula_only
        if brute and core_size(inst) > BRUTE_CENSUS_LIMIT:
            raise ValueError(
                f"core size {core_size(inst)} exceeds the enumeration bound "
                f"{BRUTE_CENSUS_LIMIT}; pass --formula-only"
            )
        report = build_census_report(inst, brute_force=brute)
        mode = {"mode": "exact", "formula_only": args.formula_only}
    else:
        if args.mc is None:
            raise ValueError("choose --exact or --mc N --seed S")
        if args.seed is None:
            raise ValueError("--mc requires --seed")
        base = build_census_report(inst)
        mc = _mc_parallel(inst, args.mc, args.seed, max(1, args.jobs))
        report = replace(base, mc_estimate=mc)
        mode = {"mode": "mc", "samples": args.mc, "jobs": max(1, args.jobs)}

    print(f"core size:        {report.core_size}")
    print(f"non-colliding:    {report.noncolliding_per_member}")
    print(f"lambda:           {report.lambda_}")
    print(f"lower bound:      {report.lower_bound}")
    if report.brute_force_count is not None:
        print(f"brute-force:      {report.brute_force_count}")
    if report.mc_estimate:
        mc = report.mc_estimate
        print(
            f"mc estimate:      {mc.estimate:.6g} +/- {mc.half_width:.3g} "
            f"(samples={mc.samples}, hits={mc.hits}, upper95={mc.upper95:.3g})"
        )
    payload = {
        **docio.census_report_to_doc(report),
        "manifest": _manifest("census", mode, args.seed, inputs),
    }
    _write(args, payload)
    return EXIT_OK


def cmd_certify(args) -> int:
    if args.core:
        inst, index, _, inputs = _load_core(args.core)
    else:
        inst, inputs = _resolve_instance(args)
        index = _canonical_index(inst)
    mode = "brute-force" if args.brute_force else "analytic"
    cert = certify_gap(inst, index, mode)
    print(f"frac cost:  {docio.frac_to_str(cert.frac_cost)}")
    print(f"opt value:  {docio.frac_to_str(cert.opt_value)} ({cert.opt_provenance})")
    print(f"ratio:      {docio.frac_to_str(cert.ratio)}")
    print(cert.gap_conclusion)
    payload = {
        **docio.gap_certificate_to_doc(cert, index),
        "manifest": _manifest(
            "certify", {"core": args.core, "mode": mode, "t": args.t}, None, inputs
        ),
    }
    _write(args, payload)
    return EXIT_OK


def cmd_bound(args) -> int:
    inst, inputs = _resolve_instance(args)
    report = build_census_report(inst)
    print(f"core size:   {report.core_size}")
    print(f"lambda:      {report.lambda_}")
    print(f"lower bound: {report.lower_bound}")
    payload = {
        **docio.census_report_to_doc(report),
        "manifest": _manifest("bound", {"t": args.t}, None, inputs),
    }
    _write(args, payload)
    return EXIT_OK


def cmd_oracle_enum(args) -> int:
    inst, inputs = _load_instance(args.instance)
    solutions = enumerate_integer_solutions(inst)
    print(f"integer solutions: {len(solutions)}")
    payload = {
        "count": len(solutions),
        "solutions": [docio.solution_to_doc(sol) for sol in solutions],
        "manifest": _manifest("oracle enum", {"instance": args.instance}, None, inputs),
    }
    _write(args, payload)
    return EXIT_OK


def cmd_oracle_member(args) -> int:
    inst, _, vec, inputs = _load_core(args.vector)
    solutions = enumerate_integer_solutions(inst)
    result = membership_lp(vec, solutions)
    verified = verify_membership(vec, solutions, result)
    print(f"member: {str(result.member).lower()} (certificate verified: {verified})")
    payload = {
        **docio.membership_to_doc(result),
        "verified": verified,
        "manifest": _manifest("oracle member", {"vector": args.vector}, None, inputs),
    }
    _write(args, payload)
    return EXIT_OK


def cmd_oracle_opt(args) -> int:
    inst, index, _, inputs = _load_core(args.core)
    cost = build_gap_costs(inst, index)
    value, witness = brute_force_opt(inst, cost)
    print(f"opt value: {docio.frac_to_str(value)}")
    payload = {
        "opt_value": docio.frac_to_str(value),
        "witness": docio.solution_to_doc(witness),
        "manifest": _manifest("oracle opt", {"core": args.core}, None, inputs),
    }
    _write(args, payload)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cflgap",
        description="Exact verification lab for a capacitated facility "
        "location LP lower-bound construction.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="build an instance file")
    p.add_argument("--family", action="store_true")
    p.add_argument("--general", action="store_true")
    p.add_argument("--t", type=int)
    p.add_argument("--a", type=int, default=2)
    p.add_argument("--nf", type=int)
    p.add_argument("--U", dest="capacity", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--eps", type=str)
    p.add_argument("--xl", type=str)
    p.add_argument("--strict", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("core", help="build a core vector file")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=str)
    p.add_argument("--l", type=str)
    p.add_argument("--random", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--dense", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_core)

    p = sub.add_parser("collide", help="exit 0 iff two core vectors collide")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_collide)

    p = sub.add_parser("lpcheck", help="natural-relaxation feasibility of a vector")
    p.add_argument("vector")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lpcheck)

    p = sub.add_parser(
        "verify-midpoint", help="exact midpoint certificate for a colliding pair"
    )
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify_midpoint)

    p = sub.add_parser("sample", help="draw integer solutions from the distribution")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--solutions-dir")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("census", help="collision census (exact or Monte Carlo)")
    p.add_argument("--instance")
    p.add_argument("--t", type=int)
    p.add_argument("--a", type=int, default=2)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--formula-only", action="store_true")
    p.add_argument("--mc", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("certify", help="gap certificate for a core vector")
    p.add_argument("--core")
    p.add_argument("--instance")
    p.add_argument("--t", type=int)
    p.add_argument("--a", type=int, default=2)
    p.add_argument("--brute-force", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bound", help="exact constraint-count lower bound")
    p.add_argument("--instance")
    p.add_argument("--t", type=int)
    p.add_argument("--a", type=int, default=2)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("oracle", help="tiny-instance ground-truth oracles")
    osub = p.add_subparsers(dest="oracle_command", required=True)

    q = osub.add_parser("enum", help="enumerate all integer solutions")
    q.add_argument("--instance", required=True)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_oracle_enum)

    q = osub.add_parser("member", help="exact hull membership of a vector")
    q.add_argument("--vector", required=True)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_oracle_member)

    q = osub.add_parser("opt", help="brute-force optimum under two-point costs")
    q.add_argument("--core", required=True)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_oracle_opt)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
