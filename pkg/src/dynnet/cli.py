"""Command-line front end: simulate, search, construct, verify, analyze.

Exit codes: 0 success / objective reached, 2 validation or usage error,
3 objective not reached, 1 verification failures.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

from . import analysis, constructions, seqfile
from .dissemination import Objective, ObjectiveNotReached, RoundSequence, run
from .families import Model, ModelSpec, random_graph
from .graphs import ProductTrace, to_dot
from .search import (
    DEFAULT_MEM_CAP,
    MemoryBudgetExceeded,
    Policy,
    exact_worst_case,
    greedy_adversary,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_VALIDATION = 2
EXIT_NOT_REACHED = 3


def _objective_from_args(name: str, k: int | None) -> Objective:
    if name == "broadcast":
        return Objective.broadcast()
    if k is None:
        raise ValueError(f"objective {name!r} needs --k")
    if name == "cover":
        return Objective.cover(k)
    return Objective.k_broadcast(k)


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True, separators=(",", ":")))


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        seq = seqfile.load(args.seq)
        objective = _objective_from_args(args.objective, args.k)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run(seq, objective)
    except ObjectiveNotReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_REACHED
    if args.table:
        print(f"objective  {result.objective.kind} (k={result.objective.k})")
        print(f"time       {result.time}")
        print(f"witness    {' '.join(map(str, result.witness))}")
    else:
        _print_json(result.to_json_dict())
    return EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    try:
        spec = ModelSpec(Model(args.model), args.n, args.k or 1)
        objective = _objective_from_args(args.objective, args.k or 1)
        res = exact_worst_case(
            spec,
            objective,
            mem_cap_bytes=args.mem_cap,
            threads=args.threads,
            allow_large=args.allow_large,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MemoryBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    doc = {
        "value": res.value,
        "states_visited": res.states_visited,
        "memo_hits": res.memo_hits,
        "optimal_sequence": seqfile.sequence_to_json_dict(res.optimal_sequence),
    }
    _print_json(doc)
    return EXIT_OK


def cmd_construct(args: argparse.Namespace) -> int:
    try:
        out = constructions.build(Model(args.model), args.n, args.k or 1)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    seqfile.save(args.out, out.seq)
    _print_json({
        "out": args.out,
        "rounds": len(out.seq),
        "claimed_time": out.claimed_time,
        "claimed_time_main_text": out.claimed_time_main,
    })
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        seq = seqfile.load(args.seq)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    trace = seq.trace()
    if args.certificate == "rounds-graph":
        avoid = frozenset(int(x) for x in args.avoid.split(",") if x) if args.avoid else frozenset()
        try:
            rg = analysis.build_rounds_graph(trace, avoid)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        wit = analysis.max_out_degree_witness(rg)
        doc = {
            "certificate": "rounds-graph",
            "round_count": rg.round_count,
            "threshold": rg.threshold,
            "witness": {"kind": wit.kind, "node": wit.node, "degree": wit.degree,
                        "process": wit.process},
            "degree_at_least_n": wit.degree >= trace.n,
        }
        if args.dot:
            with open(args.dot, "w") as fh:
                fh.write(rg.to_dot())
        _print_json(doc)
        return EXIT_OK if wit.degree >= trace.n else EXIT_FAIL
    k = args.k if args.k is not None else seq.spec.k
    t_prime = args.tprime if args.tprime is not None else len(seq)
    try:
        tr = analysis.build_strict_sets(trace, k, t_prime)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = analysis.verify_strict_inequalities(tr)
    if args.dot and tr.complete:
        with open(args.dot, "w") as fh:
            fh.write(analysis.StrictRoundsGraph.from_trace(tr).to_dot())
    if args.table:
        print(report.to_table())
    else:
        doc = report.to_json_dict()
        doc["certificate"] = "strict-sets"
        doc["complete"] = tr.complete
        _print_json(doc)
    return EXIT_OK if report.all_passed else EXIT_FAIL


def _parse_grid(text: str) -> tuple[range, range]:
    """Parse "n=3..20,k=1..3" into the two inclusive ranges."""
    spans = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        lo, _, hi = val.partition("..")
        spans[key.strip()] = range(int(lo), int(hi or lo) + 1)
    if "n" not in spans:
        raise ValueError(f"grid {text!r} needs at least n=lo..hi")
    return spans["n"], spans.get("k", range(1, 4))


def _verify_rows(ns: range, ks: range, samples: int, seed: int, threads: int = 1):
    """Yield (name, ok, detail) rows for the whole invariant grid."""
    bad_bounds = []
    for model in Model:
        for n in range(2, 201):
            for k in range(1, min(n, 8) + 1):
                if model is Model.TREES and k > 1:
                    continue
                b = analysis.bounds_values(model, n, k)
                if b.lower > b.upper_int:
                    bad_bounds.append((model.value, n, k))
    yield ("bounds-sandwich", not bad_bounds, f"violations={bad_bounds[:5]}")

    def adherence_cell(model: Model, n: int, k: int, cell: int) -> int:
        spec = ModelSpec(model, n, k)
        if model is Model.TREES:
            objective = Objective.broadcast()
            horizon = analysis.ceil_one_plus_sqrt2(n)
        elif model is Model.K_FORESTS:
            objective = Objective.cover(k)
            horizon = analysis.ceil_beta(n) + 1
        else:
            objective = Objective.k_broadcast(k)
            horizon = analysis.ceil_one_plus_sqrt2(n) + k - 1
        misses = 0
        for i in range(samples):
            rounds = [
                random_graph(spec, seed + 7919 * (cell * samples + i) + 13 * t)
                for t in range(horizon)
            ]
            seq = RoundSequence(spec, rounds, validate=False)
            try:
                if run(seq, objective).time > horizon:
                    misses += 1
            except ObjectiveNotReached:
                misses += 1
        return misses

    for model in Model:
        cells = [
            (model, n, k)
            for n in ns
            for k in (ks if model is not Model.TREES else [1])
            if k <= n
        ]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                miss_counts = list(pool.map(
                    lambda args: adherence_cell(*args[1], cell=args[0]),
                    enumerate(cells),
                ))
        else:
            miss_counts = [
                adherence_cell(m, n, k, cell=i)
                for i, (m, n, k) in enumerate(cells)
            ]
        misses = sum(miss_counts)
        yield (
            f"upper-bound-adherence[{model.value}]",
            misses == 0,
            f"runs={len(cells) * samples} misses={misses}",
        )

    rnd = random.Random(seed)
    spec = ModelSpec(Model.TREES, 7)
    trace = ProductTrace.from_raw_rounds(
        7, [random_graph(spec, seed + t) for t in range(25)]
    )
    roots = analysis.smallest_roots(trace)
    checks = {
        "duality": analysis.check_duality(trace, rnd, 2000),
        "transitivity": analysis.check_transitivity(trace, rnd, 2000),
        "monotonicity": analysis.check_monotonicity(trace, rnd, 2000),
        "propagation": analysis.check_propagation(trace, roots, rnd, 2000),
        "root-counting": analysis.check_root_counting(trace, roots, rnd, 2000),
    }
    for name, violations in checks.items():
        yield (f"lemma[{name}]", violations == 0, f"violations={violations}")

    sandwich_fail = []
    for n in range(4, max(ns.stop, 21), 7):
        out = constructions.trees_lower_bound(n)
        t = run(out.seq, Objective.broadcast()).time
        ub = analysis.bounds_for(out.seq.spec).upper_int
        if not out.claimed_time <= t <= ub:
            sandwich_fail.append((n, t))
    yield ("construction-sandwich[tree]", not sandwich_fail, f"violations={sandwich_fail}")


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        ns, ks = _parse_grid(args.grid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rows = []
    ok_all = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, ok, detail in _verify_rows(ns, ks, args.samples, args.seed,
                                              args.threads):
            rows.append((name, ok, detail))
            ok_all &= ok
            print(f"{'pass' if ok else 'FAIL'}  {name}  {detail}")
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("check,passed,detail\n")
            for name, ok, detail in rows:
                fh.write(f"{name},{int(ok)},\"{detail}\"\n")
    print(f"verify: {'all passed' if ok_all else 'FAILURES'} (seed={args.seed})")
    return EXIT_OK if ok_all else EXIT_FAIL


def cmd_greedy(args: argparse.Namespace) -> int:
    try:
        spec = ModelSpec(Model(args.model), args.n, args.k or 1)
        objective = _objective_from_args(args.objective, args.k or 1)
        res = greedy_adversary(
            spec, objective, args.horizon, Policy(args.policy),
            samples=args.samples, seed=args.seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.out:
        seqfile.save(args.out, res.sequence, seed=args.seed)
    doc = {
        "policy": res.policy.value,
        "metrics": res.metrics,
        "seed": args.seed,
    }
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            doc["achieved_time"] = run(res.sequence, objective).time
    except ObjectiveNotReached:
        doc["achieved_time"] = None
    _print_json(doc)
    return EXIT_OK


def cmd_export_dot(args: argparse.Namespace) -> int:
    try:
        seq = seqfile.load(args.seq)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    g = seq.rounds[args.round - 1]
    print(to_dot(g, name=f"round_{args.round}", include_self_loops=args.self_loops))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynnet",
        description="Dissemination on adversarial dynamic networks: "
                    "simulate, search, construct, verify, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a sequence file against an objective")
    p.add_argument("--seq", required=True)
    p.add_argument("--objective", required=True,
                   choices=["broadcast", "cover", "kbroadcast"])
    p.add_argument("--k", type=int)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", default=True)
    fmt.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("search", help="exact worst-case time over a family")
    p.add_argument("--model", required=True, choices=[m.value for m in Model])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--objective", required=True,
                   choices=["broadcast", "cover", "kbroadcast"])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--mem-cap", type=int,
                   default=int(os.environ.get("DYNNET_MEM_CAP", DEFAULT_MEM_CAP)))
    p.add_argument("--allow-large", action="store_true")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("construct", help="emit a worst-case schedule file")
    p.add_argument("--model", required=True, choices=[m.value for m in Model])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="run the invariant grid")
    p.add_argument("--grid", default="n=3..20,k=1..3")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--samples", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="build and check a certificate on a run")
    p.add_argument("--seq", required=True)
    p.add_argument("--certificate", required=True,
                   choices=["rounds-graph", "strict-sets"])
    p.add_argument("--avoid", help="comma-separated process ids")
    p.add_argument("--k", type=int)
    p.add_argument("--tprime", type=int)
    p.add_argument("--dot", help="also write the certificate graph as DOT")
    p.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("greedy", help="heuristic adversary probe")
    p.add_argument("--model", required=True, choices=[m.value for m in Model])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--objective", required=True,
                   choices=["broadcast", "cover", "kbroadcast"])
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--policy", required=True, choices=[pl.value for pl in Policy])
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("export-dot", help="print one round of a sequence as DOT")
    p.add_argument("--seq", required=True)
    p.add_argument("--round", type=int, default=1)
    p.add_argument("--self-loops", action="store_true")
    p.set_defaults(func=cmd_export_dot)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
