"""Command-line surface: generate, solve, verify, oracle.

Exit codes: 0 ok, 1 verification failure, 2 parse/usage failure, 3 oracle
budget refusal.  Solution files depend only on the instance and the seed;
reports (with timings) go to stdout or --report.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction

from . import generators, oracles, pipeline
from .model import (
    GroupedHypergraph,
    LinearSantaInstance,
    SantaInstance,
    instance_from_json,
    instance_to_json,
    matching_from_json,
    matching_to_json,
    verify_relaxed_matching,
)
from .reconstruct import achieved_alpha

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3

log = logging.getLogger("santaclaus")


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _frac(x: Fraction) -> list:
    return [x.numerator, x.denominator]


def cmd_generate(args) -> int:
    seed = args.seed
    if args.kind == "santa-linear":
        inst = generators.santa_linear(args.players, args.resources, seed)
        obj = instance_to_json(inst, kind="santa-linear")
    elif args.kind == "santa-coverage":
        inst = generators.santa_coverage(args.players, args.resources, seed,
                                         universe=args.universe)
        obj = instance_to_json(inst, kind="santa-coverage")
    elif args.kind == "hypergraph-regular":
        gh = generators.hypergraph_regular(args.groups, args.group_size,
                                           args.ell or 4, args.resources, seed)
        obj = instance_to_json(gh)
        obj["type"] = "hypergraph-regular"
    elif args.kind == "hypergraph-grouped":
        gh = generators.hypergraph_grouped(args.groups, args.group_size,
                                           args.ell or 4, args.resources, seed)
        obj = instance_to_json(gh)
    else:
        print(f"unknown kind {args.kind}", file=sys.stderr)
        return EXIT_PARSE
    _write_json(args.out, obj)
    log.info("wrote %s", args.out)
    return EXIT_OK


def _options_from(args) -> pipeline.PipelineOptions:
    return pipeline.PipelineOptions(
        profile=args.profile, seed=args.seed, ell=args.ell, gamma=args.gamma,
        slack=args.slack, tol=args.tol, max_rounds=args.max_rounds)


def cmd_solve(args) -> int:
    try:
        inst = instance_from_json(_read_json(args.instance))
    except Exception as exc:
        print(f"cannot parse instance: {exc}", file=sys.stderr)
        return EXIT_PARSE
    opts = _options_from(args)
    try:
        if isinstance(inst, SantaInstance):
            sol, report = pipeline.solve_santa(inst, opts)
            solution = {
                "chosen": None,
                "assigned": [list(a) for a in sol.assigned],
                "alpha": _frac(sol.alpha_weighted),
                "value": _frac(sol.value),
            }
        elif isinstance(inst, GroupedHypergraph):
            matching, report = pipeline.solve_matching(inst, opts)
            solution = matching_to_json(matching)
        else:
            print("solve expects a santa or grouped-hypergraph instance",
                  file=sys.stderr)
            return EXIT_PARSE
    except pipeline.StageError as exc:
        print(f"solve failed at stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    _write_json(args.out, solution)
    payload = json.dumps(report, indent=2, sort_keys=True, default=str)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    return EXIT_OK


def _verify_santa(inst: SantaInstance, sol: dict) -> list[str]:
    out = []
    assigned = [tuple(a) for a in sol.get("assigned", [])]
    if len(assigned) != inst.m:
        return ["assignment arity does not match player count"]
    seen = set()
    for i, rs in enumerate(assigned):
        for r in rs:
            if r in seen:
                out.append(f"duplicate resource {r}")
            seen.add(r)
        if not set(rs) <= set(inst.gamma[i]):
            out.append(f"player {i} holds a resource outside its permitted set")
    if sol.get("value") is not None:
        claimed = Fraction(sol["value"][0], sol["value"][1])
        actual = min(inst.valuation.eval(sorted(rs)) for rs in assigned)
        if claimed != actual:
            out.append(f"claimed value {claimed} but recomputed {actual}")
    return out


def cmd_verify(args) -> int:
    try:
        inst = instance_from_json(_read_json(args.instance))
        sol = _read_json(args.solution)
    except Exception as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if isinstance(inst, SantaInstance):
        problems = _verify_santa(inst, sol)
    elif isinstance(inst, GroupedHypergraph):
        try:
            matching = matching_from_json(sol)
            ok, why = verify_relaxed_matching(inst, matching)
        except Exception as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        problems = []
        if not ok:
            sizes, kept = [], []
            for p in range(inst.num_players):
                gi, mi = inst.player_location(p)
                sizes.append(inst.consistent_sets[gi][matching.chosen[p]][mi].size)
                kept.append(len(matching.assigned[p]))
            actual = achieved_alpha(sizes, kept)
            problems = [f"{why}; recomputed alpha {actual} "
                        f"(claimed {matching.alpha})"]
    else:
        print("verify expects a santa or grouped-hypergraph instance",
              file=sys.stderr)
        return EXIT_PARSE
    if problems:
        for p in problems:
            print(p)
        return EXIT_VIOLATION
    print("ok")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        inst = instance_from_json(_read_json(args.instance))
    except Exception as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        if args.which == "opt":
            if not isinstance(inst, (SantaInstance, LinearSantaInstance)):
                print("opt oracle expects a santa instance", file=sys.stderr)
                return EXIT_PARSE
            got = oracles.exact_santa_opt(inst)
            obj = {
                "chosen": None,
                "assigned": [list(p) for p in got.partition],
                "alpha": None,
                "value": _frac(got.value),
            }
        elif args.which == "min-alpha":
            if not isinstance(inst, (GroupedHypergraph,)):
                print("min-alpha oracle expects a hypergraph instance",
                      file=sys.stderr)
                return EXIT_PARSE
            got = oracles.exact_min_alpha(inst)
            obj = matching_to_json(got.matching)
        else:
            print(f"unknown oracle {args.which}", file=sys.stderr)
            return EXIT_PARSE
    except oracles.BudgetExceeded as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    _write_json(args.out, obj)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="santaclaus",
        description="max-min fair allocation solver and oracles")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--profile", choices=["theory", "practical"],
                       default="practical")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--gamma", type=int, default=None)
        p.add_argument("--ell", type=int, default=None)
        p.add_argument("--slack", type=float, default=1.0)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--max-rounds", type=int, default=10_000)

    g = sub.add_parser("generate", help="write a random instance file")
    g.add_argument("kind", choices=["santa-linear", "santa-coverage",
                                    "hypergraph-regular", "hypergraph-grouped"])
    g.add_argument("--players", type=int, default=3)
    g.add_argument("--resources", type=int, default=8)
    g.add_argument("--groups", type=int, default=2)
    g.add_argument("--group-size", type=int, default=2)
    g.add_argument("--universe", type=int, default=None)
    g.add_argument("--ell", type=int, default=4)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run the solver pipeline")
    s.add_argument("instance")
    s.add_argument("--out", required=True)
    s.add_argument("--report", default=None)
    common(s)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a solution file")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="exact ground truth on small instances")
    o.add_argument("instance")
    o.add_argument("which", choices=["opt", "min-alpha"])
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("SANTA_LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
