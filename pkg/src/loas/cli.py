"""Command-line front end.

Exit codes: 0 success, 1 no inductive solution (or check failed), 2 usage
or parse error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .asp.grounder import ground
from .asp.parser import parse_atom, parse_program
from .engine import EngineConfig, Strategy, ilasp2
from .errors import (
    ExhaustedSampling,
    IterationLimitExceeded,
    LoasError,
    NonFiniteGrounding,
    ParseError,
    ResourceLimit,
    SafetyError,
    SearchSpaceExplosion,
    TaskError,
)
from .meta_encoding import MetaContext, build_t_meta, build_vr_meta
from .taskfile import load_task_file
from .task_model import (
    Hypothesis,
    ViolatingInterpretation,
    ViolatingPair,
    check_task_conditions,
    find_violating_reason,
    is_inductive_solution,
    is_positive_hypothesis,
)

EXIT_OK, EXIT_UNSAT, EXIT_USAGE, EXIT_LIMIT = 0, 1, 2, 3


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        strategy=Strategy(args.strategy),
        external_command=args.solver_cmd,
        max_iterations=args.max_iterations,
        timeout_seconds=args.timeout,
        transcript=args.verbose,
    )


def _load(args, path):
    tf = load_task_file(path)
    return tf, tf.task(max_body=args.max_body, max_vars=args.max_vars)


def _print_json(obj):
    print(json.dumps(obj, indent=2))


# ---------------------------------------------------------------------------
# subcommands


def cmd_learn(args) -> int:
    _, task = _load(args, args.task)
    report = check_task_conditions(task)
    if report.unsatisfiable:
        for r in report.failed(necessary=True):
            print(f"UNSATISFIABLE: necessary condition {r.name} fails ({r.detail})", file=sys.stderr)
        if args.json:
            _print_json({"solutions": [], "iterations": 0, "violatingReasons": [], "wallTimeMs": 0.0})
        else:
            print("UNSATISFIABLE")
        return EXIT_UNSAT
    result = ilasp2(task, _engine_config(args))
    space = task.space
    if args.json:
        _print_json({
            "solutions": [
                {"rules": [str(space[i].rule) for i in h.sorted_ids(space)], "cost": h.cost(space)}
                for h in result.solutions
            ],
            "iterations": result.iterations,
            "violatingReasons": [str(r) for r in result.reasons],
            "wallTimeMs": round(result.wall_time * 1000, 3),
        })
    else:
        if not result.solutions:
            print("UNSATISFIABLE")
        for k, h in enumerate(result.solutions, 1):
            print(f"%% solution {k} (cost {h.cost(space)})")
            for i in h.sorted_ids(space):
                print(space[i].rule)
    return EXIT_OK if result.solutions else EXIT_UNSAT


def cmd_check(args) -> int:
    tf, _ = _load(args, args.task)
    rules = list(parse_program(Path(args.hypothesis).read_text()))
    # the hypothesis file supplies the space, so any rule can be checked
    tf.space_rules = rules
    task = tf.task()
    h = Hypothesis(task.space.ids())
    positive = is_positive_hypothesis(task, h)
    reason = find_violating_reason(task, h) if positive else None
    ok = is_inductive_solution(task, h)
    if args.json:
        _print_json({
            "positive": positive,
            "inductiveSolution": ok,
            "cost": h.cost(task.space),
            "violatingReason": str(reason) if reason else None,
        })
    else:
        print(f"positive: {'yes' if positive else 'no'}")
        print(f"cost: {h.cost(task.space)}")
        if reason is not None:
            kind = "interpretation" if isinstance(reason, ViolatingInterpretation) else "pair"
            print(f"violating ({kind}): {reason}")
        print("inductive solution" if ok else "not an inductive solution")
    return EXIT_OK if ok else EXIT_UNSAT


def cmd_ground(args) -> int:
    program = parse_program(Path(args.file).read_text())
    for r in ground(program):
        print(r)
    return EXIT_OK


def _read_reasons(path, task) -> list:
    """Violating reasons, one per line: ``{atoms}`` or ``{atoms} > {atoms} @ ordering``."""
    def atoms(text):
        text = text.strip()
        if not (text.startswith("{") and text.endswith("}")):
            raise ParseError((0, 0), f"expected a braced atom set, found {text!r}")
        inner = text[1:-1].strip()
        return frozenset(parse_atom(a) for a in _split_top(inner)) if inner else frozenset()

    orderings = {o.id: o for o in task.cautious}
    out = []
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("%", 1)[0].strip()
        if not line:
            continue
        if ">" in line:
            pair, _, oid = line.partition("@")
            first, _, second = pair.partition(">")
            o = orderings.get(oid.strip())
            if o is None:
                raise ParseError((n, 1), f"unknown cautious ordering {oid.strip()!r}")
            out.append(ViolatingPair(atoms(first), atoms(second), o))
        else:
            out.append(ViolatingInterpretation(atoms(line)))
    return out


def _split_top(inner: str) -> list:
    # commas outside parentheses separate atoms
    parts, depth, cur = [], 0, []
    for ch in inner:
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


def cmd_emit_meta(args) -> int:
    _, task = _load(args, args.task)
    ctx = MetaContext.for_task(task)
    program = build_t_meta(ctx).program
    if args.vr:
        program = program + build_vr_meta(ctx, _read_reasons(args.vr, task)).program
    for r in program:
        print(r)
    return EXIT_OK


def cmd_consistency(args) -> int:
    _, task = _load(args, args.task)
    report = check_task_conditions(task)
    if args.json:
        _print_json([
            {"condition": r.name, "necessary": r.necessary, "passed": r.passed, "detail": r.detail}
            for r in report.results
        ])
    else:
        print(report)
    return EXIT_UNSAT if report.unsatisfiable else EXIT_OK


def _fullness(text: str, atoms: int) -> tuple:
    lo, _, hi = text.partition(":")
    vals = [float(lo), float(hi or lo)]
    # plain counts of specified atoms are accepted as well as fractions
    if any(v > 1 for v in vals):
        vals = [v / atoms for v in vals]
    return tuple(vals)


def cmd_bench(args) -> int:
    atoms = args.days * args.slots
    spec = bench.BenchSpec(
        days=args.days,
        slots_per_day=args.slots,
        num_targets=args.targets,
        trials_per_target=args.trials,
        num_examples=args.examples,
        fullness_range=_fullness(args.fullness, atoms),
        seed=args.seed,
    )
    results = bench.run_accuracy(spec, _engine_config(args), jobs=args.jobs)
    if args.csv:
        bench.write_csv(results, args.csv)
    mean = bench.mean_accuracy(results)
    if args.json:
        _print_json({"meanAccuracy": mean, "runs": [r.row() for r in results]})
    else:
        print(f"runs: {len(results)}  mean accuracy: {mean:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser):
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.META_NATIVE.value)
    p.add_argument("--solver-cmd", help="external solver command; {program} is replaced by the program path")
    p.add_argument("--max-body", type=int, help="maximum body literals of generated rules")
    p.add_argument("--max-vars", type=int, help="maximum variables of generated rules")
    p.add_argument("--max-iterations", type=int, default=10_000)
    p.add_argument("--timeout", type=float, help="time budget in seconds")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("-v", "--verbose", action="store_true", help="log external solver transcripts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loas", description="Learning weak constraints from ordered answer sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="print every optimal inductive solution")
    p.add_argument("task")
    _common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("check", help="check a hypothesis file against a task")
    p.add_argument("task")
    p.add_argument("hypothesis")
    _common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ground", help="print the grounding of a program")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("emit-meta", help="print the meta-level encoding of a task")
    p.add_argument("task")
    p.add_argument("--vr", help="file of violating reasons to encode as well")
    _common(p)
    p.set_defaults(func=cmd_emit_meta)

    p = sub.add_parser("consistency", help="report the necessary and sufficient task conditions")
    p.add_argument("task")
    _common(p)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("bench", help="scheduling benchmark")
    bsub = p.add_subparsers(dest="bench_command", required=True)
    b = bsub.add_parser("accuracy", help="pairwise accuracy of learned against sampled target hypotheses")
    b.add_argument("--days", type=int, default=3)
    b.add_argument("--slots", type=int, default=3)
    b.add_argument("--targets", type=int, default=10)
    b.add_argument("--trials", type=int, default=5)
    b.add_argument("--examples", type=int, default=10)
    b.add_argument("--fullness", default="5:9", help="lo:hi as fractions or counts of specified atoms")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--csv", help="write one row per run to this file")
    b.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _common(b)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ParseError, SafetyError, TaskError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceLimit, IterationLimitExceeded, SearchSpaceExplosion, NonFiniteGrounding, ExhaustedSampling) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except LoasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
