"""``ottree`` command line: property sweeps, the Del1 falsifier, the
simulator and the fuzzer.

Exit status is 0 when nothing was found, 1 on a violation or divergence and
2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Optional, Sequence

from . import fuzz as fuzzmod
from . import paths, transform
from .compose import GenerationError
from .sim import ScenarioError, dump_report, run_scenario

OK, FOUND, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(args: argparse.Namespace, record: dict, text: str) -> None:
    out = dump_report(record) if args.format == "json" else text.rstrip("\n") + "\n"
    if args.output:
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(out)
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(out)


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _sweep_text(report: transform.SweepReport) -> str:
    lines = [report.summary()]
    lines += [json.dumps(w, sort_keys=True, ensure_ascii=False) for w in report.witnesses]
    return "\n".join(lines)


def _sweep_record(report: transform.SweepReport) -> dict:
    return {"name": report.name, "checked": report.checked, "violations": report.violations,
            "witnesses": report.witnesses, "params": report.params, "ok": report.ok}


def cmd_check_tp1(args: argparse.Namespace) -> int:
    report = transform.sweep_tp1(args.max_ids, allow_cycles=args.allow_cycles)
    _emit(args, _sweep_record(report), _sweep_text(report))
    return OK if report.ok else FOUND


def cmd_check_tp2(args: argparse.Namespace) -> int:
    report = transform.sweep_tp2(args.max_ids, allow_cycles=args.allow_cycles)
    _emit(args, _sweep_record(report), _sweep_text(report))
    return OK if report.ok else FOUND


def cmd_check_it_star(args: argparse.Namespace) -> int:
    report = transform.sweep_it_star(args.samples, args.seed, args.max_size)
    _emit(args, _sweep_record(report), _sweep_text(report))
    return OK if report.ok else FOUND


def cmd_check_legacy(args: argparse.Namespace) -> int:
    tp1, tp2 = paths.check_tp1_tp2_del2(args.max_nodes)
    lines = []
    for r in (tp1, tp2):
        verdict = "PASS" if r.ok else "FAIL"
        lines.append(f"{r.name}: {verdict} checked={r.checked} violations={r.violations}")
        lines += [json.dumps(w, sort_keys=True, ensure_ascii=False) for w in r.witnesses]
    _emit(args, {"tp1": tp1.record(), "tp2": tp2.record()}, "\n".join(lines))
    return OK if tp1.ok and tp2.ok else FOUND


def cmd_falsify_del1(args: argparse.Namespace) -> int:
    report = paths.falsify_del1(args.depth)
    lines = [f"tree {report.tree}  op1 {report.op1}  op2 {report.op2}",
             f"op1(t) = {report.t1}  op2(t) = {report.t2}"]
    for case, count in sorted(report.by_case.items()):
        ex = report.examples[case]
        o1, o2, s1, s2 = ex["op1'"], ex["op2'"], ex["t1'"], ex["t2'"]
        lines.append(f"  {case}: {count} violating, e.g. op1'={o1} op2'={o2} "
                     f"gives {s1} vs {s2}")
    lines += [f"  satisfies TP1: {s}" for s in report.satisfying]
    lines.append(report.summary())
    _emit(args, report.record(), "\n".join(lines))
    return OK if report.exhausted else FOUND


def _run_text(report: dict) -> str:
    lines = list(report["trace"])
    for site, state in sorted(report["states"].items(), key=lambda kv: int(kv[0])):
        lines.append(f"site {site}: {state}")
    if report["deadlock"]:
        lines.append(f"deadlock: {json.dumps(report['deadlock'], sort_keys=True)}")
    lines.append("converged" if report["converged"] else "DIVERGED")
    return "\n".join(lines)


def cmd_simulate(args: argparse.Namespace) -> int:
    sc = _load_json(args.scenario)
    if args.seed is not None:
        sc["seed"] = args.seed
    result = run_scenario(sc, cross_check=args.cross_check)
    _emit(args, result.report, _run_text(result.report))
    if result.report["deadlock"]:
        return FOUND
    return OK if result.converged else FOUND


def cmd_replay(args: argparse.Namespace) -> int:
    saved = _load_json(args.report)
    if "scenario" not in saved:
        raise UsageError(f"{args.report} is not a run report")
    again = run_scenario(saved["scenario"])
    same = dump_report(again.report) == dump_report(saved)
    record = {"identical": same, "report": again.report}
    text = _run_text(again.report) + ("\nreplay identical" if same else "\nreplay DIFFERS")
    _emit(args, record, text)
    return OK if same and again.converged else FOUND


def cmd_fuzz(args: argparse.Namespace) -> int:
    try:
        weights = json.loads(args.weights) if args.weights else {}
    except json.JSONDecodeError as exc:
        raise UsageError(f"--weights is not JSON: {exc}") from exc
    cfg = fuzzmod.FuzzConfig(seed=args.seed, scenarios=args.scenarios,
                             sites=tuple(args.sites), ops=tuple(args.ops), weights=weights,
                             shrink=not args.no_shrink, max_witnesses=args.witnesses)
    summary = fuzzmod.fuzz(cfg)
    lines = [f"fuzz: {summary.converged}/{summary.runs} converged, "
             f"{summary.deadlocks} deadlocks"]
    for w in summary.witnesses:
        lines.append(f"-- divergent scenario #{w['index']} (shrunk):")
        lines.append(json.dumps(w["scenario"], sort_keys=True))
        lines += [f"  site {s}: {st}" for s, st in sorted(w["states"].items())]
    _emit(args, summary.record(), "\n".join(lines))
    return OK if summary.ok else FOUND


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ottree", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Callable, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("check-tp1", cmd_check_tp1, "exhaustive TP1 sweep of the tree transformation")
    p.add_argument("--max-ids", type=int, default=4)
    p.add_argument("--allow-cycles", action="store_true",
                   help="also generate moves below the moved node's own subtree")
    p = add("check-tp2", cmd_check_tp2, "exhaustive TP2 sweep of the tree transformation")
    p.add_argument("--max-ids", type=int, default=3)
    p.add_argument("--allow-cycles", action="store_true")
    p = add("check-it-star", cmd_check_it_star, "permutation invariance of IT*")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-size", type=int, default=5)
    p = add("check-legacy", cmd_check_legacy, "TP1/TP2 sweep for path trees with Del2")
    p.add_argument("--max-nodes", type=int, default=4)
    p = add("falsify-del1", cmd_falsify_del1, "bounded impossibility witness for Del1")
    p.add_argument("--depth", type=int, default=2)
    p = add("simulate", cmd_simulate, "run a scenario file")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--cross-check", action="store_true",
                   help="recompute every integration under a second peeling order")
    p = add("replay", cmd_replay, "re-run a saved report's scenario and compare")
    p.add_argument("report")
    p = add("fuzz", cmd_fuzz, "random scenarios with shrinking of divergent runs")
    p.add_argument("--scenarios", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sites", type=int, nargs=2, default=[3, 5], metavar=("LO", "HI"))
    p.add_argument("--ops", type=int, nargs=2, default=[5, 15], metavar=("LO", "HI"))
    p.add_argument("--weights", help='JSON op mix, e.g. \'{"mv": 0}\'')
    p.add_argument("--witnesses", type=int, default=3)
    p.add_argument("--no-shrink", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, ScenarioError, GenerationError) as exc:
        print(f"ottree: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
