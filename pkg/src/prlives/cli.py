"""Command line entry point: ``prlives <command> ...``.

Exit status is 0 when every check in the report passes, 1 when one fails
and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from collections import Counter
from typing import List, Optional, Sequence

from . import harness
from .boxes import quantum_bound_p
from .lhv import bell_bound, enumerate_strategies, score_strategy
from .locality import locality_audit, standard_scenarios
from .world import AgentSpec, counterfactual_report, new_world

SEED_ENV = "PRLIVES_SEED"


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {n}")
    return n


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {p}")
    return p


def _add_output(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def _add_seed(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}, else 0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prlives", description="PR boxes, local models and parallel lives.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("bell-bound", help="exact local-hidden-variable bound by enumeration")
    _add_output(sp)

    for name, help_ in (("run", "run the testing protocol"), ("nosignal", "no-signalling test on a run")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--model", choices=harness.MODELS, required=True)
        sp.add_argument("--trials", type=_positive_int, default=harness.DEFAULT_TRIALS)
        sp.add_argument("--p", type=_probability, default=None, help="working probability for --model noisy")
        sp.add_argument("--workers", type=_positive_int, default=1)
        _add_seed(sp)
        _add_output(sp)

    sp = sub.add_parser("epr", help="EPR predictions against parallel-lives meetings")
    sp.add_argument("--trials", type=_positive_int, default=10_000)
    _add_seed(sp)
    _add_output(sp)

    sp = sub.add_parser("bell-report", help="bounds next to empirical rates")
    sp.add_argument("--trials", type=_positive_int, default=harness.DEFAULT_TRIALS)
    _add_seed(sp)
    _add_output(sp)

    sp = sub.add_parser("counterfactual", help="colours across Alice's branches after one press")
    sp.add_argument("--input", type=int, choices=(0, 1), required=True)
    _add_output(sp)

    sp = sub.add_parser("audit-locality", help="remote-input invariance over the scenario matrix")
    _add_seed(sp)
    _add_output(sp)
    return parser


def resolve_seed(value: Optional[int]):
    if value is not None:
        return value, "argument"
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env), "env"
        except ValueError:
            raise UsageError(f"${SEED_ENV} is not an integer: {env!r}") from None
    return 0, "default"


def _flatten(obj, prefix="") -> List[List[object]]:
    rows: List[List[object]] = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            rows.extend(_flatten(obj[k], f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows.extend(_flatten(v, f"{prefix}.{i}"))
    else:
        rows.append([prefix, json.dumps(obj) if obj is None or isinstance(obj, bool) else obj])
    return rows


def render(report: dict, fmt: str, csv_rows: Optional[List[List[object]]] = None) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    rows = csv_rows if csv_rows is not None else [["field", "value"]] + _flatten(report)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def bell_bound_report() -> dict:
    bound = bell_bound()
    scores = [score_strategy(s) for s in enumerate_strategies()]
    hist = Counter(str(sc.success) for sc in scores)
    return {
        "bound": str(bound.value),
        "bound_float": float(bound.value),
        "witness": list(bound.witness),
        "histogram": dict(sorted(hist.items())),
        "strategies": [
            {"strategy": list(sc.strategy), "success": str(sc.success),
             "failed": [list(xy) for xy in sorted(sc.failed)]}
            for sc in scores
        ],
        "quantum_bound": quantum_bound_p(),
        "passed": str(bound.value) == "3/4" and "1" not in hist,
    }


def _fresh_pair():
    return new_world([AgentSpec("alice", -1, (0,), "A"), AgentSpec("bob", 1, (0,), "B")])


def execute(args) -> tuple:
    """Returns (report dict, optional csv rows)."""
    cmd = args.command
    if cmd == "bell-bound":
        return bell_bound_report(), None
    if cmd == "counterfactual":
        colours = counterfactual_report(_fresh_pair, "alice", args.input)
        names = sorted(str(c) for c in colours)
        return {"agent": "alice", "input": args.input, "colours": names,
                "passed": names == ["green", "red"]}, None
    seed, source = resolve_seed(args.seed)
    if cmd in ("run", "nosignal"):
        p = args.p
        if args.model == "noisy" and p is None:
            p = quantum_bound_p()
        elif args.model != "noisy" and p is not None:
            raise UsageError("--p only applies to --model noisy")
        report, _ = harness.run_protocol(args.model, args.trials, seed, p=p, workers=args.workers)
        report.seed_source = source
        if cmd == "run":
            return report.to_dict(), report.csv_rows()
        if report.nosignal is None:
            raise UsageError("too few trials to cover every input pair")
        out = report.nosignal.to_dict()
        out["meta"] = report.to_dict()["meta"]
        return out, None
    if cmd == "epr":
        out = harness.epr_scenario(args.trials, seed)
        out["meta"]["seed_source"] = source
        return out, None
    if cmd == "bell-report":
        out = harness.bell_report(args.trials, seed)
        out["meta"]["seed_source"] = source
        return out, None
    if cmd == "audit-locality":
        audits = [locality_audit(seed, s).to_dict() for s in standard_scenarios()]
        return {"meta": {"seed": seed, "seed_source": source}, "scenarios": audits,
                "passed": all(a["passed"] for a in audits)}, None
    raise UsageError(f"unknown command {cmd!r}")


def _passed(report: dict) -> bool:
    if "passed" in report:
        return bool(report["passed"])
    return bool(report["verdict"]["passed"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        report, rows = execute(args)
    except (UsageError, harness.HarnessError) as e:
        print(f"prlives: error: {e}", file=sys.stderr)
        return 2
    text = render(report, args.format, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if _passed(report) else 1


if __name__ == "__main__":
    sys.exit(main())
