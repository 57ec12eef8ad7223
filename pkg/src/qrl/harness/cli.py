"""Command line: run, sweep, verify, lemma-check."""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, QRLError
from .acceptance import verify_acceptance
from .config import load_config
from .experiments import run_experiment, sweep


def _values(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            out.append(json.loads(tok))
        except json.JSONDecodeError:
            out.append(tok)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qrl", description="Quantum agent-environment experiments")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None)
    run.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    run.add_argument("--histories", action="store_true", help="write histories/<seed>.jsonl")

    sw = sub.add_parser("sweep", help="run a config once per parameter value")
    sw.add_argument("--config", required=True)
    sw.add_argument("--param", required=True, help="top-level field or params.<name>")
    sw.add_argument("--values", required=True, help="comma-separated values (JSON literals)")
    sw.add_argument("--out", default=None)
    sw.add_argument("--jobs", type=int, default=None)

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--suite", default="all", help="'all' or comma-separated criterion ids/names")
    ver.add_argument("--report", default=None, help="write the JSON report here")

    lc = sub.add_parser("lemma-check", help="check one lemma on a scenario")
    lc.add_argument("--lemma", type=int, required=True, choices=[1, 2, 3, 4])
    lc.add_argument("--scenario", default="classical", help="builtin scenario name or JSON file")
    lc.add_argument("--trials", type=int, default=2000, help="lemma 4 sample size")
    lc.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            _, summary = run_experiment(cfg, args.jobs, args.out, args.histories)
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0 if summary["pass"] else 1
        if args.command == "sweep":
            cfg = load_config(args.config)
            summaries = sweep(cfg, args.param, _values(args.values), args.jobs, args.out)
            print(json.dumps(summaries, indent=2, sort_keys=True))
            return 0 if all(s["pass"] for s in summaries) else 1
        if args.command == "verify":
            report = verify_acceptance(args.suite, echo=lambda line: print(line, file=sys.stderr))
            text = json.dumps(report, indent=2, sort_keys=True)
            if args.report:
                with open(args.report, "w", encoding="utf-8") as fh:
                    fh.write(text + "\n")
            print(text)
            return 0 if report["pass"] else 1
        if args.command == "lemma-check":
            from ..testers import lemma_check

            if args.lemma == 4:
                r = lemma_check(4, trials=args.trials, seed=args.seed)
            else:
                r = lemma_check(args.lemma, args.scenario)
            out = {"lemma": r.lemma, "scenario": r.scenario, "metric": r.metric, "value": r.value,
                   "threshold": r.threshold, "pass": r.passed}
            print(json.dumps(out, sort_keys=True))
            return 0 if r.passed else 1
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except QRLError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 2


if __name__ == "__main__":
    sys.exit(main())
