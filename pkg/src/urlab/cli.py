"""Command-line entry point: ``urlab run | compare | oracle``.

Exit codes: 0 success, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from urlab.errors import ConfigError, URLabError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("urlab")


def _cmd_run(args) -> int:
    from urlab.harness import load_config, run_experiment

    overrides = {}
    for key in ("runs", "cycles", "seed", "parallel", "preset", "label"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    cfg = load_config(args.config, overrides)
    out = args.out or "results"
    log.info("running %s: %d runs x %d cycles -> %s", cfg.label, cfg.runs, cfg.cycles, out)
    stats, _ = run_experiment(cfg, out)
    print(f"{stats.label}: final-window mean {stats.final_mean:.4f} over {stats.runs} runs; "
          f"final explored {100 * stats.final_explored[0]:.1f}%")
    return EXIT_OK


def _cmd_compare(args) -> int:
    import csv

    from urlab.harness import compare, read_summary

    try:
        experiments = [read_summary(p) for p in args.summaries]
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read summary: {exc}", key="compare") from exc
    table, tests = compare(experiments)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("label", "t", "mean", "sd"))
            for label, t, m, s in table:
                w.writerow((label, t, repr(m), repr(s)))
    for s in experiments:
        print(f"{s.label}: final-window mean {s.final_mean:.4f} (n={s.runs})")
    for c in tests:
        mark = "*" if c.significant() else " "
        print(f"{mark} {c.a} vs {c.b}: diff {c.difference:+.4f}, t={c.statistic:.3f}, p={c.p_value:.4g}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from urlab.oracles import run_suite

    reports = run_suite(args.check)
    for r in reports:
        print(r.line())
    return EXIT_OK if all(r.passed for r in reports) else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    from urlab.oracles import SUITES

    parser = argparse.ArgumentParser(prog="urlab", description="Universal RL agent experiments on gridworlds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out")
    run.add_argument("--runs", type=int)
    run.add_argument("--cycles", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--parallel", type=int)
    run.add_argument("--preset", choices=("smoke", "full"))
    run.add_argument("--label")
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="compare summary.csv files with Welch tests")
    cmp_.add_argument("summaries", nargs="+")
    cmp_.add_argument("--out", help="write the long-format table here")
    cmp_.set_defaults(func=_cmd_compare)

    orc = sub.add_parser("oracle", help="run brute-force oracle suites")
    orc.add_argument("--check", required=True, choices=sorted(SUITES) + ["all"])
    orc.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (URLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
