"""Command-line interface: `rgnn run` executes a sweep config and writes a
results CSV; `rgnn summarize` aggregates a results CSV.

Exit code is nonzero iff any trial errored.
"""

from __future__ import annotations

import argparse
import math
import sys

from .experiment import (
    load_config,
    prepare_dataset,
    read_results_csv,
    results_header,
    run_experiment,
    write_results_csv,
)
from .metrics import summarize


def _cmd_run(args) -> int:
    config = load_config(args.config)
    timing = not args.no_timing
    rows = run_experiment(config, jobs=args.jobs, timing=timing, root=args.data_root)
    out = args.out or config.out or "results.csv"
    dataset, _ = prepare_dataset(config, args.data_root)
    write_results_csv(out, rows, results_header(config, dataset, timing))
    errors = [r for r in rows if r.error]
    ok = [r for r in rows if not r.error]
    print(f"wrote {out}: {len(ok)} trials ok, {len(errors)} failed")
    for row in errors:
        print(f"  failed: level={row.pert_level:g} realization={row.realization} "
              f"method={row.method}: {row.error}", file=sys.stderr)
    return 1 if errors else 0


def _cmd_summarize(args) -> int:
    rows = read_results_csv(args.infile)
    print(f"{'dataset':<12} {'method':<8} {'level':>8} {'mean':>8} {'sd':>8} {'n':>4}")
    for s in summarize(rows):
        print(f"{s.dataset:<12} {s.method:<8} {s.pert_level:>8.3g} "
              f"{s.mean_acc:>8.4f} {s.sd_acc:>8.4f} {s.count:>4}")
    bad = sum(1 for r in rows if not math.isfinite(r.test_acc))
    if bad:
        print(f"({bad} failed trials excluded)", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rgnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a sweep from a config file")
    run_p.add_argument("--config", required=True, help="INI config file")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel trial processes")
    run_p.add_argument("--out", default=None, help="output CSV path")
    run_p.add_argument("--data-root", default=None,
                       help="dataset root (default: $RGNN_DATA_ROOT or ./data)")
    run_p.add_argument("--no-timing", action="store_true",
                       help="write 0.000 in the seconds column so reruns are byte-identical")
    run_p.set_defaults(func=_cmd_run)

    sum_p = sub.add_parser("summarize", help="aggregate a results CSV")
    sum_p.add_argument("--in", dest="infile", required=True, help="results CSV")
    sum_p.set_defaults(func=_cmd_summarize)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
