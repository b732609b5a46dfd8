"""Command-line entry point ``evolve``.

Examples::

    evolve benchmark --repeats 5 --out runs/bench
    evolve benchmark --benchmark himmelblau --repeats 5
    evolve two-peaks --seed 3 --set schedule.T=50
    evolve cartpole --set cartpole.preset=deep-latent --workers 4

Exit status is 0 when every run succeeded, 2 when some runs failed (details
in the manifest) and 64 on configuration errors.
"""

import argparse
import logging
import sys

from .config import OUTPUT_ENV, parse_assignment, resolve
from .errors import ConfigError
from .harness import format_table, run_experiment

EXIT_OK = 0
EXIT_RUN_FAILED = 2
EXIT_CONFIG = 64

log = logging.getLogger("diffevo")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evolve",
        description="Run seeded Diffusion Evolution experiments and write traces, summaries and a manifest.",
    )
    parser.add_argument("experiment", choices=["benchmark", "two-peaks", "cartpole"])
    parser.add_argument("--config", metavar="FILE", help="'key = value' config file")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                        help="override one config key (repeatable; JSON values)")
    parser.add_argument("--repeats", type=int, help="number of seeds per benchmark or preset")
    parser.add_argument("--seed", type=int, help="master seed; run r uses seed + r")
    parser.add_argument("--workers", type=int, help="concurrent runs")
    parser.add_argument("--out", metavar="DIR", help=f"output directory (fallback: ${OUTPUT_ENV})")
    parser.add_argument("--benchmark", action="append", metavar="NAME",
                        help="restrict the benchmark suite to NAME (repeatable)")
    parser.add_argument("--preset", choices=["small-latent", "deep-latent", "small-ambient"],
                        help="cart-pole preset")
    parser.add_argument("-q", "--quiet", action="store_true", help="do not print the summary table")
    return parser


def _overrides(args):
    out = {}
    for item in args.overrides:
        key, value = parse_assignment(item)
        out[key] = value
    if args.repeats is not None:
        out["repeats"] = args.repeats
    if args.seed is not None:
        out["evolve.seed"] = args.seed
    if args.workers is not None:
        out["workers"] = args.workers
    if args.out is not None:
        out["output_dir"] = args.out
    if args.benchmark:
        out["landscape.benchmarks"] = args.benchmark
    if args.preset:
        out["cartpole.preset"] = args.preset
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = resolve(args.experiment, args.config, _overrides(args))
    except ConfigError as exc:
        print(f"evolve: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s: %d seed(s) from %d, output in %s", cfg.experiment, cfg.repeats, cfg.master_seed,
             cfg.output_dir)
    manifest = run_experiment(cfg)
    if not args.quiet:
        print(format_table(manifest))
    if manifest.failed:
        for row in manifest.failed:
            log.warning("run %s seed %s failed: %s %s", row["label"], row["seed"], row["error"],
                        row.get("message", ""))
        return EXIT_RUN_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
