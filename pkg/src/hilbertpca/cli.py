"""Command line entry point: ``hilbertpca <stage> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .config import RunConfig

log = logging.getLogger("hilbertpca")

COMMANDS = ("run", "synth", "ingest", "chpca", "rrs", "hodge", "project", "report")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="INI file with run settings; flags override it")
    a("--input", help="event file (delimiter-separated, header row)")
    a("--customers", help="per-customer event file (defaults to --input)")
    a("--profiles", help="customer profile table")
    a("--delimiter")
    a("--window-start", help="first day of the analysis window (ISO date)")
    a("--window-end", help="last day of the analysis window (ISO date)")
    a("--min-days", type=int, help="minimum days of entry per series (51)")
    a("--n-sims", type=int, help="rotational simulations (10000)")
    a("--n-trials", type=int, help="noise-injection trials per band (100)")
    a("--rule", choices=("sigma", "quantile"), help="eigenvalue significance rule")
    a("--seed", type=int)
    a("--rho-star", type=float, help="fixed correlation threshold for the network")
    a("--allowed-isolates", type=int)
    a("--days-scale", type=float, help="days per unit of Hodge potential")
    a("--synth-products", type=int)
    a("--synth-days", type=int)
    a("--synth-noise", type=float)
    a("--synth-lead-days", type=float)
    a("--synth-customers", type=int)
    a("--synth", action="store_const", const=True,
      help="'run' only: start from a synthetic panel instead of --input")
    a("--out-dir", help="directory for all artifacts")
    a("--threads", type=int, help="worker threads (env CHPCA_THREADS)")
    a("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hilbertpca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "all stages in order",
        "synth": "write a synthetic panel with planted lead/lag chain",
        "ingest": "events -> filtered, standardized panel",
        "chpca": "complex correlation, eigenvalues and eigenvectors",
        "rrs": "rotational random simulation and component bands",
        "hodge": "synchronization network and Hodge potentials",
        "project": "customer coordinates and profile regressions",
        "report": "eigenmode tables and manifest",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    keys = [k for k in vars(args) if k not in ("config", "command", "verbose")]
    return cfg.updated(**{k: getattr(args, k) for k in keys})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = args.command
    try:
        cfg = config_from_args(args)
        if stage == "run":
            paths = pipeline.run_pipeline(cfg)
        else:
            paths = pipeline.STAGES[stage](cfg)
            if stage != "report":
                paths.append(pipeline.write_manifest(cfg))
    except pipeline.StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, IndexError, RuntimeError) as exc:
        print(f"error [{stage}] {exc}", file=sys.stderr)
        return 1
    if stage in ("rrs", "run") and cfg.n_sims < 10_000:
        print(f"note: reduced simulation count n_sims={cfg.n_sims}", file=sys.stderr)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
