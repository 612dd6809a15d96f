"""Command line entry point: ``disentbench <verb> --config FILE [options]``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, parse_config
from .errors import ConfigError, DataError, DisentError
from . import runner

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PARTIAL = 0, 2, 3, 4
OUT_ENV = "DISENTBENCH_OUT"
DEFAULT_OUT = "disentbench-out"

log = logging.getLogger("disentbench")


def _output_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="disentbench",
        description="Score representations against ground-truth factors and analyse the scores.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    helps = {
        "generate": "write factor and code CSVs for every configured oracle encoder",
        "evaluate": "compute factor-code matrices and the score table",
        "analyze": "run the configured study-level analyses on an evaluated bundle",
        "report": "render SVG figures from a bundle",
        "run": "generate, evaluate, analyze and report",
    }
    for verb, text in helps.items():
        s = sub.add_parser(verb, help=text, description=text)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help=f"output directory (default: config output_dir, "
                                     f"then ${OUT_ENV}, then ./{DEFAULT_OUT})")
        s.add_argument("--seed", type=int, help="override the master seed")
        s.add_argument("--jobs", type=int, default=1,
                       help="worker processes; never changes results")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be nonnegative")
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = _output_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    log.info("writing to %s", out)
    try:
        if args.verb == "generate":
            runner.generate(cfg, out)
            manifest = {}
        elif args.verb == "evaluate":
            manifest = runner.evaluate_stage(cfg, out, args.jobs)
        elif args.verb == "analyze":
            manifest = runner.analyze(cfg, out)
        elif args.verb == "report":
            manifest = runner.report(cfg, out)
        else:
            manifest = runner.run(cfg, out, args.jobs)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DisentError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    failures = manifest.get("failures", [])
    for f in failures:
        print(f"failed: {f['task']} [{f['stage']}] {f['error']}", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
