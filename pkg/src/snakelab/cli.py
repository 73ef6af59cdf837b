"""Command line: ``snakelab constants|run|plot``.

Flags may also be set through environment variables; a flag given on the
command line wins over the environment, which wins over the config file.

    SNAKELAB_CONFIG   --config PATH
    SNAKELAB_SEED     --seed N
    SNAKELAB_OUT      --out DIR
    SNAKELAB_THREADS  --threads N

``run`` exits with status 1 if a hard invariant (the bijection audit) fails,
and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config, validate
from .plots import SchemaError, emit_plots
from .runner import run_experiment

ENV = {"config": "SNAKELAB_CONFIG", "seed": "SNAKELAB_SEED", "out": "SNAKELAB_OUT",
       "threads": "SNAKELAB_THREADS"}


def _parser():
    p = argparse.ArgumentParser(prog="snakelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("constants", "run"):
        s = sub.add_parser(name)
        s.add_argument("--config")
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--threads", type=int)
    s = sub.add_parser("plot")
    s.add_argument("csv", nargs="?", help="summary CSV (default: every *_summary.csv under --out)")
    s.add_argument("--config")
    s.add_argument("--out")
    return p


def _env(args, key, cast=str):
    v = getattr(args, key, None)
    if v is None and os.environ.get(ENV[key]):
        v = cast(os.environ[ENV[key]])
    return v


def _config(args, default_experiment=None):
    path = _env(args, "config")
    if path:
        cfg = load_config(path)
    elif default_experiment:
        cfg = validate(ExperimentConfig(default_experiment))
    else:
        raise ConfigError("run needs --config PATH (or SNAKELAB_CONFIG)")
    return cfg.with_overrides(seed=_env(args, "seed", int), out=_env(args, "out"),
                              threads=_env(args, "threads", int))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    try:
        if args.command == "plot":
            if args.csv:
                targets = [Path(args.csv)]
            else:
                out = Path(_env(args, "out") or (_config(args, "constants").out))
                targets = sorted(out.glob("*_summary.csv"))
            for t in targets:
                for path in emit_plots(t):
                    print(path)
            return 0
        cfg = _config(args, "constants" if args.command == "constants" else None)
        if args.command == "constants" and cfg.experiment != "constants":
            cfg = cfg.with_overrides(experiment="constants")
        report = run_experiment(cfg)
    except (ConfigError, SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.command == "constants":
        sys.stdout.write(Path(report.csv_path).read_text())
    else:
        sys.stdout.write(Path(report.summary_path).read_text())
    if report.failures:
        print(f"FAILED: {report.failures} hard invariant violations", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
