"""Resumable, threaded campaign runner.

Work is cut into units of ``chunk`` consecutive replicas of one group.  Each
finished unit is written atomically to ``<out>/cells/`` under a name keyed by
(experiment, group, replica range, master seed); a rerun skips units whose
file exists.  The final CSV is always reassembled from the unit files in
(group, replica) order, so output bytes do not depend on thread count or on
how often the campaign was interrupted.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentConfig
from .experiments import REGISTRY, SUMMARY_HEADER, seed_for

log = logging.getLogger(__name__)

__all__ = ["RunReport", "run_experiment", "csv_bytes"]


@dataclass
class RunReport:
    experiment: str
    summary: list
    wall_time: float
    config: dict
    version: str
    units_computed: int
    units_reused: int
    failures: int = 0
    warnings: list = field(default_factory=list)
    csv_path: str = ""
    summary_path: str = ""

    def to_json(self) -> str:
        cells = [dict(zip(SUMMARY_HEADER, r)) for r in self.summary]
        return json.dumps({
            "experiment": self.experiment, "version": self.version, "wall_time": self.wall_time,
            "config": self.config, "units_computed": self.units_computed,
            "units_reused": self.units_reused, "failures": self.failures,
            "warnings": self.warnings, "cells": cells}, indent=2, default=list)


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _version() -> str:
    from . import __version__
    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
        if rev.returncode == 0:
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _unit_path(cells: Path, exp, g, start, stop, seed) -> Path:
    return cells / f"{exp}__g{g}__r{start:08d}-{stop:08d}__seed{seed}.csv"


def _compute_unit(exp, cfg, group, start, stop):
    rows = []
    for i in range(start, stop):
        rows.extend(exp.replica(cfg, group, i, seed_for(cfg.seed, i)))
    return rows


def _write_atomic(path: Path, data: bytes):
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def _read_rows(path: Path):
    with open(path, newline="") as f:
        r = csv.reader(f)
        next(r)
        return [tuple(row) for row in r]


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    t0 = time.perf_counter()
    exp = REGISTRY[cfg.experiment]
    warnings = exp.warnings(cfg)
    for w in warnings:
        log.warning(w)
    out = Path(cfg.out)
    cells = out / "cells"
    cells.mkdir(parents=True, exist_ok=True)

    n = exp.n_replicas(cfg)
    groups = exp.groups(cfg)
    units = []
    for g, group in enumerate(groups):
        for start in range(0, n, cfg.chunk):
            stop = min(n, start + cfg.chunk)
            units.append((g, group, start, stop, _unit_path(cells, exp.name, g, start, stop, cfg.seed)))
    todo = [u for u in units if not u[4].exists()]
    reused = len(units) - len(todo)
    if reused:
        log.info("reusing %d finished units", reused)

    # workers only compute; this thread is the single writer
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futs = {pool.submit(_compute_unit, exp, cfg, group, start, stop): path
                for g, group, start, stop, path in todo}
        for fut in as_completed(futs):
            _write_atomic(futs[fut], csv_bytes(exp.columns, fut.result()))

    rows = []
    for *_, path in units:
        rows.extend(_read_rows(path))
    csv_path = out / f"{exp.name}.csv"
    _write_atomic(csv_path, csv_bytes(exp.columns, rows))

    dict_rows = [dict(zip(exp.columns, r)) for r in rows]
    summary = exp.summarize(cfg, dict_rows)
    summary_path = out / f"{exp.name}_summary.csv"
    _write_atomic(summary_path, csv_bytes(SUMMARY_HEADER, summary))

    report = RunReport(exp.name, summary, time.perf_counter() - t0, cfg.echo(), _version(),
                       len(todo), reused, exp.failures(summary), warnings,
                       str(csv_path), str(summary_path))
    _write_atomic(out / f"{exp.name}_report.json", report.to_json().encode())
    return report
