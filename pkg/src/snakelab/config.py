"""Flat ``key = value`` experiment configs.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.

======================  ===================================================
key                     meaning
======================  ===================================================
experiment              one of :data:`EXPERIMENTS`
n_steps                 contour length of normalized snakes (even)
tau                     grid step for forest experiments
replicas                replicas per cell (>= 1)
seed                    master seed
h                       list of levels
eps                     list of thresholds, strictly decreasing
bandwidth               local time half-width (default 5 tau^(1/4))
a                       initial mass / local time target (default 1)
delta                   list of delta values (constants)
max_steps               per-replica step budget for forest runs
redraw                  replace over-budget replicas (true/false)
chunk                   replicas per resumable work unit
out                     output directory
threads                 worker threads
======================  ===================================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

EXPERIMENTS = (
    "constants",
    "poisson-calibration",
    "hitting-mass",
    "lemma41-mean",
    "thm12-sweep",
    "thm11-map-sweep",
    "reroot-invariance",
    "bijection-audit",
    "mu-scaling",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_steps: int = 1000
    tau: float = 1e-4
    replicas: int = 100
    seed: int = 0
    h: tuple = (1.0,)
    eps: tuple = (0.5,)
    bandwidth: float | None = None
    a: float = 1.0
    delta: tuple = (1e-2, 1e-3, 1e-4)
    max_steps: int = 10**9
    redraw: bool = True
    chunk: int = 50
    out: str = "out"
    threads: int = 1

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return validate(replace(self, **kw))

    def resolution_floor(self) -> float:
        return 20.0 * self.tau ** 0.25

    def echo(self) -> dict:
        return {k: getattr(self, k) for k in _PARSERS}


def _floats(s):
    vals = tuple(float(x) for x in s.split(",") if x.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def _bool(s):
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"not an integer: {s!r}")
    return int(v)


_PARSERS = {
    "experiment": str.strip,
    "n_steps": _int,
    "tau": float,
    "replicas": _int,
    "seed": _int,
    "h": _floats,
    "eps": _floats,
    "bandwidth": float,
    "a": float,
    "delta": _floats,
    "max_steps": _int,
    "redraw": _bool,
    "chunk": _int,
    "out": str.strip,
    "threads": _int,
}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {e}") from None
    if "experiment" not in values:
        raise ConfigError(f"{source}: missing 'experiment'")
    try:
        return validate(ExperimentConfig(**values))
    except ConfigError as e:
        raise ConfigError(f"{source}: {e}") from None


def load_config(path) -> ExperimentConfig:
    with open(path) as f:
        return parse_config(f.read(), str(path))


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.replicas < 1:
        raise ConfigError("replicas must be >= 1")
    if not cfg.h or not cfg.eps or not cfg.delta:
        raise ConfigError("lists must be nonempty")
    if any(e <= 0 for e in cfg.eps) or any(d <= 0 for d in cfg.delta):
        raise ConfigError("eps and delta must be positive")
    if any(a <= b for a, b in zip(cfg.eps, cfg.eps[1:])):
        raise ConfigError("eps must be sorted in strictly decreasing order")
    if cfg.n_steps < 2 or cfg.n_steps % 2:
        raise ConfigError("n_steps must be a positive even integer")
    if not (cfg.tau > 0 and cfg.a > 0 and math.isfinite(cfg.tau)):
        raise ConfigError("tau and a must be positive")
    if cfg.bandwidth is not None and not cfg.bandwidth > 0:
        raise ConfigError("bandwidth must be positive")
    if cfg.chunk < 1 or cfg.threads < 1 or cfg.max_steps < 1:
        raise ConfigError("chunk, threads and max_steps must be >= 1")
    return cfg
