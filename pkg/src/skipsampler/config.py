"""Experiment configuration: a JSON file fully validated before any compute.

A config names a target, a sampler (proposal + halting) and run parameters.
Validation errors always name the offending key so a bad file fails fast
and legibly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .core import LogTarget, Point
from .proposals import (
    DeterministicHalting,
    GaussianProposal,
    GeometricHalting,
    HaltingIndex,
    InfiniteHalting,
    RadialProposal,
    UnderlyingProposal,
    exponential_radius,
)
from .targets import (
    BoltzmannTarget,
    GaussianMixture,
    LevelConditionedTarget,
    eggholder,
    EGGHOLDER_BOUNDS,
    make_random_mixture,
    sphere,
    uniform_on_intervals,
)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _need(d: dict, key: str, path: str, types, choices=None):
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing required key")
    v = d[key]
    if not isinstance(v, types):
        raise ConfigError(f"{path}.{key}: expected {types}, got {type(v).__name__}")
    if isinstance(v, bool) and types in ((int, float), int, float):
        raise ConfigError(f"{path}.{key}: expected a number, got a boolean")
    if choices is not None and v not in choices:
        raise ConfigError(f"{path}.{key}: must be one of {sorted(choices)}, got {v!r}")
    return v


def _positive(d: dict, key: str, path: str, types=(int, float)):
    v = _need(d, key, path, types)
    if not v > 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v}")
    return v


@dataclass
class TargetBundle:
    """A built target plus the metadata experiment code needs around it."""

    log_target: LogTarget
    dim: int
    default_initial: np.ndarray
    description: dict


@dataclass
class ExperimentConfig:
    target: dict
    sampler: dict
    run: dict
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
        for key in ("target", "sampler", "run"):
            if key not in raw or not isinstance(raw[key], dict):
                raise ConfigError(f"{key}: missing or not an object")
        unknown = set(raw) - {"target", "sampler", "run", "output"}
        if unknown:
            raise ConfigError(f"config: unknown top-level keys {sorted(unknown)}")
        cfg = cls(
            target=raw["target"],
            sampler=raw["sampler"],
            run=raw["run"],
            output=raw.get("output", {}),
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: not valid JSON ({e})") from e
        return cls.from_dict(raw)

    def validate(self) -> None:
        kind = _need(self.target, "kind", "target", str,
                     {"two_interval_uniform", "interval_union", "mixture_tail", "boltzmann"})
        if kind == "interval_union":
            iv = _need(self.target, "intervals", "target", list)
            if not iv or any(len(p) != 2 or not p[0] < p[1] for p in iv):
                raise ConfigError("target.intervals: need nonempty [lo, hi] pairs with lo < hi")
        elif kind == "mixture_tail":
            _need(self.target, "mixture_seed", "target", int)
            _positive(self.target, "components", "target", int)
            _positive(self.target, "dim", "target", int)
            _positive(self.target, "spread", "target")
            _need(self.target, "level_log", "target", (int, float))
        elif kind == "boltzmann":
            _need(self.target, "objective", "target", str, {"eggholder", "sphere"})
            _positive(self.target, "temperature", "target")
            if self.target["objective"] == "sphere":
                bounds = _need(self.target, "bounds", "target", list)
                if not bounds or any(len(b) != 2 or not b[0] < b[1] for b in bounds):
                    raise ConfigError("target.bounds: need [lo, hi] pairs with lo < hi")

        skind = _need(self.sampler, "kind", "sampler", str, {"rwm", "skipping"})
        prop = _need(self.sampler, "proposal", "sampler", dict)
        pkind = _need(prop, "kind", "sampler.proposal", str, {"gaussian", "radial_exponential"})
        if pkind == "gaussian":
            if ("cov" in prop) == ("scale" in prop):
                raise ConfigError("sampler.proposal: give exactly one of 'cov' or 'scale'")
            if "scale" in prop:
                _positive(prop, "scale", "sampler.proposal")
            else:
                cov = _need(prop, "cov", "sampler.proposal", list)
                try:
                    GaussianProposal(np.asarray(cov, dtype=float))
                except (ValueError, TypeError) as e:
                    raise ConfigError(f"sampler.proposal.cov: {e}") from e
        else:
            _positive(prop, "rate", "sampler.proposal")
        if skind == "skipping":
            halt = _need(self.sampler, "halting", "sampler", dict)
            hkind = _need(halt, "kind", "sampler.halting", str,
                          {"deterministic", "geometric", "infinite"})
            if hkind == "deterministic":
                _positive(halt, "k", "sampler.halting", int)
            elif hkind == "geometric":
                p = _positive(halt, "p", "sampler.halting")
                if p > 1.0:
                    raise ConfigError("sampler.halting.p: must be in (0, 1]")
                if "cap" in halt:
                    _positive(halt, "cap", "sampler.halting", int)
            else:
                _positive(halt, "safety_cap", "sampler.halting", int)
                if "on_cap" in halt:
                    _need(halt, "on_cap", "sampler.halting", str, {"reject", "error"})

        _positive(self.run, "steps", "run", int)
        _need(self.run, "seed", "run", int)
        if "burn_in" in self.run:
            bi = _need(self.run, "burn_in", "run", int)
            if not 0 <= bi < self.run["steps"]:
                raise ConfigError("run.burn_in: must be in [0, steps)")
        if "chains" in self.run:
            _positive(self.run, "chains", "run", int)
        if "initial" in self.run and not isinstance(self.run["initial"], list):
            raise ConfigError("run.initial: must be a list of coordinates")
        if self.output and "dir" in self.output and not isinstance(self.output["dir"], str):
            raise ConfigError("output.dir: must be a string")

    def to_dict(self) -> dict:
        return {"target": self.target, "sampler": self.sampler, "run": self.run,
                "output": self.output}


def _boundary_start(mixture: GaussianMixture, level_log: float) -> np.ndarray:
    """Deterministic point just inside the closed sublevel set.

    Walk from the heaviest component's mean along the first axis until the
    log-density drops to the level, then bisect onto the boundary and keep
    the outside end (which satisfies the level inequality).
    """
    center = mixture.means[int(np.argmax(mixture.weights))].copy()
    direction = np.zeros(mixture.dim)
    direction[0] = 1.0
    s = 1.0
    while mixture.logpdf(center + s * direction) > level_log:
        s *= 2.0
        if s > 1e12:
            raise ConfigError("target.level_log: sublevel set not reachable along the probe ray")
    lo, hi = s / 2.0, s
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mixture.logpdf(center + mid * direction) > level_log:
            lo = mid
        else:
            hi = mid
    return center + hi * direction


def build_target(spec: dict) -> TargetBundle:
    kind = spec["kind"]
    if kind == "two_interval_uniform":
        t = uniform_on_intervals([(0.0, 1.0), (2.0, 3.0)])
        return TargetBundle(t, 1, np.array([0.5]), {"kind": kind})
    if kind == "interval_union":
        intervals = [(float(lo), float(hi)) for lo, hi in spec["intervals"]]
        t = uniform_on_intervals(intervals)
        x0 = np.array([0.5 * (intervals[0][0] + intervals[0][1])])
        return TargetBundle(t, 1, x0, {"kind": kind, "intervals": intervals})
    if kind == "mixture_tail":
        mixture = make_random_mixture(
            seed=spec["mixture_seed"], m=spec["components"], d=spec["dim"],
            spread=spec["spread"],
        )
        level = float(spec["level_log"])
        t = LevelConditionedTarget(base=mixture, level_log=level).as_log_target()
        x0 = _boundary_start(mixture, level)
        return TargetBundle(t, spec["dim"], x0, dict(spec))
    if kind == "boltzmann":
        objective = eggholder if spec["objective"] == "eggholder" else sphere
        bounds = (
            EGGHOLDER_BOUNDS
            if spec["objective"] == "eggholder"
            else np.asarray(spec["bounds"], dtype=float)
        )
        bt = BoltzmannTarget(f=objective, temperature=float(spec["temperature"]), bounds=bounds)
        x0 = bounds.mean(axis=1)
        return TargetBundle(bt.as_log_target(), bounds.shape[0], x0, dict(spec))
    raise ConfigError(f"target.kind: unknown kind {kind!r}")


def build_proposal(spec: dict, dim: int) -> UnderlyingProposal:
    equal = bool(spec.get("equal_increments", False))
    if spec["kind"] == "gaussian":
        if "scale" in spec:
            cov = float(spec["scale"]) ** 2 * np.eye(dim)
        else:
            cov = np.asarray(spec["cov"], dtype=float)
            if cov.shape[0] != dim:
                raise ConfigError(
                    f"sampler.proposal.cov: dimension {cov.shape[0]} does not match target dim {dim}"
                )
        return GaussianProposal(cov, equal_increments=equal)
    return RadialProposal(exponential_radius(float(spec["rate"])), dim, equal_increments=equal)


def build_halting(spec: dict) -> HaltingIndex:
    if spec["kind"] == "deterministic":
        return DeterministicHalting(k=spec["k"])
    if spec["kind"] == "geometric":
        return GeometricHalting(p=float(spec["p"]), cap=spec.get("cap", 10_000))
    return InfiniteHalting(safety_cap=spec["safety_cap"], on_cap=spec.get("on_cap", "reject"))
