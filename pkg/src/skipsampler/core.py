"""Shared domain types: states, log-targets, step records and RNG streams.

States are plain 1-D numpy arrays of finite floats.  All density arithmetic
is done in log space; ``-inf`` is the only admissible non-finite value and
encodes zero density, so support membership is simply "log-density is
finite".  Randomness always flows through an explicit
:class:`numpy.random.Generator` ("stream"); a stream is owned by exactly one
chain and child streams are derived by seed-sequence spawning so that
parallel runs are reproducible and independent of worker count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Point = np.ndarray
RngStream = np.random.Generator

NEG_INF = float("-inf")


class SkippingError(RuntimeError):
    """Base class for sampler failures."""


class HaltingCapExceeded(SkippingError):
    """A skipping chain ran to its safety cap without entering the support.

    Raised only in strict mode; it usually means the complement of the
    support is unbounded in some direction, so the expected entry time is
    not finite and unbounded halting is not a valid choice.
    """


class NonFiniteProposal(SkippingError):
    """A skipping chain produced a non-finite coordinate."""


def make_stream(seed: int) -> RngStream:
    """Create the root random stream for a run (PCG64 behind ``default_rng``)."""
    return np.random.default_rng(seed)


def split_stream(rng: RngStream, n: int) -> list[RngStream]:
    """Derive ``n`` independent child streams.

    Children are spawned from the parent's seed sequence, so the same root
    seed always yields the same children regardless of how many workers
    later consume them.
    """
    return list(rng.spawn(n))


def as_point(x: Sequence[float] | np.ndarray) -> Point:
    """Coerce to a 1-D float array and reject non-finite coordinates."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError(f"state must be a 1-D vector, got shape {p.shape}")
    if not np.isfinite(p).all():
        raise ValueError("state coordinates must be finite")
    return p


@dataclass(frozen=True)
class LogTarget:
    """Pointwise-evaluable unnormalized log-density.

    ``log_density`` must never return NaN or ``+inf``; ``-inf`` encodes zero
    density.  ``dim`` is the state dimension and is checked on every
    evaluation.  ``log_density_batch``, when provided, evaluates an (n, d)
    array of points at once; the skipping loop then tests whole blocks of
    ray candidates per call, which changes nothing about the sampled law,
    only how fast long skips run.
    """

    log_density: Callable[[Point], float]
    dim: int
    log_density_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def eval(self, x: Point) -> float:
        if len(x) != self.dim:
            raise ValueError(f"dimension mismatch: target has dim {self.dim}, state has {len(x)}")
        v = float(self.log_density(x))
        if math.isnan(v) or v == math.inf:
            raise ValueError(f"log-density returned {v}; only finite values or -inf are allowed")
        return v

    def eval_batch(self, points: np.ndarray) -> np.ndarray:
        values = np.asarray(self.log_density_batch(points), dtype=float)
        if np.isnan(values).any() or (values == math.inf).any():
            raise ValueError("log-density returned NaN or +inf; only finite values or -inf are allowed")
        return values


class CallCounter:
    """Wrap a function and count its invocations (one counter per run)."""

    __slots__ = ("fn", "calls")

    def __init__(self, fn: Callable):
        self.fn = fn
        self.calls = 0

    def __call__(self, *args):
        self.calls += 1
        return self.fn(*args)


class _TargetEvalCounter:
    """Shared point counter for a target's scalar and batch entry points."""

    __slots__ = ("scalar_fn", "batch_fn", "calls")

    def __init__(self, t: LogTarget):
        self.scalar_fn = t.log_density
        self.batch_fn = t.log_density_batch
        self.calls = 0

    def scalar(self, x):
        self.calls += 1
        return self.scalar_fn(x)

    def batch(self, points):
        self.calls += len(points)
        return self.batch_fn(points)


def counted_target(t: LogTarget) -> tuple[LogTarget, _TargetEvalCounter]:
    """Return a target that counts evaluated points, plus its counter."""
    counter = _TargetEvalCounter(t)
    batch = counter.batch if t.log_density_batch is not None else None
    return LogTarget(log_density=counter.scalar, dim=t.dim, log_density_batch=batch), counter


@dataclass(frozen=True)
class StepRecord:
    """Full provenance of one Markov-chain transition.

    ``state`` is the chain state the step started from; ``proposal`` is the
    (possibly skipped) proposal; ``skip_count`` is the number of skipping
    steps taken to build it (always 1 for plain random-walk steps).
    """

    state: Point
    proposal: Point
    skip_count: int
    accepted: bool
    log_target_at_state: float

    @property
    def next_state(self) -> Point:
        return self.proposal if self.accepted else self.state


def in_support(t: LogTarget, x: Point) -> bool:
    """True iff ``x`` carries positive target density."""
    return t.eval(x) > NEG_INF


def log_acceptance(t: LogTarget, x: Point, z: Point) -> float:
    """Log Metropolis acceptance probability for a symmetric proposal.

    Returns ``min(0, log pi(z) - log pi(x))`` from inside the support and 0
    (accept with probability one) from outside it, including the
    zero-over-zero case: while the chain has not yet entered the support
    every halted proposal is accepted, which is what drives initialisation.
    """
    return log_acceptance_values(t.eval(x), t.eval(z))


def log_acceptance_values(lx: float, lz: float) -> float:
    """Same rule on already-computed log-densities (spares re-evaluation)."""
    if lx == NEG_INF:
        return 0.0
    return min(0.0, lz - lx)
