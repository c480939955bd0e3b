"""Underlying symmetric proposals, radial-increment sampling and halting
indices.

Two proposal families cover the experiments: a full-covariance Gaussian
(radial increments conditional on the jump direction are generalized-gamma,
realized as a scaled root-chi-square) and a radially symmetric proposal
built from an explicit radius law, for which conditioning on the direction
is a no-op.  A halting index bounds how many times a proposal may be
projected forward; an unbounded one is only sound when the zero-density
region being crossed is bounded, so it always carries a safety cap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Union

import numpy as np

from .core import Point, RngStream
from .doubling import ExponentialIncrements

RadiusSampler = Union[Callable[[RngStream], float], ExponentialIncrements]


def _check_unit(phi: Point) -> None:
    if abs(np.linalg.norm(phi) - 1.0) > 1e-12:
        raise ValueError("phi must be a unit vector")


class GaussianProposal:
    """Zero-mean Gaussian offset with a full covariance matrix.

    The covariance is validated as symmetric positive-definite at
    construction by requiring its Cholesky factorization to succeed.
    """

    def __init__(self, cov: np.ndarray, *, equal_increments: bool = False):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be a square matrix, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, rtol=1e-10, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as e:
            raise ValueError("covariance must be positive-definite") from e
        self.cov = cov
        self.equal_increments = equal_increments
        self._chol = chol
        self._prec = np.linalg.inv(cov)

    @property
    def dim(self) -> int:
        return self.cov.shape[0]

    def __repr__(self):
        return f"GaussianProposal(dim={self.dim}, equal_increments={self.equal_increments})"


class RadialProposal:
    """Radially symmetric offset: uniform direction times an explicit radius law.

    ``radius`` is either a callable drawing one radius from a stream or an
    :class:`ExponentialIncrements` law (which additionally makes the
    proposal eligible for the bridge-accelerated obstacle traversal).
    """

    def __init__(self, radius: RadiusSampler, dim: int, *, equal_increments: bool = False):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not (callable(radius) or isinstance(radius, ExponentialIncrements)):
            raise TypeError("radius must be callable or ExponentialIncrements")
        self.radius = radius
        self.dim = dim
        self.equal_increments = equal_increments

    def sample_radius(self, rng: RngStream) -> float:
        if isinstance(self.radius, ExponentialIncrements):
            return self.radius.sample(rng)
        return float(self.radius(rng))

    def __repr__(self):
        return f"RadialProposal(radius={self.radius!r}, dim={self.dim})"


UnderlyingProposal = Union[GaussianProposal, RadialProposal]


def _exp_radius(rate: float, rng: RngStream) -> float:
    return rng.exponential(1.0 / rate)


def exponential_radius(rate: float) -> Callable[[RngStream], float]:
    """Picklable exponential radius sampler (for configs and worker pools)."""
    return partial(_exp_radius, rate)


def sample_offset(p: UnderlyingProposal, rng: RngStream) -> Point:
    """Draw one proposal offset Y - X from the underlying density."""
    if isinstance(p, GaussianProposal):
        return p._chol @ rng.standard_normal(p.dim)
    v = rng.standard_normal(p.dim)
    norm = np.linalg.norm(v)
    while norm == 0.0:  # probability-zero guard
        v = rng.standard_normal(p.dim)
        norm = np.linalg.norm(v)
    return v * (p.sample_radius(rng) / norm)


def sample_radial_increment(p: UnderlyingProposal, phi: Point, rng: RngStream) -> float:
    """Draw |Y - X| conditional on the jump direction ``phi``.

    For a Gaussian proposal the conditional radius is generalized-gamma;
    with W ~ chi-square(d), sqrt(W / (phi' inv(cov) phi)) realizes exactly
    that law.  For a radially symmetric proposal the radius is independent
    of the direction, so no conditioning is required.
    """
    _check_unit(phi)
    if isinstance(p, GaussianProposal):
        c = float(phi @ p._prec @ phi)
        return math.sqrt(rng.chisquare(p.dim) / c)
    return p.sample_radius(rng)


@dataclass(frozen=True)
class DeterministicHalting:
    """Always allow exactly ``k`` jumps; k=1 recovers plain random-walk moves."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class GeometricHalting:
    """Geometric number of allowed jumps on {1, 2, ...}, truncated at ``cap``.

    The cap guarantees a bounded halting index (hence a finite expected
    number of jumps) without any knowledge of the target's support.
    """

    p: float
    cap: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ValueError("p must be in (0, 1]")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")


@dataclass(frozen=True)
class InfiniteHalting:
    """Unbounded halting: skip until the support is entered.

    Sound only when the zero-density region being crossed is bounded, so an
    explicit ``safety_cap`` is required.  ``on_cap`` picks what happens if a
    chain reaches the cap without entering the support: ``"reject"`` halts
    there (the out-of-support proposal is then rejected, which is the same
    sampler one gets from a bounded halting index equal to the cap, hence
    unbiased), ``"error"`` raises instead, for callers who asserted
    boundedness and want to hear when that assertion fails.
    """

    safety_cap: int
    on_cap: str = "reject"

    def __post_init__(self):
        if self.safety_cap < 1:
            raise ValueError("safety_cap must be >= 1")
        if self.on_cap not in ("reject", "error"):
            raise ValueError(f"on_cap must be 'reject' or 'error', got {self.on_cap!r}")


@dataclass(frozen=True)
class DirectionalHalting:
    """Direction-dependent halting law.

    ``by_direction`` maps a unit vector to one of the concrete halting
    variants and must assign the same law to antipodal directions, otherwise
    the proposal loses its symmetry.
    """

    by_direction: Callable[[Point], "HaltingIndex"]


HaltingIndex = Union[DeterministicHalting, GeometricHalting, InfiniteHalting, DirectionalHalting]


def resolve_halting(k: HaltingIndex, phi: Point | None) -> HaltingIndex:
    """Collapse a direction-dependent halting law to the variant for ``phi``."""
    if isinstance(k, DirectionalHalting):
        if phi is None:
            raise ValueError("direction-dependent halting requires the proposal direction")
        resolved = k.by_direction(np.asarray(phi, dtype=float))
        if isinstance(resolved, DirectionalHalting):
            raise TypeError("by_direction must return a concrete halting variant")
        return resolved
    return k


def sample_halting(k: HaltingIndex, phi: Point | None, rng: RngStream) -> float:
    """Draw one halting index; returns an integer or ``math.inf``.

    Deterministic halting consumes no randomness, which is what makes a
    k=1 skipping step reproduce a random-walk step draw for draw.
    """
    resolved = resolve_halting(k, phi)
    if isinstance(resolved, DeterministicHalting):
        return resolved.k
    if isinstance(resolved, GeometricHalting):
        return min(int(rng.geometric(resolved.p)), resolved.cap)
    return math.inf


@dataclass(frozen=True)
class DirectionalDensity:
    """Angular density of the proposal direction at a given location.

    Used by the corrected acceptance ratio when the direction law varies
    with location; it must be strictly positive wherever it is consulted.
    """

    q_phi: Callable[[Point, Point], float]

    def log_at(self, x: Point, phi: Point) -> float:
        v = float(self.q_phi(x, phi))
        if not v > 0.0:
            raise ValueError("angular density must be strictly positive where evaluated")
        return math.log(v)
