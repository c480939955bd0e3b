"""Benchmark targets and objectives.

Gaussian mixtures with level-set conditioning drive the rare-event
experiments; the eggholder objective and Boltzmann box densities drive the
optimization ones; interval-union uniforms are the workhorse synthetic
targets for the statistical test suites.  Everything is evaluated in log
space so that levels as deep as exp(-350) stay representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import NEG_INF, LogTarget, Point


def eggholder(x: Point) -> float:
    """Two-dimensional eggholder objective (global minimum near (512, 404.23))."""
    if len(x) != 2:
        raise ValueError("eggholder is defined on two coordinates")
    x1 = float(x[0])
    x2 = float(x[1])
    return -x1 * math.sin(math.sqrt(abs(x1 - x2 - 47.0))) - (x2 + 47.0) * math.sin(
        math.sqrt(abs(0.5 * x1 + x2 + 47.0))
    )


EGGHOLDER_OPTIMUM = np.array([512.0, 404.2319])
EGGHOLDER_MIN_VALUE = -959.6407
EGGHOLDER_BOUNDS = np.array([[-512.0, 512.0], [-512.0, 512.0]])


def eggholder_grid(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Vectorized eggholder for contour plots (broadcasts over arrays)."""
    return -x1 * np.sin(np.sqrt(np.abs(x1 - x2 - 47.0))) - (x2 + 47.0) * np.sin(
        np.sqrt(np.abs(0.5 * x1 + x2 + 47.0))
    )


def eggholder_batch(points: np.ndarray) -> np.ndarray:
    """Eggholder over an (n, 2) array of points."""
    points = np.asarray(points, dtype=float)
    return eggholder_grid(points[:, 0], points[:, 1])


def sphere(x: Point) -> float:
    """Convex quadratic |x|^2, the trivial sanity objective."""
    x = np.asarray(x, dtype=float)
    return float(x @ x)


class GaussianMixture:
    """Finite Gaussian mixture with cached factorizations.

    Weights must sum to one and every covariance must admit a Cholesky
    factorization; log-densities are computed by log-sum-exp over the
    component log-densities so the far tail stays finite.
    """

    def __init__(self, weights: np.ndarray, means: np.ndarray, covariances: np.ndarray):
        weights = np.asarray(weights, dtype=float)
        means = np.asarray(means, dtype=float)
        covariances = np.asarray(covariances, dtype=float)
        m = weights.shape[0]
        if means.shape[0] != m or covariances.shape[0] != m:
            raise ValueError("weights, means and covariances must agree on the component count")
        if means.ndim != 2 or covariances.shape[1:] != (means.shape[1], means.shape[1]):
            raise ValueError("means must be (m, d) and covariances (m, d, d)")
        if abs(weights.sum() - 1.0) > 1e-12 or (weights <= 0).any():
            raise ValueError("weights must be positive and sum to 1 within 1e-12")
        chols = np.linalg.cholesky(covariances)  # raises if any component is not SPD
        self.weights = weights
        self.means = means
        self.covariances = covariances
        self._chol_inv = np.stack([np.linalg.inv(c) for c in chols])
        log_dets = 2.0 * np.log(np.diagonal(chols, axis1=1, axis2=2)).sum(axis=1)
        d = means.shape[1]
        self._log_norm = np.log(weights) - 0.5 * (d * math.log(2.0 * math.pi) + log_dets)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def logpdf(self, x: Point) -> float:
        u = np.einsum("mij,mj->mi", self._chol_inv, x - self.means)
        comp = self._log_norm - 0.5 * np.einsum("mi,mi->m", u, u)
        top = comp.max()
        return float(top + math.log(np.exp(comp - top).sum()))

    def logpdf_batch(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        diff = xs[:, None, :] - self.means[None, :, :]
        u = np.einsum("mij,nmj->nmi", self._chol_inv, diff)
        comp = self._log_norm[None, :] - 0.5 * np.einsum("nmi,nmi->nm", u, u)
        top = comp.max(axis=1)
        return top + np.log(np.exp(comp - top[:, None]).sum(axis=1))

    def as_log_target(self) -> LogTarget:
        return LogTarget(log_density=self.logpdf, dim=self.dim)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixture":
        return cls(np.array(d["weights"]), np.array(d["means"]), np.array(d["covariances"]))


def mixture_logpdf(g: GaussianMixture, x: Point) -> float:
    """Log mixture density at ``x`` (log-sum-exp over components)."""
    if len(x) != g.dim:
        raise ValueError(f"dimension mismatch: mixture has dim {g.dim}, point has {len(x)}")
    return g.logpdf(np.asarray(x, dtype=float))


def make_random_mixture(seed: int, m: int, d: int, spread: float = 10.0) -> GaussianMixture:
    """Seed-deterministic random mixture for the tail experiments.

    Means are uniform on [-spread, spread]^d, each covariance is
    G G' + 0.1 I with G a d-by-d standard normal matrix scaled by 1/sqrt(d)
    (well-conditioned SPD by construction), and the weights are a flat
    Dirichlet draw.
    """
    if m < 1 or d < 1:
        raise ValueError("m and d must be >= 1")
    rng = np.random.default_rng(seed)
    means = rng.uniform(-spread, spread, size=(m, d))
    g = rng.standard_normal(size=(m, d, d)) / math.sqrt(d)
    covariances = np.einsum("mij,mkj->mik", g, g) + 0.1 * np.eye(d)
    weights = rng.dirichlet(np.ones(m))
    return GaussianMixture(weights, means, covariances)


@dataclass(frozen=True)
class LevelConditionedTarget:
    """The base density conditioned on its own sublevel event.

    The support is the closed set where the base log-density is at most
    ``level_log``; on it the target keeps the base density's shape (the
    conditional law of the base measure given the event), off it the
    density is zero.
    """

    base: GaussianMixture
    level_log: float

    def log_density(self, x: Point) -> float:
        lp = self.base.logpdf(x)
        return lp if lp <= self.level_log else NEG_INF

    def as_log_target(self) -> LogTarget:
        return LogTarget(log_density=self.log_density, dim=self.base.dim)


@dataclass(frozen=True)
class BoltzmannTarget:
    """exp(-f(x)/T) restricted to a box; the optimization-facing density."""

    f: Callable[[Point], float]
    temperature: float
    bounds: np.ndarray  # shape (d, 2)

    def log_density(self, x: Point) -> float:
        b = self.bounds
        if (x < b[:, 0]).any() or (x > b[:, 1]).any():
            return NEG_INF
        v = float(self.f(x))
        if v == math.inf:
            return NEG_INF
        return -v / self.temperature

    def as_log_target(self) -> LogTarget:
        return LogTarget(log_density=self.log_density, dim=self.bounds.shape[0])


class _IntervalUnionDensity:
    """Indicator log-density of a union of closed intervals (1-D)."""

    def __init__(self, intervals: Sequence[tuple[float, float]]):
        iv = [(float(lo), float(hi)) for lo, hi in intervals]
        for lo, hi in iv:
            if not lo < hi:
                raise ValueError(f"interval bounds must satisfy lo < hi, got ({lo}, {hi})")
        self.intervals = iv

    def __call__(self, x: Point) -> float:
        v = float(x[0])
        for lo, hi in self.intervals:
            if lo <= v <= hi:
                return 0.0
        return NEG_INF


def uniform_on_intervals(intervals: Sequence[tuple[float, float]]) -> LogTarget:
    """Uniform target on a union of closed 1-D intervals.

    Boundary points carry positive density (the support is closed); the
    measure-zero choice is deliberate and tested.
    """
    return LogTarget(log_density=_IntervalUnionDensity(intervals), dim=1)


def two_interval_uniform() -> LogTarget:
    """The canonical disconnected test target: uniform on [0,1] and [2,3]."""
    return uniform_on_intervals([(0.0, 1.0), (2.0, 3.0)])
