"""Global-optimization procedures: local simplex search, multistart
(optionally augmented with chain evolution) and three basin-hopping
variants.

The monotonic skipping step is the interesting randomization device here:
it samples from the strict sublevel set of the current value intersected
with the search box, so it can hop between disconnected basins that a
local uniform perturbation of the same scale essentially never crosses.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import CallCounter, Point, RngStream, as_point, split_stream
from .samplers import SkippingConfig, mss_step, rwm_step
from .targets import BoltzmannTarget


@dataclass(frozen=True)
class BoxProblem:
    """Minimize ``f`` over an axis-aligned box.

    ``f`` may return ``+inf`` to mark infeasible points.  ``known_optimum``
    is an optional (point, value) pair used only for benchmarking metrics.
    ``f_batch``, when given, evaluates an (n, d) array of points at once and
    lets the skipping rays run vectorized.
    """

    f: Callable[[Point], float]
    bounds: np.ndarray  # shape (d, 2)
    known_optimum: tuple[np.ndarray, float] | None = None
    f_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise ValueError("bounds must have shape (d, 2)")
        if not (b[:, 0] < b[:, 1]).all():
            raise ValueError("each bound must satisfy lower < upper")
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]


class _CountedBatch:
    """Count batched objective evaluations into a shared counter."""

    __slots__ = ("f_batch", "counter")

    def __init__(self, f_batch, counter: CallCounter):
        self.f_batch = f_batch
        self.counter = counter

    def __call__(self, points: np.ndarray) -> np.ndarray:
        self.counter.calls += len(points)
        return self.f_batch(points)


@dataclass
class OptRunReport:
    """Endpoint metrics of one optimization run."""

    final_point: np.ndarray
    final_value: float
    function_evals: int
    wall_time_s: float
    distance_to_optimum: float | None = None
    in_basin: bool | None = None

    def to_dict(self) -> dict:
        return {
            "final_point": [float(v) for v in self.final_point],
            "final_value": float(self.final_value),
            "function_evals": int(self.function_evals),
            "wall_time_s": float(self.wall_time_s),
            "distance_to_optimum": None
            if self.distance_to_optimum is None
            else float(self.distance_to_optimum),
            "in_basin": self.in_basin,
        }


def _nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    steps: np.ndarray,
    *,
    f_tol: float = 1e-8,
    x_tol: float = 1e-6,
    max_iter: int = 500,
) -> tuple[np.ndarray, float]:
    """Minimal Nelder-Mead simplex loop (reflection 1, expansion 2,
    contraction 0.5, shrink 0.5); stops when the simplex f-spread falls
    below ``f_tol`` and its diameter below ``x_tol`` (the diameter condition
    keeps coordinate accuracy independent of the objective's magnitude), or
    after ``max_iter`` iterations."""
    d = len(x0)
    simplex = np.tile(x0, (d + 1, 1))
    for i in range(d):
        simplex[i + 1, i] += steps[i]
    fvals = np.array([f(p) for p in simplex])
    if not np.isfinite(fvals).any():
        return x0, float(fvals[0])

    for _ in range(max_iter):
        order = np.argsort(fvals, kind="stable")
        simplex = simplex[order]
        fvals = fvals[order]
        spread = fvals[-1] - fvals[0]
        if (
            math.isfinite(spread)
            and spread < f_tol
            and np.abs(simplex[1:] - simplex[0]).max() < x_tol
        ):
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
            else:
                best = simplex[0]
                for i in range(1, d + 1):
                    simplex[i] = best + 0.5 * (simplex[i] - best)
                    fvals[i] = f(simplex[i])
    i_best = int(np.argmin(fvals))
    return simplex[i_best], float(fvals[i_best])


def local_search(x0: Point, prob: BoxProblem) -> tuple[np.ndarray, float, int]:
    """Derivative-free local minimization from ``x0``, clamped to the box.

    Deterministic given ``x0``.  The initial simplex edge is 1% of the box
    width per coordinate (flipped inward at the boundary).  Returns
    (point, value, evals); if no finite value is found near an infeasible
    start the start itself is returned with value ``+inf``.
    """
    x0 = as_point(x0)
    lo, hi = prob.bounds[:, 0], prob.bounds[:, 1]
    counter = CallCounter(prob.f)

    def clamped(x: np.ndarray) -> float:
        v = float(counter(np.clip(x, lo, hi)))
        if math.isnan(v):
            raise ValueError("objective returned NaN")
        return v

    start = np.clip(x0, lo, hi)
    steps = 0.01 * (hi - lo)
    steps = np.where(start + steps > hi, -steps, steps)
    best, fbest = _nelder_mead(clamped, start, steps)
    if not math.isfinite(fbest):
        return x0, fbest, counter.calls
    return np.clip(best, lo, hi), fbest, counter.calls


def in_basin_of(x: Point, prob: BoxProblem, tol: float = 1.0) -> bool:
    """Does the local search from ``x`` land at the known optimum?

    Membership means every coordinate of the local-search result is within
    ``tol`` of the known optimizer.
    """
    if prob.known_optimum is None:
        raise ValueError("known_optimum is required for basin membership")
    point, _, _ = local_search(x, prob)
    return bool(np.abs(point - np.asarray(prob.known_optimum[0])).max() <= tol)


def _finish_report(
    prob: BoxProblem,
    final_point: np.ndarray,
    final_value: float,
    counter: CallCounter,
    t0: float,
    basin_tol: float,
) -> OptRunReport:
    wall = time.perf_counter() - t0
    report = OptRunReport(
        final_point=final_point,
        final_value=final_value,
        function_evals=counter.calls,
        wall_time_s=wall,
    )
    if prob.known_optimum is not None:
        x_star = np.asarray(prob.known_optimum[0], dtype=float)
        report.distance_to_optimum = float(np.linalg.norm(final_point - x_star))
        report.in_basin = in_basin_of(final_point, prob, tol=basin_tol)
    return report


def multistart_single(
    prob: BoxProblem,
    mode: str,
    rng: RngStream,
    *,
    x0: Point | None = None,
    m: int = 100,
    proposal=None,
    temperature: float = 1.0,
    skipping: SkippingConfig | None = None,
    basin_tol: float = 1.0,
    proposal_cap_factor: int = 200,
) -> OptRunReport:
    """One multistart run: draw (or take) a start point, evolve it, score it.

    ``"vanilla"`` scores the start as it is; ``"rwm"`` evolves it against
    the Boltzmann density of the objective; ``"mss"`` evolves it with
    monotonic skipping steps.  A trajectory of length ``m`` means ``m``
    accepted transitions (m distinct states): rejected proposals are
    retried, up to ``proposal_cap_factor * m`` proposals in total.
    Function-evaluation counts cover generating and scoring the endpoint;
    basin-membership searches are bookkeeping and are not counted.
    """
    if mode not in ("vanilla", "rwm", "mss"):
        raise ValueError(f"unknown multistart mode {mode!r}")
    if mode == "rwm" and proposal is None:
        raise ValueError("rwm mode requires a proposal")
    if mode == "mss" and skipping is None:
        raise ValueError("mss mode requires a skipping config")

    t0 = time.perf_counter()
    counter = CallCounter(prob.f)
    if x0 is None:
        x0 = rng.uniform(prob.bounds[:, 0], prob.bounds[:, 1])
    cap = proposal_cap_factor * m
    if mode == "vanilla":
        endpoint = np.asarray(x0, dtype=float)
    elif mode == "rwm":
        target = BoltzmannTarget(f=counter, temperature=temperature, bounds=prob.bounds)
        log_target = target.as_log_target()
        x = np.asarray(x0, dtype=float)
        accepted = proposals = 0
        while accepted < m and proposals < cap:
            rec = rwm_step(x, log_target, proposal, rng)
            proposals += 1
            if rec.accepted:
                accepted += 1
                x = rec.proposal
        endpoint = x
    else:
        batch = _CountedBatch(prob.f_batch, counter) if prob.f_batch is not None else None
        x = np.asarray(x0, dtype=float)
        accepted = proposals = 0
        while accepted < m and proposals < cap:
            rec = mss_step(x, counter, prob.bounds, skipping, rng, f_batch=batch)
            proposals += 1
            if rec.accepted:
                accepted += 1
                x = rec.proposal
        endpoint = x
    value = float(counter(endpoint))
    return _finish_report(prob, endpoint, value, counter, t0, basin_tol)


def multistart(
    prob: BoxProblem,
    n: int,
    mode: str,
    rng: RngStream,
    *,
    m: int = 100,
    proposal=None,
    temperature: float = 1.0,
    skipping: SkippingConfig | None = None,
    basin_tol: float = 1.0,
) -> list[OptRunReport]:
    """Run ``n`` independent multistart runs on spawned child streams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [
        multistart_single(
            prob, mode, child, m=m, proposal=proposal,
            temperature=temperature, skipping=skipping, basin_tol=basin_tol,
        )
        for child in split_stream(rng, n)
    ]


def basin_hopping(
    prob: BoxProblem,
    x0: Point,
    mode: str,
    n_iters: int,
    rng: RngStream,
    *,
    step_scale: float = math.sqrt(3.0),
    temperature: float = 1.0,
    skipping: SkippingConfig | None = None,
    basin_tol: float = 1.0,
) -> OptRunReport:
    """Basin-hopping from ``x0`` with one of three move subroutines.

    ``"classic"`` perturbs each coordinate by Uniform(-step_scale,
    step_scale), locally minimizes, and applies a Metropolis rule at the
    given temperature to the resulting value.  ``"monotonic"`` is the same
    with strictly-improving acceptance.  ``"mss"`` replaces the
    perturbation by a single monotonic skipping step from the sublevel set
    of the current local minimum.  The default ``step_scale`` of sqrt(3)
    gives the uniform displacement the same per-coordinate standard
    deviation as a standard Gaussian.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    if mode not in ("classic", "monotonic", "mss"):
        raise ValueError(f"unknown basin-hopping mode {mode!r}")
    if mode == "mss" and skipping is None:
        raise ValueError("mss mode requires a skipping config")

    t0 = time.perf_counter()
    counter = CallCounter(prob.f)
    counted = BoxProblem(f=counter, bounds=prob.bounds, known_optimum=prob.known_optimum)
    lo, hi = prob.bounds[:, 0], prob.bounds[:, 1]
    x = as_point(x0)

    if mode == "mss":
        batch = _CountedBatch(prob.f_batch, counter) if prob.f_batch is not None else None
        for _ in range(n_iters):
            y, _, _ = local_search(x, counted)
            rec = mss_step(y, counter, prob.bounds, skipping, rng, f_batch=batch)
            x = rec.next_state
        endpoint = x
        value = float(counter(endpoint))
    else:
        x, fx, _ = local_search(x, counted)
        for _ in range(n_iters):
            cand = np.clip(x + rng.uniform(-step_scale, step_scale, size=prob.dim), lo, hi)
            y, fy, _ = local_search(cand, counted)
            if mode == "monotonic":
                accept = fy < fx
            else:
                accept = fy <= fx or rng.uniform() < math.exp(-(fy - fx) / temperature)
            if accept:
                assert mode == "classic" or fy < fx
                x, fx = y, fy
        endpoint, value = x, fx
    return _finish_report(prob, endpoint, value, counter, t0, basin_tol)
