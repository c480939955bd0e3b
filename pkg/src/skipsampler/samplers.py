"""Transition steps and the chain runner.

``skip_step`` implements the full skipping transition: draw an offset, and
if it lands in zero density keep projecting it along the same direction
with fresh radial increments until the support is re-entered or the halting
index runs out, then Metropolis-accept the result.  With a deterministic
halting index of one it reproduces the plain random-walk step draw for
draw.  ``mss_step`` is the monotonic variant used for optimization: the
support at each step is the strict sublevel set of the current objective
value intersected with the search box, so accepted moves strictly decrease
the objective.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import doubling as _dbl
from .core import (
    NEG_INF,
    HaltingCapExceeded,
    LogTarget,
    NonFiniteProposal,
    Point,
    RngStream,
    StepRecord,
    as_point,
    log_acceptance_values,
)
from .doubling import ConvexObstacle, ExponentialIncrements
from .proposals import (
    DirectionalDensity,
    GaussianProposal,
    HaltingIndex,
    InfiniteHalting,
    RadialProposal,
    UnderlyingProposal,
    resolve_halting,
    sample_halting,
    sample_offset,
    sample_radial_increment,
)

StepFn = Callable[[Point, RngStream], StepRecord]


@dataclass(frozen=True)
class SkippingConfig:
    """Everything a skipping step needs besides the target.

    ``use_doubling`` delegates traversal to the bridge-accelerated search
    when eligible (radially symmetric proposal with exponential radius, no
    equal-increment mode, and a non-empty ``obstacles`` list); otherwise it
    is ignored.  ``angular`` switches the acceptance ratio to the corrected
    form for location-dependent direction densities.
    """

    proposal: UnderlyingProposal
    halting: HaltingIndex
    use_doubling: bool = False
    angular: DirectionalDensity | None = None
    obstacles: tuple[ConvexObstacle, ...] = ()


@dataclass
class ChainResult:
    """A finished run: the step records plus the two headline rates.

    ``skip_fraction`` is the fraction of all steps whose accepted proposal
    used at least one skip (skip_count >= 2), i.e. the share of moves that
    crossed zero density.
    """

    trace: list[StepRecord]
    acceptance_rate: float
    skip_fraction: float

    @property
    def n_steps(self) -> int:
        return len(self.trace)

    def states(self) -> np.ndarray:
        """Chain states as an (n_steps, d) array (state before each step)."""
        return np.stack([r.state for r in self.trace])

    def final_state(self) -> Point:
        return self.trace[-1].next_state


def _accept(log_alpha: float, rng: RngStream) -> bool:
    u = rng.uniform()
    while u == 0.0:  # log of 0 would auto-accept; redraw the measure-zero case
        u = rng.uniform()
    return math.log(u) <= log_alpha


def _doubling_eligible(cfg: SkippingConfig) -> bool:
    return (
        cfg.use_doubling
        and len(cfg.obstacles) > 0
        and isinstance(cfg.proposal, RadialProposal)
        and isinstance(cfg.proposal.radius, ExponentialIncrements)
        and not cfg.proposal.equal_increments
    )


def _block_radii(p: UnderlyingProposal, phi: Point, r1: float, n: int, rng: RngStream) -> np.ndarray:
    """Draw ``n`` radial increments at once (same draws, fewer round trips)."""
    if p.equal_increments:
        return np.full(n, r1)
    if isinstance(p, GaussianProposal):
        c = float(phi @ p._prec @ phi)
        return np.sqrt(rng.chisquare(p.dim, size=n) / c)
    if isinstance(p.radius, ExponentialIncrements):
        return rng.exponential(1.0 / p.radius.rate, size=n)
    return np.array([p.sample_radius(rng) for _ in range(n)])


def _skipping_proposal_full(
    x: Point, t: LogTarget, cfg: SkippingConfig, rng: RngStream
) -> tuple[Point, int, float, Point]:
    """Build one skipping proposal; returns (z, skip_count, log pi(z), phi)."""
    offset = sample_offset(cfg.proposal, rng)
    r1 = float(np.linalg.norm(offset))
    phi = offset / r1
    halting = resolve_halting(cfg.halting, phi)
    k_draw = sample_halting(halting, None, rng)
    if isinstance(halting, InfiniteHalting):
        k_max: float = halting.safety_cap
        strict = halting.on_cap == "error"
    else:
        k_max = k_draw
        strict = False

    if _doubling_eligible(cfg):
        z, k = _dbl.traverse(x, phi, r1, t, cfg.proposal.radius, cfg.obstacles, k_max, rng)
        lz = t.eval(z)
    elif t.log_density_batch is not None:
        z = x + offset
        k = 1
        lz = t.eval(z)
        arc = r1
        block = 4
        while lz == NEG_INF and k < k_max:
            n = int(min(block, k_max - k))
            sums = arc + np.cumsum(_block_radii(cfg.proposal, phi, r1, n, rng))
            candidates = x[None, :] + sums[:, None] * phi[None, :]
            if not np.isfinite(candidates).all():
                raise NonFiniteProposal("skipping chain left floating-point range")
            values = t.eval_batch(candidates)
            hits = np.nonzero(values > NEG_INF)[0]
            if len(hits):
                j = int(hits[0])
                z, lz, k = candidates[j], float(values[j]), k + j + 1
                break
            z, lz, k, arc = candidates[-1], float(values[-1]), k + n, float(sums[-1])
            block = min(block * 2, 256)
    else:
        z = x + offset
        k = 1
        lz = t.eval(z)
        while lz == NEG_INF and k < k_max:
            if cfg.proposal.equal_increments:
                r = r1
            else:
                r = sample_radial_increment(cfg.proposal, phi, rng)
            z = z + phi * r
            k += 1
            if not np.isfinite(z).all():
                raise NonFiniteProposal("skipping chain left floating-point range")
            lz = t.eval(z)
    if strict and lz == NEG_INF and k >= k_max:
        raise HaltingCapExceeded(
            f"skipping chain hit the safety cap ({halting.safety_cap}) without entering "
            "the support; unbounded halting is only valid when the zero-density region "
            "being crossed is bounded"
        )
    return z, k, lz, phi


def skipping_proposal(
    x: Point, t: LogTarget, cfg: SkippingConfig, rng: RngStream
) -> tuple[Point, int]:
    """The skipping proposal from ``x``: the chain state at entry-or-halt.

    Returns the proposal point and the number of skipping-chain steps taken
    (1 when the initial offset already lands in the support).
    """
    z, k, _, _ = _skipping_proposal_full(x, t, cfg, rng)
    return z, k


def angular_log_acceptance(
    t: LogTarget, x: Point, z: Point, phi: Point, qphi: DirectionalDensity
) -> float:
    """Acceptance ratio corrected by the angular densities of the direction.

    With a location-dependent direction density the ratio picks up the
    factor q_phi(z, -phi) / q_phi(x, phi); a uniform direction density
    cancels and recovers the plain ratio.
    """
    lx = t.eval(x)
    if lx == NEG_INF:
        return 0.0
    return min(0.0, (t.eval(z) + qphi.log_at(z, -phi)) - (lx + qphi.log_at(x, phi)))


def skip_step(x: Point, t: LogTarget, cfg: SkippingConfig, rng: RngStream) -> StepRecord:
    """One full skipping-sampler transition from ``x``."""
    lx = t.eval(x)
    z, k, lz, phi = _skipping_proposal_full(x, t, cfg, rng)
    if cfg.angular is None:
        log_alpha = log_acceptance_values(lx, lz)
    elif lx == NEG_INF:
        log_alpha = 0.0
    else:
        log_alpha = min(0.0, (lz + cfg.angular.log_at(z, -phi)) - (lx + cfg.angular.log_at(x, phi)))
    accepted = _accept(log_alpha, rng)
    return StepRecord(state=x, proposal=z, skip_count=k, accepted=accepted, log_target_at_state=lx)


def rwm_step(x: Point, t: LogTarget, p: UnderlyingProposal, rng: RngStream) -> StepRecord:
    """One random-walk Metropolis transition (the skipping-free baseline)."""
    lx = t.eval(x)
    y = x + sample_offset(p, rng)
    log_alpha = log_acceptance_values(lx, t.eval(y))
    accepted = _accept(log_alpha, rng)
    return StepRecord(state=x, proposal=y, skip_count=1, accepted=accepted, log_target_at_state=lx)


def _in_box(x: Point, bounds: np.ndarray) -> bool:
    return bool((x >= bounds[:, 0]).all() and (x <= bounds[:, 1]).all())


def _batch_ray_proposal(
    x: Point,
    threshold: float,
    f_batch: Callable[[np.ndarray], np.ndarray],
    bounds: np.ndarray,
    cfg: SkippingConfig,
    rng: RngStream,
) -> tuple[Point, int, bool]:
    """Vectorized skipping proposal against the sublevel-set target.

    Draws all radial increments of the ray in one block and evaluates the
    membership test on the whole ray at once, which is what makes the
    optimization tables affordable.  The proposal law is identical to the
    sequential loop (the increments are i.i.d. and consumed in order); only
    the stream's draw layout differs, since a full block is drawn even when
    the chain enters early.
    """
    offset = sample_offset(cfg.proposal, rng)
    r1 = float(np.linalg.norm(offset))
    phi = offset / r1
    halting = resolve_halting(cfg.halting, phi)
    k_draw = sample_halting(halting, None, rng)
    k_max = int(halting.safety_cap if isinstance(halting, InfiniteHalting) else k_draw)

    def entered(points: np.ndarray) -> np.ndarray:
        ok = ((points >= bounds[:, 0]) & (points <= bounds[:, 1])).all(axis=1)
        if ok.any():
            ok[ok] = f_batch(points[ok]) < threshold
        return ok

    y = x + offset
    if entered(y[None, :])[0]:
        return y, 1, True
    if k_max == 1:
        return y, 1, False

    if cfg.proposal.equal_increments:
        radii = np.full(k_max - 1, r1)
    elif isinstance(cfg.proposal, GaussianProposal):
        c = float(phi @ cfg.proposal._prec @ phi)
        radii = np.sqrt(rng.chisquare(cfg.proposal.dim, size=k_max - 1) / c)
    else:
        radii = np.array([cfg.proposal.sample_radius(rng) for _ in range(k_max - 1)])
    sums = r1 + np.cumsum(radii)
    candidates = x[None, :] + sums[:, None] * phi[None, :]
    if not np.isfinite(candidates).all():
        raise NonFiniteProposal("skipping chain left floating-point range")
    hits = np.nonzero(entered(candidates))[0]
    if len(hits):
        j = int(hits[0])
        return candidates[j], j + 2, True
    return candidates[-1], k_max, False


def mss_step(
    x: Point,
    f: Callable[[Point], float],
    bounds: np.ndarray,
    cfg: SkippingConfig,
    rng: RngStream,
    *,
    f_batch: Callable[[np.ndarray], np.ndarray] | None = None,
) -> StepRecord:
    """One monotonic skipping transition for minimizing ``f`` over a box.

    From a feasible point the step targets the uniform density on
    ``{z in box : f(z) < f(x)}`` and accepts exactly when the proposal lands
    there, so accepted moves strictly decrease the objective.  From an
    infeasible point (outside the box, or with infinite objective) the
    target is the feasible region itself and every halted proposal is
    accepted, which drives the chain toward feasibility with maximal skips.
    The level-set target gives the current point itself zero density, so
    ``log_target_at_state`` is always ``-inf`` here.

    ``f_batch`` (vectorized objective over an (n, d) array) switches the
    ray evaluation to the block form; the step's law is unchanged.
    """
    bounds = np.asarray(bounds, dtype=float)
    fx = float(f(x))
    feasible = _in_box(x, bounds) and fx < math.inf
    threshold = fx if feasible else math.inf

    if f_batch is not None:
        z, k, entered = _batch_ray_proposal(x, threshold, f_batch, bounds, cfg, rng)
        accepted = True if not feasible else entered
        return StepRecord(state=x, proposal=z, skip_count=k, accepted=accepted,
                          log_target_at_state=NEG_INF)

    def logdens(z: Point, _thr=threshold) -> float:
        if not _in_box(z, bounds):
            return NEG_INF
        return 0.0 if float(f(z)) < _thr else NEG_INF

    target = LogTarget(log_density=logdens, dim=len(x))
    z, k, lz, _ = _skipping_proposal_full(x, target, cfg, rng)
    accepted = True if not feasible else lz > NEG_INF
    return StepRecord(state=x, proposal=z, skip_count=k, accepted=accepted, log_target_at_state=NEG_INF)


def run_chain(x0: Point, step_fn: StepFn, n_steps: int, rng: RngStream) -> ChainResult:
    """Iterate a step function, collecting records and the summary rates."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    x = as_point(x0)
    trace: list[StepRecord] = []
    n_accepted = 0
    n_skip_moves = 0
    for _ in range(n_steps):
        rec = step_fn(x, rng)
        trace.append(rec)
        if rec.accepted:
            n_accepted += 1
            if rec.skip_count >= 2:
                n_skip_moves += 1
            x = rec.proposal
    return ChainResult(
        trace=trace,
        acceptance_rate=n_accepted / n_steps,
        skip_fraction=n_skip_moves / n_steps,
    )


def _skip_step_fn(t: LogTarget, cfg: SkippingConfig, x: Point, rng: RngStream) -> StepRecord:
    return skip_step(x, t, cfg, rng)


def _rwm_step_fn(t: LogTarget, p: UnderlyingProposal, x: Point, rng: RngStream) -> StepRecord:
    return rwm_step(x, t, p, rng)


def _mss_step_fn(f, bounds, cfg: SkippingConfig, x: Point, rng: RngStream) -> StepRecord:
    return mss_step(x, f, bounds, cfg, rng)


def make_skip_step(t: LogTarget, cfg: SkippingConfig) -> StepFn:
    """Picklable step function for :func:`run_chain`."""
    return partial(_skip_step_fn, t, cfg)


def make_rwm_step(t: LogTarget, p: UnderlyingProposal) -> StepFn:
    return partial(_rwm_step_fn, t, p)


def make_mss_step(f, bounds, cfg: SkippingConfig) -> StepFn:
    return partial(_mss_step_fn, f, np.asarray(bounds, dtype=float), cfg)
