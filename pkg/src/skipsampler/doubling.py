"""Bridge-accelerated search for the step at which a skipping chain re-enters
the support.

When the radial increments are exponential, the running total after ``k``
jumps is Gamma(k, rate) and can be sampled directly, and intermediate totals
conditional on later ones are Beta bridges.  Crossing a convex region of
zero density along a ray then reduces to finding the first partial sum past
an (unknown) threshold, which an exponential forward search over indices
1, 3, 7, ..., 2**k - 1 followed by a bridge-conditioned bisection locates in
O(log2 of the entry step) partial-sum samples instead of one sample per
jump.  The result has exactly the same law as iterating the jumps one at a
time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    HaltingCapExceeded,
    LogTarget,
    NonFiniteProposal,
    Point,
    RngStream,
    SkippingError,
    in_support,
)


@dataclass(frozen=True)
class ExponentialIncrements:
    """Exponential radial increment law with the given rate."""

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")

    def sample(self, rng: RngStream) -> float:
        return rng.exponential(1.0 / self.rate)


@dataclass(frozen=True)
class ConvexObstacle:
    """A convex set of zero target density, identified by a membership test.

    Convexity is the caller's assertion; it is what makes "first index past
    the obstacle" well defined along a ray, since the chord of a convex set
    along any line is an interval.
    """

    membership: Callable[[Point], bool]

    def contains(self, p: Point) -> bool:
        return bool(self.membership(p))


@dataclass
class DoublingStats:
    """Counts partial-sum samples so complexity claims can be checked."""

    partial_sum_samples: int = 0


def gamma_partial_sum(k: int, inc: ExponentialIncrements, rng: RngStream) -> float:
    """Sample the sum of ``k`` fresh exponential increments directly."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(rng.gamma(shape=k, scale=1.0 / inc.rate))


def bridge_partial_sum(
    k: int,
    total: float,
    inc: ExponentialIncrements,
    rng: RngStream,
    *,
    n: int | None = None,
) -> float:
    """Sample the ``k``-th partial sum given that the ``n``-th equals ``total``.

    ``n`` defaults to ``2 * k``.  For exponential increments the conditional
    fraction ``S_k / S_n`` is Beta(k, n - k), independent of the rate.
    """
    if n is None:
        n = 2 * k
    if not (1 <= k < n):
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if not total > 0:
        raise ValueError("conditioning total must be positive")
    return total * float(rng.beta(k, n - k))


def _first_beyond(
    is_beyond: Callable[[float], bool],
    inc: ExponentialIncrements,
    rng: RngStream,
    *,
    max_exponent: int = 60,
    stats: DoublingStats | None = None,
) -> tuple[int, float, dict[int, float]]:
    """Smallest index j >= 1 whose partial sum S_j satisfies ``is_beyond``.

    Returns (j, S_j, anchors) where anchors maps every sampled index to its
    partial sum (index 0 maps to 0.0).  Requires that ``is_beyond`` is
    monotone along the ray (true when the region being crossed is convex);
    a sampled contradiction of that ordering raises.
    """
    anchors: dict[int, float] = {0: 0.0}

    def draw_forward(j_prev: int, j_new: int) -> float:
        s = anchors[j_prev] + gamma_partial_sum(j_new - j_prev, inc, rng)
        if stats is not None:
            stats.partial_sum_samples += 1
        anchors[j_new] = s
        return s

    # Forward pass over indices 2**e - 1.
    lo, hi = 0, 1
    s_hi = draw_forward(0, 1)
    exponent = 1
    while not is_beyond(s_hi):
        if exponent >= max_exponent:
            raise HaltingCapExceeded(
                f"no support entry within 2**{max_exponent} skips; "
                "the region being crossed may be unbounded along this ray"
            )
        lo = hi
        exponent += 1
        hi = 2**exponent - 1
        s_hi = draw_forward(lo, hi)

    # Bisect (lo, hi]; lo is known not-beyond, hi known beyond.
    s_lo = anchors[lo]
    while hi - lo > 1:
        m = (lo + hi) // 2
        s_m = s_lo + (s_hi - s_lo) * float(rng.beta(m - lo, hi - m))
        if stats is not None:
            stats.partial_sum_samples += 1
        if not (s_lo <= s_m <= s_hi):
            raise SkippingError("bridge sample left its conditioning interval")
        anchors[m] = s_m
        if is_beyond(s_m):
            hi, s_hi = m, s_m
        else:
            lo, s_lo = m, s_m
    return hi, s_hi, anchors


def _sum_at(m: int, anchors: dict[int, float], rng: RngStream, stats: DoublingStats | None) -> float:
    """Partial sum at index ``m`` conditional on the sampled anchors."""
    if m in anchors:
        return anchors[m]
    lo = max(i for i in anchors if i < m)
    hi = min(i for i in anchors if i > m)
    s = anchors[lo] + (anchors[hi] - anchors[lo]) * float(rng.beta(m - lo, hi - m))
    if stats is not None:
        stats.partial_sum_samples += 1
    anchors[m] = s
    return s


def doubling_find_entry(
    x: Point,
    phi: Point,
    inc: ExponentialIncrements,
    t: LogTarget,
    rng: RngStream,
    *,
    max_exponent: int = 60,
    stats: DoublingStats | None = None,
) -> tuple[Point, int]:
    """Entry point and entry step of the skipping chain along ray ``phi``.

    Applicable when the stretch of zero density between ``x`` and the
    support is convex along the ray, so that once a partial sum lands in
    the support every later one does too.  The first increment is sampled
    as part of the search, so a chain whose very first jump lands in the
    support returns (that point, 1) with no bridge samples.
    """
    if abs(np.linalg.norm(phi) - 1.0) > 1e-12:
        raise ValueError("phi must be a unit vector")

    def entered(s: float) -> bool:
        return in_support(t, x + phi * s)

    j, s, _ = _first_beyond(entered, inc, rng, max_exponent=max_exponent, stats=stats)
    z = x + phi * s
    if not np.isfinite(z).all():
        raise NonFiniteProposal("skipping chain left floating-point range")
    return z, j


def traverse(
    x: Point,
    phi: Point,
    first_radius: float,
    t: LogTarget,
    inc: ExponentialIncrements,
    obstacles: tuple[ConvexObstacle, ...],
    k_max: float,
    rng: RngStream,
    *,
    max_exponent: int = 60,
    stats: DoublingStats | None = None,
) -> tuple[Point, int]:
    """Skipping-chain proposal along ``phi`` using doubling inside obstacles.

    Single increments are added while the chain sits in zero density outside
    every listed obstacle; inside an obstacle the exit is located with the
    bridge search.  ``k_max`` caps the number of jumps exactly like a halting
    index: if an accelerated exit would overshoot it, the chain state at
    ``k_max`` is bridge-sampled instead, so the returned (point, count) pair
    has the same law as single-stepping throughout.
    """
    s_total = first_radius
    k = 1
    z = x + phi * s_total
    while True:
        if in_support(t, z) or k >= k_max:
            return z, k
        hit = next((b for b in obstacles if b.contains(z)), None)
        if hit is None:
            s_total += inc.sample(rng)
            if stats is not None:
                stats.partial_sum_samples += 1
            k += 1
        else:
            def beyond(rel: float, _b=hit, _s=s_total) -> bool:
                return not _b.contains(x + phi * (_s + rel))

            j_rel, s_rel, anchors = _first_beyond(
                beyond, inc, rng, max_exponent=max_exponent, stats=stats
            )
            if k + j_rel > k_max:
                m_rel = int(k_max) - k
                s_rel = _sum_at(m_rel, anchors, rng, stats)
                k = int(k_max)
            else:
                k += j_rel
            s_total += s_rel
        z = x + phi * s_total
        if not np.isfinite(z).all():
            raise NonFiniteProposal("skipping chain left floating-point range")
