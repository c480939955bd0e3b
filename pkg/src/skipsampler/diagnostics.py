"""Estimators and statistical tests used by the property suites.

All estimators are pure functions of their inputs.  Error bars come from
batch means with sqrt(n) batches; significance tests delegate to scipy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .core import StepRecord


@dataclass(frozen=True)
class BatchMeansEstimate:
    mean: float
    std_error: float
    n_batches: int


def trace_values(trace, f: Callable[[np.ndarray], float] | None = None) -> np.ndarray:
    """Scalar series from a trace.

    ``trace`` may be a list of step records, a 1-D array of scalar states
    or an (n, d) array of states; ``f`` maps one state vector to a float
    and defaults to the first coordinate.
    """
    if isinstance(trace, (list, tuple)) and trace and isinstance(trace[0], StepRecord):
        states = np.stack([r.state for r in trace])
    else:
        states = np.asarray(trace, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    if f is None:
        return states[:, 0].astype(float)
    return np.array([float(f(s)) for s in states])


def _batch_means(values: np.ndarray) -> tuple[float, int]:
    n = len(values)
    n_batches = int(math.sqrt(n))
    batch = n // n_batches
    used = values[: n_batches * batch].reshape(n_batches, batch)
    means = used.mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches)), n_batches


def ergodic_average(trace, f=None) -> BatchMeansEstimate:
    """Sample mean of ``f`` over the trace with a batch-means error bar."""
    values = trace_values(trace, f)
    if len(values) < 100:
        raise ValueError("need at least 100 states for a batch-means estimate")
    std_error, n_batches = _batch_means(values)
    return BatchMeansEstimate(mean=float(values.mean()), std_error=std_error, n_batches=n_batches)


def lag1_autocovariance(trace, f=None) -> tuple[float, float]:
    """Lag-1 autocovariance of ``f`` along the trace, with batch-means error.

    Burn-in removal is the caller's job.  The estimate is the mean of the
    centered consecutive products, i.e. the sum over the n-1 pairs divided
    by n-1.
    """
    values = trace_values(trace, f)
    if len(values) < 1000:
        raise ValueError("need at least 1000 states for a lag-1 autocovariance")
    centered = values - values.mean()
    products = centered[:-1] * centered[1:]
    std_error, _ = _batch_means(products)
    return float(products.mean()), std_error


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> float:
    """Asymptotic two-sample Kolmogorov-Smirnov p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be nonempty")
    return float(sps.ks_2samp(a, b, method="asymp").pvalue)


def transition_balance_test(series: Sequence[float], bin_edges: Sequence[float]) -> float:
    """Chi-square test of flow symmetry N(i->j) vs N(j->i) over bins.

    ``series`` is a scalar stationary-regime trajectory; it is discretized
    by ``bin_edges`` (values outside the edges are clipped into the end
    bins).  Under reversibility each unordered bin pair's flow splits
    evenly, so sum (N_ij - N_ji)^2 / (N_ij + N_ji) over pairs with expected
    count at least 5 is asymptotically chi-square with one degree of
    freedom per pair.
    """
    series = np.asarray(series, dtype=float)
    edges = np.asarray(bin_edges, dtype=float)
    if len(edges) < 3:
        raise ValueError("need at least 2 bins")
    n_bins = len(edges) - 1
    idx = np.clip(np.digitize(series, edges) - 1, 0, n_bins - 1)
    counts = np.zeros((n_bins, n_bins))
    np.add.at(counts, (idx[:-1], idx[1:]), 1.0)

    stat = 0.0
    dof = 0
    for i in range(n_bins):
        for j in range(i + 1, n_bins):
            total = counts[i, j] + counts[j, i]
            if total / 2.0 >= 5.0:
                stat += (counts[i, j] - counts[j, i]) ** 2 / total
                dof += 1
    if dof == 0:
        raise ValueError(
            "all bin pairs have expected transition counts below 5; "
            "use coarser bins or a longer trace"
        )
    return float(sps.chi2.sf(stat, dof))
