import math

import numpy as np
import pytest

from skipsampler import (
    ConvexObstacle,
    DoublingStats,
    ExponentialIncrements,
    LogTarget,
    bridge_partial_sum,
    doubling_find_entry,
    gamma_partial_sum,
    ks_two_sample,
    make_stream,
)
from skipsampler.core import HaltingCapExceeded


def gap_target(length: float) -> LogTarget:
    return LogTarget(lambda x: 0.0 if not (0.0 < x[0] < length) else float("-inf"), 1)


def sequential_entries(n: int, length: float, seed: int, x0: float = -0.5):
    """Independent oracle: iterate exponential jumps one at a time."""
    rng = make_stream(seed)
    entries = np.empty(n)
    steps = np.empty(n)
    for i in range(n):
        s = x0
        k = 0
        while True:
            s += rng.exponential(1.0)
            k += 1
            if not (0.0 < s < length):
                break
        entries[i] = s
        steps[i] = k
    return steps, entries


class TestGammaPartialSum:
    def test_k_one_is_exponential(self):
        inc = ExponentialIncrements(2.0)
        rng = make_stream(0)
        draws = np.array([gamma_partial_sum(1, inc, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 0.5) < 0.01

    def test_k_ten_mean(self):
        inc = ExponentialIncrements(1.0)
        rng = make_stream(1)
        draws = np.array([gamma_partial_sum(10, inc, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 10.0) < 0.1

    def test_k_validation(self):
        with pytest.raises(ValueError):
            gamma_partial_sum(0, ExponentialIncrements(1.0), make_stream(0))


class TestBridgePartialSum:
    def test_conditional_mean_halves_the_total(self):
        inc = ExponentialIncrements(1.0)
        rng = make_stream(2)
        draws = np.array([bridge_partial_sum(1, 2.0, inc, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 1.0) < 0.02

    def test_bridge_stays_inside_total(self):
        inc = ExponentialIncrements(1.0)
        rng = make_stream(3)
        for _ in range(1000):
            total = rng.exponential(5.0) + 1e-9
            v = bridge_partial_sum(3, total, inc, rng, n=7)
            assert 0.0 < v < total

    def test_marginalization_identity(self):
        # sampling S_2 then bridging S_1 | S_2 must give an Exp(rate) marginal
        inc = ExponentialIncrements(1.3)
        rng = make_stream(4)
        bridged = np.array(
            [bridge_partial_sum(1, gamma_partial_sum(2, inc, rng), inc, rng) for _ in range(50_000)]
        )
        direct = make_stream(5).exponential(1.0 / 1.3, size=50_000)
        assert ks_two_sample(bridged, direct) > 0.01

    def test_validation(self):
        inc = ExponentialIncrements(1.0)
        with pytest.raises(ValueError):
            bridge_partial_sum(2, 1.0, inc, make_stream(0), n=2)
        with pytest.raises(ValueError):
            bridge_partial_sum(1, 0.0, inc, make_stream(0))


class TestDoublingFindEntry:
    def test_immediate_entry_costs_one_sample(self):
        # leftward ray exits (0, 10) instantly: entry index 1, one gamma draw
        inc = ExponentialIncrements(1.0)
        stats = DoublingStats()
        z, t_a = doubling_find_entry(
            np.array([-0.5]), np.array([-1.0]), inc, gap_target(10.0), make_stream(6), stats=stats
        )
        assert t_a == 1
        assert z[0] < -0.5
        assert stats.partial_sum_samples == 1

    def test_requires_unit_direction(self):
        inc = ExponentialIncrements(1.0)
        with pytest.raises(ValueError, match="unit"):
            doubling_find_entry(np.array([-0.5]), np.array([2.0]), inc, gap_target(10.0), make_stream(0))

    def test_exponent_cap_raises(self):
        inc = ExponentialIncrements(1.0)
        never = LogTarget(lambda x: float("-inf"), 1)
        with pytest.raises(HaltingCapExceeded):
            doubling_find_entry(
                np.array([0.0]), np.array([1.0]), inc, never, make_stream(7), max_exponent=10
            )

    def test_matches_sequential_oracle_in_law(self):
        inc = ExponentialIncrements(1.0)
        t = gap_target(10.0)
        rng = make_stream(8)
        n = 4000
        steps = np.empty(n)
        entries = np.empty(n)
        for i in range(n):
            z, t_a = doubling_find_entry(np.array([-0.5]), np.array([1.0]), inc, t, rng)
            steps[i], entries[i] = t_a, z[0]
        oracle_steps, oracle_entries = sequential_entries(n, 10.0, seed=9)
        assert ks_two_sample(steps, oracle_steps) > 0.01
        assert ks_two_sample(entries, oracle_entries) > 0.01

    def test_partial_sum_complexity(self):
        inc = ExponentialIncrements(1.0)
        t = gap_target(200.0)
        rng = make_stream(10)
        stats = DoublingStats()
        n = 2000
        steps = []
        for _ in range(n):
            _, t_a = doubling_find_entry(np.array([0.5]), np.array([1.0]), inc, t, rng, stats=stats)
            steps.append(t_a)
        mean_samples = stats.partial_sum_samples / n
        assert mean_samples <= 2.0 * math.log2(np.mean(steps)) + 4.0


class TestObstacleTraversal:
    def test_traverse_equals_sequential_law_with_cap(self):
        from skipsampler.doubling import traverse

        inc = ExponentialIncrements(1.0)
        t = gap_target(30.0)
        obstacle = ConvexObstacle(lambda p: 0.0 < p[0] < 30.0)
        rng = make_stream(11)
        n = 4000
        k_max = 20  # halting cap often binds: exercises the bridge-to-cap path
        ends = np.empty(n)
        counts = np.empty(n)
        for i in range(n):
            first = rng.exponential(1.0)
            z, k = traverse(
                np.array([0.5]), np.array([1.0]), first, t, inc, (obstacle,), k_max, rng
            )
            ends[i], counts[i] = z[0], k

        rng2 = make_stream(12)
        o_ends = np.empty(n)
        o_counts = np.empty(n)
        for i in range(n):
            s = 0.5 + rng2.exponential(1.0)
            k = 1
            while (0.0 < s < 30.0) and k < k_max:
                s += rng2.exponential(1.0)
                k += 1
            o_ends[i], o_counts[i] = s, k
        assert ks_two_sample(counts, o_counts) > 0.01
        assert ks_two_sample(ends, o_ends) > 0.01
