import math

import numpy as np
import pytest

from skipsampler import (
    DeterministicHalting,
    DirectionalHalting,
    ExponentialIncrements,
    GaussianProposal,
    GeometricHalting,
    InfiniteHalting,
    RadialProposal,
    exponential_radius,
    ks_two_sample,
    make_stream,
    resolve_halting,
    sample_halting,
    sample_offset,
    sample_radial_increment,
)


class TestGaussianProposal:
    def test_rejects_non_spd(self):
        with pytest.raises(ValueError, match="positive-definite"):
            GaussianProposal(np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ValueError, match="symmetric"):
            GaussianProposal(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_offsets_deterministic_for_seed(self):
        p = GaussianProposal(np.eye(3))
        a = sample_offset(p, make_stream(5))
        b = sample_offset(p, make_stream(5))
        assert (a == b).all()

    def test_offset_mean_near_zero(self):
        p = GaussianProposal(np.diag([1.0, 4.0]))
        rng = make_stream(0)
        draws = np.array([sample_offset(p, rng) for _ in range(100_000)])
        # 4 sigma / sqrt(n) per coordinate
        tol = 4.0 * np.sqrt(np.array([1.0, 4.0]) / 100_000)
        assert (np.abs(draws.mean(axis=0)) < tol).all()

    def test_offset_covariance_matches(self):
        p = GaussianProposal(np.diag([1.0, 4.0]))
        rng = make_stream(1)
        draws = np.array([sample_offset(p, rng) for _ in range(100_000)])
        cov = np.cov(draws, rowvar=False)
        assert abs(cov[0, 0] - 1.0) < 0.05
        assert abs(cov[1, 1] - 4.0) < 0.2

    def test_offset_symmetry_ks_per_coordinate(self):
        p = GaussianProposal(np.array([[1.0, 0.6], [0.6, 2.0]]))
        rng = make_stream(2)
        draws = np.array([sample_offset(p, rng) for _ in range(100_000)])
        for i in range(2):
            assert ks_two_sample(draws[:, i], -draws[:, i]) > 0.01


class TestRadialIncrement:
    def test_unit_vector_required(self):
        p = GaussianProposal(np.eye(2))
        with pytest.raises(ValueError, match="unit"):
            sample_radial_increment(p, np.array([1.0, 1.0]), make_stream(0))

    def test_isotropic_cdf_at_one(self):
        # |offset| given any direction for N(0, I_2): P(R <= 1) = 1 - exp(-1/2)
        p = GaussianProposal(np.eye(2))
        rng = make_stream(3)
        phi = np.array([1.0, 0.0])
        draws = np.array([sample_radial_increment(p, phi, rng) for _ in range(100_000)])
        assert abs((draws <= 1.0).mean() - (1.0 - math.exp(-0.5))) < 0.01

    def test_anisotropic_direction_with_unit_quadratic_form(self):
        # phi=(1,0) on diag(1,4) gives phi' inv(cov) phi = 1: same CDF as isotropic
        p = GaussianProposal(np.diag([1.0, 4.0]))
        rng = make_stream(4)
        phi = np.array([1.0, 0.0])
        draws = np.array([sample_radial_increment(p, phi, rng) for _ in range(100_000)])
        assert abs((draws <= 1.0).mean() - (1.0 - math.exp(-0.5))) < 0.01

    def test_exponential_radius_mean(self):
        p = RadialProposal(exponential_radius(1.0), dim=2)
        rng = make_stream(5)
        draws = np.array([sample_radial_increment(p, np.array([0.0, 1.0]), rng) for _ in range(100_000)])
        assert abs(draws.mean() - 1.0) < 0.02

    def test_offset_norm_matches_conditional_radius_in_direction_cone(self):
        # draws of |offset| restricted to a narrow direction cone should match
        # the conditional radial sampler for that direction
        p = GaussianProposal(np.diag([1.0, 4.0]))
        rng = make_stream(6)
        draws = np.array([sample_offset(p, rng) for _ in range(200_000)])
        norms = np.linalg.norm(draws, axis=1)
        dirs = draws / norms[:, None]
        target_phi = np.array([1.0, 0.0])
        cone = dirs @ target_phi > 0.999
        conditional = np.array(
            [sample_radial_increment(p, target_phi, rng) for _ in range(10_000)]
        )
        assert cone.sum() > 500
        assert ks_two_sample(norms[cone], conditional) > 0.01


class TestHalting:
    def test_deterministic_draws_nothing(self):
        rng = make_stream(7)
        before = rng.bit_generator.state["state"]["state"]
        assert sample_halting(DeterministicHalting(150), None, rng) == 150
        assert rng.bit_generator.state["state"]["state"] == before

    def test_deterministic_one(self):
        assert sample_halting(DeterministicHalting(1), None, make_stream(0)) == 1

    def test_geometric_pmf_at_one(self):
        h = GeometricHalting(p=0.5, cap=10)
        rng = make_stream(8)
        draws = np.array([sample_halting(h, None, rng) for _ in range(100_000)])
        assert abs((draws == 1).mean() - 0.5) < 0.01
        assert draws.max() <= 10
        assert draws.min() >= 1

    def test_infinite_returns_inf_token(self):
        assert sample_halting(InfiniteHalting(safety_cap=100), None, make_stream(0)) == math.inf

    def test_infinite_requires_cap_and_valid_mode(self):
        with pytest.raises(ValueError):
            InfiniteHalting(safety_cap=0)
        with pytest.raises(ValueError):
            InfiniteHalting(safety_cap=10, on_cap="explode")

    def test_validation(self):
        with pytest.raises(ValueError):
            DeterministicHalting(0)
        with pytest.raises(ValueError):
            GeometricHalting(p=0.0)
        with pytest.raises(ValueError):
            GeometricHalting(p=1.5)


class TestDirectionalHalting:
    def test_resolution_and_antipodal_symmetry(self):
        # halting depends on |phi . e1| so antipodal directions match by construction
        def by_direction(phi):
            return DeterministicHalting(1 + int(10 * abs(phi[0])))

        h = DirectionalHalting(by_direction)
        rng = make_stream(9)
        for _ in range(200):
            v = rng.standard_normal(3)
            phi = v / np.linalg.norm(v)
            assert resolve_halting(h, phi) == resolve_halting(h, -phi)

    def test_phi_required(self):
        h = DirectionalHalting(lambda phi: DeterministicHalting(2))
        with pytest.raises(ValueError, match="direction"):
            resolve_halting(h, None)

    def test_sampled_distribution_matches_for_antipodes(self):
        def by_direction(phi):
            return GeometricHalting(p=0.2 + 0.6 * abs(float(phi[0])), cap=50)

        h = DirectionalHalting(by_direction)
        phi = np.array([0.6, 0.8])
        rng = make_stream(10)
        a = np.array([sample_halting(h, phi, rng) for _ in range(20_000)])
        b = np.array([sample_halting(h, -phi, rng) for _ in range(20_000)])
        assert ks_two_sample(a, b) > 0.01


class TestExponentialIncrements:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExponentialIncrements(0.0)

    def test_radial_proposal_accepts_increment_law(self):
        p = RadialProposal(ExponentialIncrements(2.0), dim=1)
        rng = make_stream(11)
        draws = np.array([p.sample_radius(rng) for _ in range(50_000)])
        assert abs(draws.mean() - 0.5) < 0.02
