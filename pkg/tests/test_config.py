import json

import numpy as np
import pytest

from skipsampler import in_support
from skipsampler.config import (
    ConfigError,
    ExperimentConfig,
    build_halting,
    build_proposal,
    build_target,
)
from skipsampler.proposals import DeterministicHalting, GaussianProposal, InfiniteHalting


def base_config() -> dict:
    return {
        "target": {"kind": "two_interval_uniform"},
        "sampler": {
            "kind": "skipping",
            "proposal": {"kind": "gaussian", "scale": 0.5},
            "halting": {"kind": "infinite", "safety_cap": 1000},
        },
        "run": {"steps": 1000, "seed": 7},
    }


class TestValidation:
    def test_valid_config_passes(self):
        ExperimentConfig.from_dict(base_config())

    @pytest.mark.parametrize(
        "mutate, key",
        [
            (lambda c: c["target"].pop("kind"), "target.kind"),
            (lambda c: c["target"].update(kind="nonsense"), "target.kind"),
            (lambda c: c["sampler"].pop("proposal"), "sampler.proposal"),
            (lambda c: c["sampler"]["proposal"].update(kind="cauchy"), "sampler.proposal.kind"),
            (lambda c: c["sampler"]["proposal"].pop("scale"), "sampler.proposal"),
            (lambda c: c["sampler"]["halting"].update(kind="sometimes"), "sampler.halting.kind"),
            (lambda c: c["sampler"]["halting"].update(kind="deterministic"), "sampler.halting.k"),
            (lambda c: c["run"].update(steps=0), "run.steps"),
            (lambda c: c["run"].pop("seed"), "run.seed"),
            (lambda c: c["run"].update(burn_in=5000), "run.burn_in"),
            (lambda c: c.update(extra={}), "unknown"),
        ],
    )
    def test_errors_name_the_offending_key(self, mutate, key):
        cfg = base_config()
        mutate(cfg)
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            ExperimentConfig.from_dict(cfg)

    def test_scale_and_cov_are_exclusive(self):
        cfg = base_config()
        cfg["sampler"]["proposal"] = {"kind": "gaussian", "scale": 1.0, "cov": [[1.0]]}
        with pytest.raises(ConfigError, match="exactly one"):
            ExperimentConfig.from_dict(cfg)

    def test_non_spd_cov_rejected_up_front(self):
        cfg = base_config()
        cfg["sampler"]["proposal"] = {"kind": "gaussian", "cov": [[1.0, 2.0], [2.0, 1.0]]}
        with pytest.raises(ConfigError, match="sampler.proposal.cov"):
            ExperimentConfig.from_dict(cfg)

    def test_bad_json_file(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError, match="JSON"):
            ExperimentConfig.from_file(p)

    def test_geometric_p_range(self):
        cfg = base_config()
        cfg["sampler"]["halting"] = {"kind": "geometric", "p": 1.5}
        with pytest.raises(ConfigError, match="sampler.halting.p"):
            ExperimentConfig.from_dict(cfg)


class TestBuilders:
    def test_two_interval_target(self):
        bundle = build_target({"kind": "two_interval_uniform"})
        assert bundle.dim == 1
        assert in_support(bundle.log_target, bundle.default_initial)

    def test_interval_union_target(self):
        bundle = build_target({"kind": "interval_union", "intervals": [[-2.0, -1.0], [4.0, 5.0]]})
        assert in_support(bundle.log_target, np.array([-1.5]))
        assert not in_support(bundle.log_target, np.array([0.0]))

    def test_mixture_tail_initial_point_is_in_support(self):
        spec = {
            "kind": "mixture_tail", "mixture_seed": 1, "components": 20,
            "dim": 2, "spread": 10.0, "level_log": -30.0,
        }
        bundle = build_target(spec)
        assert in_support(bundle.log_target, bundle.default_initial)

    def test_boltzmann_eggholder(self):
        bundle = build_target({"kind": "boltzmann", "objective": "eggholder", "temperature": 1.0})
        assert bundle.dim == 2
        assert in_support(bundle.log_target, np.zeros(2))
        assert not in_support(bundle.log_target, np.array([600.0, 0.0]))

    def test_proposal_scale_shorthand(self):
        p = build_proposal({"kind": "gaussian", "scale": 0.5}, dim=3)
        assert isinstance(p, GaussianProposal)
        assert np.allclose(p.cov, 0.25 * np.eye(3))

    def test_proposal_cov_dim_mismatch(self):
        with pytest.raises(ConfigError, match="dimension"):
            build_proposal({"kind": "gaussian", "cov": [[1.0]]}, dim=2)

    def test_halting_builders(self):
        assert build_halting({"kind": "deterministic", "k": 5}) == DeterministicHalting(5)
        h = build_halting({"kind": "infinite", "safety_cap": 77})
        assert isinstance(h, InfiniteHalting) and h.safety_cap == 77 and h.on_cap == "reject"

    def test_round_trip_through_json(self):
        cfg = ExperimentConfig.from_dict(base_config())
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again.to_dict() == cfg.to_dict()
