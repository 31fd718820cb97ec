import numpy as np
import pytest

from gsde.config import RunConfig, apply_overrides, load_config_file, parse_config
from gsde.engine import Trajectory
from gsde.errors import ConfigurationError
from gsde.events import EventParseError, parse_event


def make_traj(terminal=1.0, max_norm=2.0, min_norm=0.5):
    d = 1
    return Trajectory(
        times=np.array([0.0, 1.0]),
        states=np.array([[1.0], [terminal]]),
        scenario_id=0,
        trial=0,
        seed_entropy=(0,),
        dt=1.0,
        stop_reason="completed",
        stop_step=1,
        n_steps_total=1,
        min_norm=min_norm,
        max_norm=max_norm,
        quadratic_variation=np.zeros(1),
    )


class TestEvents:
    def test_true_literal(self):
        ev = parse_event("true")
        assert ev(make_traj())
        assert ev.description == "true"

    def test_terminal_comparison(self):
        ev = parse_event("|x(T)| > 1")
        assert not ev(make_traj(terminal=0.5))
        assert ev(make_traj(terminal=1.5))

    def test_min_max_statistics(self):
        assert parse_event("min|x(t)| <= 0.5")(make_traj(min_norm=0.5))
        assert not parse_event("min|x(t)| <= 0.5")(make_traj(min_norm=0.6))
        assert parse_event("max|x(t)| >= 2")(make_traj(max_norm=2.0))
        assert parse_event("max_t|x(t)| >= 2")(make_traj(max_norm=2.0))

    def test_conjunction(self):
        ev = parse_event("|x(T)| > 1 and min|x(t)| <= 0.5")
        assert ev(make_traj(terminal=2.0, min_norm=0.4))
        assert not ev(make_traj(terminal=2.0, min_norm=0.9))

    def test_scientific_notation_bounds(self):
        ev = parse_event("|x(T)| <= 1e-2")
        assert ev(make_traj(terminal=0.005))

    def test_parse_errors_carry_positions(self):
        for text, pos in [("|x(T)| >", 0), ("", 0), ("|x(T)| 1", 7), ("banana", 0)]:
            with pytest.raises(EventParseError) as err:
                parse_event(text)
            assert err.value.position >= 0
        with pytest.raises(EventParseError):
            parse_event("|x(T)| > 1 and")
        with pytest.raises(EventParseError):
            parse_event("|x(T)| > 1 or |x(T)| < 2")


class TestConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigurationError) as err:
            parse_config({"simulation": {"T": 1.0, "warp": 9}})
        assert "warp" in str(err.value)
        with pytest.raises(ConfigurationError):
            parse_config({"turbo": True})

    def test_values_validated(self):
        with pytest.raises(ConfigurationError):
            parse_config({"simulation": {"dt": -1.0}})
        with pytest.raises(ConfigurationError):
            parse_config({"simulation": {"trials": 0}})
        with pytest.raises(ConfigurationError):
            parse_config({"scenarios": {"mode": "psychic"}})

    def test_round_trip_of_sections(self):
        cfg = parse_config(
            {
                "case": "example1",
                "params": {"k": 2.0},
                "uncertainty": {
                    "kind": "scalar",
                    "sigma_sq_lo": [3.5],
                    "sigma_sq_hi": [4.0],
                },
                "scenarios": {"mode": "constant", "grid_k": 5, "seed": 2},
                "simulation": {"T": 10.0, "dt": 1e-3, "trials": 7, "seed": 4},
                "verification": {"lambda": 1.5, "tolerance": 1e-9},
                "output": {"dir": "somewhere", "figures": False},
            }
        )
        assert cfg.case == "example1"
        assert cfg.case_params == {"k": 2.0}
        assert cfg.uncertainty.kind == "scalar"
        assert cfg.grid_k == 5 and cfg.scenario_seed == 2
        assert cfg.T == 10.0 and cfg.trials == 7 and cfg.seed == 4
        assert cfg.verify_lambda == 1.5
        assert str(cfg.out_dir) == "somewhere" and cfg.figures is False

    def test_overrides_and_validation(self):
        cfg = RunConfig()
        cfg = apply_overrides(cfg, trials=10, T=2.0)
        assert cfg.trials == 10 and cfg.T == 2.0
        with pytest.raises(ConfigurationError):
            apply_overrides(RunConfig(), trials=0)
        with pytest.raises(ConfigurationError):
            apply_overrides(RunConfig(), nonsense=1)

    def test_yaml_parse_error_mentions_location(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("simulation:\n  T: [unclosed\n")
        with pytest.raises(ConfigurationError) as err:
            load_config_file(bad)
        assert "line" in str(err.value)

    def test_out_dir_env_default(self, monkeypatch, tmp_path):
        monkeypatch.setenv("GSDE_OUT", str(tmp_path / "envout"))
        cfg = RunConfig()
        assert str(cfg.out_dir).endswith("envout")
