import json
from pathlib import Path

import numpy as np
import pytest

from svt.common import ConfigError
from svt.scenario import (
    SWEEP_PARAMETERS,
    default_scenario,
    load_scenario,
    parse_scenario,
    with_controller,
    with_parameter,
    with_seed,
    write_scenario,
)

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


class TestLoad:
    @pytest.mark.parametrize("name", ["ellip-1.0", "ellip-1.5", "ellip-2.0", "slem-1.0", "slem-1.5", "slem-2.0"])
    def test_shipped_presets_match_code_presets(self, name):
        cfg = load_scenario(str(SCENARIO_DIR / f"{name}.json"))
        kind, offset = name.split("-")
        assert cfg == default_scenario(kind, float(offset))

    def test_defaults_materialized(self):
        cfg = load_scenario(str(SCENARIO_DIR / "ellip-1.0.json"))
        assert cfg.duration == 45.0
        assert cfg.svt.offset == 1.0
        np.testing.assert_allclose(cfg.pursuer_init.pos, [3.5, 2.0, 1.5])
        assert cfg.n_steps == 4500

    def test_written_scenario_loads_identically(self, tmp_path):
        cfg = default_scenario("slem", 1.5, seed=9)
        path = tmp_path / "s.json"
        write_scenario(str(path), cfg)
        assert load_scenario(str(path)) == cfg

    def test_unknown_field_named(self):
        with pytest.raises(ConfigError, match="svt.vmax"):
            parse_scenario({"svt": {"vmax": 1.0}})

    def test_json_error_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "offset": 1.0,\n  "seed": \n}\n')
        with pytest.raises(ConfigError, match="line 4"):
            load_scenario(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(str(tmp_path / "nope.json"))

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2]))
        with pytest.raises(ConfigError):
            load_scenario(str(path))


class TestValidation:
    def test_duration_shorter_than_trajectory(self):
        with pytest.raises(ConfigError, match="duration"):
            parse_scenario({"trajectory": {"duration": 10.0}, "duration": 5.0})

    def test_longer_duration_allowed(self):
        assert parse_scenario({"trajectory": {"duration": 10.0}, "duration": 12.0}).n_steps == 1200

    def test_initial_vx_over_cap(self):
        with pytest.raises(ConfigError, match="v_max"):
            parse_scenario({"pursuer_init": {"pos": [3.5, 2.0, 1.5], "vel": [1.5, 0, 0]}})

    def test_target_must_start_visible(self):
        with pytest.raises(ConfigError, match="see the target"):
            parse_scenario({"pursuer_init": {"pos": [5.0, 2.0, 1.5]}})

    def test_trajectory_outside_workspace(self):
        with pytest.raises(ConfigError, match="workspace"):
            parse_scenario({"trajectory": {"semi_axes": [3.0, 0.75]}})

    def test_dropout_one_rejected(self):
        with pytest.raises(ConfigError, match="noise.dropout_prob"):
            parse_scenario({"noise": {"dropout_prob": 1.0}})

    def test_nan_rejected(self):
        with pytest.raises(ConfigError):
            parse_scenario({"offset": float("nan")})

    def test_underdamped_gains_warn(self, capsys):
        parse_scenario({"svt": {"kp": 10.0, "kd": 1.0}})
        assert "[WARN]" in capsys.readouterr().err


class TestOverrides:
    def test_unknown_parameter(self):
        with pytest.raises(ConfigError):
            with_parameter(default_scenario(), "gain", 1.0)

    @pytest.mark.parametrize("param", ["v_max", "t_R", "d_max"])
    def test_controller_parameters(self, param):
        cfg = with_parameter(default_scenario(), param, 2.0)
        assert getattr(cfg.svt, param) == 2.0
        assert cfg.name == f"ellip-1.0-{param}=2"

    def test_offset_moves_start(self):
        cfg = with_parameter(default_scenario(), "offset", 1.5)
        assert cfg.offset == cfg.svt.offset == 1.5
        np.testing.assert_allclose(cfg.pursuer_init.pos, [3.0, 2.0, 1.5])

    def test_seed(self):
        assert with_parameter(default_scenario(), "seed", 7.0).seed == 7
        with pytest.raises(ConfigError):
            with_parameter(default_scenario(), "seed", 1.5)

    def test_seed_wraps(self):
        assert with_seed(default_scenario(), 2 ** 64 + 3).seed == 3

    def test_controller(self):
        assert with_controller(default_scenario(), "baseline").controller == "baseline"

    def test_all_sweep_parameters_known(self):
        assert set(SWEEP_PARAMETERS) == {"v_max", "t_R", "d_max", "offset", "seed"}

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            default_scenario("circle")
