import json

import numpy as np
import numpy.testing as npt
import pytest
from conftest import INERTIA_ROWS

from suslov_lab.config import DEFAULT_CONFIG_PATH, build_config, load_config
from suslov_lab.errors import ConfigError
from suslov_lab.models.run_config import RunConfig


def write_json(path, data):
    path.write_text(json.dumps(data))
    return path


class TestLoadConfig:
    def test_packaged_defaults(self):
        assert DEFAULT_CONFIG_PATH.exists()
        values = load_config()
        assert values["inertia"] == INERTIA_ROWS
        assert values["omega0"] == [0.4, 0.5, 0.0]
        assert values["method"] == "midpoint"

    def test_file_values_fill_defaults(self, tmp_path):
        path = write_json(tmp_path / "cfg.json", {"eps": 0.5, "method": "rk4"})
        values = load_config(path)
        assert values["eps"] == 0.5
        assert values["method"] == "rk4"
        assert values["inertia"] == INERTIA_ROWS

    def test_missing_explicit_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{eps: 1")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_non_object(self, tmp_path):
        path = write_json(tmp_path / "list.json", [1, 2, 3])
        with pytest.raises(ConfigError, match="flat JSON object"):
            load_config(path)


class TestBuildConfig:
    def test_overrides_win(self, tmp_path):
        path = write_json(tmp_path / "cfg.json", {"eps": 0.5, "t_final": 5.0})
        config = build_config(path, eps=0.25, method="variational")
        assert config.eps == 0.25
        assert config.t_final == 5.0
        assert config.method == "variational"

    def test_none_overrides_are_ignored(self):
        config = build_config(method=None, eps=None)
        assert config.method == "midpoint"
        assert config.eps == 1e-3

    def test_invalid_override(self):
        with pytest.raises(ConfigError):
            build_config(method="euler")


class TestRunConfig:
    def test_defaults_and_helpers(self, run_config):
        config = run_config()
        assert config.step_count == 10
        npt.assert_array_equal(config.omega0_array, [0.4, 0.5, 0.0])
        npt.assert_array_equal(config.inertia_tensor.matrix, np.reshape(INERTIA_ROWS, (3, 3)))
        assert config.newton_config.tol == 1e-13
        assert config.newton_config.max_iter == 50

    def test_eps_grid(self, run_config):
        grid = run_config(eps_min=-3.0, eps_max=-1.0, eps_count=5).eps_grid()
        npt.assert_allclose(grid, [1e-3, 10**-2.5, 1e-2, 10**-1.5, 1e-1])

    def test_step_count_tolerates_rounding(self, run_config):
        assert run_config(eps=1e-3, t_final=10.0).step_count == 10_000
        assert run_config(eps=0.1, t_final=0.3).step_count == 3

    def test_with_overrides(self, run_config):
        config = run_config().with_overrides(method="rk4", eps=None)
        assert config.method == "rk4"
        assert config.eps == 1e-2

    def test_frozen(self, run_config):
        config = run_config()
        with pytest.raises(ValueError):
            config.eps = 1.0

    def test_unknown_keys_ignored(self, run_config):
        assert run_config(comment="reference body").method == "midpoint"

    @pytest.mark.parametrize(
        "overrides",
        [
            {"eps": 0.0},
            {"eps": 1.0, "t_final": 0.5},
            {"omega0": (0.4, 0.5, 1e-6)},
            {"method": "euler"},
            {"inertia": [1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]},
            {"inertia": [1.0, 0.0, 0.0]},
            {"eps_min": -1.0, "eps_max": -2.0},
            {"eps_count": 4},
            {"workers": 0},
        ],
    )
    def test_rejected(self, overrides, run_config):
        with pytest.raises(ConfigError):
            run_config(**overrides)

    def test_round_trips_through_dump(self, run_config):
        config = run_config(method="variational-consistent")
        assert RunConfig.from_mapping(config.model_dump(mode="json")) == config
