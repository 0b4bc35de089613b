import numpy as np
import pytest

from vibron2d.config import bundled_configs, load_config, parse_config, parse_grid
from vibron2d.errors import ConfigError
from vibron2d.spectra import HamiltonianParams, ModelParams

BASE = "molecule = custom\nhamiltonian = four_body\nN = 10\nP11_cm1 = 1.0\n"


def test_parse_grid():
    g = parse_grid("-1:1:0.01")
    assert g.size == 201 and g[0] == -1.0 and g[-1] == 1.0 and g[100] == pytest.approx(0.0, abs=1e-15)
    assert parse_grid("0:0:0.1").tolist() == [0.0]
    for bad in ["0:1", "0:1:0.3", "1:0:0.1", "0:1:-0.1", "a:b:c"]:
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_parse_minimal_and_defaults():
    cfg = parse_config(BASE)
    assert isinstance(cfg.params, HamiltonianParams) and cfg.params.get("P11") == 1.0
    assert cfg.l_list == [0] and cfg.lambda_grid.size == 201
    assert cfg.critical_tol == 2e-3 and cfg.n_states == 8


def test_parse_model():
    cfg = parse_config("molecule = model\nhamiltonian = model\nN = 20\nxi = 0.6\nxi_grid = 0:1:0.25\nl_list = 0,1\n")
    assert isinstance(cfg.params, ModelParams) and cfg.params.xi == 0.6
    np.testing.assert_allclose(cfg.xi_grid, [0, 0.25, 0.5, 0.75, 1.0])


@pytest.mark.parametrize(
    "extra,msg",
    [
        ("bogus = 1\n", "unknown key"),
        ("N = 11\n", "duplicate"),
        ("P11_cm1 x\n", "key = value"),
        ("l_list = 0,a\n", "integers"),
        ("l_list = 11\n", "exceeds"),
        ("lambda_grid = -2:1:0.5\n", "inside"),
        ("xi = 0.5\n", "xi applies"),
        ("P23_cm1 = inf\n", "finite"),
        ("fit_active = P11,P99\n", "fit_active"),
    ],
)
def test_config_errors(extra, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(BASE + extra)


def test_unknown_molecule_and_missing_keys():
    with pytest.raises(ConfigError, match="unknown molecule"):
        parse_config(BASE.replace("custom", "H2O"))
    with pytest.raises(ConfigError, match="missing"):
        parse_config("molecule = custom\nhamiltonian = four_body\n")
    with pytest.raises(ConfigError, match="needs xi"):
        parse_config("molecule = model\nhamiltonian = model\nN = 20\n")
    with pytest.raises(ConfigError):
        load_config("no_such_molecule")


def test_bundled_configs_load():
    names = bundled_configs()
    assert {"ch3nco", "clcno", "occco", "hnc", "si2c", "ncncs", "model"} <= set(names)
    for key in names:
        cfg = load_config(key)
        if cfg.data is not None:
            assert cfg.data.is_file()
    assert load_config("Si2C").l_list == [0, 1, 2, 3]
    assert load_config("clcno").params.get("P33") == 1.8e-5
