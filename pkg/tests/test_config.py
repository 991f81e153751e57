import json
import math

import pytest

from starpls.config import ConfigError, SystemConfig, config_from_dict, dbm_to_watt, load_config


def test_empty_config_requires_power(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{}")
    with pytest.raises(ConfigError, match="P_tmax required"):
        load_config(p)


def test_defaults_match_reference_setup():
    cfg = config_from_dict({"P_tmax_dBm": 30})
    assert cfg.rho == pytest.approx(10 ** (-20 / 10))
    assert (cfg.alpha, cfg.d_br, cfg.d_rb, cfg.d_rc) == (2.6, 400.0, 75.0, 100.0)
    assert cfg.sigma2_b == pytest.approx(1e-14)
    assert (cfg.ceo_omega, cfg.ceo_eta, cfg.ceo_chi) == (4.0, 0.1, 0.55)


def test_dbm_conversions():
    assert config_from_dict({"P_tmax_dBm": 30}).p_tmax == pytest.approx(1.0, rel=1e-15)
    cfg = config_from_dict({"P_tmax_dBm": 30, "sigma2_dBm": -110})
    for s in (cfg.sigma2_b, cfg.sigma2_c, cfg.sigma2_e):
        assert s == pytest.approx(1e-14, rel=1e-12)
    assert dbm_to_watt(0) == pytest.approx(1e-3)


def test_rho_db_alias():
    assert config_from_dict({"P_tmax": 1, "rho_dB": -30}).rho == pytest.approx(1e-3)


def test_parse_error_reports_position(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "P_tmax": 1,\n  oops\n}')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(p)


@pytest.mark.parametrize("data, msg", [
    ({"P_tmax": 1, "bogus": 1}, "unknown config key"),
    ({"P_tmax": 1, "p1": 1.5}, "p1"),
    ({"P_tmax": 1, "omega1": 0}, "omega1"),
    ({"P_tmax": -1}, "p_tmax"),
    ({"P_tmax": 1, "m": 2.5}, "integer"),
    ({"P_tmax": 1, "d_rb": 0}, "d_rb"),
    ({"P_tmax": 1, "secrecy_aware": 1}, "boolean"),
    ({"P_tmax": 1, "ceo_eta": 0.001, "m": 1}, "elite"),
    ({"preset": "huge", "P_tmax": 1}, "preset"),
])
def test_validation_errors(data, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_dict(data)


def test_presets():
    desk = config_from_dict({"preset": "desk"})
    assert (desk.m, desk.n_t, desk.lambda_bits, desk.q) == (16, 4, 2, 4)
    big = config_from_dict({"preset": "paper_scale"})
    assert (big.m, big.n_t) == (64, 9)


def test_derived_sizes():
    cfg = SystemConfig(p_tmax=1.0, m=16)
    assert cfg.n_candidates == 192  # 4 * 3 * 16
    assert cfg.n_elite == 19
    assert math.isclose(cfg.p0, 0.5)


def test_digest_is_stable_and_sensitive():
    a = SystemConfig(p_tmax=1.0)
    assert a.digest() == SystemConfig(p_tmax=1.0).digest()
    assert a.digest() != a.replace(m=8).digest()
    json.dumps(a.to_dict())
