import numpy as np
import pytest
from conftest import pair

from starpls import SystemConfig
from starpls.channel import RngStream, complex_gaussian
from starpls.optimizer import optimize
from starpls.validation import (McEstimate, asymptotic_error_curve, empirical_avg_eaves_rate,
                                random_instance, wiretap_suppression)


def test_mc_estimate_definition():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    est = McEstimate.from_samples(x)
    assert est.mean == 2.5 and est.n_samples == 4
    assert est.std_error == pytest.approx(np.std(x) / 2)


def test_mc_estimator_unbiased_on_known_moment():
    # E|h|^2 = 1; the 3-SE interval should cover it for ~99.7% of seeds
    hits = 0
    for s in range(100):
        z = complex_gaussian(RngStream(s).generator(), 1000)
        hits += McEstimate.from_samples(np.abs(z) ** 2).agrees_with(1.0, rel=0.0)
    assert hits >= 95


def test_zero_signal_gives_zero_rate(small_instance):
    cfg, ch, c, bf = small_instance
    est = empirical_avg_eaves_rate(ch, c, pair(np.zeros(cfg.n_t), bf.w_c), cfg, 200, 0)
    assert est.mean == 0.0 and est.std_error == 0.0
    with pytest.raises(ValueError):
        empirical_avg_eaves_rate(ch, c, bf, cfg, 10, 0)


def test_degenerate_region_probability(small_instance):
    cfg, ch, c, bf = small_instance
    only_r = cfg.replace(p1=1.0)
    est = empirical_avg_eaves_rate(ch, c, bf, only_r, 500, RngStream(1).generator())
    # same draws, conditional estimate on the reflection side
    gen = RngStream(1).generator()
    gen.random(500)
    h = complex_gaussian(gen, (500, ch.m))
    from starpls.rates import eaves_rate_instant
    direct = eaves_rate_instant(h, ch.l_re, 1, ch, c, bf, cfg.sigma2_e)
    assert est.mean == pytest.approx(direct.mean(), rel=1e-13)


def test_error_curve_shape():
    rows = asymptotic_error_curve(SystemConfig(p_tmax=1.0), [8, 16], 200, range(3))
    assert [m for m, _ in rows] == [8, 16]
    assert all(np.isfinite(e) and e >= 0 for _, e in rows)
    with pytest.raises(ValueError):
        asymptotic_error_curve(SystemConfig(p_tmax=1.0), [16, 8], 200, range(3))


def test_wiretap_table():
    cfg = SystemConfig(p_tmax=1.0, m=8)
    ch, _, _ = random_instance(cfg, 0)
    sec = optimize(ch, cfg, 0)
    rows = wiretap_suppression(ch, cfg, n_channels=50, rng=0, secure=sec)
    assert len(rows) == 100
    assert {r.region for r in rows} == {"R", "T"}
    assert all(r.rate_with_security >= 0 and r.rate_without_security >= 0 for r in rows)
