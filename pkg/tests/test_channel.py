import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starpls import SystemConfig
from starpls.channel import (ChannelSet, RngStream, complex_gaussian, generate_channels, path_loss,
                             sample_eve_smallscale)


def test_path_loss_reference_values():
    assert path_loss(0.01, 1.0, 2.6) == pytest.approx(0.01)
    assert path_loss(1.0, 1.0, 2.6) == 1.0
    # log-domain evaluation as an independent route
    expected = np.exp(np.log(0.01) - 2.6 * np.log(400.0))
    assert path_loss(0.01, 400.0, 2.6) == pytest.approx(expected, rel=1e-12)
    assert path_loss(0.01, 400.0, 2.6) == pytest.approx(1.716e-9, rel=1e-3)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 1, 1)])
def test_path_loss_domain(args):
    with pytest.raises(ValueError):
        path_loss(*args)


def test_generate_shapes_and_determinism():
    cfg = SystemConfig(p_tmax=1.0, m=4, n_t=2)
    a = generate_channels(cfg, RngStream(7))
    b = generate_channels(cfg, RngStream(7))
    assert a.h_br.shape == (4, 2)
    for x, y in ((a.h_br, b.h_br), (a.h_rb, b.h_rb), (a.h_rc, b.h_rc)):
        assert x.tobytes() == y.tobytes()
    assert a.l_re == path_loss(cfg.rho, cfg.d_re, cfg.alpha)
    c = generate_channels(cfg, RngStream(7, 1))
    assert not np.array_equal(a.h_br, c.h_br)


def test_second_moment_per_entry():
    cfg = SystemConfig(p_tmax=1.0, m=4, n_t=2)
    gen = RngStream(7).generator()
    l_br = path_loss(cfg.rho, cfg.d_br, cfg.alpha)
    acc = np.zeros((4, 2))
    n = 100_000 // 8
    for _ in range(n):
        acc += np.abs(generate_channels(cfg, gen).h_br) ** 2
    assert np.allclose(acc.mean() / n / l_br, 1.0, rtol=0.02)


def test_equal_distances_give_equal_link_energy():
    cfg = SystemConfig(p_tmax=1.0, m=8, d_rb=90.0, d_rc=90.0)
    gen = RngStream(1).generator()
    chs = [generate_channels(cfg, gen) for _ in range(10_000)]
    e_b = np.mean([np.vdot(c.h_rb, c.h_rb).real for c in chs])
    e_c = np.mean([np.vdot(c.h_rc, c.h_rc).real for c in chs])
    assert e_b == pytest.approx(e_c, rel=0.05)
    # E|h_rb|^2 = M * l_rb
    assert e_b == pytest.approx(8 * path_loss(cfg.rho, 90.0, cfg.alpha), rel=0.05)


def test_eve_smallscale_moments():
    x = sample_eve_smallscale(1, RngStream(3), size=100_000)[:, 0]
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.02)
    # E|h|^4 = 2 for CN(0, 1). With 4096 draws the standard error is ~3.5%,
    # so the 5% band is a fixed-seed check; the 2^20-draw version is powered.
    y = sample_eve_smallscale(4096, RngStream(0))
    assert np.mean(np.abs(y) ** 4) == pytest.approx(2.0, rel=0.05)
    big = sample_eve_smallscale(1024, RngStream(1), size=1024)
    assert np.mean(np.abs(big) ** 4) == pytest.approx(2.0, rel=0.02)
    assert np.array_equal(sample_eve_smallscale(16, RngStream(5)), sample_eve_smallscale(16, RngStream(5)))
    with pytest.raises(ValueError):
        sample_eve_smallscale(0, RngStream(5))


def test_complex_gaussian_is_circular():
    z = complex_gaussian(np.random.default_rng(0), 200_000)
    assert abs(z.mean()) < 0.01
    assert np.var(z.real) == pytest.approx(0.5, rel=0.02)
    assert np.var(z.imag) == pytest.approx(0.5, rel=0.02)
    assert abs(np.mean(z * z)) < 0.01  # pseudo-covariance vanishes


def test_channelset_is_immutable_and_checked():
    cfg = SystemConfig(p_tmax=1.0, m=4, n_t=2)
    ch = generate_channels(cfg, RngStream(0))
    with pytest.raises(ValueError):
        ch.h_br[0, 0] = 1.0
    with pytest.raises(ValueError):
        ChannelSet(np.ones((4, 2), complex), np.ones(3, complex), np.ones(4, complex), 1.0)
    with pytest.raises(ValueError):
        ChannelSet(np.ones((4, 2), complex), np.ones(4, complex), np.ones(4, complex), 0.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), sid=st.integers(0, 2**32), key=st.integers(0, 1000))
def test_stream_is_pure_function_of_key(seed, sid, key):
    s = RngStream(seed, sid)
    assert s.generator(key).random() == RngStream(seed, sid).generator(key).random()
    assert s.child(key).generator().random() == s.child(key).generator().random()
    # child paths do not alias the flat key
    assert s.child(key).generator(0).random() != s.generator(key).random()
