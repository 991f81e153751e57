import numpy as np
import pytest

from starpls import SystemConfig
from starpls.channel import ChannelSet, RngStream, generate_channels
from starpls.rates import BeamformerPair, StarCoefficients
from starpls.validation import random_instance


@pytest.fixture
def desk_cfg():
    return SystemConfig(p_tmax=1.0)


@pytest.fixture
def small_instance():
    cfg = SystemConfig(p_tmax=1.0, m=8, n_t=4)
    ch, coeffs, bf = random_instance(cfg, 3)
    return cfg, ch, coeffs, bf


def scalar_channel(h=1.0, l_re=1.0):
    """M = N_t = 1 with every link equal to ``h``."""
    a = np.array([h], dtype=complex)
    return ChannelSet(h_br=a.reshape(1, 1).copy(), h_rb=a.copy(), h_rc=a.copy(), l_re=l_re)


def unit_surface(beta_r=1.0, q=4):
    return StarCoefficients(np.array([beta_r]), np.array([q]), np.array([q]), q=q)


def pair(w_b, w_c):
    return BeamformerPair(np.atleast_1d(np.asarray(w_b, dtype=complex)),
                          np.atleast_1d(np.asarray(w_c, dtype=complex)))


def channels(cfg, seed=0):
    return generate_channels(cfg, RngStream(seed, 0))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
