"""Seeded Rayleigh channel realizations for the BS -> STAR-RIS -> user links."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


def path_loss(rho: float, d: float, alpha: float) -> float:
    """Large-scale power gain ``rho / d**alpha``."""
    if rho <= 0 or d <= 0 or alpha <= 0:
        raise ValueError(f"path_loss needs positive inputs, got rho={rho}, d={d}, alpha={alpha}")
    return rho / d**alpha


@dataclass(frozen=True)
class RngStream:
    """Named random substream.

    The generator is a pure function of ``(seed, stream_id)`` (plus any extra
    key words), so results do not depend on how work is scheduled.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def generator(self, *key: int) -> np.random.Generator:
        spawn_key = (int(self.stream_id), *self.path, *map(int, key))
        ss = np.random.SeedSequence(int(self.seed), spawn_key=spawn_key)
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + tuple(int(k) for k in key))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: real and imaginary parts each with variance 1/2."""
    shape = (int(shape),) if np.ndim(shape) == 0 else tuple(shape)
    z = gen.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One channel realization. Links already include sqrt(path loss)."""

    h_br: np.ndarray  # (M, N_t)
    h_rb: np.ndarray  # (M,)
    h_rc: np.ndarray  # (M,)
    l_re: float

    def __post_init__(self):
        for arr in (self.h_br, self.h_rb, self.h_rc):
            arr.setflags(write=False)
        m = self.h_br.shape[0]
        if self.h_br.ndim != 2 or self.h_rb.shape != (m,) or self.h_rc.shape != (m,):
            raise ValueError("channel dimensions are inconsistent")
        if not self.l_re > 0:
            raise ValueError("l_re must be positive")

    @property
    def m(self) -> int:
        return self.h_br.shape[0]

    @property
    def n_t(self) -> int:
        return self.h_br.shape[1]


def generate_channels(cfg: SystemConfig, rng: RngStream | np.random.Generator) -> ChannelSet:
    """Draw i.i.d. Rayleigh small-scale fading and apply per-link path loss."""
    gen = as_generator(rng)
    l_br = path_loss(cfg.rho, cfg.d_br, cfg.alpha)
    l_rb = path_loss(cfg.rho, cfg.d_rb, cfg.alpha)
    l_rc = path_loss(cfg.rho, cfg.d_rc, cfg.alpha)
    g_br = complex_gaussian(gen, (cfg.m, cfg.n_t))
    g_rb = complex_gaussian(gen, cfg.m)
    g_rc = complex_gaussian(gen, cfg.m)
    return ChannelSet(
        h_br=np.sqrt(l_br) * g_br,
        h_rb=np.sqrt(l_rb) * g_rb,
        h_rc=np.sqrt(l_rc) * g_rc,
        l_re=path_loss(cfg.rho, cfg.d_re, cfg.alpha),
    )


def sample_eve_smallscale(m: int, rng, size: int | None = None) -> np.ndarray:
    """Eve's small-scale fading vector (length ``m``); the caller applies sqrt(l_re).

    With ``size`` given, returns ``size`` independent vectors stacked as rows.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    gen = as_generator(rng)
    return complex_gaussian(gen, m if size is None else (size, m))
