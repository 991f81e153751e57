"""Independent numerical checks: Monte-Carlo averages and finite differences."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .channel import ChannelSet, RngStream, as_generator, complex_gaussian, generate_channels
from .config import SystemConfig
from .optimizer import OptResult, optimize
from .rates import BeamformerPair, StarCoefficients, eaves_rate_instant, eve_penalty, random_coefficients


_CHUNK = 2**21  # complex entries per Eve-channel block


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int

    @classmethod
    def from_samples(cls, x) -> "McEstimate":
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        return cls(float(x.mean()), float(x.std() / np.sqrt(n)), n)

    def agrees_with(self, value: float, n_se: float = 3.0, rel: float = 0.05) -> bool:
        return abs(self.mean - value) <= max(n_se * self.std_error, rel * abs(value))


def empirical_avg_eaves_rate(ch: ChannelSet, coeffs: StarCoefficients, bf: BeamformerPair,
                             cfg: SystemConfig, n: int, rng) -> McEstimate:
    """Monte-Carlo average of Eve's wiretap rate over her region and fading."""
    if n < 100:
        raise ValueError("need at least 100 samples")
    gen = as_generator(rng)
    b = (gen.random(n) < cfg.p1).astype(int)
    # chunked so large M does not materialize an n x M matrix; the stream is
    # consumed in the same order either way
    rates = np.concatenate([
        eaves_rate_instant(complex_gaussian(gen, (len(bs), ch.m)), ch.l_re, bs, ch, coeffs, bf, cfg.sigma2_e)
        for bs in np.array_split(b, max(1, -(-n * ch.m // _CHUNK)))
    ])
    return McEstimate.from_samples(rates)


def random_beamformers(n_t: int, p_tmax: float, gen: np.random.Generator) -> BeamformerPair:
    """Isotropic directions, power split evenly between the two users."""
    out = []
    for _ in range(2):
        w = complex_gaussian(gen, n_t)
        out.append(np.sqrt(p_tmax / 2) * w / np.linalg.norm(w))
    return BeamformerPair(*out)


def asymptotic_error_curve(cfg_template: SystemConfig, m_list: Sequence[int], n: int,
                           seeds: Sequence[int]) -> list[tuple[int, float]]:
    """Median relative gap between the Monte-Carlo and large-system Eve rates, per M.

    Each seed draws a channel, a random feasible surface and random
    precoders; Eve's averaged rate is estimated from ``n`` draws.
    """
    if list(m_list) != sorted(m_list):
        raise ValueError("m_list must be ascending")
    rows = []
    for m in m_list:
        cfg = cfg_template.replace(m=int(m))
        errs = []
        for seed in seeds:
            ch, coeffs, bf = random_instance(cfg, seed)
            est = empirical_avg_eaves_rate(ch, coeffs, bf, cfg, n, RngStream(seed, 3).generator(m))
            ref = eve_penalty(ch, coeffs, bf, cfg)
            errs.append(abs(est.mean - ref) / ref)
        rows.append((int(m), float(np.median(errs))))
    return rows


def random_instance(cfg: SystemConfig, seed: int):
    """Channel, random feasible coefficients and random precoders for one seed."""
    stream = RngStream(seed, 0)
    ch = generate_channels(cfg, stream)
    gen = RngStream(seed, 2).generator()
    coeffs = random_coefficients(cfg.m, cfg.q, gen)
    bf = random_beamformers(cfg.n_t, cfg.p_tmax, gen)
    return ch, coeffs, bf


class WiretapRow(NamedTuple):
    region: str  # "R" (reflection side, b = 1) or "T" (transmission side, b = 0)
    rate_without_security: float
    rate_with_security: float


def wiretap_suppression(ch: ChannelSet, cfg: SystemConfig, n_channels: int = 500, rng=0, *,
                        secure: OptResult | None = None,
                        reference: OptResult | None = None) -> list[WiretapRow]:
    """Eve's instantaneous rate under a secrecy-aware and a secrecy-unaware design.

    The same ``n_channels`` Eve draws are used for both designs in each region.
    When not supplied, ``secure`` is ``optimize(ch, cfg)`` and ``reference`` is
    the same optimizer with the Eve penalty removed from the objective.
    """
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng), 4)
    if secure is None:
        secure = optimize(ch, cfg.replace(secrecy_aware=True), stream.child(0))
    if reference is None:
        reference = optimize(ch, cfg.replace(secrecy_aware=False), stream.child(0))
    rows: list[WiretapRow] = []
    for region, b in (("R", 1), ("T", 0)):
        h = complex_gaussian(stream.child(1).generator(b), (n_channels, ch.m))
        ref = eaves_rate_instant(h, ch.l_re, b, ch, reference.coeffs, reference.bf, cfg.sigma2_e)
        sec = eaves_rate_instant(h, ch.l_re, b, ch, secure.coeffs, secure.bf, cfg.sigma2_e)
        rows.extend(WiretapRow(region, float(r), float(s)) for r, s in zip(ref, sec))
    return rows


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient of a real scalar function.

    A complex ``x`` is treated as the real vector ``[Re x, Im x]`` and the
    result has that stacked layout. ``h`` defaults to ``1e-6 * max(1, |x|)``.
    """
    x = np.asarray(x)
    is_complex = np.iscomplexobj(x)
    z = np.concatenate([x.real, x.imag]) if is_complex else x.astype(float)
    n = x.shape[0]
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(z)))

    def unpack(v):
        return v[:n] + 1j * v[n:] if is_complex else v

    grad = np.empty_like(z)
    for i in range(z.shape[0]):
        e = np.zeros_like(z)
        e[i] = h
        grad[i] = (f(unpack(z + e)) - f(unpack(z - e))) / (2 * h)
    return grad


def stationarity_residual(ch: ChannelSet, coeffs: StarCoefficients, aux, bf: BeamformerPair,
                          varrho: float, cfg: SystemConfig, perturb: float = 0.1, rng=0) -> float:
    """Finite-difference Lagrangian gradient at ``bf`` relative to the gradient at a perturbed point.

    Near zero when ``bf`` is a stationary point of the Lagrangian for the
    auxiliaries ``aux`` and multiplier ``varrho``.
    """
    from .active import lagrangian

    n = bf.w_b.shape[0]
    x = np.concatenate([bf.w_b, bf.w_c])

    def f(v):
        return lagrangian(ch, coeffs, aux, BeamformerPair(v[:n], v[n:]), varrho, cfg)

    d = complex_gaussian(as_generator(rng), x.shape[0])
    scale = max(float(np.linalg.norm(x)), np.sqrt(cfg.p_tmax))
    x_pert = x + perturb * scale * d / np.linalg.norm(d)
    g0 = np.linalg.norm(finite_diff_gradient(f, x))
    g1 = np.linalg.norm(finite_diff_gradient(f, x_pert))
    return float(g0 / g1)
