"""Instantaneous and large-system rate expressions and the design objective.

Public functions return bits/s/Hz.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .config import SystemConfig

LN2 = np.log(2.0)


@dataclass(frozen=True, eq=False)
class BeamformerPair:
    w_b: np.ndarray
    w_c: np.ndarray

    @property
    def power(self) -> float:
        return float(np.vdot(self.w_b, self.w_b).real + np.vdot(self.w_c, self.w_c).real)

    def is_feasible(self, p_tmax: float, rtol: float = 1e-6) -> bool:
        return self.power <= p_tmax * (1.0 + rtol)


@dataclass(frozen=True, eq=False)
class StarCoefficients:
    """Energy-splitting STAR-RIS configuration.

    Phase indices are 1-based: index ``q`` means angle ``q * 2*pi / Q``, so
    index ``Q`` is the angle 2*pi (== 0).
    """

    beta_r: np.ndarray
    phase_idx_r: np.ndarray
    phase_idx_t: np.ndarray
    q: int

    def __post_init__(self):
        object.__setattr__(self, "beta_r", np.asarray(self.beta_r, dtype=float))
        object.__setattr__(self, "phase_idx_r", np.asarray(self.phase_idx_r, dtype=np.int64))
        object.__setattr__(self, "phase_idx_t", np.asarray(self.phase_idx_t, dtype=np.int64))

    @property
    def m(self) -> int:
        return self.beta_r.shape[0]

    @property
    def beta_t(self) -> np.ndarray:
        return 1.0 - self.beta_r

    @property
    def phase_r(self) -> np.ndarray:
        return phase_angle(self.phase_idx_r, self.q)

    @property
    def phase_t(self) -> np.ndarray:
        return phase_angle(self.phase_idx_t, self.q)

    def diag_r(self) -> np.ndarray:
        return np.sqrt(self.beta_r) * np.exp(1j * self.phase_r)

    def diag_t(self) -> np.ndarray:
        return np.sqrt(self.beta_t) * np.exp(1j * self.phase_t)

    def is_feasible(self) -> bool:
        b = self.beta_r
        return bool(
            np.all((b > 0) & (b <= 1))
            and np.all(self.beta_t >= 0)
            and np.all((self.phase_idx_r >= 1) & (self.phase_idx_r <= self.q))
            and np.all((self.phase_idx_t >= 1) & (self.phase_idx_t <= self.q))
        )

    def same_as(self, other: "StarCoefficients") -> bool:
        return (
            self.q == other.q
            and np.array_equal(self.beta_r, other.beta_r)
            and np.array_equal(self.phase_idx_r, other.phase_idx_r)
            and np.array_equal(self.phase_idx_t, other.phase_idx_t)
        )


def phase_angle(idx, q: int) -> np.ndarray:
    # reduce mod Q before scaling so index Q gives exactly 0 rad
    return 2.0 * np.pi * (np.asarray(idx) % q) / q


def random_coefficients(m: int, q: int, gen: np.random.Generator) -> StarCoefficients:
    """Uniformly random feasible coefficients (amplitudes in (0, 1])."""
    return StarCoefficients(
        beta_r=1.0 - gen.random(m),
        phase_idx_r=gen.integers(1, q + 1, size=m),
        phase_idx_t=gen.integers(1, q + 1, size=m),
        q=q,
    )


@dataclass(frozen=True)
class RateReport:
    r_b: float
    r_c: float
    r_b_sec_asymptotic: float
    objective: float

    @property
    def r_b_sec_clamped(self) -> float:
        return max(0.0, self.r_b_sec_asymptotic)


def build_surface_matrices(coeffs: StarCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal reflection and transmission matrices ``(U_r, U_t)``."""
    return np.diag(coeffs.diag_r()), np.diag(coeffs.diag_t())


def _sinr_rate(signal: float, interference: float, noise: float) -> float:
    return float(np.log1p(signal / (interference + noise)) / LN2)


def effective_rows(ch: ChannelSet, coeffs: StarCoefficients) -> tuple[np.ndarray, np.ndarray]:
    """Cascaded rows ``h_rb^H U_r H_BR`` and ``h_rc^H U_t H_BR`` (length N_t each)."""
    g_b = (ch.h_rb.conj() * coeffs.diag_r()) @ ch.h_br
    g_c = (ch.h_rc.conj() * coeffs.diag_t()) @ ch.h_br
    return g_b, g_c


def rate_bob(ch: ChannelSet, coeffs: StarCoefficients, bf: BeamformerPair, sigma2_b: float) -> float:
    g_b, _ = effective_rows(ch, coeffs)
    return _sinr_rate(abs(g_b @ bf.w_b) ** 2, abs(g_b @ bf.w_c) ** 2, sigma2_b)


def rate_carol(ch: ChannelSet, coeffs: StarCoefficients, bf: BeamformerPair, sigma2_c: float) -> float:
    _, g_c = effective_rows(ch, coeffs)
    return _sinr_rate(abs(g_c @ bf.w_c) ** 2, abs(g_c @ bf.w_b) ** 2, sigma2_c)


def eaves_rate_instant(h_re_ss, l_re, b, ch, coeffs, bf, sigma2_e):
    """Eve's wiretap rate on Bob's stream for one (or many) channel draws.

    ``h_re_ss`` may be a single length-M vector or a (n, M) stack; ``b`` is
    0/1 (scalar or length n) selecting the transmission or reflection side.
    """
    h = np.sqrt(l_re) * np.asarray(h_re_ss)
    b = np.asarray(b)
    v_b_r = coeffs.diag_r() * (ch.h_br @ bf.w_b)
    v_c_r = coeffs.diag_r() * (ch.h_br @ bf.w_c)
    v_b_t = coeffs.diag_t() * (ch.h_br @ bf.w_b)
    v_c_t = coeffs.diag_t() * (ch.h_br @ bf.w_c)
    hc = h.conj()
    sig = np.where(b == 1, np.abs(hc @ v_b_r) ** 2, np.abs(hc @ v_b_t) ** 2)
    intf = np.where(b == 1, np.abs(hc @ v_c_r) ** 2, np.abs(hc @ v_c_t) ** 2)
    out = np.log1p(sig / (intf + sigma2_e)) / LN2
    return float(out) if out.ndim == 0 else out


def security_rate_instant(r_b: float, r_eb: float) -> float:
    return max(0.0, r_b - r_eb)


def eve_penalty(ch: ChannelSet, coeffs: StarCoefficients, bf: BeamformerPair, cfg: SystemConfig) -> float:
    """Large-system estimate of Eve's average wiretap rate (the subtracted term)."""
    hw_b = np.abs(ch.h_br @ bf.w_b) ** 2
    hw_c = np.abs(ch.h_br @ bf.w_c) ** 2
    br = coeffs.beta_r
    bt = coeffs.beta_t
    pen_r = np.log1p(ch.l_re * (br @ hw_b) / (ch.l_re * (br @ hw_c) + cfg.sigma2_e)) / LN2
    pen_t = np.log1p(ch.l_re * (bt @ hw_b) / (ch.l_re * (bt @ hw_c) + cfg.sigma2_e)) / LN2
    return float(cfg.p1 * pen_r + cfg.p0 * pen_t)


def avg_security_rate_asymptotic(ch, coeffs, bf, cfg: SystemConfig) -> float:
    """Bob's rate minus the large-system Eve penalty. Not clamped at zero."""
    return rate_bob(ch, coeffs, bf, cfg.sigma2_b) - eve_penalty(ch, coeffs, bf, cfg)


def weighted_objective(ch, coeffs, bf, cfg: SystemConfig) -> float:
    r_b = rate_bob(ch, coeffs, bf, cfg.sigma2_b)
    pen = eve_penalty(ch, coeffs, bf, cfg) if cfg.secrecy_aware else 0.0
    return cfg.omega1 * (r_b - pen) + cfg.omega2 * rate_carol(ch, coeffs, bf, cfg.sigma2_c)


def rate_report(ch, coeffs, bf, cfg: SystemConfig) -> RateReport:
    r_b = rate_bob(ch, coeffs, bf, cfg.sigma2_b)
    r_c = rate_carol(ch, coeffs, bf, cfg.sigma2_c)
    sec = r_b - eve_penalty(ch, coeffs, bf, cfg)
    return RateReport(r_b=r_b, r_c=r_c, r_b_sec_asymptotic=sec,
                      objective=weighted_objective(ch, coeffs, bf, cfg))


def objective_batch(ch: ChannelSet, bf: BeamformerPair, cfg: SystemConfig,
                    beta_r: np.ndarray, idx_r: np.ndarray, idx_t: np.ndarray) -> np.ndarray:
    """:func:`weighted_objective` for a (K, M) population of surface configurations."""
    q = cfg.q
    hw_b = ch.h_br @ bf.w_b
    hw_c = ch.h_br @ bf.w_c
    d_r = np.sqrt(beta_r) * np.exp(1j * phase_angle(idx_r, q))
    d_t = np.sqrt(1.0 - beta_r) * np.exp(1j * phase_angle(idx_t, q))
    hb = ch.h_rb.conj()
    hc = ch.h_rc.conj()
    r_b = np.log1p(np.abs(d_r @ (hb * hw_b)) ** 2
                   / (np.abs(d_r @ (hb * hw_c)) ** 2 + cfg.sigma2_b)) / LN2
    r_c = np.log1p(np.abs(d_t @ (hc * hw_c)) ** 2
                   / (np.abs(d_t @ (hc * hw_b)) ** 2 + cfg.sigma2_c)) / LN2
    obj = cfg.omega1 * r_b + cfg.omega2 * r_c
    if cfg.secrecy_aware:
        pb, pc = np.abs(hw_b) ** 2, np.abs(hw_c) ** 2
        beta_t = 1.0 - beta_r
        pen_r = np.log1p(ch.l_re * (beta_r @ pb) / (ch.l_re * (beta_r @ pc) + cfg.sigma2_e)) / LN2
        pen_t = np.log1p(ch.l_re * (beta_t @ pb) / (ch.l_re * (beta_t @ pc) + cfg.sigma2_e)) / LN2
        obj = obj - cfg.omega1 * (cfg.p1 * pen_r + cfg.p0 * pen_t)
    return obj
