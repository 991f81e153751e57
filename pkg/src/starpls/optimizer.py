"""Alternating active/passive optimization and the comparison baselines."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .active import solve_active
from .ceo import solve_passive
from .channel import ChannelSet, RngStream
from .config import SystemConfig
from .rates import (BeamformerPair, RateReport, StarCoefficients, effective_rows,
                    random_coefficients, rate_report, weighted_objective)

log = logging.getLogger(__name__)

SCHEMES = ("proposed", "zf", "conventional_ris")
# amplitude kept off the boundary so both sides stay in (0, 1]
CONVENTIONAL_DELTA = 1e-6


@dataclass(eq=False)
class OptResult:
    bf: BeamformerPair
    coeffs: StarCoefficients
    trajectory: list[float]
    rates: RateReport
    outer_iterations: int
    converged: bool
    scheme: str = "proposed"
    passive_trajectories: list[list[float]] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.rates.objective


def matched_beamformers(ch: ChannelSet, coeffs: StarCoefficients, p_tmax: float) -> BeamformerPair:
    """Equal-power split along the cascaded matched directions."""
    g_b, g_c = effective_rows(ch, coeffs)
    out = []
    for g in (g_b, g_c):
        d = g.conj()
        n = np.linalg.norm(d)
        if n == 0:
            d = np.ones_like(d)
            n = np.linalg.norm(d)
        out.append(np.sqrt(p_tmax / 2) * d / n)
    return BeamformerPair(*out)


def conventional_ris_project(coeffs: StarCoefficients) -> StarCoefficients:
    """Force the first half of the elements to reflect only and the rest to transmit only."""
    return StarCoefficients(_conventional_mask(coeffs.beta_r[None, :])[0],
                            coeffs.phase_idx_r.copy(), coeffs.phase_idx_t.copy(), q=coeffs.q)


def _conventional_mask(beta: np.ndarray) -> np.ndarray:
    m = beta.shape[-1]
    if m % 2:
        raise ValueError("conventional RIS split needs an even number of elements")
    out = np.empty_like(beta)
    out[..., : m // 2] = 1.0 - CONVENTIONAL_DELTA
    out[..., m // 2:] = CONVENTIONAL_DELTA
    return out


def discretize_phases(continuous_phases, q: int) -> np.ndarray:
    """Nearest point of {2*pi*k/Q : k = 1..Q}; ties go to the smaller index."""
    x = np.asarray(continuous_phases, dtype=float) * q / (2 * np.pi)
    grid = np.arange(1, q + 1)
    dist = np.abs(x[..., None] - grid)
    best = dist.min(axis=-1, keepdims=True)
    return np.argmax(dist <= best + 1e-9, axis=-1) + 1


def zf_beamformers(ch: ChannelSet, coeffs: StarCoefficients, p_b: float, p_c: float) -> BeamformerPair:
    """Zero-forcing precoders with per-user powers ``p_b`` and ``p_c``.

    Uses the right pseudoinverse ``W = H^H (H H^H)^-1`` of the stacked 2 x N_t
    effective channel, so that ``H W = I``.
    """
    g_b, g_c = effective_rows(ch, coeffs)
    h = np.vstack([g_b, g_c])
    if h.shape[1] < 2 or np.linalg.matrix_rank(h) < 2:
        raise np.linalg.LinAlgError("ZF infeasible: effective channel is rank deficient")
    w = h.conj().T @ np.linalg.inv(h @ h.conj().T)
    w_b = np.sqrt(p_b) * w[:, 0] / np.linalg.norm(w[:, 0])
    w_c = np.sqrt(p_c) * w[:, 1] / np.linalg.norm(w[:, 1])
    return BeamformerPair(w_b, w_c)


ZF_GRID = np.round(np.arange(1, 100) * 0.01, 2)


def zf_power_split(ch: ChannelSet, coeffs: StarCoefficients, cfg: SystemConfig) -> tuple[float, float]:
    """Grid search of Bob's power share in {0.01, ..., 0.99} * P_tmax."""
    best = (-np.inf, 0.5)
    for frac in ZF_GRID:
        p_b = frac * cfg.p_tmax
        obj = weighted_objective(ch, coeffs, zf_beamformers(ch, coeffs, p_b, cfg.p_tmax - p_b), cfg)
        if obj > best[0]:
            best = (obj, frac)
    p_b = best[1] * cfg.p_tmax
    return p_b, cfg.p_tmax - p_b


def _zf_active(ch, coeffs, cfg):
    p_b, p_c = zf_power_split(ch, coeffs, cfg)
    return zf_beamformers(ch, coeffs, p_b, p_c)


def optimize(ch: ChannelSet, cfg: SystemConfig, rng, *, scheme: str = "proposed",
             callback: Callable[[int, float], None] | None = None) -> OptResult:
    """Alternate active and passive updates until the objective settles.

    ``scheme`` selects the variant:

    ``proposed``
        MMSE/dual active step and cross-entropy passive step.
    ``zf``
        Zero-forcing precoders (grid-searched power split) with the same
        passive step.
    ``conventional_ris``
        Like ``proposed`` but the surface is split into a reflect-only and a
        transmit-only half of M/2 elements each.

    Convergence is declared when the objective changes by less than
    ``tol_outer`` between two outer iterations.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng), 1)
    init_gen = stream.child(0).generator()
    projection = _conventional_mask if scheme == "conventional_ris" else None

    coeffs = random_coefficients(cfg.m, cfg.q, init_gen)
    if projection is not None:
        coeffs = conventional_ris_project(coeffs)
    bf = _zf_active(ch, coeffs, cfg) if scheme == "zf" else matched_beamformers(ch, coeffs, cfg.p_tmax)
    obj = weighted_objective(ch, coeffs, bf, cfg)
    trajectory = [obj]
    passive_traj: list[list[float]] = []
    best = (obj, bf, coeffs)
    varrho = 0.0
    converged = False
    t = 0
    for t in range(1, cfg.max_outer + 1):
        if scheme == "zf":
            bf = _zf_active(ch, coeffs, cfg)
        else:
            sol = solve_active(ch, coeffs, bf, cfg, varrho0=varrho)
            bf, varrho = sol.bf, sol.dual.varrho
        coeffs, ptraj = solve_passive(ch, bf, coeffs, cfg, stream.child(1, t),
                                      amplitude_projection=projection)
        passive_traj.append(ptraj)
        obj = weighted_objective(ch, coeffs, bf, cfg)
        trajectory.append(obj)
        if callback is not None:
            callback(t, obj)
        if obj > best[0]:
            best = (obj, bf, coeffs)
        if abs(trajectory[-1] - trajectory[-2]) < cfg.tol_outer:
            converged = True
            break
    if not converged:
        log.warning("%s: no convergence within max_outer=%d", scheme, cfg.max_outer)
    _, bf, coeffs = best
    return OptResult(bf=bf, coeffs=coeffs, trajectory=trajectory, rates=rate_report(ch, coeffs, bf, cfg),
                     outer_iterations=t, converged=converged, scheme=scheme,
                     passive_trajectories=passive_traj)


def check_feasible(result_bf: BeamformerPair, coeffs: StarCoefficients, cfg: SystemConfig) -> bool:
    """Power budget, amplitude range, energy split and discrete phase grid."""
    return result_bf.is_feasible(cfg.p_tmax) and coeffs.is_feasible() and coeffs.q == cfg.q
