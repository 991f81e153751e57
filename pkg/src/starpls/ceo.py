"""Cross-entropy search over discrete phases and continuous amplitudes.

Phases (2M of them, reflection first) are drawn from per-element categorical
distributions, reflection amplitudes from per-element Gaussians. After each
round the distributions are refit to the elite candidates by maximum
likelihood and blended with the previous ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channel import ChannelSet, RngStream, as_generator
from .config import SystemConfig
from .rates import BeamformerPair, StarCoefficients, objective_batch, weighted_objective

MAX_RESAMPLE = 64


@dataclass(frozen=True, eq=False)
class TiltingParams:
    p: np.ndarray  # (2M, Q), rows on the simplex
    mu: np.ndarray  # (M,)
    sigma: np.ndarray  # (M,)

    @property
    def m(self) -> int:
        return self.mu.shape[0]

    @property
    def q(self) -> int:
        return self.p.shape[1]


@dataclass(frozen=True, eq=False)
class Candidate:
    coeffs: StarCoefficients
    objective: float


@dataclass
class CeoState:
    params: TiltingParams
    best: Candidate
    iteration: int = 0
    trajectory: list[float] = field(default_factory=list)


def init_tilting(m: int, q: int) -> TiltingParams:
    if m < 1 or q < 1:
        raise ValueError("m and q must be >= 1")
    return TiltingParams(p=np.full((2 * m, q), 1.0 / q), mu=np.full(m, 0.5), sigma=np.ones(m))


def _draw_phase_indices(p: np.ndarray, a: np.ndarray) -> np.ndarray:
    # smallest n with cumulative probability >= a (1-based)
    cdf = np.cumsum(p, axis=-1)
    idx = (cdf < a[..., None]).sum(axis=-1) + 1
    return np.minimum(idx, p.shape[-1])


def sample_phase(row, rng) -> int:
    """Inverse-CDF draw of a 1-based phase index from one probability row."""
    row = np.asarray(row, dtype=float)
    gen = as_generator(rng)
    a = gen.random()
    return int(_draw_phase_indices(row[None, :], np.array([a]))[0])


def _draw_amplitudes(mu: np.ndarray, sigma: np.ndarray, gen: np.random.Generator, n: int) -> np.ndarray:
    """Gaussian draws, resampling entries outside (0, 1]; uniform fallback after 64 tries."""
    out = mu + sigma * gen.standard_normal((n, mu.shape[0]))
    bad = (out <= 0) | (out > 1)
    for _ in range(MAX_RESAMPLE):
        if not bad.any():
            break
        rows, cols = np.nonzero(bad)
        out[rows, cols] = mu[cols] + sigma[cols] * gen.standard_normal(rows.shape[0])
        bad = (out <= 0) | (out > 1)
    if bad.any():
        rows, cols = np.nonzero(bad)
        out[rows, cols] = 1.0 - gen.random(rows.shape[0])  # uniform on (0, 1]
    return out


def sample_amplitude(mu_m: float, sigma_m: float, rng) -> float:
    if sigma_m < 0:
        raise ValueError("sigma must be nonnegative")
    gen = as_generator(rng)
    return float(_draw_amplitudes(np.array([mu_m], float), np.array([sigma_m], float), gen, 1)[0, 0])


def sample_population(params: TiltingParams, n: int, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``n`` candidates: (beta_r, idx_r, idx_t), each of shape (n, M)."""
    gen = as_generator(rng)
    m = params.m
    idx = _draw_phase_indices(params.p[None, :, :], gen.random((n, 2 * m)))
    beta = _draw_amplitudes(params.mu, params.sigma, gen, n)
    return beta, idx[:, :m], idx[:, m:]


def sample_candidate(params: TiltingParams, ch: ChannelSet, bf: BeamformerPair,
                     cfg: SystemConfig, rng) -> Candidate:
    beta, idx_r, idx_t = sample_population(params, 1, rng)
    coeffs = StarCoefficients(beta[0], idx_r[0], idx_t[0], q=params.q)
    return Candidate(coeffs, weighted_objective(ch, coeffs, bf, cfg))


def update_tilting(elites: Sequence[Candidate], k_elite: int | None = None) -> TiltingParams:
    """Maximum-likelihood refit of the sampling distribution to the elites.

    Phase probabilities are elite selection frequencies, the amplitude mean
    is the elite average, and the standard deviation is the population
    (1/K_elite) deviation about that new mean.
    """
    if len(elites) == 0:
        raise ValueError("elite set is empty")
    if k_elite is not None and k_elite != len(elites):
        raise ValueError(f"expected {k_elite} elites, got {len(elites)}")
    q = elites[0].coeffs.q
    beta = np.stack([c.coeffs.beta_r for c in elites])
    idx = np.stack([np.concatenate([c.coeffs.phase_idx_r, c.coeffs.phase_idx_t]) for c in elites])
    return _fit(beta, idx, q)


def _fit(beta: np.ndarray, idx: np.ndarray, q: int) -> TiltingParams:
    k, n_rows = idx.shape
    counts = np.zeros((n_rows, q))
    np.add.at(counts, (np.broadcast_to(np.arange(n_rows), idx.shape), idx - 1), 1.0)
    # constant columns keep their value exactly (a plain mean can round off it)
    mu = np.where(np.ptp(beta, axis=0) == 0, beta[0], beta.mean(axis=0))
    sigma = np.sqrt(((beta - mu) ** 2).mean(axis=0))
    return TiltingParams(p=counts / k, mu=mu, sigma=sigma)


def smooth(new: TiltingParams, old: TiltingParams, chi: float) -> TiltingParams:
    """Convex blend ``chi * new + (1 - chi) * old`` of every parameter."""
    if not 0.0 < chi < 1.0:
        raise ValueError("chi must lie in (0, 1)")
    p = chi * new.p + (1.0 - chi) * old.p
    rows = p.sum(axis=1, keepdims=True)
    if np.any(np.abs(rows - 1.0) > 1e-9):
        p = p / rows
    return TiltingParams(p=p, mu=chi * new.mu + (1.0 - chi) * old.mu,
                         sigma=chi * new.sigma + (1.0 - chi) * old.sigma)


Projection = Callable[[np.ndarray], np.ndarray]


def solve_passive(ch: ChannelSet, bf: BeamformerPair, coeffs_init: StarCoefficients,
                  cfg: SystemConfig, rng, *, amplitude_projection: Projection | None = None
                  ) -> tuple[StarCoefficients, list[float]]:
    """Cross-entropy optimization of the STAR-RIS coefficients for fixed precoders.

    Parameters
    ----------
    rng : RngStream or int
        Round ``i`` draws from the substream keyed by ``i``, so the search is
        reproducible regardless of how candidate evaluation is scheduled.
    amplitude_projection : callable, optional
        Applied to every sampled (K, M) amplitude block before evaluation;
        used to restrict the surface (e.g. conventional reflect/transmit halves).

    Returns
    -------
    coeffs : StarCoefficients
        Best configuration found. Never worse than ``coeffs_init``, which is
        evaluated as an extra member of the first population.
    trajectory : list of float
        Best-so-far objective after each round.
    """
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng) if rng is not None else 0, 0)
    q, m = cfg.q, cfg.m
    if coeffs_init.q != q or coeffs_init.m != m:
        raise ValueError("coeffs_init does not match the configuration")
    k, k_elite = cfg.n_candidates, cfg.n_elite
    params = init_tilting(m, q)
    best_coeffs = coeffs_init
    best_obj = weighted_objective(ch, coeffs_init, bf, cfg)
    trajectory: list[float] = []
    prev_round = -np.inf
    calm = 0
    for i in range(cfg.max_ceo):
        gen = stream.generator(i)
        beta, idx_r, idx_t = sample_population(params, k, gen)
        if amplitude_projection is not None:
            beta = amplitude_projection(beta)
        if i == 0:
            beta = np.vstack([beta, coeffs_init.beta_r])
            idx_r = np.vstack([idx_r, coeffs_init.phase_idx_r])
            idx_t = np.vstack([idx_t, coeffs_init.phase_idx_t])
        obj = objective_batch(ch, bf, cfg, beta, idx_r, idx_t)
        obj = np.where(np.isfinite(obj), obj, -np.inf)
        # stable: ties keep candidate order
        order = np.argsort(-obj, kind="stable")
        elite = order[:k_elite]
        fitted = _fit(beta[elite], np.hstack([idx_r[elite], idx_t[elite]]), q)
        params = smooth(fitted, params, cfg.ceo_chi)
        top = order[0]
        if obj[top] >= best_obj:
            cand = StarCoefficients(beta[top].copy(), idx_r[top].copy(), idx_t[top].copy(), q=q)
            cand_obj = weighted_objective(ch, cand, bf, cfg)
            if cand_obj >= best_obj:
                best_coeffs, best_obj = cand, cand_obj
        trajectory.append(best_obj)
        round_best = float(obj[top])
        if i >= 1 and abs(round_best - prev_round) < cfg.tol_ceo:
            calm += 1
            if calm >= cfg.ceo_patience:
                break
        else:
            calm = 0
        prev_round = round_best
    return best_coeffs, trajectory
