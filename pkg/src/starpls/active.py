"""Active beamforming for fixed STAR-RIS coefficients.

Each log term of the objective is replaced by its MMSE lower bound, which is
tight at the current precoders. For a fixed power multiplier the bound is
maximized in closed form, and the multiplier is found by projected
subgradient ascent on the dual, finished with a bracketing root solve on the
(monotone) power-versus-multiplier curve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .channel import ChannelSet
from .config import SystemConfig
from .rates import LN2, BeamformerPair, StarCoefficients, weighted_objective

log = logging.getLogger(__name__)


class DualTooSmallError(np.linalg.LinAlgError):
    """The stationarity system is singular at the requested multiplier."""


@dataclass(frozen=True, eq=False)
class AuxVars:
    """MMSE receivers (u1, u2, u3, u_c) and weights (W1..W5, W_c)."""

    u1: complex
    u2: np.ndarray
    u3: np.ndarray
    u_c: complex
    w1: float
    w2: float
    w3: float
    w4: float
    w5: float
    w_c_aux: float


@dataclass
class DualState:
    varrho: float = 0.0
    step: float = 1e-2


class ActiveSolution(NamedTuple):
    bf: BeamformerPair
    dual: DualState
    iterations: int
    converged: bool


class _Links:
    """Channel products that do not depend on the precoders."""

    def __init__(self, ch: ChannelSet, coeffs: StarCoefficients):
        d_r, d_t = coeffs.diag_r(), coeffs.diag_t()
        self.v_r = d_r[:, None] * ch.h_br  # U_r H_BR
        self.v_t = d_t[:, None] * ch.h_br  # U_t H_BR
        self.g_b = self.v_r.conj().T @ ch.h_rb  # H^H U_r^H h_rb
        self.g_c = self.v_t.conj().T @ ch.h_rc  # H^H U_t^H h_rc
        self.c_r = self.v_r.conj().T @ self.v_r
        self.c_t = self.v_t.conj().T @ self.v_t
        self.l_re = ch.l_re


def update_auxiliaries(ch: ChannelSet, coeffs: StarCoefficients, bf: BeamformerPair,
                       cfg: SystemConfig, *, dense: bool = False) -> AuxVars:
    """Optimal MMSE auxiliaries at the precoders ``bf``.

    ``u2``/``u3`` solve ``(l v v^H + s I) u = sqrt(l) v`` for ``v = U H w_c``;
    by Sherman-Morrison this is ``sqrt(l) v / (s + l |v|^2)``. ``dense=True``
    uses a full matrix solve instead (kept for cross-checking).
    """
    lk = _Links(ch, coeffs)
    return _auxiliaries(lk, bf, cfg, dense=dense)


def _mmse_receiver(v: np.ndarray, l_re: float, s2: float, dense: bool) -> np.ndarray:
    if dense:
        a = l_re * np.outer(v, v.conj()) + s2 * np.eye(v.shape[0])
        return np.linalg.solve(a, np.sqrt(l_re) * v)
    return np.sqrt(l_re) * v / (s2 + l_re * np.vdot(v, v).real)


def _auxiliaries(lk: _Links, bf: BeamformerPair, cfg: SystemConfig, dense: bool = False) -> AuxVars:
    l, s2e = lk.l_re, cfg.sigma2_e
    s1 = np.vdot(lk.g_b, bf.w_b)
    i1 = np.vdot(lk.g_b, bf.w_c)
    u1 = s1 / (abs(s1) ** 2 + abs(i1) ** 2 + cfg.sigma2_b)
    e1 = abs(np.conj(u1) * s1 - 1) ** 2 + abs(u1) ** 2 * (abs(i1) ** 2 + cfg.sigma2_b)

    sc = np.vdot(lk.g_c, bf.w_c)
    ic = np.vdot(lk.g_c, bf.w_b)
    uc = sc / (abs(sc) ** 2 + abs(ic) ** 2 + cfg.sigma2_c)
    ec = abs(np.conj(uc) * sc - 1) ** 2 + abs(uc) ** 2 * (abs(ic) ** 2 + cfg.sigma2_c)

    vc_r, vc_t = lk.v_r @ bf.w_c, lk.v_t @ bf.w_c
    vb_r, vb_t = lk.v_r @ bf.w_b, lk.v_t @ bf.w_b
    u2 = _mmse_receiver(vc_r, l, s2e, dense)
    u3 = _mmse_receiver(vc_t, l, s2e, dense)
    e2 = _e_eve(u2, vc_r, l, s2e)
    e3 = _e_eve(u3, vc_t, l, s2e)
    e4 = 1 + l * (_sq(vc_r) + _sq(vb_r)) / s2e
    e5 = 1 + l * (_sq(vc_t) + _sq(vb_t)) / s2e
    return AuxVars(u1=complex(u1), u2=u2, u3=u3, u_c=complex(uc),
                   w1=1 / e1, w2=1 / e2, w3=1 / e3, w4=1 / e4, w5=1 / e5, w_c_aux=1 / ec)


def _sq(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def _e_eve(u: np.ndarray, v: np.ndarray, l_re: float, s2e: float) -> float:
    return abs(np.sqrt(l_re) * np.vdot(u, v) - 1) ** 2 + s2e * _sq(u)


# -- MMSE terms -----------------------------------------------------------

def mse_terms(ch, coeffs, aux: AuxVars, bf: BeamformerPair, cfg: SystemConfig) -> dict[str, float]:
    """Mean-square errors E1..E5 and E_c at ``bf`` for fixed receivers in ``aux``."""
    lk = _Links(ch, coeffs)
    return _mse_terms(lk, aux, bf, cfg)


def _mse_terms(lk: _Links, aux: AuxVars, bf: BeamformerPair, cfg: SystemConfig) -> dict[str, float]:
    l, s2e = lk.l_re, cfg.sigma2_e
    s1, i1 = np.vdot(lk.g_b, bf.w_b), np.vdot(lk.g_b, bf.w_c)
    sc, ic = np.vdot(lk.g_c, bf.w_c), np.vdot(lk.g_c, bf.w_b)
    vc_r, vc_t = lk.v_r @ bf.w_c, lk.v_t @ bf.w_c
    vb_r, vb_t = lk.v_r @ bf.w_b, lk.v_t @ bf.w_b
    return {
        "e1": abs(np.conj(aux.u1) * s1 - 1) ** 2 + abs(aux.u1) ** 2 * (abs(i1) ** 2 + cfg.sigma2_b),
        "e2": _e_eve(aux.u2, vc_r, l, s2e),
        "e3": _e_eve(aux.u3, vc_t, l, s2e),
        "e4": 1 + l * (_sq(vc_r) + _sq(vb_r)) / s2e,
        "e5": 1 + l * (_sq(vc_t) + _sq(vb_t)) / s2e,
        "ec": abs(np.conj(aux.u_c) * sc - 1) ** 2 + abs(aux.u_c) ** 2 * (abs(ic) ** 2 + cfg.sigma2_c),
    }


def log_terms(ch, coeffs, bf: BeamformerPair, cfg: SystemConfig) -> dict[str, float]:
    """The natural-log terms f1..f5 and ln(1 + SINR_c) evaluated exactly."""
    lk = _Links(ch, coeffs)
    l, s2e = lk.l_re, cfg.sigma2_e
    s1, i1 = np.vdot(lk.g_b, bf.w_b), np.vdot(lk.g_b, bf.w_c)
    sc, ic = np.vdot(lk.g_c, bf.w_c), np.vdot(lk.g_c, bf.w_b)
    vc_r, vc_t = lk.v_r @ bf.w_c, lk.v_t @ bf.w_c
    vb_r, vb_t = lk.v_r @ bf.w_b, lk.v_t @ bf.w_b
    return {
        "f1": float(np.log1p(abs(s1) ** 2 / (abs(i1) ** 2 + cfg.sigma2_b))),
        "f2": float(np.log1p(l * _sq(vc_r) / s2e)),
        "f3": float(np.log1p(l * _sq(vc_t) / s2e)),
        "f4": float(-np.log1p(l * (_sq(vc_r) + _sq(vb_r)) / s2e)),
        "f5": float(-np.log1p(l * (_sq(vc_t) + _sq(vb_t)) / s2e)),
        "fc": float(np.log1p(abs(sc) ** 2 / (abs(ic) ** 2 + cfg.sigma2_c))),
    }


def surrogate_terms(ch, coeffs, aux: AuxVars, bf: BeamformerPair, cfg: SystemConfig) -> dict[str, float]:
    """MMSE lower bounds ``ln W - W E + 1`` of each log term, at ``bf``."""
    e = mse_terms(ch, coeffs, aux, bf, cfg)
    return _bounds(aux, e)


def _bounds(aux: AuxVars, e: dict[str, float]) -> dict[str, float]:
    def b(w, ev):
        return float(np.log(w) - w * ev + 1.0)
    return {"f1": b(aux.w1, e["e1"]), "f2": b(aux.w2, e["e2"]), "f3": b(aux.w3, e["e3"]),
            "f4": b(aux.w4, e["e4"]), "f5": b(aux.w5, e["e5"]), "fc": b(aux.w_c_aux, e["ec"])}


def _combine(t: dict[str, float], cfg: SystemConfig) -> float:
    kappa = 1.0 if cfg.secrecy_aware else 0.0
    r_b = (t["f1"] + kappa * (cfg.p1 * (t["f2"] + t["f4"]) + cfg.p0 * (t["f3"] + t["f5"]))) / LN2
    return cfg.omega1 * r_b + cfg.omega2 * t["fc"] / LN2


def surrogate_objective(ch, coeffs, aux: AuxVars, bf: BeamformerPair, cfg: SystemConfig) -> float:
    """Concave minorant of the weighted objective built from ``aux`` (bits/s/Hz)."""
    return _combine(surrogate_terms(ch, coeffs, aux, bf, cfg), cfg)


def lagrangian(ch, coeffs, aux: AuxVars, bf: BeamformerPair, varrho: float, cfg: SystemConfig) -> float:
    """Negated minorant plus the multiplier times the power-constraint residual."""
    return -surrogate_objective(ch, coeffs, aux, bf, cfg) + varrho * (bf.power - cfg.p_tmax)


# -- closed-form precoders ------------------------------------------------

def _stationarity_system(lk: _Links, aux: AuxVars, cfg: SystemConfig):
    """``(Phi_b, rhs_b, Phi_c, rhs_c)`` with ``w(varrho) = (varrho I + Phi)^-1 rhs``."""
    kappa = 1.0 if cfg.secrecy_aware else 0.0
    o1, o2, l, s2e = cfg.omega1, cfg.omega2, lk.l_re, cfg.sigma2_e
    a = np.outer(lk.g_c, lk.g_c.conj())
    b = np.outer(lk.g_b, lk.g_b.conj())
    common = (o2 * aux.w_c_aux * abs(aux.u_c) ** 2 / LN2) * a \
        + (o1 * aux.w1 * abs(aux.u1) ** 2 / LN2) * b \
        + kappa * (o1 * l * cfg.p1 * aux.w4 / (s2e * LN2)) * lk.c_r \
        + kappa * (o1 * l * cfg.p0 * aux.w5 / (s2e * LN2)) * lk.c_t
    phi_b = common
    rhs_b = (o1 * aux.w1 / LN2) * lk.g_b * aux.u1

    x2 = lk.v_r.conj().T @ aux.u2  # H^H U_r^H u2
    x3 = lk.v_t.conj().T @ aux.u3
    phi_c = common \
        + kappa * (o1 * cfg.p1 * aux.w2 * l / LN2) * np.outer(x2, x2.conj()) \
        + kappa * (o1 * cfg.p0 * aux.w3 * l / LN2) * np.outer(x3, x3.conj())
    rhs_c = (o2 * aux.w_c_aux / LN2) * lk.g_c * aux.u_c \
        + kappa * (o1 * cfg.p1 * aux.w2 * np.sqrt(l) / LN2) * x2 \
        + kappa * (o1 * cfg.p0 * aux.w3 * np.sqrt(l) / LN2) * x3
    # symmetrize away rounding so eigh sees an exactly Hermitian matrix
    phi_b = 0.5 * (phi_b + phi_b.conj().T)
    phi_c = 0.5 * (phi_c + phi_c.conj().T)
    return phi_b, rhs_b, phi_c, rhs_c


def stationarity_matrices(ch, coeffs, aux: AuxVars, varrho: float, cfg: SystemConfig):
    """``(G1, G2, G1_hat, G2_hat)`` of the closed-form solution."""
    phi_b, rhs_b, phi_c, rhs_c = _stationarity_system(_Links(ch, coeffs), aux, cfg)
    eye = np.eye(phi_b.shape[0])
    return varrho * eye + phi_b, rhs_b, varrho * eye + phi_c, rhs_c


def optimal_beamformers(ch, coeffs, aux: AuxVars, varrho: float, cfg: SystemConfig) -> BeamformerPair:
    """Minimizer of the Lagrangian over (w_b, w_c) for a given multiplier.

    Raises
    ------
    DualTooSmallError
        If G1 or G1_hat is singular (possible only for ``varrho == 0``).
    """
    if varrho < 0:
        raise ValueError("varrho must be nonnegative")
    g1, g2, g1h, g2h = stationarity_matrices(ch, coeffs, aux, varrho, cfg)
    out = []
    for mat, rhs in ((g1, g2), (g1h, g2h)):
        if np.linalg.cond(mat) > 1e14:
            raise DualTooSmallError("dual variable too small: stationarity matrix is singular")
        out.append(np.linalg.solve(mat, rhs))
    return BeamformerPair(*out)


class _DualCurve:
    """w(varrho) and its power, via one eigendecomposition per user."""

    def __init__(self, phi_b, rhs_b, phi_c, rhs_c):
        self.lam_b, vb = np.linalg.eigh(phi_b)
        self.lam_c, vc = np.linalg.eigh(phi_c)
        self.vb, self.vc = vb, vc
        self.cb = vb.conj().T @ rhs_b
        self.cc = vc.conj().T @ rhs_c
        scale = max(self.lam_b.max(initial=0.0), self.lam_c.max(initial=0.0), 1e-300)
        self.floor = 1e-13 * scale
        self.lam_b = np.maximum(self.lam_b, 0.0)
        self.lam_c = np.maximum(self.lam_c, 0.0)
        self.rhs_norm2 = _sq(rhs_b) + _sq(rhs_c)

    def _coef(self, c, lam, varrho):
        den = varrho + lam
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den > self.floor, c / np.where(den > 0, den, 1.0), 0.0)
        # a numerically singular direction with nonzero forcing carries unbounded power
        blow = (den <= self.floor) & (np.abs(c) > 1e-12 * np.sqrt(self.rhs_norm2))
        return out, bool(blow.any())

    def power(self, varrho: float) -> float:
        cb, bb = self._coef(self.cb, self.lam_b, varrho)
        cc, bc = self._coef(self.cc, self.lam_c, varrho)
        if bb or bc:
            return np.inf
        return _sq(cb) + _sq(cc)

    def beamformers(self, varrho: float) -> BeamformerPair:
        cb, _ = self._coef(self.cb, self.lam_b, varrho)
        cc, _ = self._coef(self.cc, self.lam_c, varrho)
        return BeamformerPair(self.vb @ cb, self.vc @ cc)


def solve_active(ch: ChannelSet, coeffs: StarCoefficients, bf_init: BeamformerPair,
                 cfg: SystemConfig, varrho0: float = 0.0, *, max_mmse: int | None = None) -> ActiveSolution:
    """Optimize the precoders for fixed surface coefficients.

    Each pass builds the MMSE minorant at the incumbent precoders and
    maximizes it under the power budget (:func:`solve_minorant`). Passes
    repeat, refreshing the auxiliaries, until the true objective gains less
    than ``tol_mmse`` or ``max_mmse`` passes ran. The objective never
    decreases from pass to pass.
    """
    n_pass = cfg.max_mmse if max_mmse is None else max_mmse
    bf, varrho = bf_init, varrho0
    prev = weighted_objective(ch, coeffs, bf, cfg)
    total = 0
    sol = None
    for _ in range(max(1, n_pass)):
        sol = solve_minorant(ch, coeffs, bf, cfg, varrho)
        total += sol.iterations
        obj = weighted_objective(ch, coeffs, sol.bf, cfg)
        if obj < prev:
            # only rounding can get here; keep the incumbent
            break
        bf, varrho = sol.bf, sol.dual.varrho
        if obj - prev < cfg.tol_mmse:
            break
        prev = obj
    return ActiveSolution(bf=bf, dual=DualState(varrho=varrho, step=cfg.subgrad_step),
                          iterations=total, converged=sol.converged)


def solve_minorant(ch: ChannelSet, coeffs: StarCoefficients, bf_init: BeamformerPair,
                   cfg: SystemConfig, varrho0: float = 0.0) -> ActiveSolution:
    """Maximize the MMSE minorant built at ``bf_init`` under the power budget.

    The multiplier follows the projected subgradient rule with a diminishing
    step (``subgrad_step / sqrt(l)`` applied to the power residual normalized
    by ``p_tmax**2``) until the dual value stops increasing by more than
    ``tol_dual`` (fractional) or ``max_dual`` steps. Because transmit power is
    monotone in the multiplier, the result is then refined to the exact
    complementary-slackness point with a bracketing root solve.
    """
    lk = _Links(ch, coeffs)
    aux = _auxiliaries(lk, bf_init, cfg)
    system = _stationarity_system(lk, aux, cfg)
    curve = _DualCurve(*system)
    p_max = cfg.p_tmax

    def dual_value(rho_):
        bf_ = curve.beamformers(rho_)
        return -_combine(_bounds(aux, _mse_terms(lk, aux, bf_, cfg)), cfg) + rho_ * (bf_.power - p_max), bf_.power

    varrho = max(0.0, float(varrho0))
    # start from a point with finite power
    if not np.isfinite(curve.power(varrho)):
        varrho = max(varrho, np.sqrt(curve.rhs_norm2 / p_max) * 1e-6)
    g_prev, power = dual_value(varrho)
    iterations = 0
    for it in range(1, cfg.max_dual + 1):
        iterations = it
        step = cfg.subgrad_step / np.sqrt(it) / p_max**2
        varrho = max(0.0, varrho + step * (power - p_max))
        if not np.isfinite(curve.power(varrho)):
            varrho = max(varrho, curve.floor)
        g, power = dual_value(varrho)
        if abs(g - g_prev) <= cfg.tol_dual * max(abs(g_prev), 1e-300):
            break
        g_prev = g
    else:
        log.debug("subgradient stopped at max_dual=%d; root refinement applied", cfg.max_dual)

    varrho, n_root = _complementary_point(curve, p_max, varrho)
    bf = curve.beamformers(varrho)
    if bf.power > p_max:
        scale = np.sqrt(p_max / bf.power)
        bf = BeamformerPair(bf.w_b * scale, bf.w_c * scale)
    return ActiveSolution(bf=bf, dual=DualState(varrho=varrho, step=cfg.subgrad_step),
                          iterations=iterations + n_root, converged=True)


def _complementary_point(curve: _DualCurve, p_max: float, hint: float) -> tuple[float, int]:
    """Smallest multiplier with feasible power: 0 if the budget is slack, else the root."""
    if curve.power(0.0) <= p_max:
        return 0.0, 1
    # power <= |rhs|^2 / varrho^2, so this upper bracket is always feasible
    hi = max(np.sqrt(curve.rhs_norm2 / p_max), hint, 1e-300)
    lo = 0.0
    if hint > 0 and curve.power(hint) > p_max:
        lo = hint
    f_lo_inf = not np.isfinite(curve.power(lo))
    if f_lo_inf:
        lo = max(curve.floor, hi * 1e-18)
        while curve.power(lo) <= p_max:
            lo *= 1e-3
            if lo < 1e-300:
                return lo, 1

    def f(x):
        return np.log(curve.power(x) / p_max)

    root, res = brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True)
    return float(root), res.iterations
