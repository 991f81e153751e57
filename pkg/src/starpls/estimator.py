"""Thin scikit-learn style wrapper around :func:`starpls.optimize`.

A "fit" here optimizes the precoders and surface for one channel
realization, so there is no feature matrix. The wrapper exists for
``get_params``/``set_params``/``clone`` convenience in parameter studies.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .channel import ChannelSet, RngStream
from .config import SystemConfig
from .optimizer import SCHEMES, optimize
from .rates import RateReport, rate_report


def check_channels(ch) -> ChannelSet:
    if not isinstance(ch, ChannelSet):
        raise TypeError(f"expected a ChannelSet, got {type(ch).__name__}")
    return ch


class SecureBeamformer(BaseEstimator):
    """Joint precoder and STAR-RIS design for a fixed channel.

    Parameters
    ----------
    config : SystemConfig, optional
        System parameters. ``m`` and ``n_t`` are taken from the channel at
        fit time. Defaults to the desk preset with a 1 W budget.
    scheme : {"proposed", "zf", "conventional_ris"}
    random_state : int
        Seed for the optimizer's random draws.

    Attributes
    ----------
    bf_ : BeamformerPair
    coeffs_ : StarCoefficients
    trajectory_ : list of float
        Objective after each outer iteration.
    result_ : OptResult
    """

    def __init__(self, config: SystemConfig | None = None, scheme: str = "proposed", random_state: int = 0):
        self.config = config
        self.scheme = scheme
        self.random_state = random_state

    def _config_for(self, ch: ChannelSet) -> SystemConfig:
        base = self.config if self.config is not None else SystemConfig(p_tmax=1.0)
        return base.replace(m=ch.m, n_t=ch.n_t)

    def fit(self, X: ChannelSet, y=None) -> "SecureBeamformer":
        ch = check_channels(X)
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        cfg = self._config_for(ch)
        self.result_ = optimize(ch, cfg, RngStream(int(self.random_state), 1), scheme=self.scheme)
        self.bf_ = self.result_.bf
        self.coeffs_ = self.result_.coeffs
        self.trajectory_ = list(self.result_.trajectory)
        return self

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise NotFittedError("call fit before using this estimator")

    def predict(self, X: ChannelSet) -> RateReport:
        """Rates of the fitted design on channel ``X``."""
        self._check_fitted()
        ch = check_channels(X)
        return rate_report(ch, self.coeffs_, self.bf_, self._config_for(ch))

    def score(self, X: ChannelSet, y=None) -> float:
        """Weighted objective of the fitted design on ``X``."""
        return self.predict(X).objective
