"""Secure STAR-RIS downlink beamforming: MMSE active design and cross-entropy passive design."""
from .channel import ChannelSet, RngStream, generate_channels, path_loss, sample_eve_smallscale
from .config import ConfigError, SystemConfig, load_config
from .optimizer import OptResult, optimize
from .rates import BeamformerPair, RateReport, StarCoefficients, weighted_objective

__all__ = [
    "BeamformerPair", "ChannelSet", "ConfigError", "OptResult", "RateReport", "RngStream",
    "StarCoefficients", "SystemConfig", "generate_channels", "load_config", "optimize",
    "path_loss", "sample_eve_smallscale", "weighted_objective",
]
__version__ = "0.1.0"
