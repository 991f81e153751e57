"""Scenario, protocol and solver configuration.

All powers are stored in linear watts. dB/dBm values are converted only
when a configuration is read from JSON (see :func:`load_config`).
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Raised for malformed or invalid configurations."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Everything needed to generate a scenario and run the solvers.

    Defaults for the propagation and CEO parameters follow the reference
    simulation setup (rho = -20 dB, alpha = 2.6, d_BR = 400 m, d_rb = 75 m,
    d_rc = 100 m, noise -110 dBm, omega = 4, eta = 0.1, chi = 0.55).
    ``p_tmax`` has no default and must be given.
    """

    p_tmax: float | None = None
    n_t: int = 4
    m: int = 16
    lambda_bits: int = 2
    sigma2_b: float = 1e-14
    sigma2_c: float = 1e-14
    sigma2_e: float = 1e-14
    p1: float = 0.5
    omega1: float = 0.5
    omega2: float = 0.5
    rho: float = 0.01
    alpha: float = 2.6
    d_br: float = 400.0
    d_rb: float = 75.0
    d_rc: float = 100.0
    # not given by the reference setup; same order as d_rb / d_rc
    d_re: float = 80.0
    ceo_omega: float = 4.0
    ceo_eta: float = 0.1
    ceo_chi: float = 0.55
    ceo_patience: int = 1
    subgrad_step: float = 1e-2
    tol_outer: float = 1e-3
    tol_dual: float = 1e-8
    tol_ceo: float = 1e-4
    tol_mmse: float = 1e-6
    max_outer: int = 30
    max_dual: int = 200
    max_ceo: int = 100
    max_mmse: int = 50
    seed: int = 0
    secrecy_aware: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.p_tmax is None:
            raise ConfigError("P_tmax required")
        for name in ("n_t", "m", "lambda_bits", "max_outer", "max_dual", "max_ceo", "max_mmse", "ceo_patience"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        for name in ("p_tmax", "sigma2_b", "sigma2_c", "sigma2_e", "rho", "alpha",
                     "d_br", "d_rb", "d_rc", "d_re", "subgrad_step",
                     "tol_outer", "tol_dual", "tol_ceo", "tol_mmse", "ceo_omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive and finite, got {value!r}")
        if not 0.0 <= self.p1 <= 1.0:
            raise ConfigError(f"p1 must lie in [0, 1], got {self.p1!r}")
        for name in ("omega1", "omega2"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {value!r}")
        for name in ("ceo_eta", "ceo_chi"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {value!r}")
        if self.ceo_eta * self.n_candidates < 1.0:
            raise ConfigError("ceo_eta * ceo_omega * 3M must be >= 1 (elite set would be empty)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def q(self) -> int:
        """Number of discrete phase levels, 2**lambda_bits."""
        return 2 ** int(self.lambda_bits)

    @property
    def p0(self) -> float:
        return 1.0 - self.p1

    @property
    def n_candidates(self) -> int:
        # 3M variables: 2M phases and M reflection amplitudes
        return int(round(self.ceo_omega * 3 * self.m))

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.ceo_eta * self.n_candidates)))

    def replace(self, **changes: Any) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Short stable hash used to tag output files."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


PRESETS: dict[str, dict[str, Any]] = {
    # desk-scale default used by tests and the CLI
    "desk": {"m": 16, "n_t": 4, "lambda_bits": 2, "p_tmax": 1.0},
    "paper_scale": {"m": 64, "n_t": 9, "lambda_bits": 2, "p_tmax": 1.0},
}

_FIELDS = {f.name for f in dataclasses.fields(SystemConfig)}
_INT_FIELDS = {"n_t", "m", "lambda_bits", "max_outer", "max_dual", "max_ceo", "max_mmse",
               "ceo_patience", "seed"}
# boundary aliases: key -> (field, converter)
_UNIT_ALIASES = {
    "P_tmax_dBm": ("p_tmax", dbm_to_watt),
    "p_tmax_dBm": ("p_tmax", dbm_to_watt),
    "P_tmax": ("p_tmax", float),
    "sigma2_dBm": (("sigma2_b", "sigma2_c", "sigma2_e"), dbm_to_watt),
    "sigma2_b_dBm": ("sigma2_b", dbm_to_watt),
    "sigma2_c_dBm": ("sigma2_c", dbm_to_watt),
    "sigma2_e_dBm": ("sigma2_e", dbm_to_watt),
    "rho_dB": ("rho", db_to_linear),
    "M": ("m", int),
    "N_t": ("n_t", int),
}


def config_from_dict(data: dict[str, Any], base: SystemConfig | None = None) -> SystemConfig:
    """Build a :class:`SystemConfig` from flat keys, applying unit aliases.

    ``preset`` selects a named starting point (``desk`` or ``paper_scale``).
    Keys absent from ``data`` keep their defaults.
    """
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    values: dict[str, Any] = {} if base is None else base.to_dict()
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    for key, raw in data.items():
        if key in _UNIT_ALIASES:
            targets, conv = _UNIT_ALIASES[key]
            if isinstance(targets, str):
                targets = (targets,)
            try:
                converted = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"key {key!r}: cannot convert {raw!r} ({exc})") from None
            for target in targets:
                values[target] = converted
        elif key in _FIELDS:
            if key in _INT_FIELDS:
                if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
                    raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}")
                raw = int(raw)
            elif key == "secrecy_aware":
                if not isinstance(raw, bool):
                    raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")
            elif raw is not None:
                if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                    raise ConfigError(f"key {key!r}: expected a number, got {raw!r}")
                raw = float(raw)
            values[key] = raw
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return SystemConfig(**values)


def load_config(path: str | Path) -> SystemConfig:
    """Read a UTF-8 JSON config file.

    Raises
    ------
    ConfigError
        On JSON syntax errors (with line/column) or invalid values.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data)
