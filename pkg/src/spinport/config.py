"""Run configuration: flat TOML with one section per module.

Defaults are the published operating point of the experiment (650 ps
lifetime, 4.9 GHz color splitting, 13.1 ns repetition, 13 ns echo, 60 ps
jitter, 800 ps herald window).  Unknown sections or keys are rejected so a
typo cannot silently fall back to a default.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .protocol import INPUT_LABELS, ExperimentConfig, NoiseModel

TWO_PI = 2.0 * math.pi


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


DEFAULTS: dict[str, dict[str, object]] = {
    "source": {
        "lifetime_ps": 650.0,
        "delta_ghz": 4.9,
        "p_exc": 0.9,
        "g2_residual": 0.0,
    },
    "spin": {
        "t2star_ps": 1000.0,
        "t_echo_ps": 13000.0,
        "p_up_init": 0.55,
    },
    "interference": {
        "overlap": 0.802,
        "polarization": "parallel",
        "delay_ps": 0.0,
    },
    "protocol": {
        "repetition_ps": 13100.0,
        "propagation_delay_ps": 11000.0,
        "herald_offset_ps": 0.0,
        "herald_window_ps": 800.0,
        "readout_time_ps": 0.0,
        "readout_error": 0.0,
        "trials": 100000,
        "input_state": "all",
        "periods": 7,
    },
    "tagstream": {
        "jitter_sigma_ps": 60.0,
        "bin_ps": 50.0,
        "window_lower_ps": -1200.0,
        "window_upper_ps": 1200.0,
        "dark_rate_per_ps": 0.0,
    },
}

_VALID_INPUTS = ("all",) + INPUT_LABELS
_VALID_POLARIZATIONS = ("parallel", "orthogonal")


def _coerce(section: str, key: str, value: object) -> object:
    default = DEFAULTS[section][key]
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
        return int(value)
    if not isinstance(value, str):
        raise ConfigError(f"{section}.{key} must be a string, got {value!r}")
    return value


def load_config(path: str | Path | None = None) -> dict[str, dict[str, object]]:
    """Defaults overlaid with the TOML file at ``path`` (strict keys)."""
    resolved = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    if path is None:
        return resolved
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} does not parse: {exc}") from None
    for section, keys in data.items():
        if section not in resolved:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(keys, dict):
            raise ConfigError(f"section [{section}] must be a table")
        for key, value in keys.items():
            if key not in resolved[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            resolved[section][key] = _coerce(section, key, value)
    validate_config(resolved)
    return resolved


def validate_config(cfg: dict[str, dict[str, object]]) -> None:
    positive = [
        ("source", "lifetime_ps"),
        ("source", "delta_ghz"),
        ("spin", "t2star_ps"),
        ("spin", "t_echo_ps"),
        ("protocol", "repetition_ps"),
        ("protocol", "propagation_delay_ps"),
        ("protocol", "herald_window_ps"),
        ("protocol", "trials"),
        ("protocol", "periods"),
        ("tagstream", "bin_ps"),
    ]
    for sec, key in positive:
        if not cfg[sec][key] > 0:
            raise ConfigError(f"{sec}.{key} must be positive")
    for sec, key in [
        ("source", "p_exc"),
        ("source", "g2_residual"),
        ("spin", "p_up_init"),
        ("interference", "overlap"),
        ("protocol", "readout_error"),
    ]:
        if not 0.0 <= float(cfg[sec][key]) <= 1.0:
            raise ConfigError(f"{sec}.{key} must lie in [0, 1]")
    if cfg["interference"]["polarization"] not in _VALID_POLARIZATIONS:
        raise ConfigError("interference.polarization must be 'parallel' or 'orthogonal'")
    if cfg["protocol"]["input_state"] not in _VALID_INPUTS:
        raise ConfigError(f"protocol.input_state must be one of {_VALID_INPUTS}")
    if float(cfg["tagstream"]["jitter_sigma_ps"]) < 0:
        raise ConfigError("tagstream.jitter_sigma_ps must be nonnegative")
    if float(cfg["tagstream"]["dark_rate_per_ps"]) < 0:
        raise ConfigError("tagstream.dark_rate_per_ps must be nonnegative")
    if not cfg["tagstream"]["window_lower_ps"] < cfg["tagstream"]["window_upper_ps"]:
        raise ConfigError("tagstream window bounds must be ordered")


def config_hash(cfg: dict[str, dict[str, object]]) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def delta_rad_per_ps(cfg: dict[str, dict[str, object]]) -> float:
    return TWO_PI * float(cfg["source"]["delta_ghz"]) / 1000.0


def to_experiment(
    cfg: dict[str, dict[str, object]],
    seed: int,
    trials: int | None = None,
) -> tuple[ExperimentConfig, NoiseModel]:
    """Build the protocol objects from a resolved config dict."""
    label = str(cfg["protocol"]["input_state"])
    inputs = INPUT_LABELS if label == "all" else (label,)
    exp = ExperimentConfig(
        input_states=inputs,
        delta=delta_rad_per_ps(cfg),
        lifetime=float(cfg["source"]["lifetime_ps"]),
        repetition=float(cfg["protocol"]["repetition_ps"]),
        t_echo=float(cfg["spin"]["t_echo_ps"]),
        propagation_delay=float(cfg["protocol"]["propagation_delay_ps"]),
        herald_offset=float(cfg["protocol"]["herald_offset_ps"]),
        herald_window=float(cfg["protocol"]["herald_window_ps"]),
        readout_time=float(cfg["protocol"]["readout_time_ps"]),
        trials=int(trials if trials is not None else cfg["protocol"]["trials"]),
        seed=int(seed),
        periods=int(cfg["protocol"]["periods"]),
        bin_width=float(cfg["tagstream"]["bin_ps"]),
        tau_range=float(cfg["tagstream"]["window_upper_ps"]),
    )
    overlap = float(cfg["interference"]["overlap"])
    if cfg["interference"]["polarization"] == "orthogonal":
        overlap = 0.0
    noise = NoiseModel(
        overlap=overlap,
        jitter_sigma=float(cfg["tagstream"]["jitter_sigma_ps"]),
        t2star=float(cfg["spin"]["t2star_ps"]),
        p_exc=float(cfg["source"]["p_exc"]),
        p_up_init=float(cfg["spin"]["p_up_init"]),
        readout_error=float(cfg["protocol"]["readout_error"]),
        dark_rate=float(cfg["tagstream"]["dark_rate_per_ps"]),
        g2_residual=float(cfg["source"]["g2_residual"]),
    )
    return exp, noise


def dump_toml(cfg: dict[str, dict[str, object]]) -> str:
    """Serialize a resolved config back to diff-friendly TOML."""
    lines: list[str] = []
    for section in DEFAULTS:
        lines.append(f"[{section}]")
        for key in DEFAULTS[section]:
            value = cfg[section][key]
            if isinstance(value, str):
                lines.append(f'{key} = "{value}"')
            elif isinstance(value, bool):
                lines.append(f"{key} = {str(value).lower()}")
            elif isinstance(value, int):
                lines.append(f"{key} = {value}")
            else:
                lines.append(f"{key} = {value!r}")
        lines.append("")
    return "\n".join(lines)
