"""Scenario configuration: parsing, validation and round-trip serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .geometry import PRESET_NAMES


class ConfigError(ValueError):
    """Raised for malformed or inconsistent scenario configurations."""


_DEFAULTS = {
    "layouts": ["bumper_6x8"],
    "wavelength": 0.0039,
    "trajectory": {"start": 160.0, "end": 80.0, "interval": 8.0, "step": 1.0},
    "azimuth_grid": {"min_deg": -10.0, "max_deg": 10.0, "step_deg": 0.2},
    "height_grid": {"min": 0.0, "max": 1.5, "step": 0.02},
    "coarse_height_bins": 5,
    "rho_grid": [-0.1, -0.3, -0.5, -0.7, -0.9],
    "rho_true": -0.6,
    "snr_db": [0.0],
    "trials": 1,
    "methods": ["gs"],
    "labels_option": "b",
    "strategy": "iii",
    "sparsity": 2,
    "pooling": "mean",
    "dtw": 0.05,
    "protocol": "highest",
    "gamma": "auto",
    "gamma_mode": "training",
    "gamma_trials": 100,
    "gamma_percentile": 99.0,
    "gamma_azimuth": "auto",
    "range_weighting": "inverse",
    "seed": 0,
    "skip_azimuth": True,
    "n_targets": 1,
    "scene_mode": "same_azimuth",
    "snap_on_grid": True,
    "baseline_antenna_height": 1.1,
    "baseline_snr_gain_db": "auto",
    "burg_order": 4,
    "music_subspace": 2,
    "timing": False,
}

_METHODS = ("gs", "sbys", "music", "burg")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated sweep configuration with all defaults filled in."""

    layouts: tuple
    wavelength: float
    trajectory: dict
    azimuth_grid: dict
    height_grid: dict
    coarse_height_bins: int
    rho_grid: tuple
    rho_true: complex
    snr_db: tuple
    trials: int
    methods: tuple
    labels_option: str
    strategy: str
    sparsity: int
    pooling: str
    dtw: float
    protocol: str
    gamma: object
    gamma_mode: str
    gamma_trials: int
    gamma_percentile: float
    gamma_azimuth: object
    range_weighting: str
    seed: int
    skip_azimuth: bool
    n_targets: int
    scene_mode: str
    snap_on_grid: bool
    baseline_antenna_height: float
    baseline_snr_gain_db: object
    burg_order: int
    music_subspace: int
    timing: bool

    def azimuth_values(self) -> np.ndarray:
        g = self.azimuth_grid
        deg = np.arange(g["min_deg"], g["max_deg"] + g["step_deg"] / 2,
                        g["step_deg"])
        return np.deg2rad(deg)

    def height_values(self) -> np.ndarray:
        g = self.height_grid
        return np.arange(g["min"], g["max"] + g["step"] / 2, g["step"])

    def coarse_height_values(self) -> np.ndarray:
        g = self.height_grid
        return np.linspace(g["min"], g["max"], self.coarse_height_bins)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("layouts", "methods", "snr_db"):
            d[key] = list(d[key])
        d["rho_grid"] = [_plain_number(r) for r in self.rho_grid]
        d["rho_true"] = _plain_number(self.rho_true)
        return d


def _plain_number(value):
    value = complex(value)
    return value.real if value.imag == 0.0 else [value.real, value.imag]


def _as_complex(value, key):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"{key}: expected a number or [re, im] pair, "
                      f"got {value!r}")


def _check_subdict(value, key, fields):
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected a mapping with keys {fields}")
    unknown = set(value) - set(fields)
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    missing = set(fields) - set(value)
    if missing:
        raise ConfigError(f"{key}: missing keys {sorted(missing)}")
    return {k: float(value[k]) for k in fields}


def config_from_dict(raw: dict) -> ScenarioConfig:
    """Validate a raw mapping and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    d = dict(_DEFAULTS)
    d.update(raw)

    layouts = tuple(d["layouts"])
    if not layouts:
        raise ConfigError("layouts: need at least one preset")
    for name in layouts:
        if name not in PRESET_NAMES:
            raise ConfigError(f"layouts: unknown preset {name!r} "
                              f"(available: {', '.join(PRESET_NAMES)})")
    if float(d["wavelength"]) <= 0:
        raise ConfigError("wavelength must be positive")
    traj = _check_subdict(d["trajectory"], "trajectory",
                          ("start", "end", "interval", "step"))
    az = _check_subdict(d["azimuth_grid"], "azimuth_grid",
                        ("min_deg", "max_deg", "step_deg"))
    hg = _check_subdict(d["height_grid"], "height_grid",
                        ("min", "max", "step"))
    snr = tuple(float(s) for s in d["snr_db"])
    if not snr:
        raise ConfigError("snr_db: need at least one SNR point")
    if int(d["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    methods = tuple(str(m) for m in d["methods"])
    for m in methods:
        if m not in _METHODS:
            raise ConfigError(f"methods: unknown method {m!r} "
                              f"(available: {', '.join(_METHODS)})")
    if d["labels_option"] not in ("a", "b"):
        raise ConfigError("labels_option must be 'a' or 'b'")
    if d["strategy"] not in ("i", "ii", "iii"):
        raise ConfigError("strategy must be one of 'i', 'ii', 'iii'")
    if d["pooling"] not in ("mean", "max"):
        raise ConfigError("pooling must be 'mean' or 'max'")
    if d["protocol"] not in ("highest", "per_target"):
        raise ConfigError("protocol must be 'highest' or 'per_target'")
    if float(d["dtw"]) <= 0:
        raise ConfigError("dtw must be positive")
    for key in ("gamma", "gamma_azimuth"):
        if not (d[key] == "auto" or isinstance(d[key], (int, float))):
            raise ConfigError(f"{key} must be 'auto' or a number")
    if d["gamma_mode"] not in ("training", "noise"):
        raise ConfigError("gamma_mode must be 'training' or 'noise'")
    if d["range_weighting"] not in ("inverse", "none"):
        raise ConfigError("range_weighting must be 'inverse' or 'none'")
    if d["baseline_snr_gain_db"] != "auto" and not isinstance(
            d["baseline_snr_gain_db"], (int, float)):
        raise ConfigError("baseline_snr_gain_db must be 'auto' or a number")
    if int(d["n_targets"]) not in (1, 2):
        raise ConfigError("n_targets must be 1 or 2")
    if d["scene_mode"] not in ("same_azimuth", "2d"):
        raise ConfigError("scene_mode must be 'same_azimuth' or '2d'")
    rho_grid = tuple(_as_complex(r, "rho_grid") for r in d["rho_grid"])
    if not rho_grid:
        raise ConfigError("rho_grid: need at least one value")

    return ScenarioConfig(
        layouts=layouts,
        wavelength=float(d["wavelength"]),
        trajectory=traj,
        azimuth_grid=az,
        height_grid=hg,
        coarse_height_bins=int(d["coarse_height_bins"]),
        rho_grid=rho_grid,
        rho_true=_as_complex(d["rho_true"], "rho_true"),
        snr_db=snr,
        trials=int(d["trials"]),
        methods=methods,
        labels_option=str(d["labels_option"]),
        strategy=str(d["strategy"]),
        sparsity=int(d["sparsity"]),
        pooling=str(d["pooling"]),
        dtw=float(d["dtw"]),
        protocol=str(d["protocol"]),
        gamma=d["gamma"] if d["gamma"] == "auto" else float(d["gamma"]),
        gamma_mode=str(d["gamma_mode"]),
        gamma_trials=int(d["gamma_trials"]),
        gamma_percentile=float(d["gamma_percentile"]),
        gamma_azimuth=(d["gamma_azimuth"] if d["gamma_azimuth"] == "auto"
                       else float(d["gamma_azimuth"])),
        range_weighting=str(d["range_weighting"]),
        seed=int(d["seed"]),
        skip_azimuth=bool(d["skip_azimuth"]),
        n_targets=int(d["n_targets"]),
        scene_mode=str(d["scene_mode"]),
        snap_on_grid=bool(d["snap_on_grid"]),
        baseline_antenna_height=float(d["baseline_antenna_height"]),
        baseline_snr_gain_db=d["baseline_snr_gain_db"],
        burg_order=int(d["burg_order"]),
        music_subspace=int(d["music_subspace"]),
        timing=bool(d["timing"]),
    )


def parse_config(path) -> ScenarioConfig:
    """Load and validate a YAML scenario configuration file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}")
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def serialize_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True)
