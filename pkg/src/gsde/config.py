"""Run configuration: file parsing, validation, and CLI-flag merging.

Configs are YAML (JSON is valid YAML) with the sections below; unknown keys
are rejected so typos fail loudly instead of silently using defaults.

    case: example1            # preset selector
    params: {k: 5.0}          # case factory overrides
    uncertainty: {kind: scalar, sigma_sq_lo: [3.5], sigma_sq_hi: [4.0]}
    scenarios: {mode: constant, grid_k: 5, count: 1, seed: 0}
    simulation: {T: 10.0, dt: 0.001, trials: 400, seed: 0, record_stride: 10}
    verification: {lambda: 1.5, tolerance: 1.0e-9, n_samples: 10000,
                   r_lo: 0.1, r_hi: 10.0, seed: 0}
    output: {dir: out, figures: true}
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .errors import ConfigurationError
from .gfunc import UncertaintySet
from .scenarios import CONSTANT, ENDPOINTS, PIECEWISE_RANDOM

SCHEMA_VERSION = 1

OUT_DIR_ENV = "GSDE_OUT"

_TOP_KEYS = {
    "case",
    "params",
    "uncertainty",
    "scenarios",
    "simulation",
    "verification",
    "output",
}
_SCENARIO_KEYS = {"mode", "grid_k", "count", "seed"}
_SIMULATION_KEYS = {"T", "dt", "trials", "seed", "record_stride", "explode_radius"}
_VERIFICATION_KEYS = {"lambda", "tolerance", "n_samples", "r_lo", "r_hi", "seed"}
_OUTPUT_KEYS = {"dir", "figures"}
_UNCERTAINTY_KEYS = {"kind", "sigma_sq_lo", "sigma_sq_hi", "vertices"}
_MODES = {CONSTANT, PIECEWISE_RANDOM, ENDPOINTS}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {sorted(unknown)} under {where!r};"
            f" allowed: {sorted(allowed)}"
        )


def load_config_file(path: str | Path) -> dict:
    """Parse a YAML/JSON config file; parse errors keep their line marks."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return data


@dataclass
class RunConfig:
    """Fully resolved settings for one CLI invocation."""

    case: str | None = None
    case_params: dict = field(default_factory=dict)
    uncertainty: UncertaintySet | None = None
    scenario_mode: str | None = None
    grid_k: int | None = None
    scenario_count: int = 1
    scenario_seed: int = 0
    T: float | None = None
    dt: float | None = None
    trials: int | None = None
    seed: int = 0
    record_stride: int | None = None
    explode_radius: float | None = None
    verify_lambda: float | None = None
    tolerance: float | None = None
    n_samples: int | None = None
    r_lo: float | None = None
    r_hi: float | None = None
    verify_seed: int | None = None
    out_dir: Path = field(default_factory=lambda: Path(os.environ.get(OUT_DIR_ENV, "gsde_out")))
    figures: bool = True

    def validate(self) -> None:
        if self.scenario_mode is not None and self.scenario_mode not in _MODES:
            raise ConfigurationError(
                f"scenario mode must be one of {sorted(_MODES)}, got {self.scenario_mode!r}"
            )
        for name in ("T", "dt"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigurationError(f"{name} must be positive, got {v}")
        if self.trials is not None and self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.grid_k is not None and self.grid_k < 1:
            raise ConfigurationError(f"grid_k must be >= 1, got {self.grid_k}")
        if self.scenario_count < 1:
            raise ConfigurationError("scenario count must be >= 1")
        if self.record_stride is not None and self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        if self.tolerance is not None and self.tolerance < 0:
            raise ConfigurationError("tolerance must be nonnegative")

    def echo(self) -> dict:
        """Deterministic config echo embedded in every summary document."""
        return {
            "case": self.case,
            "case_params": {k: self.case_params[k] for k in sorted(self.case_params)},
            "uncertainty": None if self.uncertainty is None else self.uncertainty.to_config(),
            "scenarios": {
                "mode": self.scenario_mode,
                "grid_k": self.grid_k,
                "count": self.scenario_count,
                "seed": self.scenario_seed,
            },
            "simulation": {
                "T": self.T,
                "dt": self.dt,
                "trials": self.trials,
                "seed": self.seed,
                "record_stride": self.record_stride,
                "explode_radius": self.explode_radius,
            },
            "verification": {
                "lambda": self.verify_lambda,
                "tolerance": self.tolerance,
                "n_samples": self.n_samples,
                "r_lo": self.r_lo,
                "r_hi": self.r_hi,
                "seed": self.verify_seed,
            },
        }


def parse_config(data: dict) -> RunConfig:
    """Validate a raw config mapping and build a RunConfig."""
    _check_keys(data, _TOP_KEYS, "top level")
    cfg = RunConfig()
    if "case" in data:
        if not isinstance(data["case"], str):
            raise ConfigurationError("'case' must be a string")
        cfg.case = data["case"]
    if "params" in data:
        if not isinstance(data["params"], dict):
            raise ConfigurationError("'params' must be a mapping")
        cfg.case_params = dict(data["params"])
    if "uncertainty" in data:
        sec = data["uncertainty"]
        _check_keys(sec, _UNCERTAINTY_KEYS, "uncertainty")
        cfg.uncertainty = UncertaintySet.from_config(sec)
    if "scenarios" in data:
        sec = data["scenarios"]
        _check_keys(sec, _SCENARIO_KEYS, "scenarios")
        cfg.scenario_mode = sec.get("mode", cfg.scenario_mode)
        cfg.grid_k = sec.get("grid_k", cfg.grid_k)
        cfg.scenario_count = int(sec.get("count", cfg.scenario_count))
        cfg.scenario_seed = int(sec.get("seed", cfg.scenario_seed))
    if "simulation" in data:
        sec = data["simulation"]
        _check_keys(sec, _SIMULATION_KEYS, "simulation")
        cfg.T = sec.get("T", cfg.T)
        cfg.dt = sec.get("dt", cfg.dt)
        cfg.trials = sec.get("trials", cfg.trials)
        cfg.seed = int(sec.get("seed", cfg.seed))
        cfg.record_stride = sec.get("record_stride", cfg.record_stride)
        cfg.explode_radius = sec.get("explode_radius", cfg.explode_radius)
    if "verification" in data:
        sec = data["verification"]
        _check_keys(sec, _VERIFICATION_KEYS, "verification")
        cfg.verify_lambda = sec.get("lambda", cfg.verify_lambda)
        cfg.tolerance = sec.get("tolerance", cfg.tolerance)
        cfg.n_samples = sec.get("n_samples", cfg.n_samples)
        cfg.r_lo = sec.get("r_lo", cfg.r_lo)
        cfg.r_hi = sec.get("r_hi", cfg.r_hi)
        cfg.verify_seed = sec.get("seed", cfg.verify_seed)
    if "output" in data:
        sec = data["output"]
        _check_keys(sec, _OUTPUT_KEYS, "output")
        if "dir" in sec:
            cfg.out_dir = Path(sec["dir"])
        cfg.figures = bool(sec.get("figures", cfg.figures))
    cfg.validate()
    return cfg


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply non-None CLI flag overrides onto a parsed config."""
    valid = {f.name for f in fields(RunConfig)}
    for key, value in overrides.items():
        if key not in valid:
            raise ConfigurationError(f"unknown override {key!r}")
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg
