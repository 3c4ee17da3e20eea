"""Run configuration: flat ``section.key = value`` files (TOML syntax) merged over defaults.

Angles are given in degrees in config files (keys ending in ``_deg``).
Covariances keep their native units: mm^2 for positions, rad^2 for angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .estimator import EstimatorConfig, NoiseConfig
from .kinematics import QuadratureSpec, SegmentGeometry, ShapeParams
from .simulator import SimConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    geometry: SegmentGeometry = field(default_factory=SegmentGeometry)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    validate_trials: int = 100
    validate_seed: int = 0
    validate_spread: float = 0.5
    output_dataset: str = "dataset.csv"
    output_estimates: str = "estimates.csv"


def _defaults() -> dict[str, dict]:
    e = EstimatorConfig()
    s = SimConfig()
    return {
        "geometry": {"L": 60.0},
        "quadrature": {"n_nodes": 32, "n_panels": 1},
        "sim": {
            "w_nominal": s.w_nominal.as_array().tolist(),
            "offset_fraction": s.offset_fraction,
            "n_samples": s.n_samples,
            "noise_pos": s.noise_pos,
            "noise_ang_deg": 1.0,
            "seed": s.seed,
            "input_mode": s.input_mode,
        },
        "estimator": {
            "x0": e.x0,
            "Px0": float(e.Px0[0, 0]),
            "w0": e.w0.tolist(),
            "Pw0_diag": np.diag(e.Pw0).tolist(),
            "Qv": float(e.noise.Qv[0, 0]),
            "Qr_diag": np.diag(e.noise.Qr).tolist(),
            "Rn_diag": np.diag(e.noise.Rn).tolist(),
            "Re_diag": np.diag(e.noise.Re).tolist(),
            "coupled": e.coupled,
            "param_state": e.param_state,
            "clamp_l": e.clamp_l,
        },
        "validate": {"n_trials": 100, "seed": 0, "spread": 0.5},
        "output": {"dataset": "dataset.csv", "estimates": "estimates.csv"},
    }


def _merge(base: dict, override: dict, source: str) -> dict:
    out = {sec: dict(vals) for sec, vals in base.items()}
    for sec, vals in override.items():
        if sec not in out or not isinstance(vals, dict):
            raise ConfigError(f"{source}: unknown section {sec!r}")
        for key, val in vals.items():
            if key not in out[sec]:
                raise ConfigError(f"{source}: unknown key {sec}.{key}")
            if isinstance(val, dict):
                raise ConfigError(f"{source}: {sec}.{key} must be a value, not a table")
            out[sec][key] = val
    return out


def parse_config(text: str, source: str = "<string>", seed: int | None = None) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    merged = _merge(_defaults(), raw, source)
    if seed is not None:
        merged["sim"]["seed"] = seed
        merged["validate"]["seed"] = seed
    try:
        return _build(merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path: str | Path | None = None, seed: int | None = None) -> RunConfig:
    if path is None:
        return parse_config("", "<defaults>", seed)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path), seed)


def _build(c: dict) -> RunConfig:
    geometry = SegmentGeometry(L=float(c["geometry"]["L"]))
    quadrature = QuadratureSpec(int(c["quadrature"]["n_nodes"]), int(c["quadrature"]["n_panels"]))
    s = c["sim"]
    sim = SimConfig(
        w_nominal=ShapeParams.from_array(s["w_nominal"]),
        offset_fraction=float(s["offset_fraction"]),
        n_samples=int(s["n_samples"]),
        noise_pos=float(s["noise_pos"]),
        noise_ang=math.radians(float(s["noise_ang_deg"])),
        seed=int(s["seed"]),
        input_mode=str(s["input_mode"]),
    )
    e = c["estimator"]
    noise = NoiseConfig(
        Qv=np.diag([float(e["Qv"])]),
        Qr=np.diag(np.asarray(e["Qr_diag"], dtype=float)),
        Rn=np.diag(np.asarray(e["Rn_diag"], dtype=float)),
        Re=np.diag(np.asarray(e["Re_diag"], dtype=float)),
    )
    estimator = EstimatorConfig(
        x0=float(e["x0"]),
        Px0=float(e["Px0"]),
        w0=np.asarray(e["w0"], dtype=float),
        Pw0=np.diag(np.asarray(e["Pw0_diag"], dtype=float)),
        noise=noise,
        coupled=bool(e["coupled"]),
        param_state=str(e["param_state"]),
        clamp_l=bool(e["clamp_l"]),
    )
    v = c["validate"]
    if int(v["n_trials"]) < 1:
        raise ValueError("validate.n_trials must be at least 1")
    return RunConfig(
        sim=sim,
        estimator=estimator,
        geometry=geometry,
        quadrature=quadrature,
        validate_trials=int(v["n_trials"]),
        validate_seed=int(v["seed"]),
        validate_spread=float(v["spread"]),
        output_dataset=str(c["output"]["dataset"]),
        output_estimates=str(c["output"]["estimates"]),
    )


def dump_defaults() -> str:
    """Default configuration as config-file text."""
    lines = []
    for sec, vals in _defaults().items():
        for key, val in vals.items():
            if isinstance(val, bool):
                txt = "true" if val else "false"
            elif isinstance(val, str):
                txt = f'"{val}"'
            elif isinstance(val, list):
                txt = "[" + ", ".join(repr(float(x)) for x in val) + "]"
            else:
                txt = repr(val)
            lines.append(f"{sec}.{key} = {txt}")
    return "\n".join(lines) + "\n"
