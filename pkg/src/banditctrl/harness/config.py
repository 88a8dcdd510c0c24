"""TOML experiment configuration loading and validation."""

import os
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..bco_base import MODES, REGIMES
from ..errors import ConfigError
from ..plant import NOISE_KINDS, LinearPlant
from .presets import plant_from_preset

COST_FAMILIES = ("quadratic", "smooth_convex", "nonsmooth")


@dataclass
class ExperimentConfig:
    plant: LinearPlant
    K0: np.ndarray  # may be None when synthesized at build time
    target_gamma: float
    noise_kind: str
    noise_params: dict
    noise_seed: int
    cost_family: str
    cost_params: dict
    cost_seed: int
    target_radius: float
    target_step: float
    regime: str
    mode: str
    eta_scale: float
    curvature: float
    reg_scale: float
    horizons: list
    seeds: list
    epsilon: float
    comparator_fixed_M: bool
    comparator_restarts: int
    comparator_fixed_K: bool
    grid_points: int
    output_dir: str
    plot: bool
    radius_inflate: float
    raw: dict = field(repr=False, default_factory=dict)


def _get(table, key, kind, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default
    value = table[key]
    if kind is float and isinstance(value, (int, float)) \
            and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return int(value)
    if not isinstance(value, kind):
        raise ConfigError(f"key {key!r} must be {kind.__name__}, "
                          f"got {type(value).__name__}")
    return value


def _build_plant(table):
    preset_name = table.get("preset")
    W = _get(table, "W", float)
    if preset_name is not None:
        plant, spec = plant_from_preset(preset_name, W=W)
        k0 = spec.get("K0")
        k0 = None if k0 is None else np.asarray(k0, dtype=float)
        if "K0" in table:
            k0 = np.asarray(table["K0"], dtype=float)
        tg = _get(table, "target_gamma", float,
                  default=spec.get("target_gamma", 0.5))
        return plant, k0, tg
    if "A" not in table or "B" not in table:
        raise ConfigError("plant table needs either a preset or explicit "
                          "A and B matrices")
    if W is None:
        raise ConfigError("explicit plants must set the noise bound W")
    plant = LinearPlant(A=np.asarray(table["A"], dtype=float),
                        B=np.asarray(table["B"], dtype=float), W=W)
    k0 = table.get("K0")
    k0 = None if k0 is None else np.asarray(k0, dtype=float)
    tg = _get(table, "target_gamma", float, default=0.5)
    return plant, k0, tg


def parse_config(raw: dict) -> ExperimentConfig:
    for section in ("plant", "noise", "cost", "run"):
        if section not in raw:
            raise ConfigError(f"missing [{section}] table")
    plant, k0, target_gamma = _build_plant(raw["plant"])

    noise = raw["noise"]
    kind = _get(noise, "kind", str, required=True)
    if kind not in NOISE_KINDS:
        raise ConfigError(f"unknown noise kind {kind!r}; "
                          f"choices: {sorted(NOISE_KINDS)}")
    noise_params = {key: noise[key] for key in noise
                    if key not in ("kind", "seed")}
    noise_seed = _get(noise, "seed", int, default=0)

    cost = raw["cost"]
    family = _get(cost, "family", str, required=True)
    if family not in COST_FAMILIES:
        raise ConfigError(f"unknown cost family {family!r}; "
                          f"choices: {sorted(COST_FAMILIES)}")
    skip = ("family", "seed", "target_radius", "target_step")
    cost_params = {key: cost[key] for key in cost if key not in skip}
    cost_seed = _get(cost, "seed", int, default=0)
    target_radius = _get(cost, "target_radius", float, default=0.0)
    target_step = _get(cost, "target_step", float, default=0.0)

    run = raw["run"]
    regime = _get(run, "regime", str, required=True)
    if regime not in REGIMES:
        raise ConfigError(f"unknown regime {regime!r}; choices: {REGIMES}")
    mode = _get(run, "mode", str, default="theorem")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choices: {MODES}")
    horizons = _get(run, "T", list, required=True)
    if not horizons or not all(
            isinstance(t, int) and not isinstance(t, bool) and t >= 3
            for t in horizons):
        raise ConfigError("run.T must be a nonempty list of integers >= 3")
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigError("run.T values must be strictly increasing")
    seeds = _get(run, "seeds", list, default=[0])
    if not seeds or not all(
            isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigError("run.seeds must be a nonempty list of integers")

    comp = raw.get("comparator", {})
    out = raw.get("output", {})
    debug = raw.get("debug", {})

    return ExperimentConfig(
        plant=plant,
        K0=k0,
        target_gamma=target_gamma,
        noise_kind=kind,
        noise_params=noise_params,
        noise_seed=noise_seed,
        cost_family=family,
        cost_params=cost_params,
        cost_seed=cost_seed,
        target_radius=target_radius,
        target_step=target_step,
        regime=regime,
        mode=mode,
        eta_scale=_get(run, "eta_scale", float, default=1.0),
        curvature=_get(run, "curvature", float, default=1.0),
        reg_scale=_get(run, "reg_scale", float, default=1.0),
        horizons=[int(t) for t in horizons],
        seeds=[int(s) for s in seeds],
        epsilon=_get(run, "epsilon", float, default=0.0),
        comparator_fixed_M=_get(comp, "best_fixed_M", bool, default=True),
        comparator_restarts=_get(comp, "restarts", int, default=10),
        comparator_fixed_K=_get(comp, "best_fixed_K", bool, default=False),
        grid_points=_get(comp, "grid_points", int, default=801),
        output_dir=_get(out, "dir", str, default="out"),
        plot=_get(out, "plot", bool, default=True),
        radius_inflate=_get(debug, "radius_inflate", float, default=1.0),
        raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"could not parse {path}: {exc}") from exc
    return parse_config(raw)


def worker_count() -> int:
    """Worker processes for experiment cells, from BANDITCTRL_WORKERS."""
    value = os.environ.get("BANDITCTRL_WORKERS", "1")
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(
            f"BANDITCTRL_WORKERS must be an integer, got {value!r}")
    if n < 1:
        raise ConfigError("BANDITCTRL_WORKERS must be at least 1")
    return n
