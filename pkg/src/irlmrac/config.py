"""YAML experiment files, bundled scenarios and ``key.path=value`` overrides."""

import copy
from pathlib import Path

import numpy as np
import yaml

from irlmrac.core import CostWeights
from irlmrac.errors import ConfigError
from irlmrac.harness import ExperimentConfig
from irlmrac.plant import PRESET_DIR, DisturbanceSchedule, PlantModel, load_plant
from irlmrac.reference import ReferenceSpec

SCENARIOS = ("case1", "case2")

_TOP_KEYS = {"name", "steps", "dt", "actor_rate", "critic_rate", "cost", "convergence",
             "plant", "disturbance", "reference", "update", "init", "quadrature", "seed",
             "divergence_limit"}


_REFERENCE_NUMBERS = ("amplitude", "period", "filter_time_constant",
                      "distortion_amplitude_fraction", "distortion_frequency")


def scenario_path(name):
    path = PRESET_DIR / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown scenario {name!r}; bundled scenarios: {', '.join(SCENARIOS)}")
    return path


def read_raw(path):
    path = Path(path)
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return data


def apply_overrides(data, overrides):
    """Return a copy of ``data`` with each ``a.b.c=value`` assignment applied.

    Values are parsed as YAML scalars or flow collections, so ``true`` and
    ``[0, 1]`` keep their types; numeric text is coerced when the config is built.
    """
    data = copy.deepcopy(data)
    for item in overrides or ():
        key, sep, text = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key.path=value")
        try:
            val = yaml.safe_load(text)
        except yaml.YAMLError:
            raise ConfigError(f"override {item!r} has an unparseable value") from None
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            if not isinstance(node.setdefault(part, {}), dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a section")
            node = node[part]
        node[parts[-1]] = val
    return data


def _matrix_or_identity(value, size, name):
    if value is None or value == "identity":
        return np.eye(size)
    if isinstance(value, (int, float)):
        return float(value) * np.eye(size)
    arr = np.array(value, dtype=float)
    if arr.shape != (size, size):
        raise ConfigError(f"{name} must be 'identity', a scalar or a {size}x{size} matrix")
    return arr


def _number(section, key, default, kind=float):
    value = section.get(key, default)
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms like 1e-3 or 1.0e9 as text
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def from_dict(data, base_dir=None):
    """Build an :class:`ExperimentConfig` from a parsed config mapping."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cost = data.get("cost") or {}
        conv = data.get("convergence") or {}
        update = data.get("update") or {}
        init = data.get("init") or {}
        plant_data = dict(data.get("plant") or {"preset": "aircraft"})
        x0 = plant_data.pop("x0", None)
        preset = plant_data.pop("preset", None)
        if preset is not None:
            plant = load_plant(preset)
        else:
            plant = PlantModel.from_dict(plant_data)
            preset = ""
        ref_data = dict(data.get("reference") or {})
        for key in _REFERENCE_NUMBERS:
            if key in ref_data:
                ref_data[key] = _number(ref_data, key, None)
        if base_dir is not None and "table_csv" in ref_data:
            ref_data["table_csv"] = str(Path(base_dir) / ref_data["table_csv"])
        disturbance = data.get("disturbance") or []
        schedule = (DisturbanceSchedule(disturbance) if disturbance
                    else DisturbanceSchedule.identity())
        return ExperimentConfig(
            name=str(data.get("name", "custom")),
            steps=_number(data, "steps", 180, int),
            dt=_number(data, "dt", 0.1),
            actor_rate=_number(data, "actor_rate", 0.5),
            critic_rate=_number(data, "critic_rate", 0.5),
            cost=CostWeights(_matrix_or_identity(cost.get("Q"), 3, "cost.Q"),
                             _number(cost, "R", 1.0)),
            tol=_number(conv, "tol", 1e-8),
            window=_number(conv, "window", 10, int),
            plant=plant,
            plant_preset=preset,
            x0=x0,
            disturbance=schedule,
            reference=ReferenceSpec.from_dict(ref_data),
            mode=str(update.get("mode", "residual")),
            normalize=bool(update.get("normalize", True)),
            h_min=_number(update, "h_min", 1e-6),
            critic_init=_matrix_or_identity(init.get("critic"), 4, "init.critic"),
            actor_init=init.get("actor"),
            quadrature=str(data.get("quadrature", "left")),
            seed=_number(data, "seed", 0, int),
            divergence_limit=_number(data, "divergence_limit", 1e9),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def to_dict(cfg):
    plant = {"preset": cfg.plant_preset} if cfg.plant_preset else cfg.plant.to_dict()
    plant["x0"] = cfg.x0.tolist()
    return {
        "name": cfg.name,
        "steps": cfg.steps,
        "dt": cfg.dt,
        "actor_rate": cfg.actor_rate,
        "critic_rate": cfg.critic_rate,
        "cost": {"Q": cfg.cost.Q.tolist(), "R": cfg.cost.R},
        "convergence": {"tol": cfg.tol, "window": cfg.window},
        "plant": plant,
        "disturbance": cfg.disturbance.to_list(),
        "reference": cfg.reference.to_dict(),
        "update": {"mode": cfg.mode, "normalize": cfg.normalize, "h_min": cfg.h_min},
        "init": {"critic": cfg.critic_init.tolist(), "actor": cfg.actor_init.tolist()},
        "quadrature": cfg.quadrature,
        "seed": cfg.seed,
        "divergence_limit": cfg.divergence_limit,
    }


def load_raw(scenario=None, path=None):
    if (scenario is None) == (path is None):
        raise ConfigError("give exactly one of a scenario name or a config path")
    source = scenario_path(scenario) if scenario is not None else Path(path)
    return read_raw(source), source.parent


def load_config(scenario=None, path=None, overrides=()):
    """Load, override and validate an experiment configuration."""
    data, base = load_raw(scenario, path)
    cfg = from_dict(apply_overrides(data, overrides), base_dir=base)
    return cfg.validate()
