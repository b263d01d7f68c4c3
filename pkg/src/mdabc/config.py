"""Versioned JSON experiment configuration.

A configuration file looks like::

    {
      "schema_version": 1,
      "name": "mixture_table1",
      "model": {"name": "mixture", "n_obs": 100},
      "theta_true": [-2.0, 0.5, 1.0, 1.0],
      "methods": [{"label": "CvM", "distance": "cvm", "m_sim": 100}],
      "sampler": {"n_particles": 1024, "sim_budget": 200000},
      "n_replications": 20,
      "master_seed": 20240101
    }

``theta_true`` is in the model's internal parameterization.  A sweep adds
``"zeta_grid"`` and a ``"contamination"`` block (whose ``zeta`` is then
replaced by each grid value) to ``"model"``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, fields
from pathlib import Path

import jsonschema

from .exceptions import ConfigError, IoFailure

SCHEMA_VERSION = 1

_NUMBER = {"type": "number"}
_COUNT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "model", "theta_true", "methods", "master_seed"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "model": {
            "type": "object",
            "required": ["name", "n_obs"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["mixture", "gk", "mg1", "sv"]},
                "n_obs": _COUNT,
                "burn_in": {"type": "integer", "minimum": 0},
                "canonical": {"type": "boolean"},
                "contamination": {
                    "type": ["object", "null"],
                    "required": ["alpha", "nu"],
                    "additionalProperties": False,
                    "properties": {
                        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
                        "zeta": _NUMBER,
                        "nu": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "theta_true": {"type": "array", "items": _NUMBER, "minItems": 1},
        "methods": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "distance"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "distance": {"enum": ["hellinger", "cvm", "wasserstein"]},
                    "m_sim": _COUNT,
                    "p": {"type": "number", "minimum": 1},
                    "kde_method": {"enum": ["direct", "binned"]},
                    "grid_points": {"type": "integer", "minimum": 64},
                    "quantile_coupling": {"type": "boolean"},
                },
            },
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_particles": {"type": "integer", "minimum": 2},
                "sim_budget": _COUNT,
                "alpha_quantile": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "ess_threshold_fraction": {"type": "number", "minimum": 0, "maximum": 1},
                "move_steps": _COUNT,
                "rw_scale": {"type": "number", "exclusiveMinimum": 0},
                "adapt_move_steps": {"type": "boolean"},
                "move_prob_target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_move_steps": _COUNT,
                "stagnation_tol": {"type": "number", "minimum": 0},
                "stagnation_stages": _COUNT,
                "n_threads": _COUNT,
            },
        },
        "n_replications": _COUNT,
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "zeta_grid": {"type": "array", "items": _NUMBER, "minItems": 1},
        "replicate_per_zeta": {"type": "boolean"},
    },
}


def validate_config_dict(d: dict) -> None:
    """Raise ConfigError unless ``d`` matches :data:`CONFIG_SCHEMA`."""
    try:
        jsonschema.validate(d, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def config_from_dict(d: dict):
    """Validate ``d`` and build an :class:`~mdabc.experiments.ExperimentConfig`."""
    from .distances import DistanceKind
    from .experiments import ExperimentConfig, MethodSpec
    from .models import ContaminationSpec, ModelSpec, ParameterVector
    from .samplers import SmcConfig

    validate_config_dict(d)
    try:
        m = d["model"]
        cont = m.get("contamination")
        contamination = None
        if cont is not None:
            contamination = ContaminationSpec(cont["alpha"], cont.get("zeta", 0.0), cont["nu"])
        model = ModelSpec(m["name"], m["n_obs"], None, contamination, m.get("burn_in", 0), m.get("canonical", True))
        methods = tuple(
            MethodSpec(x["label"], DistanceKind(x["distance"], x.get("p", 1.0)), x.get("m_sim", model.n_obs),
                       x.get("kde_method", "binned"), x.get("grid_points", 512), x.get("quantile_coupling", False))
            for x in d["methods"]
        )
        return ExperimentConfig(
            model=model,
            methods=methods,
            sampler=SmcConfig(**d.get("sampler", {})),
            n_replications=d.get("n_replications", 1),
            theta_true=ParameterVector(d["theta_true"], model.param_names),
            master_seed=d["master_seed"],
            zeta_grid=tuple(d["zeta_grid"]) if "zeta_grid" in d else None,
            replicate_per_zeta=d.get("replicate_per_zeta", False),
            name=d.get("name", ""),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_dict(cfg) -> dict:
    """Inverse of :func:`config_from_dict`."""
    model = cfg.model
    m = {"name": model.name, "n_obs": model.n_obs}
    if model.burn_in:
        m["burn_in"] = model.burn_in
    if not model.canonical:
        m["canonical"] = False
    if model.contamination is not None:
        m["contamination"] = asdict(model.contamination)
    d = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "model": m,
        "theta_true": cfg.theta_true.values.tolist(),
        "methods": [
            {"label": x.label, "distance": x.kind.name, "m_sim": x.m_sim, "p": x.kind.p,
             "kde_method": x.kde_method, "grid_points": x.grid_points, "quantile_coupling": x.quantile_coupling}
            for x in cfg.methods
        ],
        "sampler": {f.name: getattr(cfg.sampler, f.name) for f in fields(cfg.sampler)},
        "n_replications": cfg.n_replications,
        "master_seed": cfg.master_seed,
    }
    if cfg.zeta_grid is not None:
        d["zeta_grid"] = list(cfg.zeta_grid)
        d["replicate_per_zeta"] = cfg.replicate_per_zeta
    return d


def load_config(path):
    """Read, validate and build a config from a JSON file.

    Raises
    ------
    ConfigError
        If the file is missing, is not JSON or does not match the schema.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return config_from_dict(d)


def bundled_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package, e.g. ``"mixture_table1"``."""
    p = Path(__file__).parent / "configs" / (name if name.endswith(".json") else name + ".json")
    if not p.exists():
        raise ConfigError(f"no bundled config named {name!r}")
    return p


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))
