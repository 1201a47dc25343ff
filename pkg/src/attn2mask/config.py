"""INI-style run configuration mapped onto pipeline parameter objects.

Sections mirror the tunable stages (pipeline, densecrf, affinity,
fusion).  Unknown sections or keys are hard errors: a typo must never
silently fall back to a default.
"""

from __future__ import annotations

import configparser

from .affinity import AffinityParams
from .densecrf import CrfParams
from .errors import BadConfig
from .fusion import PipelineConfig, ThresholdGrid


def _parse_gammas(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise BadConfig(f"gammas must be comma-separated floats: {exc}") from exc


_SCHEMA = {
    "pipeline": {
        "method": int,
        "token": int,
        "target_size": int,
        "aggregate_size": int,
        "crf_mode": str,
    },
    "densecrf": {
        "w_appearance": float,
        "theta_alpha": float,
        "theta_beta": float,
        "w_smooth": float,
        "theta_gamma": float,
        "iterations": int,
        "unary_epsilon": float,
        "mask_confidence": float,
    },
    "affinity": {
        "sigma_feature": float,
        "radius": int,
        "beta": float,
        "walk_iters": int,
        "tau_fg": float,
        "tau_bg": float,
    },
    "fusion": {
        "gammas": _parse_gammas,
    },
}


def read_config_file(path) -> dict[str, dict[str, object]]:
    """Parse and type-check a config file into {section: {key: value}}."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise BadConfig(f"malformed config {path}: {exc}") from exc

    values: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise BadConfig(f"unknown config section [{section}]")
        fields = _SCHEMA[section]
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in fields:
                raise BadConfig(f"unknown key {key!r} in section [{section}]")
            try:
                values[section][key] = fields[key](raw)
            except ValueError as exc:
                raise BadConfig(f"bad value for [{section}] {key}: {raw!r}") from exc
    return values


def build_pipeline_config(values=None, **overrides) -> PipelineConfig:
    """Combine file values with keyword overrides (overrides win).

    Override keys use the section names as prefixes for nested params,
    e.g. densecrf_iterations=5; top-level pipeline keys pass through
    unprefixed (method, token, target_size, aggregate_size, crf_mode)
    plus gammas for the fusion grid.
    """
    values = values or {}
    merged: dict[str, object] = {}
    for section, fields in values.items():
        for key, value in fields.items():
            name = key if section in ("pipeline", "fusion") else f"{section}_{key}"
            merged[name] = value
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value

    crf_kwargs = {}
    affinity_kwargs = {}
    pipeline_kwargs = {}
    for key, value in merged.items():
        if key.startswith("densecrf_"):
            crf_kwargs[key[len("densecrf_") :]] = value
        elif key.startswith("affinity_"):
            affinity_kwargs[key[len("affinity_") :]] = value
        elif key == "gammas":
            pipeline_kwargs["grid"] = ThresholdGrid(tuple(value))
        elif key in ("method", "token", "target_size", "aggregate_size", "crf_mode"):
            pipeline_kwargs[key] = value
        else:
            raise BadConfig(f"unknown pipeline option {key!r}")

    try:
        return PipelineConfig(
            crf=CrfParams(**crf_kwargs),
            affinity=AffinityParams(**affinity_kwargs),
            **pipeline_kwargs,
        )
    except (TypeError, ValueError) as exc:
        raise BadConfig(str(exc)) from exc
