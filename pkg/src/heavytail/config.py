"""Experiment configs: a flat key = value format with an [experiment] section.

Example::

    [experiment]
    kind = sssi
    seed = 7
    alpha = 0.8
    beta = 0.5
    gamma = 2.0
    replicates = 20000

Unknown keys are rejected; every key has a documented type and, unless
required, a default.  All randomness in a run derives from ``seed``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError


@dataclass(frozen=True)
class Field:
    name: str
    kind: str  # int | float | str | bool | floats
    default: object = None  # None marks a required field
    required: bool = False
    doc: str = ""


_COMMON = [
    Field("kind", "str", required=True, doc="experiment kind"),
    Field("seed", "int", 0, doc="master seed; every stream derives from it"),
    Field("plots", "bool", True, doc="render SVG plots alongside the CSV"),
]

SCHEMAS = {
    "subordinator": [
        *_COMMON,
        Field("betas", "floats", (0.3, 0.5, 0.8), doc="subordinator indices"),
        Field("samples", "int", 100_000, doc="MC sample size per beta"),
        Field("moment_rtol", "float", 0.02, doc="tolerance on E M_beta(1)"),
        Field("overshoot_beta", "float", 0.5, doc="index for the restart identity"),
        Field("overshoot_r", "float", 1.0, doc="restart time r"),
        Field("overshoot_t", "float", 1.0, doc="forward horizon t"),
        Field("overshoot_samples", "int", 50_000, doc="MC size for the identity"),
        Field("overshoot_ks_tol", "float", 0.02, doc="KS tolerance"),
    ],
    "chain-fclt": [
        *_COMMON,
        Field("beta", "float", 0.5, doc="chain recurrence index"),
        Field("n", "int", 100_000, doc="path length"),
        Field("replicates", "int", 10_000, doc="independent paths"),
        Field("ks_tol", "float", 0.03, doc="KS tolerance vs the mixture limit"),
        Field("an_replicates", "int", 400, doc="MC paths for the a_n check"),
        Field("an_rtol", "float", 0.1, doc="tolerance on a_n against exact"),
    ],
    "entrance-fclt": [
        *_COMMON,
        Field("beta", "float", 0.5, doc="chain recurrence index"),
        Field("n", "int", 100_000, doc="window size"),
        Field("replicates", "int", 10_000, doc="independent paths"),
        Field("cdf_ks_tol", "float", 0.02, doc="entrance-fraction CDF tolerance"),
        Field("marginal_ks_tol", "float", 0.03, doc="shifted-marginal tolerance"),
    ],
    "sssi": [
        *_COMMON,
        Field("alpha", "float", required=True, doc="stability index"),
        Field("beta", "float", required=True, doc="memory index"),
        Field("gamma", "float", required=True, doc="inner stable index"),
        Field("replicates", "int", 20_000, doc="paths per ensemble"),
        Field("budget_j", "int", 400, doc="series truncation"),
        Field("scale_c", "float", 2.0, doc="self-similarity scale factor"),
        Field("shifts", "floats", (0.5, 1.0), doc="increment-stationarity shifts"),
        Field("cf_tol", "float", 0.03, doc="CF discrepancy tolerance"),
        Field("hurst_tol", "float", 0.05, doc="Hurst regression tolerance"),
    ],
    "main-fclt": [
        *_COMMON,
        Field("alpha", "float", required=True, doc="stability index"),
        Field("beta", "float", 0.5, doc="chain recurrence index"),
        Field("n", "int", 100_000, doc="partial-sum window"),
        Field("replicates", "int", 10_000, doc="simulated paths"),
        Field("budget_j", "int", 150, doc="series truncation"),
        Field("theta_max", "float", 3.0, doc="CF grid endpoint"),
        Field("cf_tol", "float", 0.05, doc="CF discrepancy tolerance"),
        Field("slope_tol", "float", 0.05, doc="c_n slope tolerance"),
        Field(
            "corrected_scale",
            "bool",
            True,
            doc="use the tail-matching 2**(1/alpha) limit-scale factor",
        ),
    ],
    "moments": [
        *_COMMON,
        Field("p_pos", "float", 1.5, doc="positive-case moment order"),
        Field("p_sym", "float", 2.5, doc="symmetric-case moment order"),
        Field("mc_size", "int", 200_000, doc="MC size per spec"),
        Field("oracle_rtol", "float", 0.02, doc="tolerance vs series oracles"),
    ],
}

KINDS = tuple(SCHEMAS)


def _convert(field: Field, raw: str):
    try:
        if field.kind == "int":
            return int(raw)
        if field.kind == "float":
            return float(raw)
        if field.kind == "bool":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if field.kind == "floats":
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return raw.strip()
    except ValueError:
        raise ConfigError(
            f"field '{field.name}' expects type {field.kind}, got {raw!r}"
        ) from None


def validate(values: dict) -> dict:
    """Type-check a raw {key: string} mapping against its kind's schema."""
    kind = values.get("kind")
    if kind is None:
        raise ConfigError("missing required field 'kind'")
    if kind not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; known kinds: {', '.join(KINDS)}"
        )
    schema = {f.name: f for f in SCHEMAS[kind]}
    out = {}
    for key, raw in values.items():
        if key not in schema:
            raise ConfigError(f"unknown field '{key}' for kind '{kind}'")
        out[key] = raw if not isinstance(raw, str) else _convert(schema[key], raw)
    for f in SCHEMAS[kind]:
        if f.name not in out:
            if f.required:
                raise ConfigError(f"missing required field '{f.name}'")
            out[f.name] = f.default
    _sanity(out)
    return out


def _sanity(cfg: dict):
    for key in ("samples", "replicates", "mc_size", "n", "budget_j"):
        if key in cfg and cfg[key] is not None and cfg[key] <= 0:
            raise ConfigError(f"field '{key}' must be positive, got {cfg[key]}")
    if "seed" in cfg and not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must fit in 64 bits")


def load_config(path: str, seed_override: Optional[int] = None) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "experiment" not in parser:
        raise ConfigError(f"{path}: missing [experiment] section")
    values = dict(parser["experiment"])
    cfg = validate(values)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    return cfg


def describe_kind(kind: str) -> str:
    if kind not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; known kinds: {', '.join(KINDS)}"
        )
    from .experiments import KIND_DOCS

    lines = [f"kind: {kind}", "", KIND_DOCS[kind].strip(), "", "fields:"]
    for f in SCHEMAS[kind]:
        req = "required" if f.required else f"default {f.default!r}"
        lines.append(f"  {f.name} ({f.kind}, {req}) - {f.doc}")
    return "\n".join(lines)
