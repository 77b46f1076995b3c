"""Declarative run configuration: loading, validation, canonical form.

Configs are written as TOML (preferred for hand-editing) or JSON; the
canonical serialized form embedded in manifests and datasets is JSON with
sorted keys, so parse -> serialize -> parse is the identity on the
document.  Validation is schema-based and reports the JSON path of every
offending field; TOML syntax errors come with line numbers from the
parser.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from realrb.engine import ExperimentConfig, default_lengths


class ConfigError(ValueError):
    """Invalid or malformed run configuration."""


_CHANNEL_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {
            "enum": ["depolarizing", "dephasing", "amplitude_damping", "coherent", "composite"]
        },
        "p": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "gamma": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        "axis": {"type": "string", "pattern": "^[IXYZixyz]+$"},
        "epsilon": {"type": "number"},
        "factors": {"type": "array", "items": {"$ref": "#/$defs/channel"}, "minItems": 1},
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "depolarizing"}}},
            "then": {"required": ["p"]},
        },
        {
            "if": {"properties": {"kind": {"const": "dephasing"}}},
            "then": {"required": ["gamma"]},
        },
        {
            "if": {"properties": {"kind": {"const": "amplitude_damping"}}},
            "then": {"required": ["gamma"]},
        },
        {
            "if": {"properties": {"kind": {"const": "coherent"}}},
            "then": {"required": ["axis", "epsilon"]},
        },
        {
            "if": {"properties": {"kind": {"const": "composite"}}},
            "then": {"required": ["factors"]},
        },
    ],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["n", "noise"],
    "additionalProperties": False,
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "lengths": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
        "max_length": {"type": "integer", "minimum": 4},
        "sequences_per_length": {"type": "integer", "minimum": 2},
        "shots": {"type": "integer", "minimum": 0},
        "noise": {"$ref": "#/$defs/channel"},
        "spam": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "prep_error": {"$ref": "#/$defs/channel"},
                "meas_error": {"$ref": "#/$defs/channel"},
            },
        },
    },
    "$defs": {"channel": _CHANNEL_SCHEMA},
}


def validate_config(doc: dict) -> None:
    """Raise ConfigError listing every schema violation with its JSON path."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            path = "$" + "".join(f"[{p!r}]" if isinstance(p, str) else f"[{p}]" for p in e.absolute_path)
            lines.append(f"{path}: {e.message}")
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))
    if "lengths" in doc and "max_length" in doc:
        raise ConfigError("invalid configuration:\n  $: give either lengths or max_length, not both")


def load_config_document(path: str | Path) -> dict:
    """Parse a TOML or JSON config file into a plain document."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(path.read_text())
        else:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} does not contain a configuration table")
    return doc


def serialize_config(doc: dict) -> str:
    """Canonical JSON form of a config document."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def experiment_from_document(doc: dict, seed_override: int | None = None,
                             shots_override: int | None = None) -> ExperimentConfig:
    """Build the runnable config, applying CLI overrides and defaults.

    A missing seed must be filled by the caller (seed_override); seeds are
    mandatory in everything this package writes out.
    """
    validate_config(doc)
    seed = seed_override if seed_override is not None else doc.get("seed")
    if seed is None:
        raise ConfigError("no seed: set one in the config or pass --seed")
    lengths = doc.get("lengths")
    if lengths is None:
        lengths = default_lengths(doc.get("max_length", 256))
    spam = doc.get("spam", {})
    try:
        return ExperimentConfig(
            n=doc["n"],
            noise=doc["noise"],
            seed=int(seed),
            lengths=tuple(lengths),
            sequences_per_length=doc.get("sequences_per_length", 50),
            shots=shots_override if shots_override is not None else doc.get("shots", 0),
            prep_error=spam.get("prep_error"),
            meas_error=spam.get("meas_error"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
