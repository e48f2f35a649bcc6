"""Run configuration: config-file loading, flag merging, digests.

A run is described by a flat key/value mapping.  Values may come from a
JSON config file, with explicitly passed command-line flags overriding
file values and built-in defaults filling the rest.  The resolved mapping
is hashed into a short digest that deterministic artifacts embed, so any
output can be traced back to the exact configuration that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one command invocation."""

    subcommand: str
    params: dict

    def digest(self) -> str:
        blob = json.dumps(
            {"subcommand": self.subcommand, "params": self.params},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def load_config_file(path) -> dict:
    """Flat JSON object of defaults; keys mirror the long flag names."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object of flat keys")
    for key, value in doc.items():
        if isinstance(value, (dict, list)):
            raise ValueError(f"config key {key!r} must be a scalar, not nested")
    return doc


def resolve_params(
    subcommand: str,
    cli_values: dict,
    file_values: dict,
    defaults: dict,
) -> RunConfig:
    """Merge precedence: explicit flag > config file > default.

    ``cli_values`` holds None for flags the user did not pass.  Unknown
    config-file keys are rejected so typos fail loudly.
    """
    unknown = set(file_values) - set(defaults)
    if unknown:
        raise ValueError(
            f"unknown config key(s) for {subcommand}: {', '.join(sorted(unknown))}"
        )
    params = {}
    for key, default in defaults.items():
        cli_v = cli_values.get(key)
        if cli_v is not None:
            params[key] = cli_v
        elif key in file_values:
            params[key] = file_values[key]
        else:
            params[key] = default
    return RunConfig(subcommand=subcommand, params=params)
