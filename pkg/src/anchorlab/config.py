"""Run configuration: INI files with per-subcommand sections.

Every key is mirrored by a CLI flag; flags override the file, the file
overrides built-in defaults. A [common] section applies to every
subcommand. Each run writes its resolved configuration next to its
outputs so reruns are reproducible. Secrets (endpoint key) come from the
environment only.
"""

from __future__ import annotations

import configparser
import os

from .errors import ConfigError


def load_config(path):
    parser = configparser.ConfigParser()
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        parser.read(path, encoding="utf-8")
    return parser


def resolve(args_dict, parser, section, defaults):
    """Merge CLI args (None = unset) over config file over defaults."""
    resolved = {}
    for key, default in defaults.items():
        value = args_dict.get(key)
        if value is None:
            value = _from_file(parser, section, key)
        if value is None:
            value = _from_file(parser, "common", key)
        if value is None:
            value = default
        elif default is not None and isinstance(value, str):
            value = _coerce(value, default, key)
        resolved[key] = value
    return resolved


def _from_file(parser, section, key):
    option = key.replace("_", "-")
    if parser.has_option(section, option):
        return parser.get(section, option)
    if parser.has_option(section, key):
        return parser.get(section, key)
    return None


def _coerce(value, default, key):
    try:
        if isinstance(default, bool):
            return value.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, (list, tuple)):
            item_type = type(default[0]) if default else str
            return type(default)(item_type(v) for v in value.replace(",", " ").split())
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse config value {value!r} for {key}") from None
    return value


def write_snapshot(path, section, resolved):
    """Freeze the resolved configuration as an INI file."""
    parser = configparser.ConfigParser()
    parser[section] = {}
    for key, value in sorted(resolved.items()):
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = " ".join(str(v) for v in value)
        parser[section][key.replace("_", "-")] = str(value)
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
