"""Run configuration as an INI file with ``[run] [scenario] [model] [optim]`` sections.

Tuples are written ``2, 4``; activity scripts as ``0 1 2 3; 2 0 3 1``.  Every key
can be overridden with ``section.key=value`` or a bare ``key=value`` when the key
name is unique across sections.
"""

from __future__ import annotations

import configparser
import dataclasses
from typing import Dict, Iterable, Tuple

from .data import ScenarioSpec
from .experiment import OptimConfig, RunConfig
from .model import ModelConfig

_SECTIONS = {"scenario": ScenarioSpec, "model": ModelConfig, "optim": OptimConfig}
_RUN_KEYS = ("seed", "dataset", "fold_policy", "output_dir", "max_folds")


class ConfigError(ValueError):
    pass


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(" ".join(str(v) for v in row) for row in value)
        return ", ".join(str(v) for v in value)
    return str(value)


def _parse(text: str, default, key: str):
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return text.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            if default and isinstance(default[0], tuple):
                return tuple(tuple(int(v) for v in row.split()) for row in text.split(";") if row.strip())
            return tuple(type(default[0])(v) for v in text.split(",") if v.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None


def _section_values(obj) -> Dict[str, str]:
    return {f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)}


def dump_config(config: RunConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp["run"] = {k: _format(getattr(config, k)) for k in _RUN_KEYS}
    for name in _SECTIONS:
        cp[name] = _section_values(getattr(config, name))
    lines = []
    for section in cp.sections():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in cp[section].items()]
        lines.append("")
    return "\n".join(lines)


def _apply(config: RunConfig, section: str, key: str, text: str) -> RunConfig:
    if section == "run":
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown key run.{key}")
        return dataclasses.replace(config, **{key: _parse(text, getattr(config, key), f"run.{key}")})
    if section not in _SECTIONS:
        raise ConfigError(f"unknown section [{section}]")
    sub = getattr(config, section)
    if key not in {f.name for f in dataclasses.fields(sub)}:
        raise ConfigError(f"unknown key {section}.{key}")
    sub = dataclasses.replace(sub, **{key: _parse(text, getattr(sub, key), f"{section}.{key}")})
    return dataclasses.replace(config, **{section: sub})


def _locate(key: str) -> Tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
        return section, name
    hits = [s for s in ("run", *_SECTIONS) if
            (key in _RUN_KEYS if s == "run" else key in {f.name for f in dataclasses.fields(_SECTIONS[s])})]
    if not hits:
        raise ConfigError(f"unknown key {key}")
    if len(hits) > 1 and "run" in hits:
        return "run", key
    if len(hits) > 1:
        raise ConfigError(f"ambiguous key {key}; qualify it as one of {[h + '.' + key for h in hits]}")
    return hits[0], key


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0]) from None
    config = base or RunConfig()
    for section in cp.sections():
        for key, value in cp[section].items():
            config = _apply(config, section, key, value)
    return config


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def apply_overrides(config: RunConfig, overrides: Iterable[str]) -> RunConfig:
    """Apply ``key=value`` strings (leading dashes tolerated)."""
    for item in overrides:
        item = item.lstrip("-")
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        section, name = _locate(key.replace("-", "_"))
        config = _apply(config, section, name, value)
    return config
