"""Layered configuration: defaults < TOML file < environment < command-line overrides.

The file has one table per component::

    [experiment]   # ExperimentConfig fields
    [ama]          # AmaConfig fields (its optimizer comes from [optimizer])
    [optimizer]    # OptimizerConfig fields, shared by every algorithm
    [resources]    # ResourceModel fields

Environment variables ``AMA_MIS_<SECTION>__<KEY>`` override file values, and
``--set section.key=value`` flags override both. Values from the environment
and flags are parsed as TOML literals, falling back to plain strings.
"""

from __future__ import annotations

import dataclasses
import os
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .ama import AmaConfig
from .ansatz import ResourceModel
from .bench import ExperimentConfig
from .optimizer import ConfigError, OptimizerConfig

ENV_PREFIX = "AMA_MIS_"

SECTIONS = {
    "experiment": ExperimentConfig,
    "ama": AmaConfig,
    "optimizer": OptimizerConfig,
    "resources": ResourceModel,
}
_NESTED = {"ama", "optimizer", "resources"}


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)} - _NESTED


def parse_literal(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _merge(tree: dict, section: str, key: str, value: Any, origin: str) -> None:
    if section not in SECTIONS:
        raise ConfigError(f"{section}: unknown config section ({origin}); expected one of {sorted(SECTIONS)}")
    if key not in _field_names(SECTIONS[section]):
        raise ConfigError(f"{section}.{key}: unknown config key ({origin})")
    tree.setdefault(section, {})[key] = value


def _build(cls, values: Mapping[str, Any], section: str, **extra):
    kwargs = dict(values)
    if cls is ResourceModel and "cnot_overrides" in kwargs:
        kwargs["cnot_overrides"] = {int(k): v for k, v in kwargs["cnot_overrides"].items()}
    for name, val in list(kwargs.items()):
        if isinstance(val, list):
            kwargs[name] = tuple(val)
    try:
        return cls(**kwargs, **extra)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def load_tree(path: Optional[Union[str, Path]] = None,
              overrides: Sequence[str] = (),
              env: Optional[Mapping[str, str]] = None) -> dict[str, dict[str, Any]]:
    """Collect raw key/values from the file, environment and overrides, validating key paths."""
    tree: dict[str, dict[str, Any]] = {}
    if path is not None:
        try:
            raw = tomllib.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
        for section, body in raw.items():
            if not isinstance(body, dict):
                raise ConfigError(f"{section}: expected a [section] table in {path}")
            for key, value in body.items():
                _merge(tree, section, key, value, str(path))
    env = os.environ if env is None else env
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX) or "__" not in name[len(ENV_PREFIX):]:
            continue
        section, key = name[len(ENV_PREFIX):].lower().split("__", 1)
        _merge(tree, section, key, parse_literal(env[name]), f"env {name}")
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"{item}: override must look like section.key=value")
        dotted, text = item.split("=", 1)
        section, key = dotted.strip().split(".", 1)
        _merge(tree, section, key, parse_literal(text.strip()), "--set")
    return tree


def build_config(tree: Mapping[str, Mapping[str, Any]]) -> ExperimentConfig:
    optimizer = _build(OptimizerConfig, tree.get("optimizer", {}), "optimizer")
    ama = _build(AmaConfig, tree.get("ama", {}), "ama", optimizer=optimizer)
    resources = _build(ResourceModel, tree.get("resources", {}), "resources")
    return _build(ExperimentConfig, tree.get("experiment", {}), "experiment",
                  ama=ama, optimizer=optimizer, resources=resources)


def load_config(path: Optional[Union[str, Path]] = None, overrides: Sequence[str] = (),
                env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    return build_config(load_tree(path, overrides, env))


def _toml_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, Mapping):
        return "{" + ", ".join(f'"{k}" = {_toml_value(x)}' for k, x in sorted(v.items())) + "}"
    raise TypeError(f"cannot render {v!r}")


def dumps_config(cfg: ExperimentConfig) -> str:
    """Fully resolved configuration as TOML; ``None`` (size-dependent default) keys are omitted."""
    parts = {
        "experiment": cfg,
        "ama": cfg.ama,
        "optimizer": cfg.optimizer,
        "resources": cfg.resources,
    }
    lines = []
    for section, obj in parts.items():
        lines.append(f"[{section}]")
        for name in sorted(_field_names(type(obj))):
            value = getattr(obj, name)
            if value is None:
                lines.append(f"# {name} = <size-dependent default>")
            else:
                lines.append(f"{name} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)
