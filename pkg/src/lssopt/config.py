"""TOML configuration for experiments.

Layout::

    [experiment]            # ExperimentSpec fields
    method = "lss"
    objective = "toy1d"
    runs = 20
    budget = 120

    [lss]                   # LssConfig scalar fields
    step_fraction = 0.08
    [lss.schedules]         # EpochSchedules fields
    [lss.t_low]             # {kind, params}
    [lss.t_high]
    [lss.softmax]           # eta1, eta2, eps
    [[lss.arms]]            # surrogate arms

    [[compare]]             # optional extra specs for `bench`; override [experiment]
    method = "sa"
    sa_step_fraction = 0.02
"""
from __future__ import annotations

import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .annealer import CoolingSchedule
from .bench import ExperimentSpec
from .core import EpochSchedules, LssConfig
from .errors import ConfigError, InvalidInputError
from .policies import SoftmaxParams

_NESTED_LSS = {"schedules", "t_low", "t_high", "softmax", "arms", "initial_states"}


def _check_keys(table: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(unknown)}")


def _schedule(table: Any, where: str) -> CoolingSchedule:
    if not isinstance(table, Mapping):
        raise ConfigError(f"[{where}] must be a table with kind and params")
    _check_keys(table, {"kind", "params"}, where)
    try:
        return CoolingSchedule(table["kind"], tuple(table["params"]))
    except (KeyError, TypeError, InvalidInputError) as exc:
        raise ConfigError(f"bad schedule in [{where}]: {exc}") from None


def lss_from_dict(table: Mapping[str, Any], base: LssConfig | None = None) -> LssConfig:
    base = base or LssConfig()
    names = {f.name for f in fields(LssConfig)}
    _check_keys(table, names, "lss")
    kw: dict[str, Any] = {k: v for k, v in table.items() if k not in _NESTED_LSS}
    try:
        if "schedules" in table:
            sched = dict(table["schedules"])
            _check_keys(sched, {f.name for f in fields(EpochSchedules)}, "lss.schedules")
            kw["schedules"] = EpochSchedules(**sched)
        for name in ("t_low", "t_high"):
            if name in table:
                kw[name] = _schedule(table[name], f"lss.{name}")
        if "softmax" in table:
            kw["softmax"] = SoftmaxParams(**table["softmax"])
        if "arms" in table:
            kw["arms"] = tuple(dict(a) for a in table["arms"])
        if "initial_states" in table:
            kw["initial_states"] = tuple(tuple(float(v) for v in s) for s in table["initial_states"])
        cfg = replace(base, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [lss] section: {exc}") from None
    return cfg


def spec_from_dict(table: Mapping[str, Any], lss: LssConfig | None = None) -> ExperimentSpec:
    names = {f.name for f in fields(ExperimentSpec)} - {"lss"}
    _check_keys(table, names, "experiment")
    try:
        spec = ExperimentSpec(**dict(table), lss=lss or LssConfig())
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [experiment] section: {exc}") from None
    spec.validate()
    return spec


def load_config(data: Mapping[str, Any]) -> list[ExperimentSpec]:
    """Parse a config mapping into one spec, plus one per ``[[compare]]`` entry."""
    _check_keys(data, {"experiment", "lss", "compare"}, "top level")
    lss = lss_from_dict(data.get("lss", {}))
    base = dict(data.get("experiment", {}))
    specs = [spec_from_dict(base, lss)]
    for extra in data.get("compare", []):
        specs.append(spec_from_dict({**base, **extra}, lss))
    return specs


def load_config_file(path: str | Path) -> list[ExperimentSpec]:
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {p}: {exc}") from None
    return load_config(data)
