"""Flat JSON configuration.

Every key is optional; unknown keys are rejected. Physical constants use the
``physics.<name>`` prefix (a nested ``"physics": {...}`` object is flattened
to the same keys).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..fsi import PhysicalParams, SchemeConfig, SchemeKind
from .norms import NormKind
from .studies import SCALINGS, StudySpec


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


def _number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r}: expected a number, got {v!r}")
    return float(v)


def _integer(key, v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"config key {key!r}: expected a positive integer, got {v!r}")
    return v


def _optional_integer(key, v):
    return None if v is None else _integer(key, v)


def _boolean(key, v):
    if not isinstance(v, bool):
        raise ConfigError(f"config key {key!r}: expected true or false, got {v!r}")
    return v


def _string(key, v):
    if not isinstance(v, str):
        raise ConfigError(f"config key {key!r}: expected a string, got {v!r}")
    return v


def _list_of(conv):
    def check(key, v):
        if not isinstance(v, list) or not v:
            raise ConfigError(f"config key {key!r}: expected a nonempty list, got {v!r}")
        return [conv(key, x) for x in v]

    return check


def _choice(options):
    def check(key, v):
        if v not in options:
            raise ConfigError(f"config key {key!r}: expected one of {sorted(options)}, got {v!r}")
        return v

    return check


SCHEME_KEYS = {
    "scheme": _choice({k.value for k in SchemeKind}),
    "beta": _number,
    "dt": _number,
    "T": _number,
    "nx": _integer,
    "ny": _optional_integer,
    "element": _choice({"mini", "p1isop2"}),
    "tol": _number,
    "lumped_mass": _boolean,
    "lumped_traction_mass": _boolean,
    "check_invariants": _boolean,
}

STUDY_KEYS = {
    "beta_list": _list_of(_number),
    "dt_list": _list_of(_number),
    "dt_ref": _number,
    "reference_beta": _number,
    "nx_list": _list_of(_integer),
    "scalings": _list_of(_choice(set(SCALINGS))),
    "dt0": _number,
    "reference": _choice({"per_mesh", "finest"}),
    "ref_nx": _optional_integer,
    "norms": _list_of(_choice({k.value for k in NormKind})),
    "stability_threshold": _number,
}

OUTPUT_KEYS = {
    "output_dir": _string,
    "snapshot_every": lambda k, v: 0 if v == 0 else _integer(k, v),
}

PHYSICS_KEYS = {f"physics.{name}": _number for name in PhysicalParams.field_names()}

ALL_KEYS = {**SCHEME_KEYS, **STUDY_KEYS, **OUTPUT_KEYS, **PHYSICS_KEYS}


@dataclass(frozen=True)
class Config:
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def params(self) -> PhysicalParams:
        kw = {k.split(".", 1)[1]: v for k, v in self.values.items() if k.startswith("physics.")}
        try:
            return PhysicalParams(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def scheme_config(self, **defaults) -> SchemeConfig:
        kw = dict(defaults)
        kw.update({k: v for k, v in self.values.items() if k in SCHEME_KEYS})
        try:
            return SchemeConfig(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def study_spec(self, thick: bool) -> StudySpec:
        v = self.values
        kw = {"params": self.params()}
        if thick:
            kw.update(scheme=SchemeKind.SPLIT_THICK, betas=(1.0,))
        elif "scheme" in v:
            kw["scheme"] = v["scheme"]
        if "beta_list" in v:
            kw["betas"] = tuple(v["beta_list"])
        elif "beta" in v:
            kw["betas"] = (v["beta"],)
        if "dt_list" in v:
            kw["dts"] = tuple(v["dt_list"])
        for src, dst in (("dt_ref", "dt_ref"), ("T", "T"), ("nx", "nx"), ("ny", "ny"), ("reference_beta", "reference_beta"),
                         ("dt0", "dt0"), ("reference", "reference"), ("ref_nx", "ref_nx"),
                         ("lumped_mass", "lumped_mass"), ("stability_threshold", "stability_threshold")):
            if src in v:
                kw[dst] = v[src]
        for src in ("nx_list", "scalings", "norms"):
            if src in v:
                kw[src] = tuple(v[src])
        try:
            return StudySpec(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_values(self, **kw) -> "Config":
        return replace(self, values={**self.values, **kw})


def parse_config(data: dict) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    flat = {}
    for key, val in data.items():
        if key == "physics":
            if not isinstance(val, dict):
                raise ConfigError("config key 'physics': expected an object")
            for k, x in val.items():
                flat[f"physics.{k}"] = x
        else:
            flat[key] = val
    out = {}
    for key, val in flat.items():
        if key not in ALL_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = ALL_KEYS[key](key, val)
    return Config(out)


def load_config(path) -> Config:
    if path is None:
        return Config()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    return parse_config(data)
