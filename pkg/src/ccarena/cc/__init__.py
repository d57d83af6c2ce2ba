"""Congestion-control variants, selectable by name."""

from __future__ import annotations

import dataclasses
from typing import Any, Mapping

from .africa import Africa
from .base import CongestionControl
from .bic import Bic
from .compound import Compound
from .cubic import Cubic
from .fusion import Fusion
from .highspeed import HighSpeed
from .htcp import Htcp
from .illinois import Illinois
from .newreno import NewReno
from .scalable import Scalable
from .yeah import Yeah

REGISTRY: dict[str, type[CongestionControl]] = {
    cls.name: cls
    for cls in (Bic, Compound, Cubic, HighSpeed, Htcp, Illinois, Scalable, Fusion, Yeah,
                Africa, NewReno)
}

VARIANTS = sorted(REGISTRY)


class UnknownVariant(KeyError):
    pass


class UnknownParameter(KeyError):
    pass


def known_keys() -> list[str]:
    return sorted(f"{name}.{p}" for name, cls in REGISTRY.items() for p in cls.param_names())


def _coerce(field: dataclasses.Field, value: Any) -> Any:
    if not isinstance(value, str):
        return value
    kind = field.type if isinstance(field.type, str) else getattr(field.type, "__name__", "")
    if kind == "bool":
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{field.name}: not a boolean: {value!r}")
    if kind == "int":
        return int(value)
    return float(value)


def validate_overrides(overrides: Mapping[str, Any]) -> None:
    keys = set(known_keys())
    for key in overrides:
        if key not in keys:
            raise UnknownParameter(key)


def variant_params(name: str, overrides: Mapping[str, Any]) -> dict[str, Any]:
    """Pick the ``name.*`` entries of dotted overrides, typed for that variant."""
    cls = get_class(name)
    fields = {f.name: f for f in dataclasses.fields(cls.Params)}
    out = {}
    for key, value in overrides.items():
        prefix, _, attr = key.partition(".")
        if prefix != name:
            continue
        if attr not in fields:
            raise UnknownParameter(key)
        out[attr] = _coerce(fields[attr], value)
    return out


def get_class(name: str) -> type[CongestionControl]:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownVariant(name) from None


def make(name: str, overrides: Mapping[str, Any] | None = None) -> CongestionControl:
    cls = get_class(name)
    return cls(**variant_params(name, overrides or {}))


__all__ = ["CongestionControl", "REGISTRY", "VARIANTS", "make", "get_class", "known_keys",
           "validate_overrides", "UnknownVariant", "UnknownParameter", "Africa", "Bic",
           "Compound", "Cubic", "Fusion", "HighSpeed", "Htcp", "Illinois", "NewReno",
           "Scalable", "Yeah"]
