"""Sectioned key=value run configuration.

Schema::

    [run]
    scenario = spring        ; spring | sine | abs | linear
    h = 1e-3                 ; optional, overrides the scenario step
    tf = 20                  ; optional, overrides the scenario horizon

    [params]
    lam = 1.0                ; any field of the scenario config dataclass

    [pe]
    L = 6.283185307179586    ; excitation window; omit the section to skip
    delta = 1.0              ; optional required level, defaults to the measured one
    stride = 1

Keys given on the command line as ``key=value`` land in ``[params]`` unless
written as ``section.key``. ``lambda`` is accepted for ``lam`` and
``x3_star = adaptive`` (or ``none``) selects the on-line slip target.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import re
from dataclasses import dataclass, field

from .errors import ConfigError

ALIASES = {"lambda": "lam", "x3*": "x3_star", "l_patch": "L_patch"}
RUN_KEYS = {"scenario": str, "h": float, "tf": float}
PE_KEYS = {"L": float, "delta": float, "stride": int}
NONE_WORDS = {"none", "adaptive", "auto", ""}


@dataclass
class RunSpec:
    scenario: str = "spring"
    params: dict = field(default_factory=dict)
    h: float | None = None
    tf: float | None = None
    pe_L: float | None = None
    pe_delta: float | None = None
    pe_stride: int = 1
    overrides: list = field(default_factory=list)


def _line_of(text: str, section: str, key: str):
    current = None
    for no, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip().lower()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return no
    return None


def _coerce(kind, key, raw, line=None):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if kind is int:
            return int(raw)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        return str(raw).strip()
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key!r}", key=key, line=line) from None


def _field_kind(cls, name):
    f = {x.name: x for x in dataclasses.fields(cls)}[name]
    d = f.default
    if name == "x3_star":
        return "optional_float"
    if isinstance(d, bool):
        return bool
    if isinstance(d, (int, float)):
        return float
    return str


def coerce_param(cls, key: str, raw, line=None):
    """Canonical name and typed value for a scenario config field."""
    name = ALIASES.get(key.lower(), key)
    names = {x.name for x in dataclasses.fields(cls)}
    if name not in names:
        raise ConfigError(f"unknown parameter {key!r} for {cls.__name__}", key=key, line=line)
    kind = _field_kind(cls, name)
    if kind == "optional_float":
        if str(raw).strip().lower() in NONE_WORDS:
            return name, None
        return name, _coerce(float, key, raw, line)
    return name, _coerce(kind, key, raw, line)


def parse_text(text: str, source="<config>") -> RunSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.ParsingError as exc:
        errors = getattr(exc, "errors", None)
        line = errors[0][0] if errors else getattr(exc, "lineno", None)
        raise ConfigError(f"cannot parse {source}: {exc.message.splitlines()[0]}", line=line) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"cannot parse {source}: {exc}", key=getattr(exc, "option", None), line=line) from None

    spec = RunSpec()
    for section in cp.sections():
        sec = section.lower()
        if sec not in ("run", "params", "pe"):
            line = next((no for no, raw in enumerate(text.splitlines(), 1) if raw.strip() == f"[{section}]"), None)
            raise ConfigError(f"unknown section [{section}]", key=section, line=line)
        for key, raw in cp.items(section):
            line = _line_of(text, sec, key)
            if sec == "run":
                if key not in RUN_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [run]", key=key, line=line)
                setattr(spec, key, _coerce(RUN_KEYS[key], key, raw, line))
            elif sec == "pe":
                if key not in PE_KEYS:
                    raise ConfigError(f"unknown key {key!r} in [pe]", key=key, line=line)
                setattr(spec, f"pe_{key}", _coerce(PE_KEYS[key], key, raw, line))
            else:
                spec.params[key] = (raw, line)
    return spec


def load(path) -> RunSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text, source=str(path))


def apply_override(spec: RunSpec, item: str) -> None:
    """Fold one ``[section.]key=value`` item into ``spec``."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value", key=item)
    key, raw = (s.strip() for s in item.split("=", 1))
    if not key:
        raise ConfigError(f"override {item!r} has an empty key", key=item)
    section, _, name = key.rpartition(".")
    section = section.lower() or "params"
    if section == "run":
        if name not in RUN_KEYS:
            raise ConfigError(f"unknown key {name!r} in [run]", key=name)
        setattr(spec, name, _coerce(RUN_KEYS[name], name, raw))
    elif section == "pe":
        if name not in PE_KEYS:
            raise ConfigError(f"unknown key {name!r} in [pe]", key=name)
        setattr(spec, f"pe_{name}", _coerce(PE_KEYS[name], name, raw))
    elif section == "params":
        spec.params[name] = (raw, None)
    else:
        raise ConfigError(f"unknown section {section!r} in override {item!r}", key=key)
    spec.overrides.append(f"{key}={raw}")


def build_config(cls, params: dict):
    """Instantiate ``cls`` from raw ``{key: (text, line)}`` entries."""
    kwargs = {}
    for key, (raw, line) in params.items():
        name, value = coerce_param(cls, key, raw, line)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        key = next(iter(kwargs), None)
        raise ConfigError(f"invalid {cls.__name__}: {exc}", key=key) from None
