"""Flat ``key = value`` experiment configs.

Grammar: UTF-8 text, one ``key = value`` per line, ``#`` starts a comment,
blank lines are ignored, and a key given on several lines forms a list in
order of appearance.  Keys outside the command's schema are rejected.
The ``NLSE_SEED`` environment variable overrides ``base_seed``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        out.setdefault(key, []).append(value)
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read(), str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc


def _bool(s: str) -> bool:
    if s.lower() in ("1", "true", "yes", "on"):
        return True
    if s.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


CASTS = {"int": int, "float": float, "str": str, "bool": _bool}


@dataclass(frozen=True)
class Key:
    kind: str
    multi: bool = False
    default: object = None


def resolve(raw: dict, schema: dict, source: str = "<config>") -> dict:
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}; allowed: {sorted(schema)}")
    out = {}
    for name, key in schema.items():
        vals = raw.get(name)
        if vals is None:
            out[name] = key.default
            continue
        if not key.multi and len(vals) > 1:
            raise ConfigError(f"{source}: key {name!r} given {len(vals)} times")
        try:
            cast = [CASTS[key.kind](v) for v in vals]
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {name!r}: {exc}") from exc
        out[name] = tuple(cast) if key.multi else cast[0]
    seed = os.environ.get("NLSE_SEED")
    if seed is not None and "base_seed" in schema:
        out["base_seed"] = int(seed)
    return out


SWEEP_SCHEMA = {
    "fixture": Key("str", True, ()),
    "mode": Key("str", True, ("additive",)),
    "k": Key("int", True, (4,)),
    "n": Key("int", True, (256,)),
    "eps1": Key("float", True, (0.25,)),
    "eps2": Key("float", True, (0.1,)),
    "eps": Key("float", True, (0.25,)),
    "delta": Key("float", True, (0.05,)),
    "C": Key("float", True, (6.0,)),
    "m": Key("int", True, ()),
    "trials": Key("int", False, 100),
    "samples": Key("int", False, 1000),
    "base_seed": Key("int", False, 0),
    "workers": Key("int", False, 1),
    "probes": Key("bool", False, True),
}

CS_SCHEMA = {
    "fixture": Key("str", True, ("tanh",)),
    "depth": Key("int", True, (2,)),
    "k": Key("int", True, (4,)),
    "n": Key("int", True, (128,)),
    "m": Key("int", True, ()),
    "noise": Key("float", True, (0.0,)),
    "trials": Key("int", False, 20),
    "restarts": Key("int", False, 20),
    "iters": Key("int", False, 2000),
    "step": Key("float", False, 1.0),
    "pairs": Key("int", False, 1000),
    "eps1": Key("float", False, 0.5),
    "eps2": Key("float", False, 0.1),
    "delta": Key("float", False, 0.05),
    "C": Key("float", False, 6.0),
    "base_seed": Key("int", False, 0),
    "workers": Key("int", False, 1),
}
