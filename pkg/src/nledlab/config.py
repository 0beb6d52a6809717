"""Flat ``key = value`` config files with dotted keys.

Example::

    # Born-Infeld pulse through a tilted background
    model.kind = bi
    model.kappa = 1.0
    background.bx = 1
    background.by = 1
    background.bz = 1
    grid.n = 4096

Blank lines and ``#`` comments are ignored.  Values stay strings here; the
consumers convert them.
"""
from __future__ import annotations


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key.lower()] = value
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def section(cfg: dict, name: str) -> dict:
    """Keys under ``name.`` with the prefix stripped."""
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in cfg.items() if k.startswith(prefix)}


def dump_config(cfg: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(cfg.items()))
