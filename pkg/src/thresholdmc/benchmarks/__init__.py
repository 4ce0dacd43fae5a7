"""Bundled threshold automata and specification files."""
from __future__ import annotations

import os

_HERE = os.path.dirname(__file__)


def path(name: str) -> str:
    """Absolute path of a bundled benchmark file, e.g. path('strb.ta')."""
    p = os.path.join(_HERE, name)
    if not os.path.exists(p):
        raise FileNotFoundError(f"no bundled benchmark {name!r}")
    return p


def load(name: str) -> str:
    with open(path(name), "r", encoding="utf-8") as handle:
        return handle.read()
