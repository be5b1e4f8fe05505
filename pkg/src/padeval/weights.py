"""Balanced class weights, inversely proportional to class frequency."""

from __future__ import annotations

import csv
import io
from typing import Mapping

from padeval.errors import PadEvalError
from padeval.rounding import round_half_up


def class_weights(counts: Mapping[str, int]) -> dict[str, float]:
    """``weight_i = N_samples / (N_classes * samples_i)`` for every class.

    >>> class_weights({"a": 100, "b": 100})
    {'a': 1.0, 'b': 1.0}
    """
    if len(counts) < 2:
        raise PadEvalError("class weights need at least 2 classes")
    for name, n in counts.items():
        if isinstance(n, bool) or not isinstance(n, int):
            raise PadEvalError(f"count for {name!r} must be an integer, got {n!r}")
        if n < 1:
            raise PadEvalError(f"count for {name!r} must be >= 1, got {n}")
    total = sum(counts.values())
    k = len(counts)
    return {name: total / (k * n) for name, n in counts.items()}


def _count(name: str, token: str) -> int:
    token = token.strip()
    if not token.isdigit():
        raise PadEvalError(f"count for {name!r} is not a non-negative integer: {token!r}")
    return int(token)


def parse_counts_inline(text: str) -> dict[str, int]:
    """Parse ``"bonafide=100,attack=100"``."""
    out: dict[str, int] = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise PadEvalError(f"expected name=count, got {item!r}")
        if name in out:
            raise PadEvalError(f"class {name!r} given twice")
        out[name] = _count(name, value)
    return out


def parse_counts_csv(text: str) -> dict[str, int]:
    """Parse a two-column ``class,count`` CSV with that header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["class", "count"]:
        raise PadEvalError("counts CSV must start with the header 'class,count'")
    out: dict[str, int] = {}
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise PadEvalError(f"row {line}: expected 2 columns, found {len(row)}")
        name = row[0].strip()
        if name in out:
            raise PadEvalError(f"row {line}: class {name!r} given twice")
        out[name] = _count(name, row[1])
    return out


def format_weights(weights: Mapping[str, float], places: int = 4) -> str:
    lines = ["class,weight"]
    lines += [f"{name},{round_half_up(w, places)}" for name, w in weights.items()]
    return "\n".join(lines) + "\n"
