"""Text formats for D2 sequences.

``SHD2 v1`` stores float coefficients; ``SHD2X v1`` stores exact rationals as
numerator/denominator pairs.  Both start with the header lines ``mu=``, ``nu1=``,
``nu2=``, ``d=``, ``size=`` and list only nonzero entries, one per line, in
row-major order.  Output is a pure function of the input, so files hash-compare.
"""

from __future__ import annotations

import hashlib
from fractions import Fraction
from pathlib import Path

import numpy as np

from .d2seq import D2Sequence
from .errors import DomainMismatch

__all__ = ["write_shd2", "read_shd2", "write_shd2x", "read_shd2x", "file_sha256", "FormatError"]

_MAGIC_FLOAT = "SHD2 v1"
_MAGIC_EXACT = "SHD2X v1"
_HEADER_KEYS = ("mu", "nu1", "nu2", "d", "size")


class FormatError(ValueError):
    """Malformed sequence file."""


def _header(U: D2Sequence, params) -> list[str]:
    mu, nu1, nu2 = (Fraction(p) if not isinstance(p, float) else Fraction(repr(p)) for p in params)
    return [f"mu={mu}", f"nu1={nu1}", f"nu2={nu2}", f"d={Fraction(U.d)}", f"size={U.size}"]


def _params_of(params):
    if hasattr(params, "mu"):
        return params.mu, params.nu1, params.nu2
    return params


def write_shd2(path, U: D2Sequence, params) -> None:
    """Write float coefficients; values use ``repr`` so they round-trip exactly."""
    if U.kind == "interval":
        raise ValueError("SHD2 stores point sequences only")
    c = U.to_float().coeffs
    lines = [_MAGIC_FLOAT] + _header(U, _params_of(params))
    for n1, n2 in zip(*np.nonzero(c)):
        lines.append(f"{n1} {n2} {float(c[n1, n2])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_shd2x(path, U: D2Sequence, params) -> None:
    """Write exact rational coefficients as ``n1 n2 num den``."""
    if U.kind != "exact":
        raise ValueError("SHD2X stores exact sequences only")
    c = U.coeffs
    lines = [_MAGIC_EXACT] + _header(U, _params_of(params))
    for n1 in range(U.size + 1):
        for n2 in range(U.size + 1):
            v = Fraction(c[n1, n2])
            if v:
                lines.append(f"{n1} {n2} {v.numerator} {v.denominator}")
    Path(path).write_text("\n".join(lines) + "\n")


def _parse(path, magic: str) -> tuple[dict, list[list[str]]]:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != magic:
        raise FormatError(f"{path}: expected first line {magic!r}")
    head = {}
    for i, key in enumerate(_HEADER_KEYS, start=1):
        if i >= len(text) or not text[i].startswith(key + "="):
            raise FormatError(f"{path}: missing header line {key}=")
        head[key] = text[i][len(key) + 1:].strip()
    try:
        head = {k: (int(v) if k == "size" else Fraction(v)) for k, v in head.items()}
    except ValueError as exc:
        raise FormatError(f"{path}: bad header value ({exc})") from None
    if head["size"] < 0:
        raise FormatError(f"{path}: negative size")
    rows = [ln.split() for ln in text[len(_HEADER_KEYS) + 1:] if ln.strip()]
    return head, rows


def _index(row, size, path) -> tuple[int, int]:
    n1, n2 = int(row[0]), int(row[1])
    if not (0 <= n1 <= size and 0 <= n2 <= size):
        raise FormatError(f"{path}: index ({n1}, {n2}) outside 0..{size}")
    return n1, n2


def read_shd2(path) -> tuple[D2Sequence, dict]:
    head, rows = _parse(path, _MAGIC_FLOAT)
    size = head["size"]
    c = np.zeros((size + 1, size + 1))
    for row in rows:
        if len(row) != 3:
            raise FormatError(f"{path}: expected 'n1 n2 value', got {' '.join(row)!r}")
        c[_index(row, size, path)] = float(row[2])
    return D2Sequence(c, head["d"]), head


def read_shd2x(path) -> tuple[D2Sequence, dict]:
    head, rows = _parse(path, _MAGIC_EXACT)
    size = head["size"]
    c = np.full((size + 1, size + 1), Fraction(0), dtype=object)
    for row in rows:
        if len(row) != 4:
            raise FormatError(f"{path}: expected 'n1 n2 num den', got {' '.join(row)!r}")
        den = int(row[3])
        if den <= 0:
            raise FormatError(f"{path}: nonpositive denominator")
        c[_index(row, size, path)] = Fraction(int(row[2]), den)
    return D2Sequence(c, head["d"]), head


def check_header(head: dict, params) -> None:
    """Raise :class:`DomainMismatch` if a file header disagrees with ``params``."""
    for key in ("mu", "nu1", "nu2", "d"):
        if head[key] != getattr(params, key):
            raise DomainMismatch(f"file has {key}={head[key]}, run uses {getattr(params, key)}")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
