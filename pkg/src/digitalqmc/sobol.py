"""Sobol' generating matrices from direction-number tables.

The table format is the one published by Joe and Kuo: a header line followed
by one line per dimension ``d s a m_1 ... m_s`` where ``s`` is the degree of the
primitive polynomial, ``a`` encodes its interior coefficients and ``m_i`` are the
initial direction integers.  Dimension 1 is implicit (van der Corput).
"""

from __future__ import annotations

import io
import os
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .digital import GeneratorSet, apply_scramble

__all__ = [
    "DIRECTIONS_ENV",
    "DirectionNumberError",
    "direction_integers",
    "load_direction_numbers",
    "sobol_generator",
]

DIRECTIONS_ENV = "DIGITALQMC_DIRECTIONS"
_BUNDLED = "new-joe-kuo-6.21201"


class DirectionNumberError(ValueError):
    """Malformed or insufficient direction-number data."""


def direction_integers(s: int, a: int, m_init, count: int) -> list[int]:
    """Extend the initial direction integers ``m_1..m_s`` to ``count`` values.

    Uses the recurrence
    ``m_i = 2 a_1 m_{i-1} ^ 4 a_2 m_{i-2} ^ ... ^ 2^s m_{i-s} ^ m_{i-s}``
    where ``a_1`` is the most significant bit of ``a``.
    """
    m = [int(v) for v in m_init]
    if len(m) != s:
        raise DirectionNumberError(f"expected {s} initial direction integers, got {len(m)}")
    for i, v in enumerate(m, start=1):
        if v % 2 == 0 or v >= 2**i:
            raise DirectionNumberError(f"m_{i}={v} must be odd and below 2^{i}")
    for i in range(s, count):
        new = m[i - s] ^ (m[i - s] << s)
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                new ^= m[i - k] << k
        m.append(new)
    return m[:count]


def _parse(stream, dim: int) -> list[tuple[int, int, list[int]]]:
    rows = []
    for lineno, raw in enumerate(stream, start=1):
        if len(rows) >= dim - 1:
            break
        line = raw.decode() if isinstance(raw, bytes) else raw
        if lineno == 1 or not line.strip():
            continue
        try:
            fields = [int(v) for v in line.split()]
        except ValueError:
            raise DirectionNumberError(f"line {lineno}: non-integer field") from None
        if len(fields) < 4:
            raise DirectionNumberError(f"line {lineno}: too few fields")
        j, s, a, *m = fields
        if j != len(rows) + 2:
            raise DirectionNumberError(f"line {lineno}: expected dimension {len(rows) + 2}, got {j}")
        if s < 1 or len(m) != s or not 0 <= a < 2 ** max(s - 1, 0):
            raise DirectionNumberError(f"line {lineno}: inconsistent degree/coefficients")
        rows.append((s, a, m))
    if len(rows) < dim - 1:
        raise DirectionNumberError(f"table provides {len(rows) + 1} dimensions, {dim} requested")
    return rows


def load_direction_numbers(source, d: int, m_max: int = 32, precision: int = 53) -> GeneratorSet:
    """Build an unscrambled, unshifted base-2 :class:`GeneratorSet` of dimension ``d``.

    ``source`` is an open text/binary stream, a path, or raw ``bytes``.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if not 1 <= m_max <= precision:
        raise ValueError("need 1 <= m_max <= precision")
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            rows = _parse(fh, d)
    else:
        rows = _parse(source, d)

    columns = np.empty((d, m_max), np.int64)
    columns[0] = [1 << (precision - 1 - ell) for ell in range(m_max)]
    for j, (s, a, m_init) in enumerate(rows, start=1):
        m = direction_integers(s, a, m_init, m_max)
        # v_{l+1} = m_{l+1} / 2^{l+1}, written with t binary digits
        columns[j] = [m[ell] << (precision - 1 - ell) for ell in range(m_max)]
    return GeneratorSet(columns, 2, precision)


def _default_path():
    env = os.environ.get(DIRECTIONS_ENV)
    if env:
        return Path(env)
    return resources.files(__package__).joinpath("data").joinpath(_BUNDLED)


@lru_cache(maxsize=64)
def _cached(d: int, m_max: int, path: str) -> GeneratorSet:
    with open(path, "rb") as fh:
        return load_direction_numbers(fh, d, m_max)


def sobol_generator(d: int, m_max: int = 32, seed=None, scramble: bool | None = None) -> GeneratorSet:
    """Sobol' generator set from the default table.

    With ``seed`` given (and ``scramble`` not False) the set is linearly
    scrambled and digitally shifted.
    """
    gen = _cached(d, m_max, str(_default_path()))
    if scramble is None:
        scramble = seed is not None
    return apply_scramble(gen, seed) if scramble else gen
