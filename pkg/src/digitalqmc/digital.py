"""Digitwise base-b arithmetic, digital nets, scrambling and the wavenumber pairing.

Points are stored at a fixed precision ``t``: each coordinate is an integer
encoding ``x_j = sum_{l=1}^{t} x_{jl} b^{t-l}``, so the digit ``x_{j1}`` is the
most significant one.  Digitwise addition of two such encodings never produces
an infinite trail of ``b - 1`` digits, which means the associativity pathology
of digitwise addition on the full cube cannot occur here: every set of
encodings closed under addition is a group and a vector space over ``F_b``.

Wavenumbers are non-negative integers ``k_j = sum_l k_{jl} b^l`` (least
significant digit first).  Base 2 is the fast path: addition is XOR and the
pairing is a popcount parity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "DigitalPoint",
    "GeneratorSet",
    "apply_scramble",
    "basis_pairings",
    "bilinear",
    "default_precision",
    "digit_add",
    "digit_negate",
    "encodings_to_floats",
    "floats_to_encodings",
    "in_dual_net",
    "net_point",
    "pairing",
    "wavenumber_add",
    "wavenumber_negate",
]

_MANTISSA_BITS = 53
# Points in a prefix block are cached in chunks of b**_BLOCK_LEVEL (at most).
_BLOCK_LEVEL = 16


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n**0.5) + 1))


def _check_base(base: int) -> None:
    if not _is_prime(base):
        raise ValueError(f"base must be a prime, got {base}")


def default_precision(base: int) -> int:
    """Largest ``t`` with ``base**t <= 2**53``; 53 for base 2."""
    _check_base(base)
    t = 0
    while base ** (t + 1) <= 2**_MANTISSA_BITS:
        t += 1
    return t


# -- digit helpers on integer arrays -----------------------------------------


def _to_digits(x, base: int, precision: int) -> np.ndarray:
    """Digits of point encodings, most significant first: shape ``x.shape + (t,)``."""
    x = np.asarray(x, dtype=np.int64)
    powers = base ** np.arange(precision - 1, -1, -1, dtype=np.int64)
    return (x[..., None] // powers) % base


def _from_digits(digits, base: int) -> np.ndarray:
    digits = np.asarray(digits, dtype=np.int64)
    t = digits.shape[-1]
    powers = base ** np.arange(t - 1, -1, -1, dtype=np.int64)
    return (digits * powers).sum(axis=-1)


def _wavenumber_digits(k, base: int, ndigits: int) -> np.ndarray:
    """Digits of wavenumbers, least significant first: shape ``k.shape + (ndigits,)``."""
    k = np.asarray(k, dtype=np.int64)
    powers = base ** np.arange(ndigits, dtype=np.int64)
    return (k[..., None] // powers) % base


def add_encodings(x, y, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    """Digitwise sum of two encoding arrays (broadcasting)."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if base == 2:
        return np.bitwise_xor(x, y)
    s = (_to_digits(x, base, precision) + _to_digits(y, base, precision)) % base
    return _from_digits(s, base)


def scale_encodings(x, a: int, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    """``a x = x (+) ... (+) x`` (``a`` times) for ``a`` in ``F_b``."""
    x = np.asarray(x, dtype=np.int64)
    a %= base
    if base == 2:
        return x if a else np.zeros_like(x)
    return _from_digits((_to_digits(x, base, precision) * a) % base, base)


def negate_encodings(x, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if base == 2:
        return x.copy()
    return _from_digits((-_to_digits(x, base, precision)) % base, base)


def encodings_to_floats(x, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    """Map encodings to points of ``[0, 1)``; exact for base 2 at ``t <= 53``."""
    return np.asarray(x, dtype=np.int64).astype(np.float64) / float(base**precision)


def floats_to_encodings(x, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    """Inverse of :func:`encodings_to_floats` (exact for base 2)."""
    return np.rint(np.asarray(x, dtype=np.float64) * float(base**precision)).astype(np.int64)


# -- single points --------------------------------------------------------------


@dataclass(frozen=True)
class DigitalPoint:
    """A point of ``[0,1)^d`` held as ``t`` base-``b`` digits per coordinate."""

    coords: tuple[int, ...]
    base: int = 2
    precision: int = _MANTISSA_BITS

    def __post_init__(self):
        coords = tuple(int(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        _check_base(self.base)
        top = self.base**self.precision
        if any(c < 0 or c >= top for c in coords):
            raise ValueError(f"coordinates must lie in [0, {self.base}^{self.precision})")

    @classmethod
    def from_floats(cls, x, base: int = 2, precision: int | None = None) -> DigitalPoint:
        """Round each coordinate of ``x`` to the nearest ``t``-digit value."""
        if precision is None:
            precision = default_precision(base)
        return cls(tuple(floats_to_encodings(np.atleast_1d(x), base, precision)), base, precision)

    @classmethod
    def zero(cls, dim: int, base: int = 2, precision: int | None = None) -> DigitalPoint:
        if precision is None:
            precision = default_precision(base)
        return cls((0,) * dim, base, precision)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def to_floats(self) -> np.ndarray:
        return encodings_to_floats(np.array(self.coords, dtype=np.int64), self.base, self.precision)

    def digits(self) -> np.ndarray:
        """Digit matrix of shape ``(d, t)``; column 0 holds ``x_{j1}``."""
        return _to_digits(np.array(self.coords, dtype=np.int64), self.base, self.precision)


def _check_compatible(x: DigitalPoint, y: DigitalPoint) -> None:
    if (x.dim, x.base, x.precision) != (y.dim, y.base, y.precision):
        raise ValueError(
            "points differ in dimension, base or precision: "
            f"{(x.dim, x.base, x.precision)} vs {(y.dim, y.base, y.precision)}"
        )


def digit_add(x: DigitalPoint, t: DigitalPoint) -> DigitalPoint:
    """Digitwise mod-b sum ``x (+) t``."""
    _check_compatible(x, t)
    s = add_encodings(np.array(x.coords), np.array(t.coords), x.base, x.precision)
    return DigitalPoint(tuple(s), x.base, x.precision)


def digit_negate(x: DigitalPoint) -> DigitalPoint:
    """``(-) x``, so that ``x (+) (-)x = 0``."""
    n = negate_encodings(np.array(x.coords), x.base, x.precision)
    return DigitalPoint(tuple(n), x.base, x.precision)


# -- wavenumbers ----------------------------------------------------------------


def _max_digits(*arrays, base: int) -> int:
    top = max((int(np.max(a)) if np.size(a) else 0) for a in arrays)
    n = 1
    while base**n <= top:
        n += 1
    return n


def wavenumber_add(k, l, base: int = 2) -> np.ndarray:
    """Digitwise mod-b sum of wavenumber vectors."""
    k = np.asarray(k, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    if (k < 0).any() or (l < 0).any():
        raise ValueError("wavenumbers must be non-negative")
    if base == 2:
        return np.bitwise_xor(k, l)
    n = _max_digits(k, l, base=base)
    s = (_wavenumber_digits(k, base, n) + _wavenumber_digits(l, base, n)) % base
    return (s * base ** np.arange(n, dtype=np.int64)).sum(axis=-1)


def wavenumber_negate(k, base: int = 2) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64)
    if base == 2:
        return k.copy()
    n = _max_digits(k, base=base)
    s = (-_wavenumber_digits(k, base, n)) % base
    return (s * base ** np.arange(n, dtype=np.int64)).sum(axis=-1)


def _bit_reverse(k: np.ndarray, precision: int) -> np.ndarray:
    """Place bit ``l`` of ``k`` at position ``t - 1 - l``."""
    out = np.zeros_like(k)
    for ell in range(precision):
        out |= ((k >> ell) & 1) << (precision - 1 - ell)
    return out


def pairing(k, x, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    """Vectorised ``<k, x>`` for wavenumbers ``k`` and encodings ``x``.

    Both arrays have a trailing coordinate axis of length ``d`` and broadcast
    against each other over the leading axes.
    """
    k = np.asarray(k, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64)
    if (k < 0).any():
        raise ValueError("wavenumbers must be non-negative")
    if (k >= base**precision).any():
        raise ValueError(f"wavenumber has digits beyond the point precision t={precision}")
    if base == 2:
        acc = np.bitwise_xor.reduce(_bit_reverse(k, precision) & x, axis=-1)
        return (np.bitwise_count(acc) & 1).astype(np.int64)
    kd = _wavenumber_digits(k, base, precision)
    xd = _to_digits(x, base, precision)
    return (kd * xd).sum(axis=(-1, -2)) % base


def bilinear(k, x: DigitalPoint) -> int:
    """``<k, x> = sum_j sum_l k_{jl} x_{j,l+1} mod b``."""
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (x.dim,):
        raise ValueError(f"wavenumber must have shape ({x.dim},), got {k.shape}")
    return int(pairing(k, np.array(x.coords), x.base, x.precision))


# -- generator sets ---------------------------------------------------------------


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeneratorSet:
    """Basis points ``z_1, z_b, z_{b^2}, ...`` of a digital sequence plus a digital shift.

    ``columns[j, l]`` is the encoding of coordinate ``j`` of ``z_{b^l}``; read as a
    digit vector it is column ``l`` of the generating matrix ``C_j``.  When the set
    has been linearly scrambled the columns already include the scrambling, and
    ``scramble`` keeps the lower-triangular matrices that were applied.
    """

    columns: np.ndarray
    base: int = 2
    precision: int = _MANTISSA_BITS
    shift: np.ndarray | None = None
    scramble: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        _check_base(self.base)
        cols = np.asarray(self.columns, dtype=np.int64)
        if cols.ndim != 2:
            raise ValueError("columns must have shape (d, m_max)")
        top = self.base**self.precision
        if (cols < 0).any() or (cols >= top).any():
            raise ValueError("column encodings out of range")
        if cols.shape[1] > self.precision:
            raise ValueError("m_max cannot exceed the precision")
        object.__setattr__(self, "columns", _frozen(cols))
        shift = np.zeros(cols.shape[0], np.int64) if self.shift is None else self.shift
        shift = np.asarray(shift, dtype=np.int64)
        if shift.shape != (cols.shape[0],) or (shift < 0).any() or (shift >= top).any():
            raise ValueError("shift must be d encodings in range")
        object.__setattr__(self, "shift", _frozen(shift))
        if self.scramble is not None:
            object.__setattr__(self, "scramble", _frozen(self.scramble))

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def m_max(self) -> int:
        return self.columns.shape[1]

    @property
    def capacity(self) -> int:
        return self.base**self.m_max

    def basis_point(self, ell: int) -> DigitalPoint:
        """The unshifted basis point ``z_{b^ell}``."""
        return DigitalPoint(tuple(self.columns[:, ell]), self.base, self.precision)

    def shift_point(self) -> DigitalPoint:
        return DigitalPoint(tuple(self.shift), self.base, self.precision)

    def generating_matrix(self, j: int) -> np.ndarray:
        """``C_j`` as a ``(t, m_max)`` digit matrix."""
        return _to_digits(self.columns[j], self.base, self.precision).T

    def rank(self) -> int:
        """Rank over ``F_b`` of the stacked basis points (full rank is ``m_max``)."""
        stacked = np.concatenate([self.generating_matrix(j) for j in range(self.dim)], axis=0)
        return _rank_mod_b(stacked, self.base)

    def with_shift(self, shift) -> GeneratorSet:
        return GeneratorSet(self.columns, self.base, self.precision, shift, self.scramble)

    def unshifted(self) -> GeneratorSet:
        return self.with_shift(None)

    # -- point generation

    def _combine(self, index: int) -> np.ndarray:
        """Unshifted ``z_index`` as a length-d encoding vector."""
        out = np.zeros(self.dim, np.int64)
        ell = 0
        while index:
            index, digit = divmod(index, self.base)
            if digit:
                out = add_encodings(
                    out, scale_encodings(self.columns[:, ell], digit, self.base, self.precision),
                    self.base, self.precision,
                )
            ell += 1
        return out

    @cached_property
    def _prefix_block(self) -> np.ndarray:
        level = min(self.m_max, _BLOCK_LEVEL if self.base == 2 else max(1, 12 // self.base))
        block = np.zeros((1, self.dim), np.int64)
        for ell in range(level):
            col = self.columns[:, ell]
            parts = [block]
            for a in range(1, self.base):
                za = scale_encodings(col, a, self.base, self.precision)
                parts.append(add_encodings(block, za, self.base, self.precision))
            block = np.concatenate(parts, axis=0)
        block.setflags(write=False)
        return block

    def points(self, start: int = 0, stop: int | None = None, shifted: bool = True) -> np.ndarray:
        """Encodings of ``z_i (+) Delta`` for ``start <= i < stop``, shape ``(n, d)``."""
        if stop is None:
            stop = start + 1
        if not 0 <= start <= stop <= self.capacity:
            raise IndexError(f"point range [{start}, {stop}) outside [0, {self.capacity})")
        block = self._prefix_block
        c = block.shape[0]
        out = np.empty((stop - start, self.dim), np.int64)
        first = (start // c) * c
        for s in range(first, stop, c):
            lo, hi = max(start, s), min(stop, s + c)
            base_pt = self._combine(s)
            if shifted:
                base_pt = add_encodings(base_pt, self.shift, self.base, self.precision)
            out[lo - start: hi - start] = add_encodings(
                block[lo - s: hi - s], base_pt, self.base, self.precision
            )
        return out

    def point_floats(self, start: int = 0, stop: int | None = None, shifted: bool = True) -> np.ndarray:
        return encodings_to_floats(self.points(start, stop, shifted), self.base, self.precision)


def net_point(gen: GeneratorSet, i: int, shifted: bool = True) -> DigitalPoint:
    """``z_i (+) Delta`` with ``z_i = sum_l i_l z_{b^l}``."""
    if not 0 <= i < gen.capacity:
        raise IndexError(f"index {i} outside [0, {gen.capacity})")
    z = gen._combine(i)
    if shifted:
        z = add_encodings(z, gen.shift, gen.base, gen.precision)
    return DigitalPoint(tuple(z), gen.base, gen.precision)


# -- scrambling -------------------------------------------------------------------


def _rank_mod_b(mat: np.ndarray, base: int) -> int:
    a = np.array(mat, dtype=np.int64) % base
    rows, cols = a.shape
    rank = 0
    for c in range(cols):
        pivots = np.nonzero(a[rank:, c])[0]
        if pivots.size == 0:
            continue
        p = rank + pivots[0]
        a[[rank, p]] = a[[p, rank]]
        inv = pow(int(a[rank, c]), -1, base)
        a[rank] = (a[rank] * inv) % base
        others = np.nonzero(a[:, c])[0]
        others = others[others != rank]
        a[others] = (a[others] - np.outer(a[others, c], a[rank])) % base
        rank += 1
        if rank == rows:
            break
    return rank


def random_lower_triangular(rng: np.random.Generator, size: int, base: int) -> np.ndarray:
    """Unit-diagonal lower-triangular matrix with uniform strictly-lower digits."""
    mat = np.tril(rng.integers(0, base, size=(size, size)), k=-1)
    mat[np.diag_indices(size)] = 1
    return mat


def scramble_columns(columns, matrices, base: int = 2, precision: int = _MANTISSA_BITS) -> np.ndarray:
    """Left-multiply each generating matrix ``C_j`` by ``matrices[j]`` over ``F_b``."""
    columns = np.asarray(columns, dtype=np.int64)
    matrices = np.asarray(matrices, dtype=np.int64)
    out = np.empty_like(columns)
    for j in range(columns.shape[0]):
        digits = _to_digits(columns[j], base, precision)  # (m_max, t)
        out[j] = _from_digits((digits @ matrices[j].T) % base, base)
    return out


def apply_scramble(
    gen: GeneratorSet,
    seed=None,
    *,
    scramble: bool = True,
    shift: bool = True,
) -> GeneratorSet:
    """Linearly scramble and digitally shift ``gen``, deterministically in ``seed``.

    Each ``C_j`` becomes ``L_j C_j`` with ``L_j`` a random unit-diagonal
    lower-triangular ``t x t`` matrix, and the shift is drawn uniformly over
    ``t``-digit points.  The result is again a digital sequence.
    """
    rng = np.random.default_rng(seed)
    b, t = gen.base, gen.precision
    columns, matrices = gen.columns, gen.scramble
    if scramble:
        new = np.stack([random_lower_triangular(rng, t, b) for _ in range(gen.dim)])
        columns = scramble_columns(gen.columns, new, b, t)
        matrices = new if matrices is None else (new @ matrices) % b
    delta = gen.shift
    if shift:
        delta = rng.integers(0, b**t, size=gen.dim, dtype=np.int64)
    return GeneratorSet(columns, b, t, delta, matrices)


# -- dual nets --------------------------------------------------------------------


def basis_pairings(k, gen: GeneratorSet, m: int) -> np.ndarray:
    """``<k, z_{b^l}>`` for ``l < m``; shape ``k.shape[:-1] + (m,)``."""
    k = np.asarray(k, dtype=np.int64)
    if not 0 <= m <= gen.m_max:
        raise ValueError(f"level {m} outside [0, {gen.m_max}]")
    cols = gen.columns[:, :m].T  # (m, d)
    return pairing(k[..., None, :], cols, gen.base, gen.precision)


def in_dual_net(k, gen: GeneratorSet, m: int) -> bool | np.ndarray:
    """Whether ``k`` pairs to zero with every point of the (unshifted) net ``P_m``."""
    k = np.asarray(k, dtype=np.int64)
    res = ~basis_pairings(k, gen, m).any(axis=-1)
    return bool(res) if res.ndim == 0 else res
