"""Fast discrete Walsh transform of sampled data and the data-driven slot pointer.

For data ``y_0, ..., y_{b^m - 1}`` the coefficients are

    Y_nu = b^{-m} sum_i exp(-2 pi sqrt(-1) sum_l nu_l i_l / b) y_i,

computed with ``m`` butterfly stages (one length-``b`` DFT per digit).  For base 2
with real data the coefficients are real and kept as ``float64``.

Slot ``nu`` of ``Y`` carries the discrete Walsh coefficient of every wavenumber
``k`` with ``nu_map(k) == nu``, up to a unimodular phase from the digital shift.
The pointer orders the slots so that ``pointer[kappa]`` is the slot assigned to
the ``kappa``-th wavenumber of the implicit wavenumber ordering.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .digital import GeneratorSet, basis_pairings

__all__ = [
    "TransformState",
    "extend_transform",
    "fast_transform",
    "level_window",
    "nu_map",
    "pointer_csv",
    "coefficients_csv",
    "direct_transform",
    "tilde_S",
    "update_pointer",
]


def _log_base(n: int, base: int) -> int:
    m = 0
    size = 1
    while size < n:
        size *= base
        m += 1
    if size != n:
        raise ValueError(f"length {n} is not a power of {base}")
    return m


def _fwht2(y: np.ndarray) -> np.ndarray:
    """In-place unnormalised base-2 butterflies on a contiguous array."""
    n = y.shape[0]
    h = 1
    while h < n:
        v = y.reshape(-1, 2, h)
        top = v[:, 0, :].copy()
        bottom = v[:, 1, :]
        v[:, 0, :] += bottom
        np.subtract(top, bottom, out=bottom)
        h *= 2
    return y


def fast_transform(y, base: int = 2) -> np.ndarray:
    """Normalised discrete Walsh transform ``Y^(m)`` of ``b^m`` samples in ``O(m b^m)``.

    Parameters
    ----------
    y : array_like
        Samples ``y_i`` in index order, length ``b^m``.
    base : int
        Prime base of the digital net.

    Returns
    -------
    numpy.ndarray
        ``Y_nu`` for ``nu = 0..b^m - 1``.  Real when ``base == 2`` and ``y`` is
        real, complex otherwise.
    """
    y = np.asarray(y)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("samples must be a non-empty 1-d array")
    m = _log_base(y.size, base)
    if base == 2:
        dtype = np.complex128 if np.iscomplexobj(y) else np.float64
        out = np.array(y, dtype=dtype, copy=True)
        _fwht2(out)
        out *= 0.5**m
        return out
    out = np.array(y, dtype=np.complex128, copy=True)
    if m == 0:
        return out
    # C-order axis a holds digit m-1-a of the index; the DFT acts digit by digit
    cube = out.reshape((base,) * m)
    for axis in range(m):
        cube = np.fft.fft(cube, axis=axis) / base
    return cube.reshape(-1)


def direct_transform(y, base: int = 2, chunk: int = 256) -> np.ndarray:
    """Reference ``O(b^{2m})`` evaluation of the transform straight from its double sum."""
    y = np.asarray(y, dtype=np.complex128)
    m = _log_base(y.size, base)
    idx = np.arange(y.size, dtype=np.int64)
    digits = (idx[:, None] // base ** np.arange(m, dtype=np.int64)) % base  # (n, m)
    out = np.empty(y.size, np.complex128)
    for lo in range(0, y.size, chunk):
        phase = (digits[lo: lo + chunk] @ digits.T) % base
        out[lo: lo + chunk] = np.exp(-2j * np.pi * phase / base) @ y
    return out / y.size


def _merge_blocks(blocks: list[np.ndarray], base: int) -> np.ndarray:
    """Final butterfly stage across the top digit of ``b`` transformed blocks."""
    if base == 2:
        lo, hi = blocks
        return np.concatenate(((lo + hi) * 0.5, (lo - hi) * 0.5))
    stacked = np.stack([np.asarray(b_, dtype=np.complex128) for b_ in blocks])
    return (np.fft.fft(stacked, axis=0) / base).reshape(-1)


def level_window(ell: int, base: int = 2) -> tuple[int, int]:
    """Index range ``[floor(b^(ell-1)), b^ell)`` of the ``ell``-th block of slots."""
    if ell < 0:
        raise ValueError("level must be non-negative")
    return (0 if ell == 0 else base ** (ell - 1)), base**ell


def update_pointer(coeffs, prior, m: int, r: int, base: int = 2) -> np.ndarray:
    """Pointer at level ``m`` from the level ``m - 1`` pointer and ``Y^(m)``.

    The prior pointer is extended coset-wise (``pointer[kappa + a b^(m-1)] =
    prior[kappa] + a b^(m-1)``), then for ``l = m-1`` down to ``max(1, m-r)`` and
    ``kappa = 1..b^l - 1`` the slot among ``kappa + a b^l`` with the largest
    ``|Y|`` is swapped into position ``kappa``; ties go to the smallest ``a``.
    """
    coeffs = np.asarray(coeffs)
    if m == 0:
        return np.zeros(1, np.int64)
    half = base ** (m - 1)
    prior = np.asarray(prior, dtype=np.int64)
    if prior.shape != (half,):
        raise ValueError(f"prior pointer must have length {half}")
    if coeffs.shape != (half * base,):
        raise ValueError(f"coefficients must have length {half * base}")
    ptr = np.concatenate([prior + a * half for a in range(base)])
    mags = np.abs(coeffs)
    for ell in range(m - 1, max(1, m - r) - 1, -1):
        nl = base**ell
        blk = ptr[: base * nl].reshape(base, nl)
        vals = mags[blk[:, 1:]]
        best = np.argmax(vals, axis=0)
        kappa = np.nonzero(best)[0] + 1
        if kappa.size:
            a = best[kappa - 1]
            moved = blk[a, kappa]
            blk[a, kappa] = blk[0, kappa]
            blk[0, kappa] = moved
    return ptr


@dataclass
class TransformState:
    """Discrete Walsh coefficients of the first ``b^m`` samples plus the slot pointer."""

    m: int
    coeffs: np.ndarray
    pointer: np.ndarray
    samples: np.ndarray
    r: int = 4
    base: int = 2

    @classmethod
    def start(cls, y0, r: int = 4, base: int = 2) -> TransformState:
        """Level-0 state from the single sample ``y_0``."""
        y0 = np.atleast_1d(np.asarray(y0))
        if y0.shape != (1,):
            raise ValueError("level-0 state takes exactly one sample")
        if r < 1:
            raise ValueError("r must be at least 1")
        return cls(0, fast_transform(y0, base), np.zeros(1, np.int64), y0.copy(), r, base)

    @classmethod
    def from_samples(cls, y, r: int = 4, base: int = 2) -> TransformState:
        """Build the state level by level, so the pointer sees ``Y^(l)`` for every ``l``."""
        y = np.asarray(y)
        m = _log_base(y.size, base)
        state = cls.start(y[:1], r, base)
        for ell in range(m):
            state = extend_transform(state, y[base**ell: base ** (ell + 1)])
        return state

    @property
    def n(self) -> int:
        return self.base**self.m


def extend_transform(state: TransformState, new_samples) -> TransformState:
    """Advance ``state`` from level ``m`` to ``m + 1``.

    Only the ``(b - 1) b^m`` new samples are transformed; the existing ``Y^(m)``
    is the first block of the final butterfly stage.
    """
    b, m = state.base, state.m
    new_samples = np.asarray(new_samples)
    n = b**m
    if new_samples.shape != ((b - 1) * n,):
        raise ValueError(f"expected {(b - 1) * n} new samples, got {new_samples.shape}")
    blocks = [state.coeffs] + [fast_transform(new_samples[a * n:(a + 1) * n], b) for a in range(b - 1)]
    coeffs = _merge_blocks(blocks, b)
    pointer = update_pointer(coeffs, state.pointer, m + 1, state.r, b)
    samples = np.concatenate((state.samples, new_samples))
    return replace(state, m=m + 1, coeffs=coeffs, pointer=pointer, samples=samples)


def tilde_S(state: TransformState, ell: int, m: int | None = None) -> float:
    """Observable sum of ``|Y_{pointer[kappa]}|`` over the ``ell``-th window of slots."""
    if m is not None and m != state.m:
        raise ValueError(f"state is at level {state.m}, not {m}")
    if ell > state.m:
        raise ValueError(f"window level {ell} exceeds transform level {state.m}")
    lo, hi = level_window(ell, state.base)
    return float(np.abs(state.coeffs[state.pointer[lo:hi]]).sum())


def nu_map(k, gen: GeneratorSet, m: int):
    """Slot ``sum_{l<m} <k, z_{b^l}> b^l`` of wavenumber(s) ``k`` at level ``m``."""
    pairs = basis_pairings(k, gen, m)
    weights = gen.base ** np.arange(m, dtype=np.int64)
    out = (pairs * weights).sum(axis=-1)
    return int(out) if np.ndim(out) == 0 else out


def coefficients_csv(coeffs) -> str:
    """Debug dump ``nu,re,im,abs`` of a coefficient vector."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    buf = io.StringIO()
    buf.write("nu,re,im,abs\n")
    for nu, c in enumerate(coeffs):
        buf.write(f"{nu},{c.real:.17g},{c.imag:.17g},{abs(c):.17g}\n")
    return buf.getvalue()


def pointer_csv(pointer) -> str:
    """Debug dump ``kappa,nu`` of a pointer."""
    return "kappa,nu\n" + "".join(f"{k},{int(v)}\n" for k, v in enumerate(pointer))
