"""Test integrands: the Keister benchmark and Walsh polynomials with known spectra.

Slot-indexed polynomials
------------------------
A :class:`SlotWalshPolynomial` assigns a coefficient ``c[kappa]`` to the
``kappa``-th wavenumber of an explicit ordering ``k(kappa) = (+)_l kappa_l K_l``,
where the basis wavenumbers ``K_l`` are solved from
``<K_l, z_{b^p}> = [l == p]`` for every basis point of the generator.  Then
``nu_map(k(kappa), gen, m) == kappa mod b^m`` at every level, the ordering is a
valid choice for the wavenumber map, and the coefficient sums over blocks of
``kappa`` are known exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

from .cubature import ConeSpec
from .digital import (
    GeneratorSet,
    _bit_reverse,
    _to_digits,
    default_precision,
    floats_to_encodings,
    pairing,
)
from .transform import fast_transform, level_window

__all__ = [
    "SlotWalshPolynomial",
    "SpectrumSums",
    "WalshPolynomial",
    "cone_check",
    "eval_walsh_poly",
    "geometric_member",
    "geometric_omega_ring",
    "inverse_normal_cdf",
    "keister",
    "keister_reference",
    "keister_reference_with_error",
    "read_reference_table",
    "slot_basis",
    "spectrum_sums",
    "write_reference_table",
]


# -- Keister ---------------------------------------------------------------------


def inverse_normal_cdf(p):
    """Standard normal quantile ``Phi^{-1}(p)`` for ``p`` in the open interval (0, 1)."""
    arr = np.asarray(p, dtype=np.float64)
    if not ((arr > 0) & (arr < 1)).all():
        raise ValueError("probabilities must lie strictly between 0 and 1")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def keister(x, precision: int = 53):
    """``pi^{d/2} cos(sqrt(sum_j Phi^{-1}(x_j)^2 / 2))`` for points of ``[0,1)^d``.

    ``x`` is a single point of shape ``(d,)`` or a batch ``(n, d)``.  Coordinates
    are clamped to ``[2^-t, 1 - 2^-t]`` so that a shifted point landing exactly on
    0 still has a finite quantile.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    eps = 2.0**-precision
    z = special.ndtri(np.clip(x, eps, 1.0 - eps))
    out = math.pi ** (x.shape[1] / 2) * np.cos(np.sqrt(0.5 * np.einsum("ij,ij->i", z, z)))
    return float(out[0]) if single else out


@lru_cache(maxsize=None)
def keister_reference_with_error(d: int) -> tuple[float, float]:
    """Keister integral by radial reduction and tanh-sinh quadrature.

    ``I(d) = 2 pi^{d/2} / Gamma(d/2) * int_0^inf exp(-r^2) cos(r) r^{d-1} dr``,
    evaluated at 30 significant digits.  Returns ``(value, abs_error_estimate)``.
    """
    if not 1 <= d <= 30:
        raise ValueError("dimension must be in 1..30")
    with mpmath.workdps(30):
        f = lambda r: mpmath.exp(-r * r) * mpmath.cos(r) * r ** (d - 1)  # noqa: E731
        val, err = mpmath.quad(f, [0, 2, 4, 6, 8, 12, mpmath.inf], error=True)
        scale = 2 * mpmath.pi ** (mpmath.mpf(d) / 2) / mpmath.gamma(mpmath.mpf(d) / 2)
        return float(scale * val), float(abs(scale) * err)


def keister_reference(d: int) -> float:
    """True value of the ``d``-dimensional Keister integral."""
    return keister_reference_with_error(d)[0]


def write_reference_table(path, dims) -> None:
    """Cache reference values as CSV ``d,value,abs_error_bound``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "value", "abs_error_bound"])
        for d in dims:
            v, e = keister_reference_with_error(d)
            w.writerow([d, f"{v:.17g}", f"{max(e, 1e-300):.3g}"])


def read_reference_table(path) -> dict[int, float]:
    with open(path, newline="") as fh:
        return {int(row["d"]): float(row["value"]) for row in csv.DictReader(fh)}


# -- explicit Walsh polynomials ------------------------------------------------------


@dataclass(frozen=True)
class WalshPolynomial:
    """Finite Walsh series ``sum_t coeffs[t] exp(2 pi i <wavenumbers[t], x> / b)``."""

    wavenumbers: np.ndarray
    coeffs: np.ndarray
    base: int = 2

    def __post_init__(self):
        k = np.asarray(self.wavenumbers, dtype=np.int64)
        if k.ndim != 2:
            k = k.reshape(len(self.coeffs), -1)
        if k.shape[0] != len(self.coeffs):
            raise ValueError("need one wavenumber row per coefficient")
        object.__setattr__(self, "wavenumbers", k)
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.complex128))
        if (k < 0).any():
            raise ValueError("wavenumbers must be non-negative")

    @property
    def dim(self) -> int:
        return self.wavenumbers.shape[1]

    @property
    def integral(self) -> complex:
        zero = ~self.wavenumbers.any(axis=1)
        return complex(self.coeffs[zero].sum())

    def coefficient(self, k) -> complex:
        hit = (self.wavenumbers == np.asarray(k)).all(axis=1)
        return complex(self.coeffs[hit].sum())

    def __call__(self, x, precision: int | None = None) -> np.ndarray:
        """Evaluate at float points (exact for base 2)."""
        if precision is None:
            precision = default_precision(self.base)
        return eval_walsh_poly(self, floats_to_encodings(x, self.base, precision), precision)

    def to_csv(self) -> str:
        head = ",".join(["re", "im"] + [f"k{j + 1}" for j in range(self.dim)])
        rows = [
            ",".join([f"{c.real:.17g}", f"{c.imag:.17g}"] + [str(int(v)) for v in k])
            for c, k in zip(self.coeffs, self.wavenumbers)
        ]
        return "\n".join([head] + rows) + "\n"

    @classmethod
    def from_csv(cls, text: str, base: int = 2) -> WalshPolynomial:
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        head = lines[0].split(",")
        if head[:2] != ["re", "im"] or len(head) < 3:
            raise ValueError("expected header 're,im,k1,...,kd'")
        rows = [ln.split(",") for ln in lines[1:]]
        coeffs = [complex(float(r[0]), float(r[1])) for r in rows]
        k = [[int(v) for v in r[2:]] for r in rows]
        return cls(np.array(k, dtype=np.int64).reshape(len(rows), len(head) - 2), coeffs, base)


def eval_walsh_poly(p: WalshPolynomial, x, precision: int | None = None):
    """Evaluate ``p`` at point encodings ``x`` of shape ``(d,)`` or ``(n, d)``."""
    if precision is None:
        precision = default_precision(p.base)
    x = np.asarray(x, dtype=np.int64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if len(p.coeffs) == 0:
        out = np.zeros(x.shape[0], np.complex128)
    else:
        phase = pairing(p.wavenumbers[None, :, :], x[:, None, :], p.base, precision)
        out = np.exp(2j * np.pi * phase / p.base) @ p.coeffs
    return complex(out[0]) if single else out


# -- slot-indexed polynomials -------------------------------------------------------


def _solve_mod_b(mat: np.ndarray, rhs: np.ndarray, base: int, rng=None) -> np.ndarray:
    """Solve ``mat @ X = rhs`` over ``F_b``; free variables random when ``rng`` is given."""
    mat = np.asarray(mat, dtype=np.int64) % base
    rhs = np.asarray(rhs, dtype=np.int64) % base
    rows, n = mat.shape
    aug = np.concatenate([mat, rhs], axis=1)
    pivots = []
    r = 0
    for c in range(n):
        nz = np.nonzero(aug[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        aug[[r, p]] = aug[[p, r]]
        aug[r] = (aug[r] * pow(int(aug[r, c]), -1, base)) % base
        others = np.nonzero(aug[:, c])[0]
        others = others[others != r]
        aug[others] = (aug[others] - np.outer(aug[others, c], aug[r])) % base
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if aug[r:, n:].any():
        raise ValueError("system has no solution over F_b")
    sols = rhs.shape[1]
    x = np.zeros((n, sols), np.int64)
    free = np.setdiff1d(np.arange(n), pivots)
    if rng is not None and free.size:
        x[free] = rng.integers(0, base, size=(free.size, sols))
    for i, c in enumerate(pivots):
        x[c] = (aug[i, n:] - aug[i, free] @ x[free]) % base
    return x


def slot_basis(gen: GeneratorSet, digits: int | None = None, rng=None) -> np.ndarray:
    """Wavenumbers ``K_l`` (shape ``(m_max, d)``) with ``<K_l, z_{b^p}> = [l == p]``.

    ``digits`` bounds the number of base-b digits per wavenumber coordinate
    (default ``m_max``).  With ``rng`` the solutions are randomised over the dual
    net, which spreads the wavenumbers across coordinates.
    """
    b, P = gen.base, gen.m_max
    q = P if digits is None else digits
    # row (j, q') holds digit q'+1 of coordinate j of each basis point
    A = np.concatenate([gen.generating_matrix(j)[:q] for j in range(gen.dim)], axis=0)
    X = _solve_mod_b(A.T, np.eye(P, dtype=np.int64), b, rng)  # (d*q, P)
    digit_vals = b ** np.arange(q, dtype=np.int64)
    return np.stack([(X[:, ell].reshape(gen.dim, q) * digit_vals).sum(axis=1) for ell in range(P)])


def _level_of(kappa: np.ndarray, base: int) -> np.ndarray:
    """Block index ``l`` with ``kappa`` in ``[floor(b^(l-1)), b^l)``."""
    kappa = np.asarray(kappa, dtype=np.int64)
    lvl = np.zeros_like(kappa)
    top = np.ones_like(kappa)
    while (top <= kappa).any():
        grow = top <= kappa
        lvl[grow] += 1
        top[grow] *= base
    return lvl


@dataclass(frozen=True)
class SlotWalshPolynomial:
    """Walsh polynomial ``sum_kappa coeffs[kappa] W_{k(kappa)}`` over an explicit ordering."""

    gen: GeneratorSet
    basis: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        levels = 0
        while self.gen.base**levels < c.size:
            levels += 1
        if self.gen.base**levels != c.size:
            raise ValueError("number of slot coefficients must be a power of the base")
        if levels > self.basis.shape[0]:
            raise ValueError("not enough basis wavenumbers for the spectrum")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=np.int64)[:levels])

    @property
    def levels(self) -> int:
        return self.basis.shape[0]

    @property
    def base(self) -> int:
        return self.gen.base

    @property
    def integral(self):
        return self.coeffs[0]

    def wavenumber(self, kappa: int) -> np.ndarray:
        """``k(kappa) = (+)_l kappa_l K_l``."""
        b = self.base
        digits = _to_digits(np.int64(kappa), b, self.levels)[::-1]  # least significant first
        if b == 2:
            return np.bitwise_xor.reduce(self.basis * digits[:, None], axis=0)
        nd = 1
        while b**nd <= max(1, int(self.basis.max())):
            nd += 1
        acc = np.zeros((self.gen.dim, nd), np.int64)
        pw = b ** np.arange(nd, dtype=np.int64)
        for ell, a in enumerate(digits):
            acc += a * ((self.basis[ell][:, None] // pw) % b)
        return ((acc % b) * pw).sum(axis=1)

    def to_walsh_polynomial(self) -> WalshPolynomial:
        nz = np.nonzero(self.coeffs)[0]
        k = np.array([self.wavenumber(int(kappa)) for kappa in nz]).reshape(len(nz), self.gen.dim)
        return WalshPolynomial(k, self.coeffs[nz], self.base)

    def slot_of(self, x_enc: np.ndarray) -> np.ndarray:
        """``u(x) = sum_l <K_l, x> b^l``, so that ``<k(kappa), x> = sum_l kappa_l u_l(x)``."""
        b, t = self.base, self.gen.precision
        x = np.atleast_2d(np.asarray(x_enc, dtype=np.int64))
        u = np.zeros(x.shape[0], np.int64)
        if b == 2:
            rev = _bit_reverse(self.basis, t)
            for ell in range(self.levels):
                acc = np.bitwise_xor.reduce(rev[ell][None, :] & x, axis=1)
                u |= (np.bitwise_count(acc) & 1).astype(np.int64) << ell
            return u
        pairs = pairing(self.basis[None, :, :], x[:, None, :], b, t)
        return (pairs * b ** np.arange(self.levels, dtype=np.int64)).sum(axis=1)

    @property
    def _table(self) -> np.ndarray:
        # table[u] = sum_kappa c_kappa exp(2 pi i sum_l kappa_l u_l / b)
        cached = self.__dict__.get("_table_cache")
        if cached is None:
            b = self.base
            c = self.coeffs
            if b == 2 and not np.iscomplexobj(c):
                cached = fast_transform(c, 2) * c.size
            else:
                cached = np.conj(fast_transform(np.conj(c.astype(np.complex128)), b)) * c.size
            self.__dict__["_table_cache"] = cached
        return cached

    def eval_encodings(self, x_enc) -> np.ndarray:
        return self._table[self.slot_of(x_enc)]

    def __call__(self, x) -> np.ndarray:
        """Evaluate at float points (exact point digits for base 2)."""
        x = np.atleast_2d(x)
        return self.eval_encodings(floats_to_encodings(x, self.base, self.gen.precision))


@dataclass(frozen=True)
class SpectrumSums:
    """Exact block sums of true coefficient magnitudes at level ``m``.

    ``S[l]`` for ``l = 0..m``, ``S_hat[l]`` the aliases of block ``l`` at level
    ``m``, and ``S_check`` the total mass from slot ``b^m`` on.
    """

    m: int
    S: np.ndarray
    S_hat: np.ndarray
    S_check: float


def _abs_slots(p) -> tuple[np.ndarray, int]:
    if isinstance(p, SlotWalshPolynomial):
        return np.abs(p.coeffs), p.base
    a = np.abs(np.asarray(p))
    return a, 2


def spectrum_sums(p, m: int, base: int | None = None) -> SpectrumSums:
    """Exact ``S_l``, ``S_hat_{l,m}`` and ``S_check_m`` of a slot-indexed spectrum.

    ``p`` is a :class:`SlotWalshPolynomial` or an array of slot coefficients.
    """
    a, b = _abs_slots(p)
    if base is not None:
        b = base
    size = b**m
    S = np.array([a[slice(*level_window(ell, b))].sum() for ell in range(m + 1)])
    padded_len = -(-max(a.size, size) // size) * size
    padded = np.zeros(padded_len)
    padded[: a.size] = a
    alias = padded.reshape(-1, size)[1:].sum(axis=0)  # aliases of kappa < b^m
    S_hat = np.array([alias[slice(*level_window(ell, b))].sum() for ell in range(m + 1)])
    return SpectrumSums(m, S, S_hat, float(a[size:].sum()))


def cone_check(p, cone: ConeSpec, m_range=None, rtol: float = 1e-12) -> bool:
    """Whether a slot-indexed spectrum satisfies both cone inequalities.

    Checks ``S_hat_{l,m} <= omega_hat(m-l) S_check_m`` for ``l <= m`` and
    ``S_check_m <= omega_ring(m-l) S_l`` for ``ell_star <= l <= m``.  Beyond the
    last level of a finite spectrum every sum vanishes, so the default range
    ``0..levels`` decides membership exactly.
    """
    if not cone.explicit:
        raise ValueError("cone_check needs explicit omega_hat and omega_ring")
    a, b = _abs_slots(p)
    if m_range is None:
        levels = 0
        while b**levels < a.size:
            levels += 1
        m_range = range(levels + 1)
    for m in m_range:
        s = spectrum_sums(p, m, b)
        for ell in range(m + 1):
            if s.S_hat[ell] > cone.omega_hat(m - ell) * s.S_check * (1 + rtol):
                return False
            if ell >= cone.ell_star and s.S_check > cone.omega_ring(m - ell) * s.S[ell] * (1 + rtol):
                return False
    return True


def geometric_omega_ring(decay: float, spread_min: float, base: int = 2):
    """``omega_ring`` matched to :func:`geometric_member` spectra with ``decay <= given``."""
    if not decay * base < 1:
        raise ValueError("need decay * base < 1")
    ratio = decay * base

    def omega_ring(n: int) -> float:
        return ratio ** (n + 1) / ((1 - ratio) * spread_min)

    return omega_ring


def geometric_member(
    gen: GeneratorSet,
    levels: int,
    decay: float,
    amplitude: float,
    rng: np.random.Generator,
    spread: tuple[float, float] = (0.6, 1.0),
    integral: float | None = None,
    basis: np.ndarray | None = None,
) -> SlotWalshPolynomial:
    """Real slot spectrum ``|c_kappa| = amplitude * u * decay^level(kappa)`` with random signs.

    ``u`` is uniform on ``spread``.  The coefficient of slot 0 (the integral) is
    ``integral`` or a standard normal draw.
    """
    b = gen.base
    kappa = np.arange(b**levels)
    mags = amplitude * rng.uniform(*spread, size=kappa.size) * decay ** _level_of(kappa, b)
    c = mags * rng.choice([-1.0, 1.0], size=kappa.size)
    c[0] = rng.standard_normal() if integral is None else integral
    if basis is None:
        basis = slot_basis(gen, rng=rng)
    return SlotWalshPolynomial(gen, basis, c)
