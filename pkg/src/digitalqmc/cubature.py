"""Cone-based error bound and the adaptive digital-sequence cubature loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .digital import GeneratorSet
from .sobol import sobol_generator
from .transform import TransformState, extend_transform, tilde_S

__all__ = [
    "ConeSpec",
    "CubatureResult",
    "LevelRecord",
    "NonFiniteIntegrandError",
    "error_bound",
    "integrate",
    "sample_mean",
    "theorem1_m_bound",
]

# Integrand calls are split into batches of at most this many points.
EVAL_CHUNK = 1 << 16


class NonFiniteIntegrandError(ValueError):
    """The integrand returned NaN or an infinity."""


def _default_inflation(m: int) -> float:
    return 5.0 * 2.0 ** (-m)


@dataclass(frozen=True)
class ConeSpec:
    """Parameters of the cone of integrands and the resulting inflation factor.

    Either give ``inflation`` (the factor ``C(m)`` multiplying the observable
    sum) directly, or explicit ``omega_hat`` and ``omega_ring`` functions, in
    which case ``C(m) = omega_hat(m) omega_ring(r) / (1 - omega_hat(r) omega_ring(r))``.
    The defaults are ``ell_star = 6``, ``r = 4`` and ``C(m) = 5 * 2**-m``.
    """

    ell_star: int = 6
    r: int = 4
    inflation: Callable[[int], float] | None = _default_inflation
    omega_hat: Callable[[int], float] | None = None
    omega_ring: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.ell_star < 1 or self.r < 1:
            raise ValueError("ell_star and r must both be at least 1")
        explicit = self.omega_hat is not None and self.omega_ring is not None
        if (self.omega_hat is None) != (self.omega_ring is None):
            raise ValueError("give both omega_hat and omega_ring, or neither")
        if explicit:
            object.__setattr__(self, "inflation", None)
        elif self.inflation is None:
            raise ValueError("need an inflation function or explicit omegas")
        if not explicit and not self.inflation(self.r) > 0:
            raise ValueError("inflation factor must be positive")
        if not 0 <= self.omega_product < 1:
            raise ValueError("the cone needs omega_hat(r) * omega_ring(r) < 1")
        levels = range(self.first_level, self.first_level + 40)
        values = [self.c(m) for m in levels]
        if min(values) <= 0:
            raise ValueError("inflation factor must be positive")
        if any(b > a * (1 + 1e-12) for a, b in zip(values, values[1:])):
            raise ValueError("inflation factor must be non-increasing in m")

    @classmethod
    def from_omegas(cls, omega_hat, omega_ring, ell_star: int = 6, r: int = 4) -> ConeSpec:
        return cls(ell_star, r, None, omega_hat, omega_ring)

    @property
    def explicit(self) -> bool:
        return self.omega_hat is not None

    @property
    def first_level(self) -> int:
        return self.ell_star + self.r

    @property
    def omega_product(self) -> float:
        """``omega_hat(r) * omega_ring(r)``; derived from ``C(r)`` when only ``C`` is known."""
        if self.explicit:
            return float(self.omega_hat(self.r) * self.omega_ring(self.r))
        cr = self.inflation(self.r)
        return cr / (1.0 + cr)

    def c(self, m: int) -> float:
        """Inflation factor ``C(m)``."""
        if self.explicit:
            p = self.omega_product
            return float(self.omega_hat(m) * self.omega_ring(self.r) / (1.0 - p))
        return float(self.inflation(m))


@dataclass(frozen=True)
class LevelRecord:
    m: int
    n: int
    S_tilde: float
    bound: float
    elapsed_seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class CubatureResult:
    estimate: float
    error_bound: float
    m_final: int
    n: int
    met_tolerance: bool
    history: tuple[LevelRecord, ...] = ()

    def history_csv(self) -> str:
        rows = ["m,n,S_tilde,bound,elapsed_seconds"]
        rows += [
            f"{h.m},{h.n},{h.S_tilde:.17g},{h.bound:.17g},{h.elapsed_seconds:.17g}"
            for h in self.history
        ]
        return "\n".join(rows) + "\n"


def sample_mean(y) -> float | complex:
    """Equal-weight cubature ``b^-m sum_i y_i``."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("no samples")
    return y.mean()


def error_bound(S_tilde: float, m: int, cone: ConeSpec) -> float:
    """Data-driven error bound ``C(m) * S_tilde`` at level ``m``."""
    if m < cone.first_level:
        raise ValueError(f"level {m} is below the first reliable level {cone.first_level}")
    return cone.c(m) * S_tilde


def theorem1_m_bound(S_values: Sequence[float], tol: float, cone: ConeSpec) -> int | None:
    """Smallest ``m >= ell_star + r`` with ``C(m) (1 + omega(r)) S_{m-r} <= tol``.

    ``S_values[l]`` is the true coefficient sum of block ``l``.  Returns ``None``
    when no level covered by ``S_values`` qualifies.
    """
    factor = 1.0 + cone.omega_product
    for m in range(cone.first_level, len(S_values) + cone.r):
        if cone.c(m) * factor * S_values[m - cone.r] <= tol:
            return m
    return None


def _evaluate(f, gen: GeneratorSet, start: int, stop: int) -> np.ndarray:
    out = np.empty(stop - start)
    for lo in range(start, stop, EVAL_CHUNK):
        hi = min(stop, lo + EVAL_CHUNK)
        x = gen.point_floats(lo, hi)
        y = np.asarray(f(x))
        if np.iscomplexobj(y):
            raise TypeError("integrand must be real-valued")
        y = y.astype(np.float64, copy=False).reshape(-1)
        if y.shape != (hi - lo,):
            raise ValueError(f"integrand returned {y.shape[0]} values for {hi - lo} points")
        bad = ~np.isfinite(y)
        if bad.any():
            i = int(np.argmax(bad))
            raise NonFiniteIntegrandError(
                f"integrand returned {y[i]} at point index {lo + i}, x={x[i].tolist()}"
            )
        out[lo - start: hi - start] = y
    return out


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    tol: float,
    cone: ConeSpec | None = None,
    gen: GeneratorSet | None = None,
    m_max: int = 24,
    seed=None,
) -> CubatureResult:
    """Adaptive cubature of ``f`` over ``[0,1)^d`` to absolute tolerance ``tol``.

    Parameters
    ----------
    f : callable
        Vectorised integrand: takes an ``(n, d)`` array of points and returns
        ``n`` real values.
    d : int
        Dimension.
    tol : float
        Absolute error tolerance, ``> 0``.
    cone : ConeSpec, optional
        Cone parameters; the defaults give ``ell_star=6, r=4, C(m)=5*2**-m``.
    gen : GeneratorSet, optional
        Point generator.  By default a Sobol' set scrambled and shifted with
        ``seed``.
    m_max : int
        Sampling budget is ``b**m_max`` points.
    seed
        Seed for the default generator.

    Returns
    -------
    CubatureResult
        ``met_tolerance`` is False when the budget ran out before the bound
        dropped below ``tol``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    cone = cone or ConeSpec()
    if gen is None:
        gen = sobol_generator(d, max(m_max, 1), seed=seed if seed is not None else 0)
    if gen.dim != d:
        raise ValueError(f"generator has dimension {gen.dim}, expected {d}")
    if not cone.first_level <= m_max <= gen.m_max:
        raise ValueError(f"need {cone.first_level} <= m_max <= {gen.m_max}, got {m_max}")

    b, r = gen.base, cone.r
    t0 = time.perf_counter()
    m = cone.first_level
    state = TransformState.from_samples(_evaluate(f, gen, 0, b**m), r, b)
    history = []
    while True:
        s = tilde_S(state, m - r)
        bound = error_bound(s, m, cone)
        history.append(LevelRecord(m, b**m, s, bound, time.perf_counter() - t0))
        if bound <= tol or m == m_max:
            break
        state = extend_transform(state, _evaluate(f, gen, b**m, b ** (m + 1)))
        m += 1

    return CubatureResult(
        estimate=float(sample_mean(state.samples)),
        error_bound=bound,
        m_final=m,
        n=b**m,
        met_tolerance=bound <= tol,
        history=tuple(history),
    )
