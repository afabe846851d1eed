import math

import numpy as np
import pytest

from digitalqmc.cubature import (
    ConeSpec,
    NonFiniteIntegrandError,
    error_bound,
    integrate,
    sample_mean,
    theorem1_m_bound,
)
from digitalqmc.integrands import (
    WalshPolynomial,
    geometric_member,
    geometric_omega_ring,
    keister,
    spectrum_sums,
)
from digitalqmc.sobol import sobol_generator

SQRT_PI_E = math.sqrt(math.pi) * math.exp(-0.25)


def test_default_cone():
    cone = ConeSpec()
    assert (cone.ell_star, cone.r, cone.first_level) == (6, 4, 10)
    assert cone.c(10) == 5 * 2.0**-10
    assert cone.omega_product == pytest.approx(5 / 21)
    assert not cone.explicit


def test_explicit_cone_inflation():
    cone = ConeSpec.from_omegas(lambda n: 2.0 ** -(n / 2), lambda n: 0.5**n, ell_star=3, r=2)
    p = 2.0**-1 * 0.25
    assert cone.omega_product == pytest.approx(p)
    assert cone.c(7) == pytest.approx(2.0**-3.5 * 0.25 / (1 - p))
    assert cone.explicit and cone.inflation is None


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(ell_star=0),
        dict(r=0),
        dict(omega_hat=lambda n: 1.0),
        dict(inflation=None),
        dict(inflation=lambda m: 2.0**m),
        dict(inflation=lambda m: -1.0),
    ],
)
def test_cone_validation(kwargs):
    with pytest.raises(ValueError):
        ConeSpec(**kwargs)
    with pytest.raises(ValueError):
        ConeSpec.from_omegas(lambda n: 1.0, lambda n: 2.0)


def test_error_bound_and_mean():
    cone = ConeSpec()
    assert error_bound(2.0, 12, cone) == 2.0 * 5 * 2.0**-12
    with pytest.raises(ValueError):
        error_bound(1.0, 9, cone)
    assert sample_mean([1.0, 2.0, 6.0]) == 3.0
    with pytest.raises(ValueError):
        sample_mean([])


def test_theorem1_bound_by_hand():
    cone = ConeSpec()  # C(m) = 5 2^-m, factor 1 + 5/21 = 26/21
    S = [1.0] * 30
    # need 5 2^-m 26/21 <= 1e-3  ->  2^m >= 6190.5  ->  m = 13
    assert theorem1_m_bound(S, 1e-3, cone) == 13
    assert theorem1_m_bound([1.0] * 8, 1e-3, cone) is None
    S = [0.0] * 30
    assert theorem1_m_bound(S, 1e-3, cone) == 10


def test_constant_integrand():
    res = integrate(lambda x: np.full(len(x), 2.5), 3, 1e-3)
    assert res.estimate == 2.5
    assert res.n == 1024 and res.m_final == 10
    assert res.met_tolerance and res.error_bound == 0
    assert len(res.history) == 1


def test_keister_one_dimension():
    res = integrate(keister, 1, 1e-3, seed=0)
    assert abs(res.estimate - SQRT_PI_E) <= 1e-3
    assert res.met_tolerance


def test_seed_determinism_and_variation():
    a = integrate(keister, 2, 1e-3, seed=4)
    b = integrate(keister, 2, 1e-3, seed=4)
    c = integrate(keister, 2, 1e-3, seed=5)
    assert a.estimate == b.estimate and a.history == b.history
    assert a.estimate != c.estimate


def test_low_frequency_polynomial_is_exact():
    # wavenumbers below 2^5 in d = 1 are integrated exactly and leave the observed window empty
    rng = np.random.default_rng(0)
    k = np.arange(1, 32)[:, None]
    p = WalshPolynomial(np.vstack([[0], k]), np.concatenate([[1.25], rng.normal(size=31)]))
    res = integrate(lambda x: p(x).real, 1, 1e-8, seed=2)
    assert abs(res.estimate - 1.25) <= 1e-12
    assert res.n == 1024


def test_budget_exhaustion_is_flagged():
    gen = sobol_generator(8, 12, seed=1)
    res = integrate(keister, 8, 1e-9, gen=gen, m_max=12)
    assert not res.met_tolerance
    assert res.m_final == 12 and res.n == 4096
    assert [h.m for h in res.history] == [10, 11, 12]
    assert all(h.bound > 1e-9 for h in res.history)
    text = res.history_csv().splitlines()
    assert text[0] == "m,n,S_tilde,bound,elapsed_seconds"
    assert len(text) == 4


def test_stops_at_first_level_meeting_tolerance():
    res = integrate(keister, 3, 1e-3, seed=3)
    assert res.history[-1].bound <= 1e-3
    assert all(h.bound > 1e-3 for h in res.history[:-1])
    assert res.error_bound == res.history[-1].bound
    for h in res.history:
        assert h.bound == pytest.approx(5 * 2.0**-h.m * h.S_tilde)


def test_integrand_errors():
    def nan_at_7(x):
        y = np.ones(len(x))
        if len(x) > 7:
            y[7] = np.nan
        return y

    with pytest.raises(NonFiniteIntegrandError, match="index 7"):
        integrate(nan_at_7, 2, 1e-3)
    with pytest.raises(TypeError):
        integrate(lambda x: np.ones(len(x)) * 1j, 2, 1e-3)
    with pytest.raises(ValueError):
        integrate(lambda x: np.ones(3), 2, 1e-3)


def test_argument_validation():
    f = lambda x: np.ones(len(x))  # noqa: E731
    with pytest.raises(ValueError):
        integrate(f, 2, 0.0)
    with pytest.raises(ValueError):
        integrate(f, 2, 1e-3, m_max=9)
    with pytest.raises(ValueError):
        integrate(f, 2, 1e-3, gen=sobol_generator(3, 20))
    with pytest.raises(ValueError):
        integrate(f, 2, 1e-3, gen=sobol_generator(2, 12), m_max=14)


@pytest.mark.parametrize("seed", range(6))
def test_cone_members_meet_tolerance(seed):
    rng = np.random.default_rng(seed)
    d = 1 + seed % 3
    gen = sobol_generator(d, 16, seed=seed)
    q = rng.uniform(0.15, 0.2)
    f = geometric_member(gen, 16, q, 10 ** rng.uniform(0, 2), rng, (0.6, 1.0))
    cone = ConeSpec.from_omegas(lambda n: 1.0, geometric_omega_ring(q, 0.6))
    S = spectrum_sums(f, 16).S
    for tol in (1e-2, 1e-3):
        res = integrate(f, d, tol, cone, gen, m_max=16)
        assert abs(res.estimate - f.integral) <= tol
        assert res.m_final <= theorem1_m_bound(S, tol, cone)
