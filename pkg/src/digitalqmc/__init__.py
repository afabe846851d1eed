"""Adaptive quasi-Monte Carlo cubature with digital sequences."""

from .cubature import ConeSpec, CubatureResult, LevelRecord, NonFiniteIntegrandError, integrate
from .digital import DigitalPoint, GeneratorSet, apply_scramble, digit_add, pairing
from .integrands import (
    SlotWalshPolynomial,
    WalshPolynomial,
    cone_check,
    keister,
    keister_reference,
    spectrum_sums,
)
from .sobol import load_direction_numbers, sobol_generator
from .transform import TransformState, extend_transform, fast_transform, tilde_S

__all__ = [
    "ConeSpec",
    "CubatureResult",
    "DigitalPoint",
    "GeneratorSet",
    "LevelRecord",
    "NonFiniteIntegrandError",
    "SlotWalshPolynomial",
    "TransformState",
    "WalshPolynomial",
    "apply_scramble",
    "cone_check",
    "digit_add",
    "extend_transform",
    "fast_transform",
    "integrate",
    "keister",
    "keister_reference",
    "load_direction_numbers",
    "pairing",
    "sobol_generator",
    "spectrum_sums",
    "tilde_S",
]
__version__ = "0.1.0"
