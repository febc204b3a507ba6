"""Correlations behind the gadget as linear functionals of the input coherences."""

import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DimensionError, RangeError
from .fock import CoherenceIndex, CoherenceTensor, coherence_indices
from .gadget import MeasurementSetting

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class CorrelationSpec:
    """``<b1^+^i b2^+^(N-i) b1^i b2^(N-i)>``: order i in port 1, N - i in port 2."""

    N: int
    i: int

    def __post_init__(self) -> None:
        if self.N < 0 or not 0 <= self.i <= self.N:
            raise RangeError(f"correlation needs 0 <= i <= N, got N={self.N}, i={self.i}")


def expansion_terms(
    spec: CorrelationSpec, setting: MeasurementSetting
) -> Iterator[tuple[CoherenceIndex, complex]]:
    """Yield every (coherence, coefficient) term of the expansion, unaggregated."""
    N, i = spec.N, spec.i
    c, s = math.cos(setting.theta), math.sin(setting.theta)
    rest = N - i
    for w in range(i + 1):
        for y in range(i + 1):
            for x in range(rest + 1):
                for z in range(rest + 1):
                    weight = (
                        math.comb(i, w) * math.comb(i, y) * math.comb(rest, x) * math.comb(rest, z)
                    )
                    sin_power = w + x + y + z
                    sign = -1.0 if (x + z) % 2 else 1.0
                    phase = np.exp(1j * setting.phi * (x + y - w - z))
                    coeff = weight * c ** (2 * N - sin_power) * s**sin_power * sign * phase
                    yield CoherenceIndex(rest - x + w, rest - z + y), complex(coeff)


def correlation_coefficients(
    spec: CorrelationSpec, setting: MeasurementSetting
) -> dict[CoherenceIndex, complex]:
    """Coefficient of every order-N coherence, zero where no term lands."""
    coefficients = {idx: 0j for idx in coherence_indices(spec.N)}
    for idx, coeff in expansion_terms(spec, setting):
        coefficients[idx] += coeff
    return coefficients


def _binomials(N: int) -> np.ndarray:
    return np.array([math.comb(N, k) for k in range(N + 1)], dtype=float)


def intensity_coefficients(N: int, setting: MeasurementSetting) -> np.ndarray:
    """Coefficient matrix ``[w, y]`` of ``<b1^+^N b1^N>``."""
    k = np.arange(N + 1)
    binom = _binomials(N)
    c, s = math.cos(setting.theta), math.sin(setting.theta)
    cos_pow = np.power(c, N - k)
    sin_pow = np.power(s, k)
    radial = np.outer(binom * cos_pow * sin_pow, binom * cos_pow * sin_pow)
    phase = np.exp(1j * setting.phi * (k[None, :] - k[:, None]))
    return radial * phase


def _real_part(value: complex, scale: float) -> float:
    if abs(value.imag) > IMAG_TOL * max(1.0, scale):
        logger.debug("discarding imaginary residual %.3e", value.imag)
    return float(value.real)


def predicted_moment(tensor: CoherenceTensor, setting: MeasurementSetting) -> float:
    """Predict ``<b1^+^N b1^N>`` for a Hermitian coherence tensor."""
    tensor.check_hermitian()
    value = complex(np.sum(intensity_coefficients(tensor.N, setting) * tensor.values))
    return _real_part(value, float(np.max(np.abs(tensor.values))))


def predicted_correlation(
    tensor: CoherenceTensor, spec: CorrelationSpec, setting: MeasurementSetting
) -> float:
    """Predict a general two-port correlation of order ``spec.N``."""
    if spec.N != tensor.N:
        raise DimensionError(f"order-{spec.N} correlation needs an order-{spec.N} tensor")
    tensor.check_hermitian()
    value = sum(
        coeff * tensor[idx] for idx, coeff in correlation_coefficients(spec, setting).items()
    )
    return _real_part(complex(value), float(np.max(np.abs(tensor.values))))
