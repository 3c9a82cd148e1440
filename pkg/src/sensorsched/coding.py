"""One-stage threshold scheduling with affine encoding and decoding.

For a Laplace source and Gamma channel noise with scale ``sqrt(P_T)`` the
affine encoder/decoder pair below is optimal, and the optimal symmetric
threshold for a per-transmission price ``c`` is ``sqrt(c + m)``, where ``m``
is the conditional MSE left after a transmission.

Encoder and decoder accept plain floats or numpy arrays of present values;
the absent symbol :data:`EPSILON` stands for "nothing was sent".
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Union

import numpy as np

from .distributions import (
    GammaParams,
    LaplaceParams,
    laplace_tail_prob,
    laplace_truncated_second_moment,
)


class _Absent:
    """The no-transmission symbol. A singleton; compare with ``is``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EPSILON"

    def __reduce__(self):
        return (_Absent, ())

    def __bool__(self):
        return False


EPSILON = _Absent()

ChannelSymbol = Union[float, np.ndarray, _Absent]
SideSymbol = Union[int, np.ndarray, _Absent]


class CodingError(ValueError):
    """Raised when an encoder/decoder input violates the scheduling contract."""


@dataclass(frozen=True)
class ModelParams:
    """Source, channel and power parameters.

    The noise scale is tied to the power budget, ``theta = sqrt(power)``, so the
    SNR reduces to ``1/shape`` and ``alpha = rate * theta``.
    """

    rate: float = 1.0
    shape: float = 1.0
    power: float = 1.0

    def __post_init__(self):
        for name in ("rate", "shape", "power"):
            v = getattr(self, name)
            if not (isinstance(v, numbers.Real) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @classmethod
    def from_snr(cls, gamma: float, rate: float = 1.0, power: float = 1.0) -> "ModelParams":
        if not (math.isfinite(gamma) and gamma > 0):
            raise ValueError(f"SNR must be positive and finite, got {gamma!r}")
        return cls(rate=rate, shape=1.0 / gamma, power=power)

    @property
    def theta(self) -> float:
        return math.sqrt(self.power)

    @property
    def alpha(self) -> float:
        return self.rate * self.theta

    @property
    def gamma(self) -> float:
        # P_T / (k theta^2) with theta^2 = P_T, evaluated without the rounding of theta**2
        return 1.0 / self.shape

    @property
    def m(self) -> float:
        return 1.0 / ((self.gamma + 1.0) * self.rate**2)

    @property
    def source(self) -> LaplaceParams:
        return LaplaceParams(self.rate)

    @property
    def noise(self) -> GammaParams:
        return GammaParams(self.shape, self.theta)

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "shape": self.shape,
            "power": self.power,
            "theta": self.theta,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "m": self.m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(rate=d["rate"], shape=d["shape"], power=d["power"])


def optimal_threshold(c: float, params: ModelParams) -> float:
    if c < 0:
        raise ValueError(f"communication cost must be nonnegative, got {c!r}")
    return math.sqrt(c + params.m)


def schedule(x: float, beta: float, budget_remaining: int) -> int:
    """Transmit iff budget is left and ``|x|`` strictly exceeds the threshold."""
    return int(budget_remaining > 0 and abs(x) > beta)


def sign(x):
    """Sign with ``sign(0) = +1``."""
    if isinstance(x, np.ndarray):
        return np.where(x < 0, -1, 1)
    return -1 if x < 0 else 1


def encode(x_tilde: ChannelSymbol, beta, params: ModelParams) -> ChannelSymbol:
    if x_tilde is EPSILON:
        return EPSILON
    mag = np.abs(x_tilde)
    if np.any(mag <= beta):
        raise CodingError("encoder received a value inside the no-transmission band")
    a = params.alpha
    return a * mag - a * beta - a / params.rate


def decode(y_tilde: ChannelSymbol, s: SideSymbol, beta, params: ModelParams):
    """Affine MMSE estimate of the source from the noisy symbol and its sign."""
    if (y_tilde is EPSILON) != (s is EPSILON):
        raise CodingError("channel and side symbols must be both present or both absent")
    if y_tilde is EPSILON:
        return 0.0
    g = params.gamma / (params.gamma + 1.0)
    return s * (g * y_tilde / params.alpha + g / params.rate + beta)


def stage_total_cost(beta: float, c: float, params: ModelParams) -> float:
    """Expected distortion plus ``c`` times the transmit probability, one stage."""
    p = params.source
    return laplace_truncated_second_moment(beta, p) + (params.m + c) * laplace_tail_prob(beta, p)


def optimal_stage_cost(beta, params: ModelParams):
    """``stage_total_cost(beta, beta**2 - m)``, the one-stage optimum at its own threshold.

    Equal to ``2/rate^2 * (1 - (rate*beta + 1) exp(-rate*beta))``.
    """
    lam = params.rate
    z = lam * beta
    return 2.0 / lam**2 * (-math.expm1(-z) - z * math.exp(-z))
