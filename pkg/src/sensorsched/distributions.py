"""Laplace source and Gamma channel-noise distributions.

Closed-form densities and moments are evaluated directly; the samplers are
built on the raw uniform/normal draws of a seeded :class:`RngStream` so that a
given ``(seed, stream)`` pair always reproduces the same sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LaplaceParams:
    """Zero-mean Laplace law with density ``(rate/2) exp(-rate |x|)``."""

    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"Laplace rate must be positive and finite, got {self.rate!r}")

    @property
    def mean(self) -> float:
        return 0.0

    @property
    def variance(self) -> float:
        return 2.0 / self.rate**2


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        for name in ("shape", "scale"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"Gamma {name} must be positive and finite, got {v!r}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2


@dataclass
class RngStream:
    """Reproducible random stream identified by ``(seed, stream)``.

    Streams with different indices are statistically independent. A stream
    holds mutable generator state, so it must not be shared between
    concurrently running samplers.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.stream < 0:
            raise ValueError(f"stream index must be nonnegative, got {self.stream!r}")
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)


def laplace_pdf(x, p: LaplaceParams):
    return 0.5 * p.rate * np.exp(-p.rate * np.abs(x))


def laplace_cdf(x, p: LaplaceParams):
    x = np.asarray(x, dtype=float)
    half_tail = 0.5 * np.exp(-p.rate * np.abs(x))
    return np.where(x < 0, half_tail, 1.0 - half_tail)


def laplace_tail_prob(beta, p: LaplaceParams):
    """P(|X| > beta) = exp(-rate * beta)."""
    if np.any(np.asarray(beta) < 0):
        raise ValueError("threshold must be nonnegative")
    return np.exp(-p.rate * beta)


def laplace_truncated_second_moment(beta, p: LaplaceParams):
    """E[X^2 ; |X| <= beta] for the Laplace source.

    Written as ``2/rate^2 * (1 - exp(-z) (1 + z + z^2/2))`` with ``z = rate*beta``;
    the series branch avoids cancellation for small ``z``.
    """
    if np.any(np.asarray(beta) < 0):
        raise ValueError("threshold must be nonnegative")
    z = p.rate * np.asarray(beta, dtype=float)
    # 1 - e^{-z}(1 + z + z^2/2) = P(Gamma(3,1) <= z) = 1/2 sum_n (-z)^n z^3 / (n! (n+3))
    small = z < 0.5
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(zs)
    term = 0.5 * zs**3
    for n in range(20):
        series = series + term / (n + 3)
        term = -term * zs / (n + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = -np.expm1(-z) - z * np.exp(-z) * (1.0 + 0.5 * z)
    direct = np.where(np.isinf(z), 1.0, direct)
    out = 2.0 / p.rate**2 * np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def sample_laplace(rng: RngStream, p: LaplaceParams, size=None):
    """Inverse-CDF Laplace draws.

    ``u`` is uniform on (-1/2, 1/2); the sample is ``-sgn(u) log(1 - 2|u|) / rate``.
    """
    n = 1 if size is None else size
    r = rng.uniform(n)
    # r == 0 maps to u = -1/2 and log(0); redraw those (probability 2^-53 each).
    zero = r == 0.0
    while np.any(zero):
        r[zero] = rng.uniform(int(np.count_nonzero(zero)))
        zero = r == 0.0
    u = r - 0.5
    x = -np.sign(u) * np.log1p(-2.0 * np.abs(u)) / p.rate
    return float(x[0]) if size is None else x


def _marsaglia_tsang(rng: RngStream, shape: float, n: int) -> np.ndarray:
    # Unit-scale Gamma(shape) for shape >= 1: squeeze test, then the log test.
    # Each round draws a few spare candidates so one round usually suffices;
    # accepted values are kept in draw order.
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        m = need + need // 16 + 4
        z = rng.normal(m)
        u = rng.uniform(m)
        v = 1.0 + c * z
        ok = v > 0
        v3 = np.where(ok, v, 1.0) ** 3
        z2 = z * z
        accept = ok & (u < 1.0 - 0.0331 * z2 * z2)
        slow = ok & ~accept & (u > 0)
        if slow.any():
            accept[slow] = np.log(u[slow]) < 0.5 * z2[slow] + d * (1.0 - v3[slow] + np.log(v3[slow]))
        got = d * v3[accept][:need]
        out[filled:filled + got.size] = got
        filled += got.size
    return out


def sample_gamma(rng: RngStream, p: GammaParams, size=None):
    """Gamma(shape, scale) draws, valid for any positive shape.

    Shapes below one are boosted: draw with shape + 1 and multiply by
    ``U**(1/shape)``.
    """
    n = 1 if size is None else size
    if p.shape >= 1.0:
        g = _marsaglia_tsang(rng, p.shape, n)
    else:
        g = _marsaglia_tsang(rng, p.shape + 1.0, n)
        u = rng.uniform(n)
        # U must be > 0 for the boost; 0 has probability 2^-53.
        zero = u == 0.0
        while np.any(zero):
            u[zero] = rng.uniform(int(np.count_nonzero(zero)))
            zero = u == 0.0
        g = g * u ** (1.0 / p.shape)
    g = g * p.scale
    return float(g[0]) if size is None else g
