"""Seeded position sampling from a grid density (inverse-CDF, Philox streams)."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .solver import SpinorField


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """n uniforms from a counter-based Philox stream keyed by seed.

    Sample i always receives the same variate for a given seed, independent
    of batching or execution order.
    """
    return np.random.Generator(np.random.Philox(key=seed)).random(n)


def _inverse_cdf(field: SpinorField, u: np.ndarray) -> np.ndarray:
    rho = field.rho()
    gx = field.grid.x
    cdf = np.cumsum(rho) * field.grid.dx
    cdf /= cdf[-1]
    x = np.interp(u, cdf, gx)
    # keep samples out of the numerically dead tails of the density
    valid = rho > 1e-9 * rho.max()
    return np.clip(x, gx[valid].min(), gx[valid].max())


def sample_positions(field: SpinorField, n: int, seed: int) -> np.ndarray:
    """n positions drawn from rho(., t) by inverse-CDF sampling."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return _inverse_cdf(field, uniform_stream(seed, n))


def stratified_positions(field: SpinorField, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic quantile-midpoint grid over rho(., t) with uniform weights."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    u = (np.arange(n) + 0.5) / n
    return _inverse_cdf(field, u), np.full(n, 1.0 / n)


def gaussian_quantile(center: float, width: float, u: np.ndarray) -> np.ndarray:
    """Inverse CDF of the packet density N(center, width^2)."""
    from scipy.special import erfinv

    return center + width * np.sqrt(2.0) * erfinv(2.0 * np.asarray(u) - 1.0)
