"""Distribution parameter types, densities, and closed-form inverse CDFs.

Every sampler in the package is parameterized by one of the small frozen
spec types below rather than by bare floats, so that a distribution choice
travels as a single value and is validated once at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc


class InverseUnavailableError(ValueError):
    """Raised for distribution families without a closed-form inverse CDF."""


@dataclass(frozen=True)
class GaussianSpec:
    """Normal distribution with mean ``mean`` and standard deviation ``sigma``."""

    mean: float
    sigma: float
    family = "gaussian"

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError(f"gaussian mean must be finite, got {self.mean}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"gaussian sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class UniformSpec:
    """Uniform distribution on the closed interval [lo, hi]."""

    lo: float
    hi: float
    family = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("uniform bounds must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"uniform requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ExponentialSpec:
    """Exponential distribution with rate parameter ``rate`` (mean 1/rate)."""

    rate: float
    family = "exponential"

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"exponential rate must be positive, got {self.rate}")


def gaussian_pdf(x, spec: GaussianSpec):
    """Density of ``spec`` evaluated at ``x`` (scalar or array)."""
    z = (np.asarray(x, dtype=float) - spec.mean) / spec.sigma
    out = np.exp(-0.5 * z * z) / (spec.sigma * math.sqrt(2.0 * math.pi))
    return out if out.ndim else float(out)


def gaussian_cdf(x, spec: GaussianSpec):
    """CDF of ``spec`` at ``x``, via the complementary error function.

    erfc is used instead of ``0.5*(1+erf(z/sqrt(2)))`` so the deep lower
    tail keeps full relative precision; tail mass enters the KL and
    benchmark oracles where cancellation would otherwise dominate.
    """
    z = (np.asarray(x, dtype=float) - spec.mean) / spec.sigma
    out = 0.5 * erfc(-z / math.sqrt(2.0))
    return out if out.ndim else float(out)


def uniform_pdf(x, spec: UniformSpec):
    x = np.asarray(x, dtype=float)
    out = np.where((x >= spec.lo) & (x <= spec.hi), 1.0 / spec.width, 0.0)
    return out if out.ndim else float(out)


def uniform_cdf(x, spec: UniformSpec):
    x = np.asarray(x, dtype=float)
    out = np.clip((x - spec.lo) / spec.width, 0.0, 1.0)
    return out if out.ndim else float(out)


def exponential_cdf(x, spec: ExponentialSpec):
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, -np.expm1(-spec.rate * np.maximum(x, 0.0)), 0.0)
    return out if out.ndim else float(out)


def inverse_cdf(p, spec):
    """Closed-form inverse CDF of ``spec`` evaluated at probability ``p``.

    Supports the uniform and exponential families. ``p`` must lie in
    [0, 1]; for the exponential, p = 1 maps to +inf. Families without a
    closed-form inverse (the Gaussian in particular) raise
    InverseUnavailableError — use a sampler from :mod:`prva.samplers`
    for those instead.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0.0) or np.any(p_arr > 1.0) or np.any(np.isnan(p_arr)):
        raise ValueError("probabilities must lie in [0, 1]")
    if isinstance(spec, UniformSpec):
        out = spec.lo + p_arr * spec.width
    elif isinstance(spec, ExponentialSpec):
        with np.errstate(divide="ignore"):
            out = -np.log1p(-p_arr) / spec.rate
    elif isinstance(spec, GaussianSpec):
        raise InverseUnavailableError(
            "no closed-form inverse CDF for family 'gaussian'; "
            "use an accept-reject or reference sampler"
        )
    else:
        raise InverseUnavailableError(
            f"no closed-form inverse CDF for family {getattr(spec, 'family', type(spec).__name__)!r}"
        )
    return out if out.ndim else float(out)
