"""Rate priors and conditional sales processes.

A rate prior is a continuous nonnegative distribution over per-day selling
rates; a sales process is a conditional count distribution with mean equal to
the rate it is given. Objects are immutable after construction and safe to
share across threads; parameter validation happens once, in the constructor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats
from scipy.special import gammaln, logsumexp, xlogy

from .streams import RandomStream

__all__ = [
    "GammaPrior",
    "LogNormalPrior",
    "UniformPrior",
    "MixturePrior",
    "RatePrior",
    "PoissonProcess",
    "GammaBlurredPoisson",
    "DemandProcess",
    "pmf_truncation_point",
]

_WEIGHT_TOL = 1e-12


def _check_rate_arg(r: float) -> float:
    r = float(r)
    if math.isnan(r) or math.isinf(r):
        raise ValueError(f"rate must be finite, got {r}")
    return r


@dataclass(frozen=True)
class GammaPrior:
    """Gamma distribution over rates, parameterised by shape and rate."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError(f"gamma shape must be > 0, got {self.shape}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"gamma rate must be > 0, got {self.rate}")

    def density(self, r: float) -> float:
        r = _check_rate_arg(r)
        if r < 0:
            return 0.0
        # scipy handles the r=0 boundary (finite for shape>=1, inf below).
        return float(stats.gamma.pdf(r, a=self.shape, scale=1.0 / self.rate))

    def log_density(self, r: float) -> float:
        if r < 0:
            return -math.inf
        a, b = self.shape, self.rate
        return float(xlogy(a - 1.0, r) + a * math.log(b) - b * r - gammaln(a))

    def mean(self) -> float:
        return self.shape / self.rate

    def sample(self, rng: RandomStream, size: int | None = None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)

    def upper_quantile(self, q: float) -> float:
        """A rate with at least mass q below it."""
        return float(stats.gamma.ppf(q, a=self.shape, scale=1.0 / self.rate))

    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)


@dataclass(frozen=True)
class LogNormalPrior:
    """Lognormal distribution over rates; mu and sigma act on log(rate)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"lognormal mu must be finite, got {self.mu}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"lognormal sigma must be > 0, got {self.sigma}")

    def density(self, r: float) -> float:
        r = _check_rate_arg(r)
        if r <= 0:
            return 0.0
        return float(stats.lognorm.pdf(r, s=self.sigma, scale=math.exp(self.mu)))

    def log_density(self, r: float) -> float:
        if r <= 0:
            return -math.inf
        z = (math.log(r) - self.mu) / self.sigma
        return -0.5 * z * z - math.log(r * self.sigma) - 0.5 * math.log(2.0 * math.pi)

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def sample(self, rng: RandomStream, size: int | None = None):
        return rng.lognormal(self.mu, self.sigma, size=size)

    def upper_quantile(self, q: float) -> float:
        return float(stats.lognorm.ppf(q, s=self.sigma, scale=math.exp(self.mu)))

    def support(self) -> tuple[float, float]:
        return (0.0, math.inf)


@dataclass(frozen=True)
class UniformPrior:
    """Uniform distribution over [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo >= 0 and math.isfinite(self.lo)):
            raise ValueError(f"uniform lo must be >= 0, got {self.lo}")
        if not (self.hi > self.lo and math.isfinite(self.hi)):
            raise ValueError(f"uniform hi must exceed lo, got [{self.lo}, {self.hi}]")

    def density(self, r: float) -> float:
        r = _check_rate_arg(r)
        if self.lo <= r <= self.hi:
            return 1.0 / (self.hi - self.lo)
        return 0.0

    def log_density(self, r: float) -> float:
        if self.lo <= r <= self.hi:
            return -math.log(self.hi - self.lo)
        return -math.inf

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng: RandomStream, size: int | None = None):
        return rng.uniform(self.lo, self.hi, size=size)

    def upper_quantile(self, q: float) -> float:
        return self.lo + q * (self.hi - self.lo)

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class MixturePrior:
    """Finite mixture of rate priors.

    Weights must be nonnegative and sum to one (within 1e-12).
    """

    weights: tuple[float, ...]
    components: tuple["RatePrior", ...]

    def __init__(self, weights, components):
        weights = tuple(float(w) for w in weights)
        components = tuple(components)
        if len(weights) != len(components) or not components:
            raise ValueError("mixture needs matching, nonempty weights and components")
        if any(w < 0 for w in weights):
            raise ValueError(f"mixture weights must be nonnegative, got {weights}")
        if abs(math.fsum(weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"mixture weights must sum to 1, got {math.fsum(weights)}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    def density(self, r: float) -> float:
        r = _check_rate_arg(r)
        return math.fsum(w * c.density(r) for w, c in zip(self.weights, self.components))

    def log_density(self, r: float) -> float:
        terms = [
            (math.log(w) if w > 0 else -math.inf) + c.log_density(r)
            for w, c in zip(self.weights, self.components)
        ]
        return float(logsumexp(terms))

    def mean(self) -> float:
        return math.fsum(w * c.mean() for w, c in zip(self.weights, self.components))

    def sample(self, rng: RandomStream, size: int | None = None):
        k = len(self.components)
        if size is None:
            idx = rng.choice(k, p=self.weights)
            return self.components[idx].sample(rng)
        # Component choices first, then component draws in component order,
        # so the consumed stream is a deterministic function of (state, size).
        idx = rng.choice(k, size=size, p=self.weights)
        out = np.empty(size, dtype=np.float64)
        for i, comp in enumerate(self.components):
            mask = idx == i
            count = int(mask.sum())
            if count:
                out[mask] = comp.sample(rng, size=count)
        return out

    def upper_quantile(self, q: float) -> float:
        # Max over components bounds the mixture quantile from above.
        return max(c.upper_quantile(q) for c in self.components)

    def support(self) -> tuple[float, float]:
        los, his = zip(*(c.support() for c in self.components))
        return (min(los), max(his))


RatePrior = Union[GammaPrior, LogNormalPrior, UniformPrior, MixturePrior]


def _check_count_rate(s: int, r: float) -> tuple[int, float]:
    if s < 0 or int(s) != s:
        raise ValueError(f"count must be a nonnegative integer, got {s}")
    r = float(r)
    if r < 0 or not math.isfinite(r):
        raise ValueError(f"rate must be finite and >= 0, got {r}")
    return int(s), r


@dataclass(frozen=True)
class PoissonProcess:
    """Poisson sales process; the rate is both mean and variance."""

    def pmf(self, s: int, r: float) -> float:
        return math.exp(self.log_pmf(s, r))

    def log_pmf(self, s: int, r: float) -> float:
        # Log-space with log-gamma for the factorial; exact for huge counts.
        # xlogy maps the r=0 boundary to a point mass at s=0.
        s, r = _check_count_rate(s, r)
        return float(xlogy(s, r) - r - gammaln(s + 1.0))

    def mean(self, r: float) -> float:
        return float(r)

    def sample(self, r: float, rng: RandomStream) -> int:
        if r < 0:
            raise ValueError(f"rate must be >= 0, got {r}")
        return int(rng.poisson(r))

    def upper_quantile(self, q: float, r: float) -> int:
        return int(stats.poisson.ppf(q, r)) if r > 0 else 0


@dataclass(frozen=True)
class GammaBlurredPoisson:
    """Poisson process whose rate is blurred by a gamma of the same mean.

    The blur gamma has mean r and shape ``blur_shape``; marginalising it out
    gives negative-binomial counts with mean r and variance r + r^2/blur_shape.
    """

    blur_shape: float

    def __post_init__(self):
        if not (self.blur_shape > 0 and math.isfinite(self.blur_shape)):
            raise ValueError(f"blur_shape must be > 0, got {self.blur_shape}")

    def _success_prob(self, r: float) -> float:
        return self.blur_shape / (self.blur_shape + r)

    def pmf(self, s: int, r: float) -> float:
        return math.exp(self.log_pmf(s, r))

    def log_pmf(self, s: int, r: float) -> float:
        s, r = _check_count_rate(s, r)
        if r == 0.0:
            return 0.0 if s == 0 else -math.inf
        k = self.blur_shape
        return float(
            gammaln(s + k)
            - gammaln(k)
            - gammaln(s + 1.0)
            + k * (math.log(k) - math.log(k + r))
            + xlogy(s, r / (k + r))
        )

    def mean(self, r: float) -> float:
        return float(r)

    def sample(self, r: float, rng: RandomStream) -> int:
        if r < 0:
            raise ValueError(f"rate must be >= 0, got {r}")
        blurred = rng.gamma(self.blur_shape, r / self.blur_shape)
        return int(rng.poisson(blurred))

    def upper_quantile(self, q: float, r: float) -> int:
        if r == 0.0:
            return 0
        return int(stats.nbinom.ppf(q, self.blur_shape, self._success_prob(r)))


DemandProcess = Union[PoissonProcess, GammaBlurredPoisson]


def pmf_truncation_point(process: DemandProcess, r: float, tail_mass: float = 1e-12) -> int:
    """Smallest count S whose cumulative pmf exceeds 1 - tail_mass."""
    return process.upper_quantile(1.0 - tail_mass, r)
