"""Analytic ground truth for the evaluation procedures.

For a rate prior and a sales process this module computes, exactly where a
closed form exists and by numerical quadrature otherwise:

* the target pmf, i.e. the marginal distribution of a single day's sales,
* the forward conditional mean E(s | r), which is r by construction,
* the hindsight density of the rate given an observed outcome,
* the hindsight mean E(r | s), the value honest forecasts average to within
  an outcome group.

The last quantity is the point of the exercise: it differs from s itself, so
judging forecasts by outcome groups penalizes honesty. Quadrature runs on the
log integrand with the mode subtracted, which keeps large-s likelihoods away
from underflow, and the hindsight mean shares one node set between numerator
and denominator so correlated quadrature error cancels in the ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp, roots_laguerre
from scipy.stats import nbinom

from .distributions import (
    DemandProcess,
    GammaBlurredPoisson,
    GammaPrior,
    PoissonProcess,
    RatePrior,
)
from .errors import DataError, QuadratureError

__all__ = [
    "AdaptiveInterval",
    "GaussLaguerre",
    "QuadratureScheme",
    "QuadratureSpec",
    "OracleContext",
]

_MODE_SCAN_POINTS = 257


@dataclass(frozen=True)
class AdaptiveInterval:
    """Globally adaptive interval quadrature with error control."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")


@dataclass(frozen=True)
class GaussLaguerre:
    """Fixed-node Gauss-Laguerre rule mapped onto the integration range."""

    node_count: int = 128

    def __post_init__(self):
        if self.node_count < 16:
            raise ValueError(f"node_count must be >= 16, got {self.node_count}")


QuadratureScheme = AdaptiveInterval | GaussLaguerre


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: QuadratureScheme = field(default_factory=AdaptiveInterval)
    upper_cutoff_mass: float = 1e-12

    def __post_init__(self):
        if not (0 < self.upper_cutoff_mass < 1):
            raise ValueError(
                f"upper_cutoff_mass must be in (0, 1), got {self.upper_cutoff_mass}"
            )


def _likelihood_rate_bound(process: DemandProcess, s: int) -> float:
    """A rate beyond which the likelihood of outcome s is negligible.

    The likelihood peaks near r = s; twelve conditional standard deviations
    of headroom make the truncated mass irrelevant at double precision.
    """
    if isinstance(process, GammaBlurredPoisson):
        spread = math.sqrt((s + 1.0) * (1.0 + (s + 1.0) / process.blur_shape))
    else:
        spread = math.sqrt(s + 1.0)
    return s + 12.0 * spread + 12.0


class _GammaPoissonClosedForm:
    """Conjugate closed forms for a gamma prior with Poisson sales."""

    def __init__(self, prior: GammaPrior):
        self.prior = prior

    def target_pmf(self, s: int) -> float:
        b = self.prior.rate
        return float(nbinom.pmf(s, self.prior.shape, b / (b + 1.0)))

    def hindsight_mean(self, s: int) -> float:
        return (self.prior.shape + s) / (self.prior.rate + 1.0)


def _closed_form(prior: RatePrior, process: DemandProcess):
    """Explicit dispatch: closed forms exist only where registered here."""
    if isinstance(prior, GammaPrior) and isinstance(process, PoissonProcess):
        return _GammaPoissonClosedForm(prior)
    return None


@dataclass(frozen=True)
class OracleContext:
    """A (prior, process) pair plus the quadrature policy used to query it.

    use_closed_forms=False forces the quadrature route even where a closed
    form is registered; tests use this to check the two routes against each
    other, and it must never be collapsed into a single path.
    """

    prior: RatePrior
    process: DemandProcess
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    use_closed_forms: bool = True

    def integration_range(self, s: int) -> tuple[float, float]:
        """Rate interval outside which prior times likelihood is negligible."""
        lo, support_hi = self.prior.support()
        prior_hi = self.prior.upper_quantile(1.0 - self.quadrature.upper_cutoff_mass)
        hi = 2.0 * max(prior_hi, _likelihood_rate_bound(self.process, s))
        hi = min(hi, support_hi)
        return lo, hi

    def _log_integrand(self, s: int) -> Callable[[float], float]:
        prior, process = self.prior, self.process

        def log_f(r: float) -> float:
            return process.log_pmf(s, r) + prior.log_density(r)

        return log_f

    def _candidates(self, s: int, lo: float, hi: float) -> np.ndarray:
        """Probe points that cannot all miss a mass concentration.

        The integrand peaks where prior and likelihood overlap, which may be
        a needle inside a huge prior-mandated range (heavy-tailed priors).
        Linear and geometric grids are therefore topped up with analytic
        guesses: the likelihood peak near r = s, prior component means, and
        exact gamma-component posterior modes.
        """
        lo_eff = lo + (hi - lo) * 1e-15
        hi_eff = hi - (hi - lo) * 1e-15
        grids = [np.linspace(lo, hi, _MODE_SCAN_POINTS)[1:-1]]
        log_lo = lo if lo > 0 else hi * 1e-15
        if log_lo < hi_eff:
            grids.append(np.geomspace(log_lo, hi_eff, _MODE_SCAN_POINTS))
        spread = math.sqrt(s + 1.0)
        guesses = [float(s), s - 2.0 * spread, s + 2.0 * spread]

        def add_prior_guesses(prior):
            guesses.append(prior.mean())
            if isinstance(prior, GammaPrior):
                guesses.append((s + prior.shape - 1.0) / (prior.rate + 1.0))
            if hasattr(prior, "components"):
                for component in prior.components:
                    add_prior_guesses(component)

        add_prior_guesses(self.prior)
        grids.append(np.clip(np.asarray(guesses, dtype=np.float64), lo_eff, hi_eff))
        return np.unique(np.concatenate(grids))

    def _log_scale(self, log_f, lo: float, hi: float, s: int) -> tuple[float, np.ndarray]:
        """Reference value near the maximum of log_f, plus breakpoints.

        Returns the best log value found and the candidate points within 80
        nats of it; the latter seed the adaptive subdivision so narrow peaks
        are never skipped over. Endpoint singularities of low-shape gamma
        priors are integrable and deliberately excluded from the scan.
        """
        grid = self._candidates(s, lo, hi)
        values = np.array([log_f(r) for r in grid])
        best = float(values.max())
        start = float(grid[int(values.argmax())])
        span = (hi - lo) / (_MODE_SCAN_POINTS - 1)
        res = optimize.minimize_scalar(
            lambda r: -log_f(r),
            bounds=(max(lo, start - span), min(hi, start + span)),
            method="bounded",
        )
        if res.success and math.isfinite(res.fun):
            best = max(best, -float(res.fun))
        breakpoints = grid[values >= best - 80.0]
        if breakpoints.size > 24:
            keep = np.linspace(0, breakpoints.size - 1, 24).round().astype(int)
            breakpoints = breakpoints[keep]
        return best, breakpoints

    def _integrate_scaled(self, s: int, powers: tuple[int, ...]) -> tuple[np.ndarray, float]:
        """Integrate r^k * exp(log_f(r) - M) for each k, on shared nodes.

        Returns the scaled integrals and the log scale M; the true integrals
        are the scaled ones times exp(M).
        """
        lo, hi = self.integration_range(s)
        log_f = self._log_integrand(s)
        scale, breakpoints = self._log_scale(log_f, lo, hi, s)
        scheme = self.quadrature.scheme
        if isinstance(scheme, AdaptiveInterval):
            def f(r: float) -> np.ndarray:
                g = math.exp(log_f(r) - scale)
                return np.array([r**k * g for k in powers])

            result, err = integrate.quad_vec(
                f, lo, hi, epsabs=scheme.abs_tol, epsrel=scheme.rel_tol,
                points=breakpoints,
            )
            allowed = max(scheme.abs_tol, scheme.rel_tol * float(np.abs(result).max()))
            if not np.all(np.isfinite(result)) or err > allowed:
                raise QuadratureError(
                    f"adaptive quadrature did not converge for outcome {s}: "
                    f"error estimate {err:.3e} exceeds allowance {allowed:.3e}",
                    achieved_tolerance=float(err),
                )
            return result, scale
        assert isinstance(scheme, GaussLaguerre)
        full = self._laguerre(log_f, lo, hi, scale, powers, scheme.node_count)
        half = self._laguerre(log_f, lo, hi, scale, powers, scheme.node_count // 2)
        drift = float(np.abs(full - half).max())
        tolerance = 1e-6 * max(1.0, float(np.abs(full).max()))
        if not np.all(np.isfinite(full)) or drift > tolerance:
            raise QuadratureError(
                f"Gauss-Laguerre rule unstable for outcome {s}: halving the "
                f"nodes moves the result by {drift:.3e}",
                achieved_tolerance=drift,
            )
        return full, scale

    @staticmethod
    def _laguerre(log_f, lo, hi, scale, powers, nodes) -> np.ndarray:
        x, w = roots_laguerre(nodes)
        c = (hi - lo) / float(x[-1])
        r = lo + c * x
        log_g = np.array([log_f(v) for v in r]) - scale
        out = []
        for k in powers:
            log_terms = np.log(w) + x + log_g + (k * np.log(r) if k else 0.0)
            out.append(c * math.exp(logsumexp(log_terms)))
        return np.array(out)

    def target_pmf(self, s: int) -> float:
        """Marginal probability of selling exactly s units in a day."""
        if s < 0 or int(s) != s:
            raise ValueError(f"outcome must be a nonnegative integer, got {s}")
        s = int(s)
        closed = _closed_form(self.prior, self.process) if self.use_closed_forms else None
        if closed is not None:
            return closed.target_pmf(s)
        (scaled,), log_scale = self._integrate_scaled(s, powers=(0,))
        return min(1.0, max(0.0, float(scaled * math.exp(log_scale))))

    def forward_mean(self, r: float) -> float:
        """E(s | r): the calibration promise, the identity on rates."""
        r = float(r)
        if not (r >= 0 and math.isfinite(r)):
            raise ValueError(f"rate must be finite and >= 0, got {r}")
        return r

    def hindsight_density(self, r: float, s: int) -> float:
        """Density of the rate among items that sold exactly s units."""
        target = self.target_pmf(s)
        if target <= 0.0:
            raise DataError(
                f"outcome {s} has zero target probability; cannot condition on it"
            )
        r = float(r)
        if r < 0:
            return 0.0
        log_f = self._log_integrand(int(s))
        return math.exp(log_f(r) - math.log(target))

    def hindsight_mean(self, s: int) -> float:
        """E(r | s): what honest forecasts average to among items that sold s."""
        if s < 0 or int(s) != s:
            raise ValueError(f"outcome must be a nonnegative integer, got {s}")
        s = int(s)
        closed = _closed_form(self.prior, self.process) if self.use_closed_forms else None
        if closed is not None:
            if closed.target_pmf(s) <= 0.0:
                raise DataError(
                    f"outcome {s} has zero target probability; cannot condition on it"
                )
            return closed.hindsight_mean(s)
        (mass, first_moment), _ = self._integrate_scaled(s, powers=(0, 1))
        if mass <= 0.0:
            raise DataError(
                f"outcome {s} has zero target probability; cannot condition on it"
            )
        return float(first_moment / mass)

    def hindsight_curve(self, s_max: int) -> list[tuple[int, float]]:
        """(s, E(r|s)) for s = 0..s_max, skipping zero-mass outcomes."""
        if s_max < 0:
            raise ValueError(f"s_max must be >= 0, got {s_max}")
        curve = []
        for s in range(int(s_max) + 1):
            try:
                curve.append((s, self.hindsight_mean(s)))
            except DataError:
                continue
        return curve
