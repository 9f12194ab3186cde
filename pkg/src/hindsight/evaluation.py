"""Empirical forecast evaluation.

Three procedures, in increasing order of strictness:

* a global bias test comparing the mean prediction to the mean outcome,
* forward-looking evaluation, which buckets items by what was PREDICTED and
  compares each bucket's mean outcome to its mean prediction,
* backward-looking evaluation, which groups items by what actually HAPPENED
  and reports the mean prediction per observed outcome.

The forward procedure is the probe of the calibration promise: among items
with prediction near r, outcomes should average r. The backward procedure is
reported because people keep using it, not because it is sound; its per-group
reference point is a conditional expectation over the rate ensemble, not the
observed outcome, which is what the analytic oracle quantifies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

import numpy as np

from . import streams
from .errors import DataError
from .market import ForecastOutcomePair

if TYPE_CHECKING:
    from .oracle import OracleContext

__all__ = [
    "FixedWidth",
    "Quantile",
    "LogWidth",
    "BucketScheme",
    "BucketSpec",
    "BucketReport",
    "OutcomeGroupReport",
    "BiasTestResult",
    "CalibrationVerdict",
    "global_means",
    "global_bias_test",
    "bootstrap_bias_test",
    "make_buckets",
    "forward_buckets",
    "backward_groups",
    "calibration_verdict",
]

DEFAULT_MIN_COUNT = 30
DEFAULT_Z_CRIT = 4.0


@dataclass(frozen=True)
class FixedWidth:
    """Buckets of constant width, with edges on origin + k*width."""

    width: float
    origin: float = 0.0

    def __post_init__(self):
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ValueError(f"width must be > 0, got {self.width}")
        if not (self.origin >= 0 and math.isfinite(self.origin)):
            raise ValueError(f"origin must be >= 0, got {self.origin}")


@dataclass(frozen=True)
class Quantile:
    """Buckets holding roughly equal numbers of predictions."""

    buckets: int

    def __post_init__(self):
        if self.buckets < 1:
            raise ValueError(f"bucket count must be >= 1, got {self.buckets}")


@dataclass(frozen=True)
class LogWidth:
    """Geometric buckets: [0, min_edge), then edges growing by ratio."""

    ratio: float
    min_edge: float

    def __post_init__(self):
        if not (self.ratio > 1 and math.isfinite(self.ratio)):
            raise ValueError(f"ratio must be > 1, got {self.ratio}")
        if not (self.min_edge > 0 and math.isfinite(self.min_edge)):
            raise ValueError(f"min_edge must be > 0, got {self.min_edge}")


BucketScheme = FixedWidth | Quantile | LogWidth


@dataclass(frozen=True)
class BucketSpec:
    scheme: BucketScheme
    min_count: int = DEFAULT_MIN_COUNT

    def __post_init__(self):
        if self.min_count < 1:
            raise ValueError(f"min_count must be >= 1, got {self.min_count}")


@dataclass(frozen=True)
class BucketReport:
    """Summary of one prediction bucket [lo, hi).

    z_score is None when the bucket is flagged for low count, empty, or has
    zero outcome spread; such buckets carry no significance information.
    """

    lo: float
    hi: float
    count: int
    mean_prediction: float | None
    mean_outcome: float | None
    outcome_stderr: float
    z_score: float | None
    flagged_low_count: bool


@dataclass(frozen=True)
class OutcomeGroupReport:
    """Summary of all items that sold exactly ``outcome`` units."""

    outcome: int
    count: int
    mean_prediction: float
    prediction_stderr: float
    analytic_hindsight_mean: float | None = None


@dataclass(frozen=True)
class BiasTestResult:
    """Global comparison of mean prediction and mean outcome.

    degenerate means the spread of paired differences was unusable (one pair,
    or zero variance); z_score is None in that case.
    """

    mean_prediction: float
    mean_outcome: float
    difference: float
    stderr: float
    z_score: float | None
    significant_at_3sigma: bool
    degenerate: bool


@dataclass(frozen=True)
class CalibrationVerdict:
    passed: bool
    z_crit: float
    worst: BucketReport | None
    buckets_checked: int


def _as_arrays(pairs: Sequence[ForecastOutcomePair]) -> tuple[np.ndarray, np.ndarray]:
    if len(pairs) == 0:
        raise DataError("at least one prediction/outcome pair is required")
    preds = np.fromiter((p.prediction for p in pairs), dtype=np.float64, count=len(pairs))
    outs = np.fromiter((p.outcome for p in pairs), dtype=np.int64, count=len(pairs))
    return preds, outs


def _mean(values: np.ndarray) -> float:
    return math.fsum(values) / values.size


def _stderr_of_mean(values: np.ndarray) -> float:
    if values.size <= 1:
        return 0.0
    return float(np.sqrt(np.var(values, ddof=1) / values.size))


def global_means(pairs: Sequence[ForecastOutcomePair]) -> tuple[float, float]:
    """Arithmetic means (mean prediction, mean outcome), compensated."""
    preds, outs = _as_arrays(pairs)
    return _mean(preds), _mean(outs)


def global_bias_test(pairs: Sequence[ForecastOutcomePair]) -> BiasTestResult:
    """Test whether the mean outcome differs significantly from the mean prediction.

    Uses the paired differences s - r, whose sample variance absorbs the
    prediction/outcome correlation; the verdict is a plain three-sigma rule.
    """
    preds, outs = _as_arrays(pairs)
    mean_pred = _mean(preds)
    mean_out = _mean(outs)
    difference = mean_out - mean_pred
    stderr = _stderr_of_mean(outs - preds)
    if stderr == 0.0:
        return BiasTestResult(
            mean_prediction=mean_pred,
            mean_outcome=mean_out,
            difference=difference,
            stderr=0.0,
            z_score=None,
            significant_at_3sigma=False,
            degenerate=True,
        )
    z = difference / stderr
    return BiasTestResult(
        mean_prediction=mean_pred,
        mean_outcome=mean_out,
        difference=difference,
        stderr=stderr,
        z_score=z,
        significant_at_3sigma=abs(z) > 3.0,
        degenerate=False,
    )


def bootstrap_bias_test(
    pairs: Sequence[ForecastOutcomePair],
    seed: int,
    resamples: int = 1000,
) -> BiasTestResult:
    """Global bias test with a bootstrap standard error.

    Alternative to the normal approximation for small samples: the stderr is
    the spread of the mean paired difference over seeded resamples.
    """
    if resamples < 2:
        raise ValueError(f"resamples must be >= 2, got {resamples}")
    preds, outs = _as_arrays(pairs)
    diffs = outs - preds
    n = diffs.size
    rng = streams.stream(seed, streams.DOMAIN_BOOTSTRAP)
    idx = rng.integers(0, n, size=(resamples, n))
    resampled_means = diffs[idx].mean(axis=1)
    stderr = float(np.std(resampled_means, ddof=1))
    mean_pred = _mean(preds)
    mean_out = _mean(outs)
    difference = mean_out - mean_pred
    if stderr == 0.0:
        return BiasTestResult(
            mean_prediction=mean_pred,
            mean_outcome=mean_out,
            difference=difference,
            stderr=0.0,
            z_score=None,
            significant_at_3sigma=False,
            degenerate=True,
        )
    z = difference / stderr
    return BiasTestResult(
        mean_prediction=mean_pred,
        mean_outcome=mean_out,
        difference=difference,
        stderr=stderr,
        z_score=z,
        significant_at_3sigma=abs(z) > 3.0,
        degenerate=False,
    )


def make_buckets(
    pairs: Sequence[ForecastOutcomePair], spec: BucketSpec
) -> list[tuple[float, float]]:
    """Build disjoint half-open intervals [lo, hi) covering every prediction."""
    preds, _ = _as_arrays(pairs)
    lo, hi = float(preds.min()), float(preds.max())
    scheme = spec.scheme
    if isinstance(scheme, FixedWidth):
        k_lo = math.floor((lo - scheme.origin) / scheme.width)
        k_hi = math.floor((hi - scheme.origin) / scheme.width)
        edges = [scheme.origin + k * scheme.width for k in range(k_lo, k_hi + 2)]
        # Predictions are nonnegative; the left edge may only underhang by
        # less than one width, so clamping it to zero cannot reorder edges.
        if edges[0] < 0.0:
            edges[0] = 0.0
    elif isinstance(scheme, Quantile):
        qs = np.linspace(0.0, 1.0, scheme.buckets + 1)
        raw = np.quantile(preds, qs)
        edges = list(np.unique(raw))
        # Half-open intervals would exclude the maximum, so nudge the top
        # edge one ulp past it.
        edges[-1] = float(np.nextafter(edges[-1], math.inf))
        if len(edges) < scheme.buckets + 1:
            warnings.warn(
                f"quantile bucketing merged duplicate edges: requested "
                f"{scheme.buckets} buckets, got {len(edges) - 1}",
                stacklevel=2,
            )
        if len(edges) == 1:
            edges = [float(preds.min()), float(np.nextafter(preds.min(), math.inf))]
    else:
        assert isinstance(scheme, LogWidth)
        edges = [0.0, scheme.min_edge]
        while edges[-1] <= hi:
            edges.append(edges[-1] * scheme.ratio)
    return [(float(a), float(b)) for a, b in zip(edges, edges[1:])]


def _bin_indices(preds: np.ndarray, intervals: list[tuple[float, float]]) -> np.ndarray:
    edges = np.array([iv[0] for iv in intervals] + [intervals[-1][1]])
    idx = np.searchsorted(edges, preds, side="right") - 1
    if np.any(idx < 0) or np.any(idx >= len(intervals)):
        raise AssertionError("bucket construction failed to cover a prediction")
    return idx


def forward_buckets(
    pairs: Sequence[ForecastOutcomePair], spec: BucketSpec
) -> list[BucketReport]:
    """Prediction-bucketed evaluation: compare each bucket's outcomes to its predictions."""
    preds, outs = _as_arrays(pairs)
    intervals = make_buckets(pairs, spec)
    idx = _bin_indices(preds, intervals)
    reports = []
    for b, (lo, hi) in enumerate(intervals):
        mask = idx == b
        count = int(mask.sum())
        if count == 0:
            reports.append(
                BucketReport(
                    lo=lo,
                    hi=hi,
                    count=0,
                    mean_prediction=None,
                    mean_outcome=None,
                    outcome_stderr=0.0,
                    z_score=None,
                    flagged_low_count=True,
                )
            )
            continue
        bucket_preds = preds[mask]
        bucket_outs = outs[mask]
        mean_pred = _mean(bucket_preds)
        mean_out = _mean(bucket_outs)
        stderr = _stderr_of_mean(bucket_outs)
        flagged = count < spec.min_count
        z = None
        if not flagged and stderr > 0.0:
            z = (mean_out - mean_pred) / stderr
        reports.append(
            BucketReport(
                lo=lo,
                hi=hi,
                count=count,
                mean_prediction=mean_pred,
                mean_outcome=mean_out,
                outcome_stderr=stderr,
                z_score=z,
                flagged_low_count=flagged,
            )
        )
    return reports


def backward_groups(
    pairs: Sequence[ForecastOutcomePair],
    oracle: "OracleContext | None" = None,
) -> list[OutcomeGroupReport]:
    """Outcome-grouped evaluation: mean prediction among items that sold exactly s.

    When an oracle context is given, each group also carries the analytic
    conditional mean rate E(r | s), the value an ideal calibrated forecaster
    would average to in that group.
    """
    preds, outs = _as_arrays(pairs)
    reports = []
    for s in np.unique(outs):
        mask = outs == s
        group = preds[mask]
        analytic = oracle.hindsight_mean(int(s)) if oracle is not None else None
        reports.append(
            OutcomeGroupReport(
                outcome=int(s),
                count=int(mask.sum()),
                mean_prediction=_mean(group),
                prediction_stderr=_stderr_of_mean(group),
                analytic_hindsight_mean=analytic,
            )
        )
    return reports


def calibration_verdict(
    reports: Sequence[BucketReport], z_crit: float = DEFAULT_Z_CRIT
) -> CalibrationVerdict:
    """Overall forward-looking verdict: fail if any assessable bucket has |z| > z_crit."""
    if z_crit <= 0:
        raise ValueError(f"z_crit must be > 0, got {z_crit}")
    assessable = [r for r in reports if not r.flagged_low_count and r.z_score is not None]
    worst = max(assessable, key=lambda r: abs(r.z_score), default=None)
    passed = worst is None or abs(worst.z_score) <= z_crit
    return CalibrationVerdict(
        passed=passed,
        z_crit=z_crit,
        worst=worst,
        buckets_checked=len(assessable),
    )
