"""Synthetic one-day retail market.

Draws an assortment of items with true selling rates, realizes a single day
of sales for each item, and produces honest or deliberately distorted
forecasts for the evaluation procedures to judge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import streams
from .distributions import DemandProcess, RatePrior
from .errors import DataError

__all__ = [
    "Assortment",
    "ForecastOutcomePair",
    "Honest",
    "Permutation",
    "ConstantMean",
    "Exaggerate",
    "DistortionStrategy",
    "generate_assortment",
    "realize_sales",
    "apply_distortion",
    "build_pairs",
]

DEFAULT_OUTCOME_CAP = 10**6


@dataclass(frozen=True, eq=False)
class Assortment:
    """A fixed set of items, each with a true (hidden) selling rate."""

    true_rates: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.true_rates, dtype=np.float64)
        if rates.ndim != 1 or rates.size == 0:
            raise ValueError("true_rates must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ValueError("true_rates must be finite and >= 0")
        rates.setflags(write=False)
        object.__setattr__(self, "true_rates", rates)

    @property
    def item_count(self) -> int:
        return int(self.true_rates.size)


class ForecastOutcomePair(NamedTuple):
    item_id: int
    prediction: float
    outcome: int


@dataclass(frozen=True)
class Honest:
    """Report the true rates unchanged."""


@dataclass(frozen=True)
class Permutation:
    """Randomly reassign the true rates to other items (a seeded bijection)."""

    seed: int

    def __post_init__(self):
        streams.check_seed(self.seed)


@dataclass(frozen=True)
class ConstantMean:
    """Assign every item the assortment mean of the honest forecast."""


@dataclass(frozen=True)
class Exaggerate:
    """Stretch forecasts away from the honest mean: r -> rbar + gain*(r - rbar).

    Results below ``floor`` are clamped to it, keeping predictions positive.
    """

    gain: float
    floor: float = 1e-9

    def __post_init__(self):
        if not (self.gain > 0 and math.isfinite(self.gain)):
            raise ValueError(f"gain must be > 0, got {self.gain}")
        if not (self.floor > 0 and math.isfinite(self.floor)):
            raise ValueError(f"floor must be > 0, got {self.floor}")


DistortionStrategy = Honest | Permutation | ConstantMean | Exaggerate


def generate_assortment(prior: RatePrior, n: int, seed: int) -> Assortment:
    """Draw n independent true rates from the prior, deterministically in seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = streams.stream(seed, streams.DOMAIN_RATES)
    return Assortment(true_rates=prior.sample(rng, size=int(n)))


def realize_sales(
    process: DemandProcess,
    assortment: Assortment,
    seed: int,
    item_ids: Sequence[int] | None = None,
) -> np.ndarray:
    """Realize one day of sales, one count per item.

    Item j's draw is a function of (seed, item_ids[j], rate j) alone, so the
    result is independent of iteration order: realizing a reordered assortment
    with correspondingly reordered item_ids reorders the outcomes and nothing
    else. Default item ids are positions 0..n-1.
    """
    rates = assortment.true_rates
    if item_ids is None:
        ids = range(rates.size)
    else:
        ids = [int(i) for i in item_ids]
        if len(ids) != rates.size:
            raise ValueError("item_ids length must match the assortment")
    out = np.empty(rates.size, dtype=np.int64)
    for j, item_id in enumerate(ids):
        rng = streams.stream(seed, streams.DOMAIN_SALES, index=item_id)
        out[j] = process.sample(rates[j], rng)
    return out


def apply_distortion(assortment: Assortment, strategy: DistortionStrategy) -> np.ndarray:
    """Turn true rates into reported predictions under the given strategy."""
    rates = assortment.true_rates
    if isinstance(strategy, Honest):
        return rates.copy()
    if isinstance(strategy, Permutation):
        rng = streams.stream(strategy.seed, streams.DOMAIN_PERMUTATION)
        return rng.permutation(rates)
    mean = math.fsum(rates.tolist()) / rates.size
    if isinstance(strategy, ConstantMean):
        return np.full(rates.size, mean, dtype=np.float64)
    if isinstance(strategy, Exaggerate):
        stretched = mean + strategy.gain * (rates - mean)
        return np.maximum(strategy.floor, stretched)
    raise TypeError(f"unknown distortion strategy: {strategy!r}")


def build_pairs(
    predictions: Sequence[float],
    outcomes: Sequence[int],
    outcome_cap: int = DEFAULT_OUTCOME_CAP,
) -> list[ForecastOutcomePair]:
    """Zip predictions and outcomes into pairs with item ids 0..n-1.

    This is the single entry point into pair-land, so domain checks live
    here: predictions must be finite and nonnegative, outcomes must be
    integer counts no larger than outcome_cap.
    """
    preds = np.asarray(predictions, dtype=np.float64)
    outs = np.asarray(outcomes)
    if preds.ndim != 1 or outs.ndim != 1:
        raise DataError("predictions and outcomes must be 1-d sequences")
    if preds.size != outs.size:
        raise DataError(
            f"length mismatch: {preds.size} predictions vs {outs.size} outcomes"
        )
    if preds.size and (not np.all(np.isfinite(preds)) or np.any(preds < 0)):
        raise DataError("predictions must be finite and >= 0")
    if outs.size:
        if not np.issubdtype(outs.dtype, np.number) or np.any(outs != np.floor(outs)):
            raise DataError("outcomes must be integer counts")
        if np.any(outs < 0):
            raise DataError("outcomes must be >= 0")
        if np.any(outs > outcome_cap):
            raise DataError(f"outcomes above the cap {outcome_cap} are rejected")
    return [
        ForecastOutcomePair(item_id=j, prediction=float(p), outcome=int(s))
        for j, (p, s) in enumerate(zip(preds, outs))
    ]
