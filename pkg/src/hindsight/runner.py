"""Experiment orchestration: from config to a complete report."""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy
import scipy

from . import __version__
from .config import MODE_SIMULATE, ExperimentConfig, config_echo
from .errors import HindsightError
from .evaluation import (
    BiasTestResult,
    BucketReport,
    CalibrationVerdict,
    OutcomeGroupReport,
    backward_groups,
    calibration_verdict,
    forward_buckets,
    global_bias_test,
)
from .market import apply_distortion, build_pairs, generate_assortment, realize_sales
from .oracle import OracleContext
from .reporting import load_pairs

__all__ = ["ExperimentReport", "run_experiment"]


@dataclass(frozen=True)
class ExperimentReport:
    """Everything one experiment produced, ready for serialization.

    The config echo plus the seed it contains are sufficient to reproduce
    the report bit-identically on the same build; metadata carries the
    versions that define "the same build".
    """

    config: dict
    bias: BiasTestResult
    forward: list[BucketReport]
    verdict: CalibrationVerdict
    backward: list[OutcomeGroupReport]
    metadata: dict

    @property
    def global_bias_ok(self) -> bool:
        return not self.bias.significant_at_3sigma

    @property
    def calibration_ok(self) -> bool:
        return self.verdict.passed

    @property
    def overall_ok(self) -> bool:
        return self.global_bias_ok and self.calibration_ok


@contextmanager
def _stage(name: str):
    """Tag errors with the pipeline stage that raised them."""
    try:
        yield
    except HindsightError as exc:
        exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
        raise


def _metadata() -> dict:
    return {
        "package": "hindsight",
        "version": __version__,
        "numpy_version": numpy.__version__,
        "scipy_version": scipy.__version__,
    }


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    if config.mode == MODE_SIMULATE:
        with _stage("simulate"):
            assortment = generate_assortment(config.prior, config.n, config.seed)
            outcomes = realize_sales(config.process, assortment, config.seed)
            predictions = apply_distortion(assortment, config.distortion)
            pairs = build_pairs(predictions, outcomes, outcome_cap=config.outcome_cap)
    else:
        with _stage("load"):
            pairs = load_pairs(config.input_path, outcome_cap=config.outcome_cap)

    with _stage("global_bias"):
        bias = global_bias_test(pairs)
    with _stage("forward_buckets"):
        forward = forward_buckets(pairs, config.buckets)
        verdict = calibration_verdict(forward, z_crit=config.z_crit)
    with _stage("backward_groups"):
        oracle = None
        if config.oracle_enabled:
            oracle = OracleContext(
                prior=config.prior,
                process=config.process,
                quadrature=config.quadrature,
            )
        backward = backward_groups(pairs, oracle=oracle)

    return ExperimentReport(
        config=config_echo(config),
        bias=bias,
        forward=forward,
        verdict=verdict,
        backward=backward,
        metadata=_metadata(),
    )
