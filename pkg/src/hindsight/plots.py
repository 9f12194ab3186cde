"""Figure rendering for reports.

Two figures per report, written next to the delimited output when plots are
enabled. The forward figure shows mean outcome against mean prediction per
bucket; calibrated forecasts hug the identity line. The backward figure shows
mean prediction against observed outcome per group, where even calibrated
forecasts leave the identity line, together with the analytic conditional
mean when the oracle was on.
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

if TYPE_CHECKING:
    from .runner import ExperimentReport

__all__ = ["render_plots"]


def _forward_figure(report: "ExperimentReport", path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    kept = [b for b in report.forward if b.count > 0 and not b.flagged_low_count]
    flagged = [b for b in report.forward if b.count > 0 and b.flagged_low_count]
    if kept:
        ax.errorbar(
            [b.mean_prediction for b in kept],
            [b.mean_outcome for b in kept],
            yerr=[b.outcome_stderr for b in kept],
            fmt="o",
            capsize=3,
            label="buckets",
        )
    if flagged:
        ax.plot(
            [b.mean_prediction for b in flagged],
            [b.mean_outcome for b in flagged],
            "x",
            color="0.6",
            label="low-count buckets",
        )
    _identity(ax)
    ax.set_xlabel("mean prediction in bucket")
    ax.set_ylabel("mean outcome in bucket")
    ax.set_title("Forward-looking evaluation")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _backward_figure(report: "ExperimentReport", path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    groups = report.backward
    ax.errorbar(
        [g.outcome for g in groups],
        [g.mean_prediction for g in groups],
        yerr=[g.prediction_stderr for g in groups],
        fmt="o",
        capsize=3,
        label="observed groups",
    )
    analytic = [(g.outcome, g.analytic_hindsight_mean) for g in groups
                if g.analytic_hindsight_mean is not None]
    if analytic:
        ax.plot(*zip(*analytic), "-", color="tab:red", label="analytic E(r | s)")
    _identity(ax)
    ax.set_xlabel("observed outcome s")
    ax.set_ylabel("mean prediction in group")
    ax.set_title("Backward-looking evaluation")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _identity(ax) -> None:
    lo = min(ax.get_xlim()[0], ax.get_ylim()[0])
    hi = max(ax.get_xlim()[1], ax.get_ylim()[1])
    ax.plot([lo, hi], [lo, hi], "--", color="0.4", linewidth=1, label="identity")


def render_plots(report: "ExperimentReport", out_dir: str) -> list[str]:
    """Render the forward and backward figures; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    forward_path = os.path.join(out_dir, "forward_buckets.png")
    backward_path = os.path.join(out_dir, "backward_groups.png")
    _forward_figure(report, forward_path)
    _backward_figure(report, backward_path)
    return [forward_path, backward_path]
