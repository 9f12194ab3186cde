"""Command-line interface.

Three subcommands: ``simulate`` runs a synthetic experiment, ``evaluate``
scores an existing pairs file, and ``oracle`` prints the analytic hindsight
curve for a configured prior and process. Exit codes: 0 success, 1 usage or
config error, 2 data or numerical error, 3 evaluation verdict failed under
--strict.
"""

from __future__ import annotations

import sys

import click

from .config import load_config
from .errors import ConfigError, DataError, QuadratureError
from .oracle import OracleContext
from .reporting import write_report
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_VERDICT = 3


def _common_options(f):
    f = click.option("--config", "config_path", type=str, default=None,
                     help="YAML config file.")(f)
    f = click.option("--seed", type=int, default=None,
                     help="Override the config seed.")(f)
    f = click.option("--out", "out_dir", type=str, default=None,
                     help="Output directory for the report.")(f)
    f = click.option("--format", "out_format", type=click.Choice(["json", "csv"]),
                     default=None, help="Report format.")(f)
    f = click.option("--plots/--no-plots", "plots", default=None,
                     help="Also render figures next to the report.")(f)
    f = click.option("--strict", is_flag=True, default=False,
                     help="Exit with code 3 if any evaluation verdict fails.")(f)
    return f


def _overrides(mode, seed, out_dir, out_format, plots, input_path=None) -> dict:
    overrides: dict = {"mode": mode}
    if seed is not None:
        overrides["seed"] = seed
    if input_path is not None:
        overrides["input"] = input_path
    output = {}
    if out_dir is not None:
        output["out_dir"] = out_dir
    if out_format is not None:
        output["format"] = out_format
    if plots is not None:
        output["plots"] = plots
    if output:
        overrides["output"] = output
    return overrides


def _run_and_report(config_path, overrides, strict) -> int:
    cfg = load_config(config_path, cli_overrides=overrides)
    report = run_experiment(cfg)
    paths = write_report(report, cfg.out_dir, cfg.out_format)
    if cfg.plots:
        from . import plots as plots_mod

        paths.extend(plots_mod.render_plots(report, cfg.out_dir))
    click.echo(f"global bias: {'ok' if report.global_bias_ok else 'SIGNIFICANT'}"
               f"{' (degenerate)' if report.bias.degenerate else ''}")
    click.echo(f"forward calibration: {'pass' if report.calibration_ok else 'FAIL'}")
    for path in paths:
        click.echo(f"wrote {path}")
    if strict and not report.overall_ok:
        return EXIT_VERDICT
    return EXIT_OK


@click.group()
def cli():
    """Simulate and evaluate retail-demand forecasts."""


@cli.command()
@_common_options
def simulate(config_path, seed, out_dir, out_format, plots, strict):
    """Simulate a market described by the config and evaluate it."""
    return _run_and_report(
        config_path, _overrides("simulate", seed, out_dir, out_format, plots), strict
    )


@cli.command()
@click.option("--input", "input_path", type=str, default=None,
              help="CSV file of pairs (item_id,prediction,outcome).")
@_common_options
def evaluate(input_path, config_path, seed, out_dir, out_format, plots, strict):
    """Evaluate an existing prediction/outcome pairs file."""
    return _run_and_report(
        config_path,
        _overrides("evaluate_file", seed, out_dir, out_format, plots, input_path),
        strict,
    )


@cli.command()
@click.option("--config", "config_path", type=str, default=None,
              help="YAML config file naming the prior and process.")
@click.option("--s-max", type=int, required=True,
              help="Print the curve for outcomes 0..s_max.")
def oracle(config_path, s_max):
    """Print the analytic hindsight curve E(r | s) as CSV on stdout."""
    if s_max < 0:
        raise ConfigError(f"--s-max must be >= 0, got {s_max}")
    cfg = load_config(config_path)
    if cfg.prior is None or cfg.process is None:
        raise ConfigError("the oracle needs both 'prior' and 'process' configured")
    ctx = OracleContext(prior=cfg.prior, process=cfg.process, quadrature=cfg.quadrature)
    click.echo("s,hindsight_mean,target_pmf")
    for s, mean in ctx.hindsight_curve(s_max):
        click.echo(f"{s},{mean!r},{ctx.target_pmf(s)!r}")
    return EXIT_OK


def main(argv=None) -> int:
    """Entry point with library errors mapped onto exit codes."""
    try:
        rv = cli.main(args=argv, standalone_mode=False)
        return rv if isinstance(rv, int) else EXIT_OK
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_CONFIG
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_DATA
    except QuadratureError as exc:
        click.echo(f"quadrature error: {exc}", err=True)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
