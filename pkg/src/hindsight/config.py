"""Experiment configuration.

One YAML document describes an experiment: where pairs come from (simulated
or a CSV file), the prior/process pair, the distortion, the bucketing, and
the oracle policy. Unknown keys anywhere are errors, so a typo cannot
silently fall back to a default.

Three sources feed the effective config, in increasing precedence: environment
variables (prefix HINDSIGHT_, nested keys joined by double underscores, values
parsed as YAML scalars), the config file, and command-line flags.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Any, Mapping

import yaml

from . import streams
from .distributions import (
    DemandProcess,
    GammaBlurredPoisson,
    GammaPrior,
    LogNormalPrior,
    MixturePrior,
    PoissonProcess,
    RatePrior,
    UniformPrior,
)
from .errors import ConfigError
from .evaluation import (
    DEFAULT_MIN_COUNT,
    DEFAULT_Z_CRIT,
    BucketSpec,
    FixedWidth,
    LogWidth,
    Quantile,
)
from .market import (
    DEFAULT_OUTCOME_CAP,
    ConstantMean,
    DistortionStrategy,
    Exaggerate,
    Honest,
    Permutation,
)
from .oracle import AdaptiveInterval, GaussLaguerre, QuadratureSpec

__all__ = ["ExperimentConfig", "load_config", "config_echo", "ENV_PREFIX"]

ENV_PREFIX = "HINDSIGHT_"

MODE_SIMULATE = "simulate"
MODE_EVALUATE_FILE = "evaluate_file"

_TOP_KEYS = {
    "mode",
    "seed",
    "n",
    "prior",
    "process",
    "distortion",
    "buckets",
    "oracle",
    "z_crit",
    "outcome_cap",
    "input",
    "output",
}


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int | None
    n: int | None
    prior: RatePrior | None
    process: DemandProcess | None
    distortion: DistortionStrategy
    buckets: BucketSpec
    oracle_enabled: bool
    quadrature: QuadratureSpec
    z_crit: float
    outcome_cap: int
    input_path: str | None
    out_dir: str = "hindsight_out"
    out_format: str = "json"
    plots: bool = False


def _fail(path: str, message: str) -> ConfigError:
    where = path if path else "top level"
    return ConfigError(f"{where}: {message}")


def _as_mapping(value: Any, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise _fail(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _check_keys(d: Mapping, allowed: set[str], path: str):
    unknown = sorted(k for k in d if k not in allowed)
    if unknown:
        raise _fail(path, f"unknown key(s): {', '.join(map(str, unknown))}")


def _get_number(d: Mapping, key: str, path: str, default=None) -> float | None:
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _fail(path, f"'{key}' must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise _fail(path, f"'{key}' must be finite, got {v!r}")
    return v


def _get_int(d: Mapping, key: str, path: str, default=None) -> int | None:
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise _fail(path, f"'{key}' must be an integer, got {v!r}")
    return v


def _get_bool(d: Mapping, key: str, path: str, default=None) -> bool | None:
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if not isinstance(v, bool):
        raise _fail(path, f"'{key}' must be a boolean, got {v!r}")
    return v


def _get_str(d: Mapping, key: str, path: str, default=None) -> str | None:
    if key not in d or d[key] is None:
        return default
    v = d[key]
    if not isinstance(v, str):
        raise _fail(path, f"'{key}' must be a string, got {v!r}")
    return v


def _require(value, key: str, path: str):
    if value is None:
        raise _fail(path, f"'{key}' is required")
    return value


def _wrap_value_error(path: str, fn, *args):
    try:
        return fn(*args)
    except ValueError as exc:
        raise _fail(path, str(exc)) from exc


def parse_prior(raw: Any, path: str = "prior") -> RatePrior:
    d = _as_mapping(raw, path)
    kind = _get_str(d, "kind", path)
    _require(kind, "kind", path)
    if kind == "gamma":
        _check_keys(d, {"kind", "shape", "rate"}, path)
        shape = _require(_get_number(d, "shape", path), "shape", path)
        rate = _require(_get_number(d, "rate", path), "rate", path)
        return _wrap_value_error(path, GammaPrior, shape, rate)
    if kind == "lognormal":
        _check_keys(d, {"kind", "mu", "sigma"}, path)
        mu = _require(_get_number(d, "mu", path), "mu", path)
        sigma = _require(_get_number(d, "sigma", path), "sigma", path)
        return _wrap_value_error(path, LogNormalPrior, mu, sigma)
    if kind == "uniform":
        _check_keys(d, {"kind", "lo", "hi"}, path)
        lo = _require(_get_number(d, "lo", path), "lo", path)
        hi = _require(_get_number(d, "hi", path), "hi", path)
        return _wrap_value_error(path, UniformPrior, lo, hi)
    if kind == "mixture":
        _check_keys(d, {"kind", "weights", "components"}, path)
        weights = d.get("weights")
        components = d.get("components")
        if not isinstance(weights, list) or not all(
            isinstance(w, (int, float)) and not isinstance(w, bool) for w in weights
        ):
            raise _fail(path, "'weights' must be a list of numbers")
        if not isinstance(components, list):
            raise _fail(path, "'components' must be a list of prior mappings")
        parsed = [
            parse_prior(c, f"{path}.components[{i}]") for i, c in enumerate(components)
        ]
        return _wrap_value_error(path, MixturePrior, weights, parsed)
    raise _fail(path, f"unknown prior kind {kind!r}")


def parse_process(raw: Any, path: str = "process") -> DemandProcess:
    d = _as_mapping(raw, path)
    kind = _get_str(d, "kind", path)
    _require(kind, "kind", path)
    if kind == "poisson":
        _check_keys(d, {"kind"}, path)
        return PoissonProcess()
    if kind == "negative_binomial":
        _check_keys(d, {"kind", "blur_shape"}, path)
        blur = _require(_get_number(d, "blur_shape", path), "blur_shape", path)
        return _wrap_value_error(path, GammaBlurredPoisson, blur)
    raise _fail(path, f"unknown process kind {kind!r}")


def parse_distortion(raw: Any, path: str = "distortion") -> DistortionStrategy:
    d = _as_mapping(raw, path)
    kind = _get_str(d, "kind", path, default="honest")
    if kind == "honest":
        _check_keys(d, {"kind"}, path)
        return Honest()
    if kind == "permutation":
        _check_keys(d, {"kind", "seed"}, path)
        seed = _require(_get_int(d, "seed", path), "seed", path)
        return _wrap_value_error(path, Permutation, seed)
    if kind == "constant_mean":
        _check_keys(d, {"kind"}, path)
        return ConstantMean()
    if kind == "exaggerate":
        _check_keys(d, {"kind", "gain", "floor"}, path)
        gain = _require(_get_number(d, "gain", path), "gain", path)
        floor = _get_number(d, "floor", path, default=1e-9)
        return _wrap_value_error(path, Exaggerate, gain, floor)
    raise _fail(path, f"unknown distortion kind {kind!r}")


def parse_buckets(raw: Any, path: str = "buckets") -> BucketSpec:
    d = _as_mapping(raw, path)
    scheme_name = _get_str(d, "scheme", path, default="fixed_width")
    min_count = _get_int(d, "min_count", path, default=DEFAULT_MIN_COUNT)
    if scheme_name == "fixed_width":
        _check_keys(d, {"scheme", "width", "origin", "min_count"}, path)
        width = _get_number(d, "width", path, default=1.0)
        origin = _get_number(d, "origin", path, default=0.0)
        scheme = _wrap_value_error(path, FixedWidth, width, origin)
    elif scheme_name == "quantile":
        _check_keys(d, {"scheme", "buckets", "min_count"}, path)
        count = _require(_get_int(d, "buckets", path), "buckets", path)
        scheme = _wrap_value_error(path, Quantile, count)
    elif scheme_name == "log_width":
        _check_keys(d, {"scheme", "ratio", "min_edge", "min_count"}, path)
        ratio = _require(_get_number(d, "ratio", path), "ratio", path)
        min_edge = _require(_get_number(d, "min_edge", path), "min_edge", path)
        scheme = _wrap_value_error(path, LogWidth, ratio, min_edge)
    else:
        raise _fail(path, f"unknown bucket scheme {scheme_name!r}")
    return _wrap_value_error(path, BucketSpec, scheme, min_count)


def parse_quadrature(raw: Any, path: str = "oracle.quadrature") -> QuadratureSpec:
    d = _as_mapping(raw, path)
    scheme_name = _get_str(d, "scheme", path, default="adaptive")
    cutoff = _get_number(d, "upper_cutoff_mass", path, default=1e-12)
    if scheme_name == "adaptive":
        _check_keys(d, {"scheme", "abs_tol", "rel_tol", "upper_cutoff_mass"}, path)
        abs_tol = _get_number(d, "abs_tol", path, default=1e-12)
        rel_tol = _get_number(d, "rel_tol", path, default=1e-10)
        scheme = _wrap_value_error(path, AdaptiveInterval, abs_tol, rel_tol)
    elif scheme_name == "gauss_laguerre":
        _check_keys(d, {"scheme", "node_count", "upper_cutoff_mass"}, path)
        nodes = _get_int(d, "node_count", path, default=128)
        scheme = _wrap_value_error(path, GaussLaguerre, nodes)
    else:
        raise _fail(path, f"unknown quadrature scheme {scheme_name!r}")
    return _wrap_value_error(path, QuadratureSpec, scheme, cutoff)


def _parse_config(merged: dict) -> ExperimentConfig:
    _check_keys(merged, _TOP_KEYS, "")
    mode = _get_str(merged, "mode", "", default=MODE_SIMULATE)
    if mode not in (MODE_SIMULATE, MODE_EVALUATE_FILE):
        raise _fail("", f"mode must be '{MODE_SIMULATE}' or '{MODE_EVALUATE_FILE}'")

    seed = _get_int(merged, "seed", "")
    if seed is not None:
        _wrap_value_error("", streams.check_seed, seed)
    n = _get_int(merged, "n", "")
    if n is not None and n < 1:
        raise _fail("", f"'n' must be >= 1, got {n}")

    prior = parse_prior(merged["prior"]) if merged.get("prior") is not None else None
    process = (
        parse_process(merged["process"]) if merged.get("process") is not None else None
    )
    distortion = parse_distortion(merged.get("distortion"))
    buckets = parse_buckets(merged.get("buckets"))

    oracle_raw = _as_mapping(merged.get("oracle"), "oracle")
    _check_keys(oracle_raw, {"enabled", "quadrature"}, "oracle")
    have_model = prior is not None and process is not None
    oracle_enabled = _get_bool(oracle_raw, "enabled", "oracle", default=have_model)
    quadrature = parse_quadrature(oracle_raw.get("quadrature"))

    z_crit = _get_number(merged, "z_crit", "", default=DEFAULT_Z_CRIT)
    if z_crit <= 0:
        raise _fail("", f"'z_crit' must be > 0, got {z_crit}")
    outcome_cap = _get_int(merged, "outcome_cap", "", default=DEFAULT_OUTCOME_CAP)
    if outcome_cap < 0:
        raise _fail("", f"'outcome_cap' must be >= 0, got {outcome_cap}")
    input_path = _get_str(merged, "input", "")

    output = _as_mapping(merged.get("output"), "output")
    _check_keys(output, {"out_dir", "format", "plots"}, "output")
    out_dir = _get_str(output, "out_dir", "output", default="hindsight_out")
    out_format = _get_str(output, "format", "output", default="json")
    if out_format not in ("json", "csv"):
        raise _fail("output", f"format must be 'json' or 'csv', got {out_format!r}")
    plots = _get_bool(output, "plots", "output", default=False)

    if mode == MODE_SIMULATE:
        for name, value in (("prior", prior), ("process", process), ("n", n), ("seed", seed)):
            if value is None:
                raise _fail("", f"simulate mode requires '{name}'")
    else:
        if input_path is None:
            raise _fail("", "evaluate_file mode requires 'input'")
    if oracle_enabled and not have_model:
        raise _fail(
            "oracle", "enabling the oracle requires both 'prior' and 'process'"
        )

    return ExperimentConfig(
        mode=mode,
        seed=seed,
        n=n,
        prior=prior,
        process=process,
        distortion=distortion,
        buckets=buckets,
        oracle_enabled=oracle_enabled,
        quadrature=quadrature,
        z_crit=z_crit,
        outcome_cap=outcome_cap,
        input_path=input_path,
        out_dir=out_dir,
        out_format=out_format,
        plots=plots,
    )


def _env_tree(environ: Mapping[str, str]) -> dict:
    tree: dict = {}
    for key in sorted(environ):
        if not key.startswith(ENV_PREFIX):
            continue
        parts = key[len(ENV_PREFIX):].lower().split("__")
        if not all(parts):
            raise ConfigError(f"malformed environment override name: {key}")
        try:
            value = yaml.safe_load(environ[key])
        except yaml.YAMLError as exc:
            raise ConfigError(f"environment override {key} is not valid YAML: {exc}")
        node = tree
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(
                    f"environment override {key} conflicts with a scalar override"
                )
        node[parts[-1]] = value
    return tree


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(
    config_path: str | None = None,
    cli_overrides: dict | None = None,
    environ: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """Build the effective config: env vars, then file, then CLI flags."""
    environ = os.environ if environ is None else environ
    merged = _env_tree(environ)
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {config_path}")
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {config_path} is not valid YAML: {exc}")
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {config_path} must hold a mapping")
        merged = _deep_merge(merged, loaded)
    if cli_overrides:
        merged = _deep_merge(merged, cli_overrides)
    return _parse_config(merged)


def _prior_dict(prior: RatePrior) -> dict:
    if isinstance(prior, GammaPrior):
        return {"kind": "gamma", "shape": prior.shape, "rate": prior.rate}
    if isinstance(prior, LogNormalPrior):
        return {"kind": "lognormal", "mu": prior.mu, "sigma": prior.sigma}
    if isinstance(prior, UniformPrior):
        return {"kind": "uniform", "lo": prior.lo, "hi": prior.hi}
    assert isinstance(prior, MixturePrior)
    return {
        "kind": "mixture",
        "weights": list(prior.weights),
        "components": [_prior_dict(c) for c in prior.components],
    }


def _process_dict(process: DemandProcess) -> dict:
    if isinstance(process, PoissonProcess):
        return {"kind": "poisson"}
    assert isinstance(process, GammaBlurredPoisson)
    return {"kind": "negative_binomial", "blur_shape": process.blur_shape}


def _distortion_dict(d: DistortionStrategy) -> dict:
    if isinstance(d, Honest):
        return {"kind": "honest"}
    if isinstance(d, Permutation):
        return {"kind": "permutation", "seed": d.seed}
    if isinstance(d, ConstantMean):
        return {"kind": "constant_mean"}
    assert isinstance(d, Exaggerate)
    return {"kind": "exaggerate", "gain": d.gain, "floor": d.floor}


def _buckets_dict(spec: BucketSpec) -> dict:
    s = spec.scheme
    if isinstance(s, FixedWidth):
        d = {"scheme": "fixed_width", "width": s.width, "origin": s.origin}
    elif isinstance(s, Quantile):
        d = {"scheme": "quantile", "buckets": s.buckets}
    else:
        assert isinstance(s, LogWidth)
        d = {"scheme": "log_width", "ratio": s.ratio, "min_edge": s.min_edge}
    d["min_count"] = spec.min_count
    return d


def _quadrature_dict(spec: QuadratureSpec) -> dict:
    s = spec.scheme
    if isinstance(s, AdaptiveInterval):
        d = {"scheme": "adaptive", "abs_tol": s.abs_tol, "rel_tol": s.rel_tol}
    else:
        assert isinstance(s, GaussLaguerre)
        d = {"scheme": "gauss_laguerre", "node_count": s.node_count}
    d["upper_cutoff_mass"] = spec.upper_cutoff_mass
    return d


def config_echo(config: ExperimentConfig) -> dict:
    """The effective config as a plain mapping, output paths excluded.

    Reloading the echo as a config reproduces the same report, which is why
    output locations stay out: where a report was written must not change
    what it says.
    """
    echo: dict = {"mode": config.mode}
    if config.seed is not None:
        echo["seed"] = config.seed
    if config.n is not None:
        echo["n"] = config.n
    if config.prior is not None:
        echo["prior"] = _prior_dict(config.prior)
    if config.process is not None:
        echo["process"] = _process_dict(config.process)
    echo["distortion"] = _distortion_dict(config.distortion)
    echo["buckets"] = _buckets_dict(config.buckets)
    echo["oracle"] = {
        "enabled": config.oracle_enabled,
        "quadrature": _quadrature_dict(config.quadrature),
    }
    echo["z_crit"] = config.z_crit
    echo["outcome_cap"] = config.outcome_cap
    if config.input_path is not None:
        echo["input"] = config.input_path
    return echo
