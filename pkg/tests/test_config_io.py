"""Config loading and merging, pair-file parsing, and report serialization."""

import json
import textwrap

import pytest

from hindsight.config import config_echo, load_config
from hindsight.distributions import (
    GammaBlurredPoisson,
    GammaPrior,
    MixturePrior,
    UniformPrior,
)
from hindsight.errors import ConfigError, DataError
from hindsight.evaluation import FixedWidth, LogWidth, Quantile
from hindsight.market import Exaggerate, Honest, Permutation
from hindsight.oracle import AdaptiveInterval, GaussLaguerre
from hindsight.reporting import (
    BACKWARD_COLUMNS,
    FORWARD_COLUMNS,
    GLOBAL_COLUMNS,
    load_pairs,
    render_json,
    report_to_dict,
    write_report,
)
from hindsight.runner import run_experiment

MINIMAL_SIMULATE = """\
mode: simulate
seed: 7
n: 50
prior:
  kind: gamma
  shape: 1.0
  rate: 1.0
process:
  kind: poisson
"""


def _write(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(path)


class TestLoadConfigBasics:
    def test_minimal_simulate_defaults(self, tmp_path):
        cfg = load_config(_write(tmp_path, MINIMAL_SIMULATE), environ={})
        assert cfg.mode == "simulate"
        assert cfg.seed == 7
        assert cfg.n == 50
        assert cfg.prior == GammaPrior(1.0, 1.0)
        assert cfg.distortion == Honest()
        assert cfg.buckets.scheme == FixedWidth(width=1.0, origin=0.0)
        assert cfg.buckets.min_count == 30
        assert cfg.oracle_enabled
        assert cfg.quadrature.scheme == AdaptiveInterval()
        assert cfg.z_crit == 4.0
        assert cfg.outcome_cap == 10**6
        assert cfg.out_dir == "hindsight_out"
        assert cfg.out_format == "json"
        assert cfg.plots is False

    def test_evaluate_file_mode(self, tmp_path):
        cfg = load_config(
            _write(tmp_path, "mode: evaluate_file\ninput: pairs.csv\n"), environ={}
        )
        assert cfg.mode == "evaluate_file"
        assert cfg.input_path == "pairs.csv"
        assert cfg.prior is None
        assert not cfg.oracle_enabled

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/nonexistent/config.yaml", environ={})

    def test_file_must_be_mapping(self, tmp_path):
        with pytest.raises(ConfigError, match="mapping"):
            load_config(_write(tmp_path, "- 1\n- 2\n"), environ={})

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(_write(tmp_path, "a: [unclosed\n"), environ={})

    def test_empty_file_fails_requirements(self, tmp_path):
        with pytest.raises(ConfigError, match="requires"):
            load_config(_write(tmp_path, ""), environ={})


class TestUnknownKeys:
    def test_top_level(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key.*granularity"):
            load_config(
                _write(tmp_path, MINIMAL_SIMULATE + "granularity: 2\n"), environ={}
            )

    def test_inside_prior(self, tmp_path):
        text = MINIMAL_SIMULATE.replace("rate: 1.0", "rate: 1.0\n  scale: 2.0")
        with pytest.raises(ConfigError, match="prior.*scale"):
            load_config(_write(tmp_path, text), environ={})

    def test_scheme_specific_bucket_keys(self, tmp_path):
        text = MINIMAL_SIMULATE + "buckets:\n  scheme: quantile\n  buckets: 4\n  width: 1.0\n"
        with pytest.raises(ConfigError, match="buckets.*width"):
            load_config(_write(tmp_path, text), environ={})

    def test_inside_output(self, tmp_path):
        text = MINIMAL_SIMULATE + "output:\n  folder: x\n"
        with pytest.raises(ConfigError, match="output.*folder"):
            load_config(_write(tmp_path, text), environ={})

    def test_inside_oracle(self, tmp_path):
        text = MINIMAL_SIMULATE + "oracle:\n  active: true\n"
        with pytest.raises(ConfigError, match="oracle.*active"):
            load_config(_write(tmp_path, text), environ={})


class TestRequiredAndTyped:
    @pytest.mark.parametrize(
        "drop,snippet",
        [
            ("seed", "seed: 7\n"),
            ("n", "n: 50\n"),
            ("prior", "prior:\n  kind: gamma\n  shape: 1.0\n  rate: 1.0\n"),
            ("process", "process:\n  kind: poisson\n"),
        ],
    )
    def test_simulate_requirements(self, tmp_path, drop, snippet):
        assert snippet in MINIMAL_SIMULATE
        text = MINIMAL_SIMULATE.replace(snippet, "")
        with pytest.raises(ConfigError, match=f"requires '{drop}'"):
            load_config(_write(tmp_path, text), environ={})

    def test_evaluate_requires_input(self, tmp_path):
        with pytest.raises(ConfigError, match="requires 'input'"):
            load_config(_write(tmp_path, "mode: evaluate_file\n"), environ={})

    def test_unknown_mode(self, tmp_path):
        with pytest.raises(ConfigError, match="mode"):
            load_config(_write(tmp_path, "mode: replay\n"), environ={})

    def test_seed_must_be_integer(self, tmp_path):
        text = MINIMAL_SIMULATE.replace("seed: 7", "seed: lucky")
        with pytest.raises(ConfigError, match="'seed' must be an integer"):
            load_config(_write(tmp_path, text), environ={})

    def test_boolean_is_not_a_number(self, tmp_path):
        text = MINIMAL_SIMULATE.replace("shape: 1.0", "shape: true")
        with pytest.raises(ConfigError, match="'shape' must be a number"):
            load_config(_write(tmp_path, text), environ={})

    def test_gamma_requires_rate(self, tmp_path):
        text = MINIMAL_SIMULATE.replace("  rate: 1.0\n", "")
        with pytest.raises(ConfigError, match="'rate' is required"):
            load_config(_write(tmp_path, text), environ={})

    def test_permutation_requires_seed(self, tmp_path):
        text = MINIMAL_SIMULATE + "distortion:\n  kind: permutation\n"
        with pytest.raises(ConfigError, match="distortion.*'seed' is required"):
            load_config(_write(tmp_path, text), environ={})

    def test_invalid_z_crit(self, tmp_path):
        with pytest.raises(ConfigError, match="z_crit"):
            load_config(_write(tmp_path, MINIMAL_SIMULATE + "z_crit: 0\n"), environ={})

    def test_negative_n(self, tmp_path):
        text = MINIMAL_SIMULATE.replace("n: 50", "n: 0")
        with pytest.raises(ConfigError, match="'n' must be >= 1"):
            load_config(_write(tmp_path, text), environ={})

    def test_oracle_without_model(self, tmp_path):
        text = "mode: evaluate_file\ninput: p.csv\noracle:\n  enabled: true\n"
        with pytest.raises(ConfigError, match="oracle"):
            load_config(_write(tmp_path, text), environ={})

    def test_bad_format(self, tmp_path):
        text = MINIMAL_SIMULATE + "output:\n  format: xml\n"
        with pytest.raises(ConfigError, match="format"):
            load_config(_write(tmp_path, text), environ={})


class TestRicherParsing:
    def test_mixture_and_blur(self, tmp_path):
        text = """\
        mode: simulate
        seed: 1
        n: 10
        prior:
          kind: mixture
          weights: [0.25, 0.75]
          components:
            - {kind: gamma, shape: 2.0, rate: 1.0}
            - {kind: uniform, lo: 0.5, hi: 1.5}
        process:
          kind: negative_binomial
          blur_shape: 2.5
        """
        cfg = load_config(_write(tmp_path, text), environ={})
        assert isinstance(cfg.prior, MixturePrior)
        assert cfg.prior.weights == (0.25, 0.75)
        assert cfg.prior.components == (GammaPrior(2.0, 1.0), UniformPrior(0.5, 1.5))
        assert cfg.process == GammaBlurredPoisson(blur_shape=2.5)

    def test_component_errors_are_located(self, tmp_path):
        text = """\
        mode: simulate
        seed: 1
        n: 10
        prior:
          kind: mixture
          weights: [0.5, 0.5]
          components:
            - {kind: gamma, shape: 2.0, rate: 1.0}
            - {kind: gamma, shape: -1.0, rate: 1.0}
        process: {kind: poisson}
        """
        with pytest.raises(ConfigError, match=r"components\[1\]"):
            load_config(_write(tmp_path, text), environ={})

    def test_buckets_and_quadrature_and_distortion(self, tmp_path):
        text = MINIMAL_SIMULATE + textwrap.dedent(
            """\
            distortion:
              kind: exaggerate
              gain: 2.0
            buckets:
              scheme: log_width
              ratio: 2.0
              min_edge: 0.5
              min_count: 10
            oracle:
              enabled: true
              quadrature:
                scheme: gauss_laguerre
                node_count: 64
            """
        )
        cfg = load_config(_write(tmp_path, text), environ={})
        assert cfg.distortion == Exaggerate(gain=2.0, floor=1e-9)
        assert cfg.buckets.scheme == LogWidth(ratio=2.0, min_edge=0.5)
        assert cfg.buckets.min_count == 10
        assert cfg.quadrature.scheme == GaussLaguerre(node_count=64)

    def test_quantile_scheme(self, tmp_path):
        text = MINIMAL_SIMULATE + "buckets:\n  scheme: quantile\n  buckets: 8\n"
        cfg = load_config(_write(tmp_path, text), environ={})
        assert cfg.buckets.scheme == Quantile(8)


class TestEnvironmentOverrides:
    def test_env_fills_gap(self, tmp_path):
        cfg = load_config(
            _write(tmp_path, MINIMAL_SIMULATE),
            environ={"HINDSIGHT_Z_CRIT": "2.5"},
        )
        assert cfg.z_crit == 2.5

    def test_file_beats_env(self, tmp_path):
        cfg = load_config(
            _write(tmp_path, MINIMAL_SIMULATE),
            environ={"HINDSIGHT_SEED": "99"},
        )
        assert cfg.seed == 7

    def test_cli_beats_file(self, tmp_path):
        cfg = load_config(
            _write(tmp_path, MINIMAL_SIMULATE),
            cli_overrides={"seed": 123},
            environ={"HINDSIGHT_SEED": "99"},
        )
        assert cfg.seed == 123

    def test_nested_env_merges_into_mapping(self, tmp_path):
        text = MINIMAL_SIMULATE.replace("  rate: 1.0\n", "")
        cfg = load_config(
            _write(tmp_path, text),
            environ={"HINDSIGHT_PRIOR__RATE": "2.0"},
        )
        assert cfg.prior == GammaPrior(1.0, 2.0)

    def test_env_only_config(self):
        environ = {
            "HINDSIGHT_MODE": "evaluate_file",
            "HINDSIGHT_INPUT": "pairs.csv",
            "HINDSIGHT_OUTPUT__PLOTS": "true",
        }
        cfg = load_config(environ=environ)
        assert cfg.mode == "evaluate_file"
        assert cfg.input_path == "pairs.csv"
        assert cfg.plots is True

    def test_unknown_env_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(
                cli_overrides={"mode": "evaluate_file", "input": "p.csv"},
                environ={"HINDSIGHT_SPEED": "11"},
            )

    def test_malformed_env_name(self):
        with pytest.raises(ConfigError, match="malformed"):
            load_config(environ={"HINDSIGHT_PRIOR__": "x"})

    def test_scalar_mapping_conflict(self):
        environ = {
            "HINDSIGHT_PRIOR": "gamma",
            "HINDSIGHT_PRIOR__KIND": "gamma",
        }
        with pytest.raises(ConfigError, match="conflicts"):
            load_config(environ=environ)

    def test_unrelated_env_ignored(self, tmp_path):
        cfg = load_config(
            _write(tmp_path, MINIMAL_SIMULATE), environ={"HOME": "/root", "SEED": "9"}
        )
        assert cfg.seed == 7


class TestConfigEcho:
    def test_echo_excludes_output(self, tmp_path):
        text = MINIMAL_SIMULATE + "output:\n  out_dir: /tmp/x\n  format: csv\n  plots: true\n"
        echo = config_echo(load_config(_write(tmp_path, text), environ={}))
        assert "output" not in echo
        assert "out_dir" not in json.dumps(echo)

    def test_echo_reload_is_idempotent(self, tmp_path):
        text = """\
        mode: simulate
        seed: 11
        n: 40
        prior:
          kind: lognormal
          mu: 0.2
          sigma: 0.9
        process:
          kind: negative_binomial
          blur_shape: 3.0
        distortion:
          kind: permutation
          seed: 5
        buckets:
          scheme: quantile
          buckets: 6
          min_count: 12
        z_crit: 3.5
        """
        first = config_echo(load_config(_write(tmp_path, text), environ={}))
        reloaded = load_config(cli_overrides=first, environ={})
        assert config_echo(reloaded) == first

    def test_echo_is_json_serializable(self, tmp_path):
        echo = config_echo(load_config(_write(tmp_path, MINIMAL_SIMULATE), environ={}))
        assert json.loads(render_json(echo)) == echo


class TestLoadPairs:
    def _file(self, tmp_path, body):
        path = tmp_path / "pairs.csv"
        path.write_text(body, encoding="utf-8")
        return str(path)

    def test_happy_path(self, tmp_path):
        path = self._file(tmp_path, "item_id,prediction,outcome\n0,1.5,2\n1,0.0,0\n")
        pairs = load_pairs(path)
        assert pairs == [(0, 1.5, 2), (1, 0.0, 0)]
        assert isinstance(pairs[0].prediction, float)
        assert isinstance(pairs[0].outcome, int)

    def test_missing_file(self):
        with pytest.raises(DataError, match="not found"):
            load_pairs("/nonexistent/pairs.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataError, match="empty"):
            load_pairs(self._file(tmp_path, ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError, match="no data rows"):
            load_pairs(self._file(tmp_path, "item_id,prediction,outcome\n"))

    def test_wrong_header(self, tmp_path):
        with pytest.raises(DataError, match="line 1: header"):
            load_pairs(self._file(tmp_path, "id,pred,out\n0,1,1\n"))

    def test_first_data_row_is_line_two(self, tmp_path):
        path = self._file(tmp_path, "item_id,prediction,outcome\n0,-1,2\n")
        with pytest.raises(DataError, match="line 2: prediction"):
            load_pairs(path)

    def test_later_row_number(self, tmp_path):
        body = "item_id,prediction,outcome\n0,1.0,2\n1,2.0,2.5\n"
        with pytest.raises(DataError, match="line 3: outcome"):
            load_pairs(self._file(tmp_path, body))

    def test_column_count(self, tmp_path):
        body = "item_id,prediction,outcome\n0,1.0,2,9\n"
        with pytest.raises(DataError, match="line 2: expected 3 columns"):
            load_pairs(self._file(tmp_path, body))

    def test_non_integer_id(self, tmp_path):
        body = "item_id,prediction,outcome\nabc,1.0,2\n"
        with pytest.raises(DataError, match="line 2: item_id"):
            load_pairs(self._file(tmp_path, body))

    def test_non_finite_prediction(self, tmp_path):
        body = "item_id,prediction,outcome\n0,inf,2\n"
        with pytest.raises(DataError, match="finite"):
            load_pairs(self._file(tmp_path, body))

    def test_negative_outcome(self, tmp_path):
        body = "item_id,prediction,outcome\n0,1.0,-2\n"
        with pytest.raises(DataError, match="outcome must be >= 0"):
            load_pairs(self._file(tmp_path, body))

    def test_outcome_cap(self, tmp_path):
        body = "item_id,prediction,outcome\n0,1.0,100\n"
        with pytest.raises(DataError, match="exceeds the cap"):
            load_pairs(self._file(tmp_path, body), outcome_cap=99)
        assert load_pairs(self._file(tmp_path, body), outcome_cap=100)[0].outcome == 100

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "pairs.csv"
        path.write_bytes(b"\xff\xfeitem_id\n")
        with pytest.raises(DataError, match="UTF-8"):
            load_pairs(str(path))


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    cfg = load_config(
        _write(tmp_path_factory.mktemp("cfgio"), MINIMAL_SIMULATE.replace("n: 50", "n: 400")),
        environ={},
    )
    return run_experiment(cfg)


class TestReportSerialization:
    def test_json_round_trip_is_byte_identical(self, report):
        doc = report_to_dict(report)
        text = render_json(doc)
        assert render_json(json.loads(text)) == text

    def test_json_refuses_nan(self):
        with pytest.raises(ValueError):
            render_json({"x": float("nan")})

    def test_document_shape(self, report):
        doc = report_to_dict(report)
        assert set(doc) == {
            "config",
            "global",
            "forward_buckets",
            "calibration",
            "backward_groups",
            "verdicts",
            "metadata",
        }
        assert doc["metadata"]["package"] == "hindsight"
        assert "timestamp" not in json.dumps(doc)

    def test_json_file_layout(self, report, tmp_path):
        paths = write_report(report, str(tmp_path / "out"), "json")
        assert [p.rsplit("/", 1)[1] for p in paths] == ["report.json"]
        doc = json.loads(open(paths[0], encoding="utf-8").read())
        assert doc["verdicts"]["global_bias_ok"] in (True, False)

    def test_csv_file_layout_and_headers(self, report, tmp_path):
        out = str(tmp_path / "out_csv")
        paths = write_report(report, out, "csv")
        names = [p.rsplit("/", 1)[1] for p in paths]
        assert names == [
            "global.csv",
            "forward_buckets.csv",
            "backward_groups.csv",
            "config_echo.json",
        ]
        headers = {
            "global.csv": GLOBAL_COLUMNS,
            "forward_buckets.csv": FORWARD_COLUMNS,
            "backward_groups.csv": BACKWARD_COLUMNS,
        }
        for path in paths[:3]:
            name = path.rsplit("/", 1)[1]
            first = open(path, encoding="utf-8").readline().rstrip("\n")
            assert first == ",".join(headers[name])

    def test_csv_cells(self, report, tmp_path):
        out = str(tmp_path / "cells")
        write_report(report, out, "csv")
        lines = open(f"{out}/forward_buckets.csv", encoding="utf-8").read().splitlines()
        flagged_rows = [l for l in lines[1:] if l.endswith(",true")]
        for row in flagged_rows:
            assert row.split(",")[6] == ""
        body = open(f"{out}/global.csv", encoding="utf-8").read()
        assert "True" not in body and "False" not in body

    def test_stage_tag_on_load_errors(self):
        cfg = load_config(
            cli_overrides={"mode": "evaluate_file", "input": "/nonexistent/p.csv"},
            environ={},
        )
        with pytest.raises(DataError, match=r"^\[load\]"):
            run_experiment(cfg)
