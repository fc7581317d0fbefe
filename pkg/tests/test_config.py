import json
import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from bayesics.inference.schema import BayesFactor, InferenceSummary
from bayesics.schemas.bs_config import BayesicsConfig, config_paths, load_config
from bayesics.schemas.config import SCHEMA_VERSION, Report, RunConfig, to_plain


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config()
        assert cfg == BayesicsConfig()
        assert cfg.sampling.relative_epsilon == 0.02
        assert cfg.survival.k_max == 10

    def test_working_directory_file(self, tmp_path):
        (tmp_path / "bayesics.toml").write_text("[sampling]\npilot_size = 1000\n[bma]\nmax_terms = 8\n", encoding="utf-8")
        cfg = load_config()
        assert cfg.sampling.pilot_size == 1000
        assert cfg.bma.max_terms == 8
        assert cfg.vb.separation_threshold == 15.0

    def test_override_beats_xdg(self, tmp_path):
        xdg = tmp_path / "xdg" / "bayesics"
        xdg.mkdir(parents=True)
        (xdg / "bayesics.toml").write_text("[newton]\nmax_iter = 50\n", encoding="utf-8")
        explicit = tmp_path / "mine.toml"
        explicit.write_text("[newton]\nmax_iter = 7\n", encoding="utf-8")
        assert load_config().newton.max_iter == 50
        assert load_config(str(explicit)).newton.max_iter == 7
        assert config_paths(str(explicit))[0] == str(explicit)

    def test_bad_file_is_skipped(self, tmp_path, caplog):
        bad = tmp_path / "bad.toml"
        bad.write_text("[sampling]\npilot_size = 3\n", encoding="utf-8")
        with caplog.at_level(logging.WARNING):
            cfg = load_config(str(bad))
        assert cfg.sampling.pilot_size == 500
        assert "Ignoring bad config" in caplog.text

    def test_malformed_toml(self, tmp_path):
        bad = tmp_path / "broken.toml"
        bad.write_text("[sampling\n", encoding="utf-8")
        assert load_config(str(bad)) == BayesicsConfig()


class TestRunConfig:
    def test_rope_order(self):
        with pytest.raises(ValidationError, match="lo < hi"):
            RunConfig(subcommand="lm", rope=(1.0, -1.0))

    def test_levels_checked(self):
        with pytest.raises(ValidationError):
            RunConfig(subcommand="lm", ci_level=1.5)


class TestReport:
    def test_to_plain(self):
        out = to_plain({"a": np.float64(1.5), "b": np.arange(2), "c": math.inf, 3: (np.int64(4),)})
        assert out == {"a": 1.5, "b": [0, 1], "c": None, "3": [4]}

    def test_json_round_trip(self):
        summary = InferenceSummary(label="x", post_mean=0.1, ci_lower=-0.2, ci_upper=0.4, ci_level=0.95, prob_direction=0.7)
        report = Report(
            analysis="lm",
            config=RunConfig(subcommand="lm", seed=5),
            summaries=[summary],
            bayes_factors={"full vs null": BayesFactor.from_log(2.0, "full model", "null model")},
            extras={"median": math.inf, "knots": np.array([1.0, 2.0])},
        )
        text = report.to_json()
        parsed = json.loads(text)
        assert parsed["schema_version"] == SCHEMA_VERSION
        assert parsed["extras"] == {"knots": [1.0, 2.0], "median": None}
        assert parsed["bayes_factors"]["full vs null"]["orientation"] == "full model vs. null model"
        assert parsed["summaries"][0]["label"] == "x"
        assert text == report.to_json()
        assert list(parsed) == sorted(parsed)
