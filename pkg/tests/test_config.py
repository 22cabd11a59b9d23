import json

import pytest

from lobres import ConfigParseError, ConfigValidationError
from lobres.config import parse_config, validate_config

MINIMAL_THEOREM1 = """
{
  "kind": "theorem1",
  "strategy": {"type": "rate", "rate": {"fn": "sin"}}
}
"""


class TestParse:
    def test_minimal_config_fills_defaults(self):
        config = parse_config(MINIMAL_THEOREM1)
        assert config.grid.n0 == 512
        assert config.mc.paths == 1
        assert config.mc.seed == 42
        assert config.grid.horizon == 1.0
        assert config.ladder.ladder().values == tuple(16.0 * 2**j for j in range(9))
        assert config.output_dir == "out"

    def test_alpha_out_of_range(self):
        text = json.dumps({
            "kind": "theorem1",
            "book": {"alpha": 0.7},
            "strategy": {"type": "zero"},
        })
        with pytest.raises(ConfigValidationError, match=r"\[0, 1/2\]|\[0.0, 0.5\]"):
            parse_config(text)

    def test_unknown_key_rejected(self):
        text = json.dumps({
            "kind": "theorem1",
            "strategy": {"type": "zero"},
            "bogus": 1,
        })
        with pytest.raises(ConfigParseError, match="bogus"):
            parse_config(text)

    def test_unknown_nested_key_rejected(self):
        text = json.dumps({
            "kind": "theorem1",
            "grid": {"horizon": 1.0, "dt": 0.1},
            "strategy": {"type": "zero"},
        })
        with pytest.raises(ConfigParseError, match="dt"):
            parse_config(text)

    def test_malformed_json_reports_line(self):
        with pytest.raises(ConfigParseError, match="line"):
            parse_config("{\n  \"kind\": theorem1\n}")

    def test_round_trip(self):
        config = parse_config(MINIMAL_THEOREM1)
        again = parse_config(config.to_json())
        assert again == config
        assert again.config_hash() == config.config_hash()

    def test_unknown_kind(self):
        with pytest.raises(ConfigParseError, match="kind"):
            parse_config('{"kind": "nope"}')

    def test_kappa_required_for_simulate(self):
        text = json.dumps({"kind": "simulate", "book": {},
                           "strategy": {"type": "zero"}})
        with pytest.raises(ConfigParseError, match="kappa"):
            parse_config(text)

    def test_kappa_forbidden_for_experiments(self):
        text = json.dumps({"kind": "theorem1", "book": {"kappa": 4.0},
                           "strategy": {"type": "zero"}})
        with pytest.raises(ConfigParseError, match="kappa"):
            parse_config(text)

    def test_ladder_non_increasing(self):
        text = json.dumps({"kind": "theorem1", "strategy": {"type": "zero"},
                           "ladder": {"values": [16.0, 8.0]}})
        with pytest.raises(ConfigValidationError, match="increasing"):
            parse_config(text)

    def test_strategy_type_restricted_by_kind(self):
        text = json.dumps({"kind": "theorem1",
                           "strategy": {"type": "blocks", "blocks": [[0.2, 1.0]],
                                        "t_prime": 0.5}})
        with pytest.raises(ConfigValidationError, match="not allowed"):
            parse_config(text)

    def test_seed_override_changes_hash(self):
        config = parse_config(MINIMAL_THEOREM1)
        other = config.with_overrides(seed=7)
        assert other.mc.seed == 7
        assert other.config_hash() != config.config_hash()

    def test_utility_requires_positive_sigma(self):
        text = json.dumps({
            "kind": "utility",
            "fundamental": {"mu": 0.1, "sigma": 0.0},
        })
        with pytest.raises(ConfigValidationError, match="sigma"):
            parse_config(text)

    def test_function_spec_unknown_fn(self):
        text = json.dumps({"kind": "theorem1",
                           "strategy": {"type": "rate", "rate": {"fn": "tan"}}})
        with pytest.raises(ConfigParseError, match="fn"):
            parse_config(text)


class TestValidate:
    def test_ok_with_estimates(self):
        report = validate_config(parse_config(MINIMAL_THEOREM1))
        assert report["ok"]
        assert report["estimates"]["grid_steps"] == 512
        assert report["estimates"]["cells"] == 9
        assert report["warnings"] == []

    def test_budget_warning(self):
        text = json.dumps({"kind": "theorem1", "strategy": {"type": "zero"},
                           "mc": {"paths": 1_000_000}})
        report = validate_config(parse_config(text))
        assert any("budget" in w for w in report["warnings"])
