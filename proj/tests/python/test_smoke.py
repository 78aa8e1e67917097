import json
import math

import jsonschema
import pytest

import sipkit


def test_exponents():
    assert sipkit.kappa(3.0) == pytest.approx(1.0, abs=1e-12)
    assert sipkit.tau(4.0) == pytest.approx(1.0, abs=1e-12)
    assert 1.390 < sipkit.kappa(4.0) < 1.400
    with pytest.raises(ValueError):
        sipkit.kappa(2.0)


def test_feasibility_certificate():
    c = sipkit.feasibility(4.0, 1.5)
    assert c["feasible"]
    assert c["witness"]["r"] > 4.0
    assert sipkit.feasibility_grid_search(4.0, 1.5)
    bad = sipkit.feasibility(4.0, 1.3)
    assert not bad["feasible"]
    assert bad["witness"] is None
    assert bad["quadratic"] == pytest.approx(-1.36)


def test_thresholds_and_schedule():
    for p in (3.0, 4.0, 6.0):
        assert sipkit.linear_thresholds(p, 1.0)["new_below_blw"]
    s = sipkit.kmt_schedule(3.0, 1.0, 8)
    assert s["k0"] == 4
    assert s["m"][7] == 13 and s["m"][8] == 19


def test_rosenthal_constants():
    base = sipkit.rosenthal_constants(3.0)
    assert base["cp_prime"] == pytest.approx(base["cp"] * 2 ** 1.5 / (math.sqrt(2) - 1))


def test_format_double_round_trips():
    for x in (0.1, 1.0 / 3.0, 2.5e-300, -7.0):
        s = sipkit.format_double(x)
        assert "," not in s
        assert float(s) == x


def test_rates_run(tmp_path):
    r = sipkit.run({"kind": "rates", "params": {"p": [3, 4], "gamma": [1.5]}}, out=tmp_path / "o")
    assert r.ok
    assert r.summary["all_hold"]
    assert "rates.csv" in r.artifacts
    assert (tmp_path / "o" / "summary.json").exists()
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["kind"] == "rates"


def test_validation_error_writes_nothing(tmp_path):
    cfg = {"kind": "rates", "params": {"p": [3]}, "bogus": 1}
    r = sipkit.run(cfg, out=tmp_path / "o")
    assert r.exit_code == 2
    assert r.summary["status"] == "validation-error"
    assert r.summary["where"] == "/bogus"
    assert not (tmp_path / "o").exists()


def test_verdict_failure_reports_record():
    cfg = {"kind": "sigma2", "seed": 3, "family": {"type": "doubling"},
           "observable": {"type": "cosine", "k": 1}, "params": {"ensemble": 4000, "expected": 5.0}}
    r = sipkit.run(cfg)
    assert r.exit_code == 1
    assert r.failing_record == "sigma2.csv:2"


def test_rosenthal_worker_invariance(root):
    cfg = sipkit.load_config(root / "configs" / "rosenthal_doubling.json")
    a = sipkit.run(cfg, workers=1)
    b = sipkit.run(cfg, workers=4)
    assert a.ok
    assert a.artifacts == b.artifacts
    assert a.summary["config_hash"] == sipkit.config_hash(cfg)


def test_committed_configs_match_schema(root):
    schema = json.loads((root / "schema" / "config.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    configs = sorted((root / "configs").glob("*.json"))
    assert configs
    for path in configs:
        jsonschema.validate(json.loads(path.read_text()), schema,
                            cls=jsonschema.Draft202012Validator)


def test_schema_rejects_unknown_kind(root):
    schema = json.loads((root / "schema" / "config.schema.json").read_text())
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"kind": "nope"}, schema)
