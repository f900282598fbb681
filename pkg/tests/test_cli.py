import json
from fractions import Fraction

import numpy as np
import pytest
import yaml
from click.testing import CliRunner

from colorsym.cli.config import ConfigError, parse_config
from colorsym.cli.experiments import (Record, RunOptions, _pooled_chi2, bonferroni_threshold, experiment_stream,
                                      run_all)
from colorsym.cli.main import main
from colorsym.cli.output import COLUMNS, results_csv, write_outputs

FAST = {
    "seed": 5,
    "experiments": [
        {"id": "sym", "kind": "symmetry", "cases": 10, "q_values": ["0", "1/3"]},
        {"id": "rec", "kind": "recursion", "cases": 10, "invalid_cases": 3},
        {"id": "rot", "kind": "s6v-rotation", "diagrams": [{"outer": [2, 1]}]},
        {"id": "hl", "kind": "hl-match", "sign_string": "+-", "a": ["1/2"], "b": ["1/3"]},
        {"id": "shock", "kind": "shock-identity", "L": 1, "t": 2.0, "xs": [0], "replicas": 500},
        {"id": "pert", "kind": "perturbed-step", "perturbation": "2", "q": 0.5, "t": 5.0, "replicas": 300,
         "tolerance": 0.5, "cdf_grid": 5},
    ],
}


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def test_rational_strings_parse():
    cfg = parse_config(FAST)
    assert cfg.experiments[0].q_values == [Fraction(0), Fraction(1, 3)]


@pytest.mark.parametrize("bad,field", [
    ({"id": "x", "kind": "inhomogeneous-identity", "tau": 1, "q": 0.5, "replicas": 100,
      "rates": {"preset": "sinusoidal", "base": 1.0}}, "rates.sinusoidal.amplitude"),
    ({"id": "x", "kind": "inhomogeneous-identity", "tau": 1, "q": 0.5, "replicas": 100,
      "rates": {"preset": "warp"}}, "rates"),
    ({"id": "x", "kind": "symmetry", "q_values": ["1/0"]}, "q_values.0"),
    ({"id": "x", "kind": "nope"}, "experiments.0"),
    ({"id": "x", "kind": "hl-match", "sign_string": "+-", "a": ["2"], "b": ["1"]}, "hl-match"),
])
def test_invalid_configs_name_the_field(bad, field):
    with pytest.raises(ConfigError) as err:
        parse_config({"experiments": [bad]})
    assert field in str(err.value)


def test_duplicate_ids_rejected():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config({"experiments": [{"id": "a", "kind": "symmetry"}, {"id": "a", "kind": "symmetry"}]})


def test_header_only_csv():
    assert results_csv([]) == ",".join(COLUMNS) + "\n"


def test_record_formatting():
    r = Record("e", "k", "qty", {"b": 1, "a": Fraction(1, 3)}, Fraction(1, 2), 0.25, stderr=0.01)
    line = results_csv([r]).splitlines()[1]
    assert line == 'e,k,qty,"{""a"":""1/3"",""b"":1}",1/2,0.25,0.01,,,,pass'


def test_bonferroni_threshold():
    assert bonferroni_threshold(1e-3, 1) == pytest.approx(3.2905, abs=1e-3)
    assert bonferroni_threshold(1e-3, 3) > bonferroni_threshold(1e-3, 1)


def test_pooled_chi2_detects_difference():
    rng = np.random.default_rng(0)
    a = rng.integers(0, 5, 5000)
    b = rng.integers(0, 5, 5000)
    assert _pooled_chi2(a, b)[1] > 1e-3
    assert _pooled_chi2(a, np.minimum(b, 3))[1] < 1e-6
    # rare categories get pooled rather than breaking the test
    assert _pooled_chi2(np.array([0] * 50 + [7]), np.array([0] * 50 + [9]))[1] == 1.0


def test_streams_depend_on_id_only():
    assert experiment_stream(1, "a") == experiment_stream(1, "a")
    assert experiment_stream(1, "a") != experiment_stream(1, "b")


def test_run_and_rerun_identical(tmp_path):
    cfg = _write(tmp_path, FAST)
    runner = CliRunner()
    r1 = runner.invoke(main, [str(cfg), "--out", str(tmp_path / "o1")])
    r2 = runner.invoke(main, [str(cfg), "--out", str(tmp_path / "o2")])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0
    for name in ("results.csv", "summary.json", "cdf_pert.csv"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()
    summary = json.loads((tmp_path / "o1" / "summary.json").read_text())
    assert summary["passed"] and [e["id"] for e in summary["experiments"]] == [e["id"] for e in FAST["experiments"]]
    rows = (tmp_path / "o1" / "results.csv").read_text().splitlines()
    assert rows[0] == ",".join(COLUMNS)
    assert any(r.startswith("shock,shock-identity,P(second class <= x) [x=0]") for r in rows)


def test_seed_override_changes_monte_carlo_only(tmp_path):
    cfg = _write(tmp_path, {"seed": 1, "experiments": [FAST["experiments"][4]]})
    runner = CliRunner()
    runner.invoke(main, [str(cfg), "--out", str(tmp_path / "a")])
    runner.invoke(main, [str(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "results.csv").read_bytes() != (tmp_path / "b" / "results.csv").read_bytes()


def test_replica_override_and_float_mode(tmp_path):
    cfg = _write(tmp_path, {"seed": 1, "experiments": [FAST["experiments"][0], FAST["experiments"][4]]})
    res = CliRunner().invoke(main, [str(cfg), "--out", str(tmp_path / "o"), "--replicas", "200", "--float"])
    assert res.exit_code == 0, res.output
    text = (tmp_path / "o" / "results.csv").read_text()
    assert ",200," in text
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["mode"] == "float"


def test_env_var_sets_output_dir(tmp_path):
    cfg = _write(tmp_path, {"experiments": [FAST["experiments"][0]]})
    res = CliRunner().invoke(main, [str(cfg)], env={"COLORSYM_OUT": str(tmp_path / "envout")})
    assert res.exit_code == 0
    assert (tmp_path / "envout" / "results.csv").exists()


def test_malformed_rates_exit_nonzero(tmp_path):
    bad = {"experiments": [{"id": "x", "kind": "asep-reversal", "t": 1, "q": 0.5, "replicas": 100,
                            "rates": {"preset": "piecewise", "breakpoints": [1.0], "values": [1.0]}}]}
    res = CliRunner().invoke(main, [str(_write(tmp_path, bad)), "--out", str(tmp_path / "o")])
    assert res.exit_code != 0
    assert "rates.piecewise" in res.output


def test_failed_check_exits_one(tmp_path):
    exp = dict(FAST["experiments"][5], tolerance=1e-9, xs=[0.1])
    res = CliRunner().invoke(main, [str(_write(tmp_path, {"experiments": [exp]})), "--out", str(tmp_path / "o")])
    assert res.exit_code == 1
    assert "FAIL pert" in res.output


def test_list_experiments():
    res = CliRunner().invoke(main, ["--list-experiments"])
    assert res.exit_code == 0 and "asep-reversal" in res.output and "hl-match" in res.output


def test_missing_config_file(tmp_path):
    res = CliRunner().invoke(main, [str(tmp_path / "none.yaml")])
    assert res.exit_code == 2


def test_unwritable_destination(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = _write(tmp_path, {"experiments": [FAST["experiments"][0]]})
    res = CliRunner().invoke(main, [str(cfg), "--out", str(blocker / "sub")])
    assert res.exit_code == 2 and "cannot write" in res.output


def test_write_outputs_empty(tmp_path):
    write_outputs(tmp_path, [], 0, "exact")
    assert (tmp_path / "results.csv").read_text() == ",".join(COLUMNS) + "\n"
    assert json.loads((tmp_path / "summary.json").read_text())["experiments"] == []


def test_run_all_respects_enabled():
    cfg = parse_config({"experiments": [dict(FAST["experiments"][0]), dict(FAST["experiments"][1], enabled=False)]})
    assert [r.id for r in run_all(cfg, RunOptions())] == ["sym"]
