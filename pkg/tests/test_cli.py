import json
from fractions import Fraction

import numpy as np
import pytest

from wtgf import bounds as B
from wtgf.channels import ErasureParams, WtgfChannel, make_erasure_wtgf
from wtgf.cli import execute, fmt, parse_caps
from wtgf.optimize import SearchConfig, maximize
from wtgf.specfile import SpecError, channel_from_dict, parse_channel_spec, serialize, write_channel_spec

MINIMAL = {
    "format_version": 1,
    "kind": "wtgf",
    "alphabets": {"X": [0, 1], "Y": [0, 1], "Yhat": ["-"], "Z": [0, 1]},
    "tensors": {"kernel": {"dims": [2, 2, 1, 2], "data": [0.72, 0.18, 0.08, 0.02, 0.02, 0.08, 0.18, 0.72]}},
    "metadata": {"name": "minimal"},
}


def run(args, tmp_path, name="report.json"):
    out = tmp_path / name
    code = execute(list(args) + ["--out", str(out)])
    return code, json.loads(out.read_text())


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_minimal_spec(tmp_path):
    ch = parse_channel_spec(write(tmp_path, MINIMAL))
    assert isinstance(ch, WtgfChannel)
    assert ch.yhat.size == 1
    assert ch.table[0, 0, 0, 0] == pytest.approx(0.72)


def test_row_sum_error_names_row(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["tensors"]["kernel"]["data"][4] = 0.0  # row 1 sums to 0.98
    with pytest.raises(SpecError, match="row 1 sums to"):
        parse_channel_spec(write(tmp_path, doc))


def test_dimension_mismatch(tmp_path):
    doc = json.loads(json.dumps(MINIMAL))
    doc["tensors"]["kernel"]["dims"] = [2, 2, 2, 2]
    with pytest.raises(SpecError, match="dims"):
        parse_channel_spec(write(tmp_path, doc))


def test_malformed_json_reports_position(tmp_path):
    with pytest.raises(SpecError, match="line 2, column"):
        parse_channel_spec(write(tmp_path, '{"kind": "wtgf",\n ]'))


def test_erasure_kind_matches_constructor():
    ch = channel_from_dict({"format_version": 1, "kind": "erasure", "delta": 0.5, "delta_e": 0.5})
    assert ch.structurally_equal(make_erasure_wtgf(ErasureParams(0.5, 0.5)))


@pytest.mark.parametrize("name", ["bsc_pair", "perfect_feedback", "prop3", "prop6", "state_xor"])
def test_spec_round_trip(name, data_dir, tmp_path):
    original = json.loads((data_dir / f"{name}.json").read_text())
    ch = parse_channel_spec(data_dir / f"{name}.json")
    p = tmp_path / "rt.json"
    write_channel_spec(ch, p, original.get("metadata"))
    again = json.loads(p.read_text())
    # wiretap_pair files come back in the general wtgf form
    back = parse_channel_spec(p)
    assert serialize(back)["alphabets"] == again["alphabets"]
    if original["kind"] == again["kind"]:
        assert again["alphabets"] == original["alphabets"]
        for key, t in original["tensors"].items():
            assert again["tensors"][key]["dims"] == t["dims"]
            np.testing.assert_allclose(again["tensors"][key]["data"], t["data"], rtol=0, atol=1e-15)
    assert again["metadata"] == original.get("metadata")
    for key, t in serialize(ch)["tensors"].items():
        assert serialize(back)["tensors"][key]["dims"] == t["dims"]
        np.testing.assert_allclose(serialize(back)["tensors"][key]["data"], t["data"], rtol=0, atol=1e-15)


def test_erasure_round_trip(tmp_path):
    ch = make_erasure_wtgf(ErasureParams(0.3, 0.6))
    write_channel_spec(ch, tmp_path / "e.json")
    assert parse_channel_spec(tmp_path / "e.json").structurally_equal(ch, atol=1e-15)


def test_parse_caps():
    assert parse_caps("Q=3,U=2") == {"Q": 3, "U": 2}
    assert parse_caps("") == {}
    with pytest.raises(ValueError):
        parse_caps("W=2")


def test_fmt_nine_digits():
    assert fmt(1 / 6) == 0.166666667
    assert fmt(-0.0) == 0.0


def test_erasure_command(tmp_path):
    code, rep = run(["erasure", "--delta", "0.5", "--delta-e", "0.5"], tmp_path)
    assert code == 0
    assert rep["results"]["inner_kg"] == 0.166666667
    assert rep["results"]["capacity"] == 0.214285714
    assert float.fromhex(rep["results"]["capacity_hex"]) == B.erasure_rates(ErasureParams(0.5, 0.5))["capacity"]


def test_classify_command(data_dir, tmp_path):
    code, rep = run(["classify", "--channel", str(data_dir / "bsc_pair.json")], tmp_path)
    assert code == 0
    assert rep["results"]["channel"]["degraded_y_to_z"] is True
    assert rep["results"]["channel"]["less_noisy"]["y_over_z"]["verdict"] == "yes"


def test_inner_kg_deterministic_and_rederivable(data_dir, tmp_path):
    args = ["inner-kg", "--channel", str(data_dir / "bsc_pair.json"), "--seed", "7", "--restarts", "2"]
    c1, r1 = run(args, tmp_path, "a.json")
    c2, r2 = run(args, tmp_path, "b.json")
    assert c1 == c2 == 0
    assert json.dumps(r1["results"]) == json.dumps(r2["results"])
    echo = dict(r1["config"]["search"])
    echo["grid_step"] = Fraction(echo["grid_step"])
    lib = maximize("inner_kg", parse_channel_spec(data_dir / "bsc_pair.json"), SearchConfig(**echo))
    assert abs(lib.best_bits - float.fromhex(r1["results"]["bits_hex"])) <= 1e-12
    assert r1["results"]["label"] == "best-found"
    assert "wall_time" not in json.dumps(r1["results"])


def test_validation_and_refusal_exit_codes(data_dir, tmp_path):
    bad = write(tmp_path, "{not json")
    assert run(["inner-kg", "--channel", str(bad)], tmp_path)[0] == 2
    code, rep = run(["thm5", "--channel", str(data_dir / "bsc_pair.json")], tmp_path)
    assert code == 2 and rep["error"]["type"] == "ModelError"
    code, rep = run(["inner-kg", "--channel", str(data_dir / "bsc_pair.json"), "--mode", "exhaustive_grid",
                     "--grid", "1/64"], tmp_path)
    assert code == 3 and rep["error"]["type"] == "BudgetExceeded"
    code, rep = run(["special-case", "--case", "P1", "--channel", str(data_dir / "prop6.json")], tmp_path)
    assert code == 3 and rep["error"]["type"] == "HypothesisViolated"
    assert execute(["no-such-command"]) == 2
    assert execute(["inner-kg"]) == 2


def test_special_case_assume_hypothesis(data_dir, tmp_path):
    code, rep = run(["special-case", "--case", "P1", "--assume-hypothesis", "--restarts", "2",
                     "--channel", str(data_dir / "prop6.json")], tmp_path)
    assert code == 0
    assert rep["diagnostics"]["hypothesis"] == "assumed by caller"


def test_simulate_writes_trace(data_dir, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, rep = run(["simulate", "--channel", str(data_dir / "perfect_feedback.json"), "--n", "3", "--b", "2",
                     "--r0", "0.3333333333", "--eps-prime", "1.0", "--sessions", "3", "--trace", str(trace)],
                    tmp_path)
    assert code == 0
    lines = [json.loads(x) for x in trace.read_text().splitlines()]
    assert len(lines) == 3 * 2
    assert {"j", "r", "l1", "l2", "k_prime", "success", "session_seed"} <= set(lines[0])
    assert rep["results"]["sessions"] == 3


def test_leakage_command(data_dir, tmp_path):
    base = ["leakage", "--channel", str(data_dir / "perfect_feedback.json"), "--n", "3", "--b", "2",
            "--r0", "0.3333333333", "--eps-prime", "1.0"]
    assert run(base, tmp_path)[0] == 3
    code, rep = run(base + ["--deterministic-encoder"], tmp_path)
    assert code == 0
    assert 0 <= rep["results"]["exact"]["exact_bits"] <= 1
