import json
import math

import pytest
from typer.testing import CliRunner

from beew.cli import EXIT_DATA, EXIT_NONCONVERGENCE, app
from beew.hfamily import FAMILIES

runner = CliRunner()

UNIT = "alpha1=1,alpha2=1,alpha3=1,lambda=1"
BGE = "alpha1=1.5,alpha2=0.5,alpha3=1.2,lambda=0.04"
SHAPES = {
    "exp": "",
    "lfr": ",beta=1,gamma=0.5",
    "weib": ",beta=1.5",
    "gomp": ",beta=0.8",
    "wg": ",beta=1,gamma=0.5,delta=1",
    "mwe": ",beta=2,gamma=1.5",
}


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def report(path):
    return json.loads(path.read_text())


def test_eval_cdf(tmp_path):
    out = tmp_path / "eval.json"
    result = invoke("eval", "--theta", UNIT, "--x1", 1, "--x2", 1, "--what", "cdf", "--out", out)
    assert result.exit_code == 0, result.output
    doc = report(out)
    assert doc["command"] == "eval"
    assert doc["evaluation"]["value"] == pytest.approx(0.2525805, abs=1e-7)
    assert doc["evaluation"]["region"] == "DIAGONAL"


def test_eval_pdf_on_the_diagonal_is_a_line_density(tmp_path):
    out = tmp_path / "eval.json"
    result = invoke("eval", "--theta", UNIT, "--x1", 1, "--x2", 1, "--what", "pdf", "--out", out)
    assert result.exit_code == 0, result.output
    ev = report(out)["evaluation"]
    assert ev["kind"] == "line-density"
    assert ev["value"] == pytest.approx(0.1469959, abs=1e-7)


def test_eval_with_shape_parameter(tmp_path):
    out = tmp_path / "eval.json"
    theta = UNIT + ",beta=2"
    result = invoke(
        "eval", "--model", "weib", "--theta", theta, "--x1", 0.5, "--x2", 1.5, "--out", out
    )
    assert result.exit_code == 0, result.output
    doc = report(out)
    assert doc["parameters"]["beta"] == 2.0
    assert doc["evaluation"]["kind"] == "surface-density"


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        result = invoke("simulate", "--theta", BGE, "--n", 50, "--seed", 7, "--out", path)
        assert result.exit_code == 0, result.output
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "x1,x2"
    assert len(lines) == 51


def test_simulate_zero_pairs(tmp_path):
    out = tmp_path / "empty.csv"
    result = invoke("simulate", "--theta", BGE, "--n", 0, "--out", out)
    assert result.exit_code == 0, result.output
    assert out.read_text() == "x1,x2\n"


def test_fit_on_simulated_data(tmp_path):
    data, out = tmp_path / "pairs.csv", tmp_path / "fit.json"
    assert invoke("simulate", "--theta", BGE, "--n", 300, "--seed", 3, "--out", data).exit_code == 0
    result = invoke("fit", "--data", data, "--out", out)
    assert result.exit_code == 0, result.output
    doc = report(out)
    (model,) = doc["models"]
    assert model["model"] == "exp"
    assert model["converged"]
    assert set(model["parameters"]) == {"alpha1", "alpha2", "alpha3", "lambda"}
    assert [ks["target"] for ks in doc["ks"]] == ["x1", "x2", "max"]
    assert doc["counts"]["n"] == 300


def test_rescaled_data(tmp_path):
    data, out = tmp_path / "pairs.csv", tmp_path / "gof.json"
    pairs = [(1, 2), (2, 1), (3, 3), (0.5, 4)] * 10
    data.write_text("x1,x2\n" + "".join(f"{100 * a},{100 * b}\n" for a, b in pairs))
    result = invoke("gof", "--data", data, "--rescale", 0.01, "--theta", UNIT, "--out", out)
    assert result.exit_code == 0, result.output
    doc = report(out)
    assert doc["rescale"] == 0.01
    assert doc["counts"] == {"n": 40, "n0": 10, "n1": 20, "n2": 10}


def test_gof_with_given_parameters(tmp_path):
    data, out = tmp_path / "pairs.csv", tmp_path / "gof.json"
    assert invoke("simulate", "--theta", BGE, "--n", 500, "--seed", 5, "--out", data).exit_code == 0
    result = invoke("gof", "--data", data, "--theta", BGE, "--out", out)
    assert result.exit_code == 0, result.output
    doc = report(out)
    assert doc["models"] == []
    assert all(ks["p_value"] > 1e-3 for ks in doc["ks"])


def test_zero_coordinate_is_a_data_error(tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("x1,x2\n1.0,2.0\n0.0,1.0\n")
    result = invoke("fit", "--data", data)
    assert result.exit_code == EXIT_DATA
    assert "row 3" in result.output


def test_compare_needs_nested_models(tmp_path):
    data = tmp_path / "pairs.csv"
    data.write_text("1,2\n2,1\n")
    result = invoke("compare", "--data", data, "--base", "exp", "--full", "exp")
    assert result.exit_code == EXIT_DATA
    assert "not nested" in result.output


def test_bad_parameter_assignment():
    result = invoke("eval", "--theta", "alpha1=1,alpha2", "--x1", 1, "--x2", 1)
    assert result.exit_code == EXIT_DATA


def test_missing_parameter():
    result = invoke("eval", "--theta", "alpha1=1,alpha2=1,lambda=1", "--x1", 1, "--x2", 1)
    assert result.exit_code == EXIT_DATA


def test_unknown_model_is_a_usage_error():
    result = invoke("eval", "--model", "lognormal", "--theta", UNIT, "--x1", 1, "--x2", 1)
    assert result.exit_code == 2


@pytest.mark.parametrize("model", sorted(FAMILIES))
def test_simulate_then_fit_every_family(tmp_path, model):
    data, out = tmp_path / "pairs.csv", tmp_path / "fit.json"
    lam = "" if FAMILIES[model].lambda_fixed else ",lambda=0.8"
    theta = "alpha1=1.2,alpha2=0.8,alpha3=1.0" + lam + SHAPES[model]
    result = invoke(
        "simulate", "--model", model, "--theta", theta, "--n", 200, "--seed", 11, "--out", data
    )
    assert result.exit_code == 0, result.output
    result = invoke("fit", "--data", data, "--model", model, "--max-iter", 50, "--out", out)
    assert result.exit_code in (0, EXIT_NONCONVERGENCE), result.output
    (fitted,) = report(out)["models"]
    assert fitted["model"] == model
    assert math.isfinite(fitted["loglik"])
    assert all(value >= 0 for value in fitted["parameters"].values())


def test_compare_base_against_two_nesting_families(tmp_path):
    data, out = tmp_path / "pairs.csv", tmp_path / "compare.json"
    theta = "alpha1=1,alpha2=1.5,alpha3=0.8,lambda=0.5,beta=1.5"
    result = invoke(
        "simulate", "--model", "weib", "--theta", theta, "--n", 400, "--seed", 2, "--out", data
    )
    assert result.exit_code == 0, result.output
    result = invoke(
        "compare", "--data", data, "--base", "exp", "--full", "lfr", "--full", "weib", "--out", out
    )
    assert result.exit_code in (0, EXIT_NONCONVERGENCE), result.output
    doc = report(out)
    assert [m["model"] for m in doc["models"]] == ["exp", "lfr", "weib"]
    base, *full = doc["models"]
    assert [t["df"] for t in doc["lrt"]] == [1, 1]
    assert all(m["loglik"] >= base["loglik"] - 1e-6 for m in full)
