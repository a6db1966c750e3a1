import numpy as np
import pytest

from beew.bivariate import BEEWParams, beew_sample
from beew.dataio import (
    EvaluationRecord,
    ModelSummary,
    ReportDocument,
    SampleCounts,
    format_dataset,
    parse_dataset,
    read_dataset,
    write_dataset,
    write_report,
)
from beew.exceptions import DataError, DomainError
from beew.fit import classify, em_fit
from beew.gof import lrt_from_logliks
from beew.hfamily import Exponential


def test_parse_header_comments_and_separators():
    text = """# two columns
x1,x2
1.5, 2.0
3 4   # trailing comment

0.25\t0.25
"""
    data = parse_dataset(text.splitlines(), source="memory")
    assert data.header == ["x1", "x2"]
    assert data.rows.tolist() == [[1.5, 2.0], [3.0, 4.0], [0.25, 0.25]]
    assert data.n == 3
    assert data.source == "memory"


def test_parse_without_header():
    data = parse_dataset(["1,2", "2,1"])
    assert data.header is None
    assert data.n == 2


def test_parse_rescales():
    data = parse_dataset(["10,20"], rescale=0.1)
    assert data.rows.tolist() == [[1.0, 2.0]]
    assert data.rescale == 0.1
    with pytest.raises(DomainError):
        parse_dataset(["1,2"], rescale=0.0)


@pytest.mark.parametrize(
    "lines, row",
    [
        (["x1,x2", "1,2", "0,3"], 3),
        (["1,2", "1,2,3"], 2),
        (["1,2", "a,b"], 2),
        (["# c", "1,-2"], 2),
        (["1,nan"], 1),
        (["7"], 1),
    ],
)
def test_parse_errors_name_the_line(lines, row):
    with pytest.raises(DataError) as info:
        parse_dataset(lines)
    assert info.value.row == row


def test_parse_empty_file():
    assert parse_dataset(["# nothing here", ""]).n == 0


def test_format_dataset_round_trips_floats():
    rows = beew_sample(
        BEEWParams(alpha1=1.0, alpha2=1.0, alpha3=1.0, lam=1.0, fam=Exponential()),
        np.random.Generator(np.random.PCG64(1)),
        25,
    )
    text = format_dataset(rows)
    assert text.startswith("x1,x2\n")
    assert np.array_equal(parse_dataset(text.splitlines()).rows, rows)
    assert format_dataset(np.empty((0, 2))) == "x1,x2\n"


def test_read_and_write_files(tmp_path):
    path = tmp_path / "pairs.csv"
    write_dataset(np.array([[1.0, 2.0], [0.5, 0.5]]), path)
    data = read_dataset(path)
    assert data.rows.tolist() == [[1.0, 2.0], [0.5, 0.5]]
    assert data.source == str(path)
    assert read_dataset(str(path), rescale=2).rows.tolist() == [[2.0, 4.0], [1.0, 1.0]]


def test_read_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        read_dataset(tmp_path / "missing.csv")


def test_report_round_trip(tmp_path):
    p = BEEWParams(alpha1=1.5, alpha2=0.5, alpha3=1.2, lam=0.04, fam=Exponential())
    s = classify(beew_sample(p, np.random.Generator(np.random.PCG64(2)), 300))
    fit = em_fit(s, fam=Exponential())
    doc = ReportDocument(
        command="fit",
        source="pairs.csv",
        counts=SampleCounts(n=s.n, n0=s.n0, n1=s.n1, n2=s.n2),
        models=[ModelSummary.from_fit(fit)],
        lrt=[lrt_from_logliks(-10.0, -9.0, 1, "exp", "weib")],
        evaluation=EvaluationRecord(what="cdf", x1=1.0, x2=1.0, value=0.25, region="diagonal"),
    )
    out = tmp_path / "report.json"
    text = write_report(doc, out)
    assert out.read_text() == text
    back = ReportDocument.loads(text)
    assert back == doc
    assert back.models[0].parameters == fit.theta_hat.to_dict()
    assert back.models[0].k == 4
    assert back.converged == fit.converged
    assert write_report(doc) == text
