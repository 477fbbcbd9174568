import json

import pytest

from walkrange.reporting import (
    CSV_HEADER,
    EstimateReport,
    StatRow,
    _field,
    _num,
    plan_hash,
)


def row(n, statistic, element="", mean=1.0):
    return StatRow(
        experiment="sim",
        group="z2",
        law="srw",
        n=n,
        statistic=statistic,
        element=element,
        mean=mean,
        variance=0.25,
        stderr=0.05,
        reps=100,
        seed=1729,
    )


def test_header_field_order():
    assert CSV_HEADER == (
        "experiment,group,law,n,statistic,element,mean,variance,stderr,reps,seed"
    )


def test_field_quoting():
    assert _field("1,0") == '"1,0"'
    assert _field('say "hi"') == '"say ""hi"""'
    assert _field("plain") == "plain"


@pytest.mark.parametrize(
    "x", [1 / 3, 0.1, 6.02e23, 5e-324, 123456789.123456789, -0.0]
)
def test_numbers_roundtrip_through_text(x):
    assert float(_num(x)) == x


def test_rows_sorted_and_emission_stable():
    rep = EstimateReport(plan_hash="f" * 16, seed=1729)
    rep.rows = [
        row(100, "range"),
        row(10, "folner", "1,0", mean=0.5),
        row(10, "boundary"),
        row(10, "folner", "-1,0", mean=0.5),
    ]
    text = rep.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    keys = [tuple(line.split(",")[3:6]) for line in lines[1:]]
    # elements with commas come out quoted; positions 3..5 are n, statistic
    assert [k[0] for k in keys] == ["10", "10", "10", "100"]
    assert text == rep.to_csv()
    assert rep.to_json() == rep.to_json()
    assert '"1,0"' in text


def test_json_mirrors_rows():
    rep = EstimateReport(plan_hash="a" * 16, seed=7)
    rep.rows = [row(10, "range", mean=1 / 3)]
    payload = json.loads(rep.to_json())
    assert set(payload) == {"plan_hash", "seed", "failures", "rows"}
    assert payload["rows"][0]["mean"] == pytest.approx(1 / 3, abs=0)
    assert payload["rows"][0]["n"] == 10


def test_get_and_series():
    rep = EstimateReport(plan_hash="a" * 16, seed=7)
    rep.rows = [row(100, "range", mean=2.0), row(10, "range", mean=1.0)]
    assert rep.get(10, "range").mean == 1.0
    assert rep.series("range") == [(10, 1.0), (100, 2.0)]
    with pytest.raises(KeyError):
        rep.get(10, "boundary")


def test_plan_hash_is_canonical():
    a = plan_hash({"x": 1, "y": [1, 2]})
    b = plan_hash({"y": [1, 2], "x": 1})
    c = plan_hash({"x": 2, "y": [1, 2]})
    assert a == b
    assert a != c
    assert len(a) == 16 and int(a, 16) >= 0
