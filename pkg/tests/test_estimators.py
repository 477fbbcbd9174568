"""End-to-end estimator checks at reduced sizes.

Seeds are frozen, so every assertion here is deterministic; the bands
around simulated quantities were sized from the standard errors the same
designs produced when first run."""

import math

import numpy as np
import pytest

from walkrange.estimators import (
    ExperimentPlan,
    _experiment_matrix,
    boundary_constant,
    escape_probability,
    folner_limit,
    regular_variation_fit,
    run_experiment,
    taboo_decay_check,
    variance_scan,
)
from walkrange.groups import get_group
from walkrange.laws import parse_law
from walkrange.reporting import plan_hash

WATSON_Q = 1.0 / 1.5163860592


@pytest.fixture(scope="module")
def ray_plan(tmp_path_factory):
    path = tmp_path_factory.mktemp("laws") / "ray.atoms"
    path.write_text("1 1\n")
    return ExperimentPlan(
        group="z1",
        law="atoms:%s" % path,
        statistics=("range", "folner:1"),
        steps=64,
        reps=5,
        seed=9,
        checkpoint_start=8,
    )


def test_plan_checkpoints_and_hash():
    plan = ExperimentPlan(group="z2", law="srw", steps=5000, reps=10, seed=3)
    cks = plan.checkpoints()
    assert cks[-1] == 5000
    assert all(b > a for a, b in zip(cks, cks[1:]))
    from dataclasses import replace

    other = replace(plan, workers=7)
    assert plan.canonical() == other.canonical()
    assert plan_hash(plan.canonical()) == plan_hash(other.canonical())


def test_deterministic_ray_is_exact(ray_plan):
    report = run_experiment(ray_plan)
    for n, mean in report.series("range"):
        row = report.get(n, "range")
        assert mean == float(n)
        assert row.variance == 0.0
    for n, mean in report.series("folner", "1"):
        assert mean == 2.0 / n
        assert report.get(n, "folner", "1").variance == 0.0


def test_worker_count_does_not_change_output():
    from dataclasses import replace

    plan = ExperimentPlan(
        group="z2",
        law="srw",
        statistics=("range", "boundary"),
        steps=2000,
        reps=12,
        seed=21,
        checkpoint_start=500,
    )
    solo = run_experiment(plan)
    pooled = run_experiment(replace(plan, workers=3))
    assert solo.to_csv() == pooled.to_csv()
    assert solo.to_json() == pooled.to_json()


def test_plan_validation_errors():
    with pytest.raises(ValueError, match="two-sided"):
        run_experiment(
            ExperimentPlan(group="f2", law="srw", steps=100, reps=1, two_sided=True)
        )
    with pytest.raises(ValueError, match="z1"):
        run_experiment(
            ExperimentPlan(
                group="z2",
                law="srw",
                steps=100,
                reps=1,
                base="rotation:0.618:0.5:0.1",
            )
        )
    with pytest.raises(ValueError, match="unknown statistic"):
        run_experiment(
            ExperimentPlan(group="z2", law="srw", steps=100, reps=1, statistics=("area",))
        )


def test_escape_brackets_cubic():
    law = parse_law("srw", get_group("z3"))
    brackets = escape_probability(law, [(0, 0, 0), (1, 0, 0)], 2000, 4000, seed=2)
    for b in brackets:
        assert b.low <= b.point <= b.high
        assert b.tail is not None and b.tail > 0
        assert b.low == pytest.approx(b.point - b.tail, abs=1e-12)
        assert b.low <= WATSON_Q <= b.high
        assert b.point == pytest.approx(WATSON_Q, abs=0.02)


def test_escape_brackets_free_group():
    f2 = get_group("f2")
    law = parse_law("srw", f2)
    brackets = escape_probability(
        law, [f2.identity(), f2.parse("a")], 10**4, 6000, seed=4
    )
    for b in brackets:
        assert b.point == pytest.approx(2.0 / 3.0, abs=0.02)
        assert 0 < b.tail < 1e-12  # abandoned walks barely matter


def test_escape_needs_transience():
    with pytest.raises(ValueError, match="recurrent"):
        escape_probability(parse_law("srw", get_group("z2")), [(1, 0)], 100, 10)


def test_folner_verdict_planar_walk():
    plan = ExperimentPlan(
        group="z2",
        law="srw",
        steps=10**5,
        reps=60,
        seed=11,
        checkpoint_start=100,
    )
    law = parse_law("srw", get_group("z2"))
    rep = folner_limit(law, (1, 0), plan, path_a_reps=4000)
    assert rep.verdict == "folner-consistent"
    assert rep.limit_a is None  # the product route needs transience
    assert rep.limit_b < 0.3


def test_folner_verdict_drifting_walk(tmp_path):
    path = tmp_path / "drift.atoms"
    path.write_text("2 1/2\n-1 1/2\n")
    law = parse_law("atoms:%s" % path, get_group("z1"))
    plan = ExperimentPlan(
        group="z1",
        law="atoms:%s" % path,
        steps=3 * 10**4,
        reps=80,
        seed=7,
        checkpoint_start=100,
    )
    rep = folner_limit(law, (1,), plan, path_a_reps=4000)
    assert rep.verdict == "not-folner"
    assert rep.agree is True
    assert rep.limit_a == pytest.approx(0.339, abs=0.025)
    assert rep.limit_b == pytest.approx(0.342, abs=0.015)


def test_folner_verdict_free_group():
    f2 = get_group("f2")
    law = parse_law("srw", f2)
    plan = ExperimentPlan(
        group="f2",
        law="srw",
        steps=2 * 10**4,
        reps=40,
        seed=3,
        checkpoint_start=100,
    )
    rep = folner_limit(law, f2.parse("a"), plan, path_a_reps=3000)
    assert rep.verdict == "not-folner"
    assert rep.agree is True
    assert rep.limit_a == pytest.approx(1.0, abs=0.05)
    assert rep.limit_b == pytest.approx(1.0, abs=0.01)


def test_boundary_constant_structure():
    plan = ExperimentPlan(
        group="z2",
        law="srw",
        statistics=("boundary", "vboundary:1,0"),
        steps=2 * 10**4,
        reps=40,
        seed=13,
        checkpoint_start=2000,
    )
    out = boundary_constant(plan)
    assert out["constant"] > 0
    assert out["stderr"] > 0
    assert 0 <= out["drift"] < 1
    assert len(out["series"]) == len(plan.checkpoints())
    assert out["per_direction"]["1,0"] > 0
    with pytest.raises(ValueError, match="recurrent"):
        boundary_constant(
            ExperimentPlan(group="z3", law="srw", steps=100, reps=2)
        )


def test_variance_scan_smoke_and_floor():
    with pytest.raises(ValueError, match="200"):
        variance_scan(ExperimentPlan(group="z2", law="srw", steps=100, reps=100))
    plan = ExperimentPlan(
        group="z2",
        law="srw",
        steps=2 * 10**4,
        reps=200,
        seed=17,
        checkpoint_start=2000,
    )
    out = variance_scan(plan)
    assert set(out) == {"rows", "diagnostic", "cheb_constant", "cheb_eps"}
    assert all(r["variance"] > 0 for r in out["rows"])
    assert out["diagnostic"]["last"] > 0
    assert out["diagnostic"]["median"] > 0


def test_regular_variation_fit_recovers_power_law():
    with pytest.raises(ValueError, match="5"):
        regular_variation_fit([(10, 1.0), (20, 0.5), (40, 0.25), (80, 0.125)])
    with pytest.raises(ValueError, match="positive"):
        regular_variation_fit([(10, 1.0), (20, 0.5), (40, 0.0), (80, 1.0), (160, 1.0)])
    series = [(n, 7.3 * n**-0.4) for n in (10, 30, 100, 300, 1000, 3000)]
    fit = regular_variation_fit(series)
    assert fit.index == pytest.approx(-0.4, abs=1e-10)
    assert fit.intercept == pytest.approx(math.log(7.3), abs=1e-10)
    assert fit.residual == pytest.approx(0.0, abs=1e-10)
    assert fit.n_range == (10, 3000)


@pytest.mark.parametrize("alpha", [1.3, 1.8])
def test_heavy_tail_range_scaling(alpha):
    # E|R(n)| grows like n^(1/alpha), so r_n = |R(n)|/n has index
    # 1/alpha - 1 and the boundary fraction decays at the same rate
    plan = ExperimentPlan(
        group="z1",
        law="zeta:%g" % alpha,
        statistics=("range", "boundary", "vboundary:1"),
        steps=10**5,
        reps=800,
        seed=5,
        checkpoint_start=1000,
    )
    mat, checkpoints, readouts = _experiment_matrix(plan)
    names = [r[2] for r in readouts]
    rng_col = names.index("range")
    bdy_col = names.index("boundary")
    vb_col = names.index("vboundary")
    n_top = checkpoints[-1]
    want = 1.0 / alpha - 1.0

    means = mat.mean(axis=0)
    ratio_series = [
        (n, means[i, rng_col] / n) for i, n in enumerate(checkpoints)
    ]
    fit = regular_variation_fit(ratio_series)
    assert fit.index == pytest.approx(want, abs=0.07)

    frac_series = [
        (n, means[i, bdy_col] / means[i, rng_col])
        for i, n in enumerate(checkpoints)
    ]
    frac_fit = regular_variation_fit(frac_series)
    assert frac_fit.index <= want + 0.1

    growth = mat[:, -1, rng_col] / n_top ** (1.0 / alpha - 0.05)
    assert float(growth.min()) > 0.5

    assert means[-1, vb_col] <= n_top ** (2.0 / alpha - 1.0 + 0.1)


def test_taboo_decay_boundedness():
    z2 = get_group("z2")
    srw2 = parse_law("srw", z2)
    out = taboo_decay_check(srw2, [(0, 0)], (0, 0), (0, 0), [200, 400, 800, 1500])
    assert out["bounded"] is True
    assert out["sup"] > 0
    assert out["values"][-1][0] == 1500
    with pytest.raises(ValueError, match="recurrent"):
        taboo_decay_check(
            parse_law("srw", get_group("z3")), [(0, 0, 0)], (0, 0, 0), (0, 0, 0), [100]
        )
    with pytest.raises(ValueError, match="class"):
        taboo_decay_check(
            parse_law("srw", get_group("z1")), [(0,)], (0,), (0,), [100]
        )
