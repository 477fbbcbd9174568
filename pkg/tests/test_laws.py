import math

import numpy as np
import pytest
from scipy.special import zeta as scipy_zeta

from walkrange.groups import get_group
from walkrange.laws import (
    FiniteSupportLaw,
    LazyZetaLaw,
    SymmetricZetaLaw,
    parse_law,
    zeta_value,
)

Z1 = get_group("z1")
Z2 = get_group("z2")
Z3 = get_group("z3")


def test_zeta_value_against_scipy():
    for s in (1.3, 2.0, 2.5, 3.7):
        assert zeta_value(s) == pytest.approx(float(scipy_zeta(s, 1)), rel=1e-12)
    assert zeta_value(2.5, start=17) == pytest.approx(
        float(scipy_zeta(2.5, 17)), rel=1e-12
    )
    with pytest.raises(ValueError):
        zeta_value(1.0)


def test_finite_support_validation():
    with pytest.raises(ValueError):
        FiniteSupportLaw(Z1, {})
    with pytest.raises(ValueError):
        FiniteSupportLaw(Z1, {(1,): 0.7, (-1,): 0.7})
    with pytest.raises(ValueError):
        FiniteSupportLaw(Z1, {(1,): -0.5, (-1,): 1.5})
    # zero-probability atoms are dropped
    law = FiniteSupportLaw(Z1, {(1,): 0.5, (-1,): 0.5, (7,): 0.0})
    assert (7,) not in law.support


def test_srw_diagnostics_planar():
    law = parse_law("srw", Z2)
    diag = law.diagnose()
    assert diag.mean == (0.0, 0.0)
    np.testing.assert_allclose(diag.covariance, np.eye(2) * 0.5)
    assert diag.aperiodic is True
    assert diag.local_class == "a1"
    assert diag.transient is False


def test_srw_diagnostics_transience_by_dimension():
    assert parse_law("srw", Z3).diagnose().transient is True
    assert parse_law("srw", Z1).diagnose().transient is False
    drift = FiniteSupportLaw(Z1, {(2,): 0.5, (-1,): 0.5})
    d = drift.diagnose()
    assert d.mean == (0.5,)
    assert d.transient is True


def test_even_support_is_periodic():
    law = FiniteSupportLaw(Z1, {(2,): 0.5, (-2,): 0.5})
    assert law.diagnose().aperiodic is False
    assert parse_law("srw", Z1).diagnose().aperiodic is True


def test_char_fn_matches_cosines():
    law = parse_law("srw", Z2)
    ts = np.array([[0.3, -1.2], [0.0, 0.0], [2.0, 0.5]])
    expect = 0.5 * (np.cos(ts[:, 0]) + np.cos(ts[:, 1]))
    np.testing.assert_allclose(law.char_fn(ts).real, expect, atol=1e-14)
    np.testing.assert_allclose(law.char_fn(ts).imag, 0.0, atol=1e-14)


def test_inverse_law_negates_support():
    law = FiniteSupportLaw(Z1, {(2,): 0.25, (-1,): 0.75})
    inv = law.inverse_law()
    pairs = dict(zip(inv.support, inv.probs))
    assert pairs[(-2,)] == pytest.approx(0.25)
    assert pairs[(1,)] == pytest.approx(0.75)
    assert inv.mean()[0] == pytest.approx(-law.mean()[0])


def test_alias_sampler_frequencies():
    law = FiniteSupportLaw(Z1, {(1,): 0.2, (-1,): 0.8})
    rng = np.random.default_rng(7)
    draws = law.draw_increments(rng, 200000)[:, 0]
    assert draws.mean() == pytest.approx(-0.6, abs=0.01)


def test_parse_law_tokens():
    assert parse_law("srw", Z2).token == "srw"
    assert parse_law("cauchy", Z1).alpha == 1.0
    assert parse_law("zeta:1.5", Z1).alpha == 1.5
    lazy = parse_law("lazy:0.25:srw", Z2)
    # finite-support inner laws fold into one exact atom table
    assert isinstance(lazy, FiniteSupportLaw)
    pairs = dict(zip(lazy.support, lazy.probs))
    assert pairs[(0, 0)] == pytest.approx(0.75)
    heavy = parse_law("lazy:0.5:cauchy", Z1)
    assert isinstance(heavy, LazyZetaLaw)
    assert heavy.rho == 0.5
    with pytest.raises(ValueError):
        parse_law("nosuch", Z2)
    with pytest.raises(ValueError):
        parse_law("zeta:1.5", Z2)  # heavy-tail laws live on the line


def test_parse_law_atom_file(tmp_path):
    path = tmp_path / "drift.atoms"
    path.write_text("2 1/2\n-1 1/2\n")
    law = parse_law("atoms:%s" % path, Z1)
    assert set(law.support) == {(2,), (-1,)}
    assert law.mean()[0] == pytest.approx(0.5)


def test_zeta_law_pmf_frequencies():
    law = SymmetricZetaLaw(1.5)
    rng = np.random.default_rng(11)
    draws = law.draw_increments(rng, 200000)[:, 0]
    # P(|X| = 1) = 1 / zeta(2.5)
    p1 = float(np.mean(np.abs(draws) == 1))
    assert p1 == pytest.approx(1.0 / zeta_value(2.5), abs=0.005)
    # symmetry
    assert float(np.mean(draws > 0)) == pytest.approx(0.5, abs=0.005)
    assert np.abs(draws).min() >= 1


def test_zeta_tail_rejection_sampler():
    # a tiny alias table pushes most of the mass through the tail sampler
    law = SymmetricZetaLaw(1.5, table_size=64)
    rng = np.random.default_rng(23)
    draws = law.draw_increments(rng, 10**6)[:, 0]
    p_tail = float(np.mean(np.abs(draws) > 64))
    assert p_tail == pytest.approx(law.tail_prob, rel=0.15)
    # tail magnitudes follow the conditional zeta tail: check the first bin,
    # tolerance = 3 sigma at ~1000 expected tail draws
    tail = np.abs(draws[np.abs(draws) > 64])
    want = zeta_value(2.5, start=65) - zeta_value(2.5, start=130)
    frac = float(np.mean(tail < 130))
    assert frac == pytest.approx(want / zeta_value(2.5, start=65), abs=0.05)


def test_zeta_law_classification():
    assert SymmetricZetaLaw(1.5).diagnose().transient is False
    assert SymmetricZetaLaw(0.8).diagnose().transient is True
    cauchy = SymmetricZetaLaw(1.0)
    diag = cauchy.diagnose()
    assert diag.local_class == "a2"
    assert diag.stable_scale == pytest.approx(3.0 / math.pi, rel=1e-12)
    assert SymmetricZetaLaw(1.5).diagnose().local_class == "none"


def test_zeta_char_fn_against_direct_series():
    law = SymmetricZetaLaw(1.5)
    for t in (0.5, 2.0):
        val, rem = law.one_minus_char_series(t, terms=10**6)
        assert 1.0 - law.char_fn(t) == pytest.approx(val, abs=rem + 1e-9)


def test_lazy_law_holds_in_place():
    law = parse_law("lazy:0.3:srw", Z2)
    rng = np.random.default_rng(3)
    inc = law.draw_increments(rng, 100000)
    held = np.mean(np.all(inc == 0, axis=1))
    assert held == pytest.approx(0.7, abs=0.01)
    # characteristic function mixes in the identity atom
    t = np.array([0.7, -0.2])
    base = parse_law("srw", Z2).char_fn(t)
    assert law.char_fn(t) == pytest.approx(0.7 + 0.3 * base, abs=1e-14)
