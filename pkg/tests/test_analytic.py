"""Quadrature and spectral-sum constants against independently derived
values: the Watson integral for the cubic-lattice Green function,
closed-form potential kernels, step-decomposition identities, and one
direct-simulation cross-check of the avoidance constant."""

import math

import numpy as np
import pytest

from walkrange.analytic import (
    QuadratureSettings,
    escape_from_green,
    gamma_constant,
    green,
    hitting_constants,
    potential_kernel,
    return_tail,
    two_point_taboo,
)
from walkrange.groups import get_group
from walkrange.laws import parse_law

WATSON_G0 = 1.5163860592  # (3/(2pi)^3) int dt / (3 - cos - cos - cos)

Z1 = get_group("z1")
Z2 = get_group("z2")
Z3 = get_group("z3")


@pytest.fixture(scope="module")
def srw1():
    return parse_law("srw", Z1)


@pytest.fixture(scope="module")
def srw2():
    return parse_law("srw", Z2)


@pytest.fixture(scope="module")
def srw3():
    return parse_law("srw", Z3)


@pytest.fixture(scope="module")
def asym1(tmp_path_factory):
    path = tmp_path_factory.mktemp("laws") / "asym.atoms"
    path.write_text("-1 2/3\n2 1/3\n")
    return parse_law("atoms:%s" % path, Z1)


@pytest.fixture(scope="module")
def drift1(tmp_path_factory):
    path = tmp_path_factory.mktemp("laws") / "drift.atoms"
    path.write_text("2 1/2\n-1 1/2\n")
    return parse_law("atoms:%s" % path, Z1)


def test_cubic_green_at_origin(srw3):
    r = green(srw3, (0, 0, 0))
    assert r.value == pytest.approx(WATSON_G0, abs=1e-4)
    assert abs(r.value - WATSON_G0) <= 3 * max(r.error_estimate, 1e-7)


def test_cubic_green_neighbor_identity(srw3):
    # one visit at time zero, then restart from a uniform neighbor
    g0 = green(srw3, (0, 0, 0))
    ge = green(srw3, (1, 0, 0))
    assert ge.value == pytest.approx(WATSON_G0 - 1.0, abs=1e-4)
    assert abs(ge.value - (g0.value - 1.0)) <= g0.error_estimate + ge.error_estimate


def test_cubic_escape_probability(srw3):
    q = escape_from_green(srw3)
    assert q.value == pytest.approx(1.0 / WATSON_G0, abs=1e-5)
    qe = escape_from_green(srw3, (1, 0, 0))
    # 1 - G(e1)/G(0) happens to equal 1/G(0) through the neighbor identity
    assert qe.value == pytest.approx(q.value, abs=1e-5)


@pytest.fixture(scope="module")
def ray1(tmp_path_factory):
    path = tmp_path_factory.mktemp("laws") / "ray.atoms"
    path.write_text("1 1\n")
    return parse_law("atoms:%s" % path, Z1)


def test_deterministic_ray_green(ray1):
    for k in range(-3, 6):
        r = green(ray1, (k,))
        assert r.value == (1.0 if k >= 0 else 0.0)
        assert r.error_estimate == 0.0
    q = escape_from_green(ray1)
    assert q.value == 1.0
    assert escape_from_green(ray1, (1,)).value == 0.0


def test_drifting_green_closed_forms(drift1):
    # steps +2 and -1 with equal weight: mean 1/2, descending ladder is
    # skip-free, so G(-k) decays by the golden ratio and G(0) = 1 + 3/sqrt5
    rho = (math.sqrt(5.0) - 1.0) / 2.0
    g0 = green(drift1, (0,))
    assert g0.value == pytest.approx(1.0 + 3.0 / math.sqrt(5.0), abs=1e-6)
    for k in range(1, 6):
        gk = green(drift1, (-k,))
        assert gk.value == pytest.approx(rho**k * g0.value, abs=1e-6)
    g1 = green(drift1, (1,))
    assert g1.value == pytest.approx(2.0 * rho**2 * g0.value, abs=1e-6)


def test_linear_potential_kernel(srw1):
    assert potential_kernel(srw1, (0,)).value == 0.0
    for j in range(1, 11):
        for sign in (1, -1):
            r = potential_kernel(srw1, (sign * j,))
            assert r.value == pytest.approx(float(j), abs=1e-6)


def test_planar_potential_kernel(srw2):
    assert potential_kernel(srw2, (0, 0)).value == 0.0
    r = potential_kernel(srw2, (1, 0))
    assert r.value == pytest.approx(1.0, abs=1e-4)
    r2 = potential_kernel(srw2, (1, 1))
    assert r2.value == pytest.approx(4.0 / math.pi, abs=1e-6)


def test_asymmetric_kernel_closed_form(asym1):
    # characteristic roots of (2/3)z^{-1} + (1/3)z^2 = 1 are 1, 1, -2, so
    # a(j) = j/2 upward and a(-k) = k/2 + (1 - (-1/2)^k)/3 downward
    for j in range(1, 6):
        up = potential_kernel(asym1, (j,))
        assert up.value == pytest.approx(j / 2.0, abs=1e-5)
        down = potential_kernel(asym1, (-j,))
        want = j / 2.0 + (1.0 - (-0.5) ** j) / 3.0
        assert down.value == pytest.approx(want, abs=1e-5)


def test_kernel_harmonic_recurrence(asym1):
    # mean of a over one step from j returns a(j), plus 1 exactly at 0
    a = {j: potential_kernel(asym1, (j,)).value for j in range(-3, 4)}
    for j in (-1, 0, 1):
        lhs = (2.0 / 3.0) * a[j - 1] + (1.0 / 3.0) * a[j + 2]
        assert lhs == pytest.approx(a[j] + (1.0 if j == 0 else 0.0), abs=1e-5)


def test_two_point_split_symmetric(srw1, srw2):
    for law, j in ((srw1, (1,)), (srw2, (1, 0))):
        near, far = two_point_taboo(law, j)
        assert near.value == pytest.approx(0.5, abs=1e-6)
        assert far.value == pytest.approx(0.5, abs=1e-6)
        assert near.value + far.value == pytest.approx(1.0, abs=0)


def test_two_point_split_asymmetric(asym1):
    near, far = two_point_taboo(asym1, (1,))
    assert near.value == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert far.value == pytest.approx(2.0 / 3.0, abs=1e-6)


def test_planar_escape_constant(srw2):
    g = gamma_constant(srw2)
    assert g.value == pytest.approx(math.pi, abs=0.05)


def test_lazy_escape_constant_halves(srw2):
    # holding with probability 1/2 stretches time by 2, which doubles the
    # expected local time at the origin and therefore halves gamma
    lazy = parse_law("lazy:0.5:srw", Z2)
    g = gamma_constant(lazy)
    assert g.value == pytest.approx(math.pi / 2.0, abs=0.05)


def test_cauchy_escape_constant():
    cau = parse_law("cauchy", Z1)
    g = gamma_constant(cau)
    assert g.value == pytest.approx(3.0, abs=0.01)


def test_avoidance_constants(srw2):
    c, d = hitting_constants(srw2, (1, 0))
    assert c.value == pytest.approx(math.pi / 2.0, abs=0.01)
    assert d.value == pytest.approx(math.pi, abs=0.02)
    # d/c = a(j) + a(-j) = 2 for a symmetric nearest neighbor
    assert d.value == pytest.approx(2.0 * c.value, rel=1e-12)
    assert c.value > 0 and d.value > 0


def test_refinement_moves_less_than_reported_error(srw2, srw3):
    fine = QuadratureSettings(resolution=128, eps=5e-4)
    cases = [
        (srw3, green, (0, 0, 0)),
        (srw3, green, (1, 0, 0)),
        (srw2, potential_kernel, (1, 0)),
        (srw2, potential_kernel, (1, 1)),
    ]
    for law, fn, arg in cases:
        base = fn(law, arg, QuadratureSettings())
        moved = fn(law, arg, fine)
        assert abs(base.value - moved.value) <= base.error_estimate


def test_error_preconditions(srw1, srw2, srw3, drift1, tmp_path):
    with pytest.raises(ValueError, match="recurrent"):
        green(srw2, (0, 0))
    with pytest.raises(ValueError, match="transient"):
        potential_kernel(srw3, (1, 0, 0))
    with pytest.raises(ValueError, match="recurrent"):
        gamma_constant(srw3)
    with pytest.raises(ValueError):
        gamma_constant(srw1)  # no log-class local limit on Z with finite steps
    with pytest.raises(ValueError, match="j != 0"):
        two_point_taboo(srw2, (0, 0))
    even = tmp_path / "even.atoms"
    even.write_text("2 1/2\n-2 1/2\n")
    with pytest.raises(ValueError, match="aperiodic"):
        potential_kernel(parse_law("atoms:%s" % even, Z1), (2,))
    skew = tmp_path / "skew.atoms"
    skew.write_text("1 1/2\n0 1/4\n-1 1/8\n2 1/8\n")
    with pytest.raises(ValueError, match="symmetric"):
        green(parse_law("atoms:%s" % _as3(skew, tmp_path), Z3), (0, 0, 0))


def _as3(path, tmp_path):
    out = tmp_path / "skew3.atoms"
    lines = []
    for line in path.read_text().splitlines():
        v, p = line.split()
        lines.append("%s,0,0 %s" % (v, p))
    out.write_text("\n".join(lines) + "\n")
    return out


def test_return_tails(srw3):
    with pytest.raises(ValueError):
        return_tail(parse_law("srw", Z2), (0, 0), 100)
    t1 = return_tail(srw3, (0, 0, 0), 10**4)
    t2 = return_tail(srw3, (0, 0, 0), 4 * 10**4)
    assert t1.value > 0
    assert t2.value == pytest.approx(t1.value / 2.0, rel=1e-9)
    heavy = parse_law("zeta:0.8", Z1)
    h1 = return_tail(heavy, (0,), 10**4)
    h2 = return_tail(heavy, (0,), 10**6)
    assert 0 < h2.value < h1.value
    # tail sum of n^(-1/alpha) scales as H^(1 - 1/alpha) = H^(-1/4)
    assert h2.value == pytest.approx(h1.value * 100.0**-0.25, rel=1e-9)


def test_avoidance_frequency_matches_constant(srw2):
    # direct simulation of log(n) P(S_k avoids {0, e1}, k <= n); the slow
    # logarithmic approach keeps this a coarse agreement check
    c, _d = hitting_constants(srw2, (1, 0))
    reps, n = 10**4, 10**6
    rng = np.random.default_rng(20260822)
    steps = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)
    pos = np.zeros((reps, 2), dtype=np.int64)
    t = 0
    while t < n and pos.shape[0]:
        width = max(256, int(4e6) // max(pos.shape[0], 1))
        width = min(width, n - t)
        draws = rng.integers(0, 4, size=(pos.shape[0], width))
        traj = pos[:, None, :] + np.cumsum(steps[draws], axis=1)
        hit = ((traj[:, :, 0] == 0) & (traj[:, :, 1] == 0)) | (
            (traj[:, :, 0] == 1) & (traj[:, :, 1] == 0)
        )
        alive = ~hit.any(axis=1)
        pos = traj[alive, -1, :]
        t += width
    estimate = math.log(n) * pos.shape[0] / reps
    assert estimate == pytest.approx(c.value, rel=0.15)
