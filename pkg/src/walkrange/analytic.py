"""Constants of lattice walks by quadrature and spectral sums.

Green function, potential kernel, two-point taboo ratios, the log-escape
constant gamma_d, hitting constants, and escape probabilities derived from
the Green function.  All of it reduces to integrals of 1/(1-phi) over the
torus, handled three ways:

  * graded midpoint quadrature with geometrically halving shells around the
    singularity at t=0, closed by a self-similar continuation for the
    degree -2 pole (transient d=3) or a volume-ratio continuation for
    bounded integrands;
  * for drifting walks on Z the Abel limit adds a point mass: the real part
    of 1/(1-r*phi) concentrates pi/|mu| * delta_0 as r -> 1, so the value
    is the principal-value quadrature plus 1/(2|mu|) (checked exactly on
    the one-atom law, where visits are 0/1);
  * spectral sums on the M-point DFT grid, which compute mod-M quantities
    exactly; the wrap mass is certified by a Hoeffding bound for bounded
    steps and estimated from the stable local limit for heavy tails.
"""

import math
from dataclasses import dataclass

import numpy as np

from .laws import (
    FiniteSupportLaw,
    LazyZetaLaw,
    SymmetricZetaLaw,
    _loop_length_gcd,
    zeta_value,
)


@dataclass
class QuadratureSettings:
    resolution: int = 64  # outer midpoint points per axis
    eps: float = 1e-3  # shells halve until below this scale
    tolerance: float = 5e-7  # stop refining when passes agree this well
    max_refinements: int = 2


@dataclass
class AnalyticResult:
    value: float
    error_estimate: float
    method: str


def _midpoint_axes(lo, hi, m):
    h = (hi - lo) / m
    return lo + h * (np.arange(m) + 0.5), h


def _grid_points(axes_1d, d):
    mesh = np.meshgrid(*([axes_1d] * d), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _graded_pass(f, d, res, eps):
    """Outer midpoint mean plus halving-shell sums, all (2pi)^-d normalized."""
    m_out = max(8, (res // 8) * 8)
    axis, _h = _midpoint_axes(-math.pi, math.pi, m_out)
    pts = _grid_points(axis, d)
    a0 = (m_out // 8) * (2 * math.pi / m_out)  # aligned with cell edges
    keep = np.max(np.abs(pts), axis=1) >= a0
    outer = float(np.sum(f(pts[keep]))) / m_out**d

    m_sh = max(8, ((res // 2) // 4) * 4)
    shells = []
    a = a0
    while a > eps:
        axis, h = _midpoint_axes(-a, a, m_sh)
        pts = _grid_points(axis, d)
        keep = np.max(np.abs(pts), axis=1) >= a / 2
        cell = h**d / (2 * math.pi) ** d
        shells.append(float(np.sum(f(pts[keep]))) * cell)
        a /= 2
    return outer, shells, a


def _torus_mean(f, d, settings, inner):
    """(2pi)^-d integral of f over the torus; inner in {deg-2, continuous}."""
    res, eps = settings.resolution, settings.eps
    vals = []
    for _ in range(max(1, settings.max_refinements)):
        outer, shells, _a = _graded_pass(f, d, res, eps)
        total = outer + math.fsum(shells)
        if inner == "deg-2" and len(shells) >= 2 and shells[-2] != 0.0:
            # remaining cube scales self-similarly for a degree -2 pole
            r = shells[-1] / shells[-2]
            r = min(max(r, 0.0), 0.95)
            total += shells[-1] * r / (1.0 - r)
        elif shells:
            total += shells[-1] / (2**d - 1)  # volume-ratio continuation
        vals.append(total)
        if len(vals) >= 2 and abs(vals[-1] - vals[-2]) < settings.tolerance:
            break
        res *= 2
        eps /= 2
    if len(vals) >= 2:
        # midpoint error is O(h^2); Richardson on the last two passes
        value = vals[-1] + (vals[-1] - vals[-2]) / 3.0
        err = abs(vals[-1] - vals[-2])
    else:
        value, err = vals[0], abs(vals[0]) * 1e-2
    return value, max(err, 1e-15)


def _one_minus_phi_fn(law):
    """Cancellation-safe 1 - phi(t) for finite-support lattice laws."""
    atoms = law._atoms_arr.astype(np.float64)
    probs = law.probs

    def one_minus(pts):
        phase = pts @ atoms.T
        re = (2.0 * np.sin(phase / 2.0) ** 2) @ probs
        im = -(np.sin(phase) @ probs)
        return re + 1j * im

    return one_minus


def _require_lattice_finite(law, what):
    if not isinstance(law, FiniteSupportLaw) or not law.is_lattice:
        raise ValueError("%s requires a finite-support lattice law" % what)


def green(law, g, settings=None):
    """G(g) = sum_n P(S_n = g), for transient lattice laws.

    Supported regimes: symmetric laws on Z^3, and drifting laws on Z (where
    the principal value picks up the 1/(2|mu|) point mass).  One-atom laws
    are closed-form.  Recurrent laws raise.
    """
    settings = settings or QuadratureSettings()
    diag = law.diagnose()
    if not diag.transient:
        raise ValueError("Green function diverges for recurrent laws")
    _require_lattice_finite(law, "green")
    d = law.group.dim
    g = tuple(int(c) for c in g)
    if len(g) != d:
        raise ValueError("element dimension mismatch")

    if len(law.support) == 1:
        atom = law.support[0]
        value = 0.0
        if all(c == 0 for c in atom):
            value = 1.0 if all(c == 0 for c in g) else 0.0
        else:
            # S_n = n * atom; one visit iff g is a nonnegative multiple
            ks = [g[i] // atom[i] for i in range(d) if atom[i] != 0]
            k = ks[0]
            ok = k >= 0 and all(g[i] == k * atom[i] for i in range(d))
            value = 1.0 if ok else 0.0
        return AnalyticResult(value, 0.0, "closed-form")

    one_minus = _one_minus_phi_fn(law)
    gv = np.array(g, dtype=np.float64)

    if d == 1:
        mu = law.mean()[0]
        if mu == 0.0:
            raise ValueError("Green function diverges for recurrent laws")

        def f(pts):
            om = one_minus(pts)
            num = np.exp(-1j * (pts @ gv))
            return np.real(num * np.conj(om)) / np.abs(om) ** 2

        val, err = _torus_mean(f, 1, settings, inner="continuous")
        return AnalyticResult(val + 0.5 / abs(mu), err, "quadrature")

    if d == 3:
        im_probe = np.linspace(0.1, math.pi, 7)
        probe = np.stack([im_probe, im_probe / 2, im_probe / 3], axis=1)
        if np.max(np.abs(one_minus(probe).imag)) > 1e-12:
            raise ValueError(
                "unsupported: Green quadrature on Z^3 needs a symmetric law"
            )

        def f(pts):
            om = np.real(one_minus(pts))
            return np.cos(pts @ gv) / om

        val, err = _torus_mean(f, 3, settings, inner="deg-2")
        return AnalyticResult(val, err, "quadrature")

    raise ValueError("unsupported group dimension for the Green function")


def _zeta_spectrum(law, m=1 << 24):
    """phi on the M-point DFT grid (real, symmetric law), cached on the law.

    The pmf is folded mod M exactly: the total mass of each residue class is
    a Hurwitz zeta value, so the grid law is precisely X mod M and the only
    systematic left is the physical aliasing of walks that reach +-M.
    """
    cached = getattr(law, "_spectrum_cache", None)
    if cached is not None and cached[0] == m:
        return cached[1], cached[2]
    from scipy.special import zeta as hurwitz

    s = law.s
    r = np.arange(1, m, dtype=np.float64) / m
    side = hurwitz(s, r) * m**-s  # sum over k ≡ r (mod M), k >= 1
    pmf = np.empty(m)
    pmf[1:] = (side + side[::-1]) / (2.0 * law.zeta_s)
    pmf[0] = m**-s * law.zeta_s**-1 * zeta_value(s)  # k ≡ 0: both signs
    phi = np.fft.rfft(pmf).real
    law._spectrum_cache = (m, phi, 0.0)
    return phi, 0.0


def _dft_mean_real(values, m):
    """Mean over the full DFT grid from the half-spectrum values."""
    inner = values[1:-1].sum() * 2.0 + values[0] + values[-1]
    return float(inner) / m


def potential_kernel(law, j, settings=None):
    """a(j) = (2pi)^-d int Re[(1 - e^{i<j,t>}) / (1 - phi)] dt, recurrent laws."""
    diag = law.diagnose()
    if diag.transient:
        raise ValueError("law is transient; use green instead")
    if not diag.aperiodic:
        raise ValueError("potential kernel requires an aperiodic law")
    if isinstance(law, SymmetricZetaLaw):
        jv = int(j[0]) if not np.isscalar(j) else int(j)
        if jv == 0:
            return AnalyticResult(0.0, 0.0, "closed-form")
        m = 1 << 24
        phi, dropped = _zeta_spectrum(law, m)
        t = np.arange(phi.shape[0]) * (2.0 * math.pi / m)
        om = 1.0 - phi
        om[0] = 1.0  # t = 0: integrand limit is 0
        del dropped  # the folded grid is exact; only mod-M images remain
        vals = (1.0 - np.cos(jv * t)) / om
        vals[0] = 0.0
        value = _dft_mean_real(vals, m)
        err = abs(value) * (1e-6 + abs(jv) / m)
        return AnalyticResult(value, err, "series")

    _require_lattice_finite(law, "potential_kernel")
    d = law.group.dim
    if settings is None:
        # one-dimensional grids are cheap; spend enough to pin integer-valued
        # kernels down to the sixth decimal
        settings = (
            QuadratureSettings(resolution=512, max_refinements=3)
            if d == 1
            else QuadratureSettings()
        )
    j = tuple(int(c) for c in j)
    if all(c == 0 for c in j):
        return AnalyticResult(0.0, 0.0, "closed-form")
    one_minus = _one_minus_phi_fn(law)
    jv = np.array(j, dtype=np.float64)

    def f(pts):
        om = one_minus(pts)
        num = 1.0 - np.exp(1j * (pts @ jv))
        return np.real(num * np.conj(om)) / np.abs(om) ** 2

    val, err = _torus_mean(f, d, settings, inner="continuous")
    return AnalyticResult(val, err, "quadrature")


def two_point_taboo(law, j, settings=None):
    """(gbar_{0,j}(j), gbar_{0,j}(0)) = (a(j), a(-j)) / (a(j) + a(-j))."""
    j = _as_tuple(law, j)
    if all(c == 0 for c in j):
        raise ValueError("two-point taboo needs j != 0")
    neg = tuple(-c for c in j)
    aj = potential_kernel(law, j, settings)
    anj = potential_kernel(law, neg, settings)
    tot = aj.value + anj.value
    if tot <= 0:
        raise ValueError("potential kernels did not come out positive")
    err = (aj.error_estimate + anj.error_estimate) / tot
    return (
        AnalyticResult(aj.value / tot, err, aj.method),
        AnalyticResult(anj.value / tot, err, aj.method),
    )


def _as_tuple(law, j):
    if np.isscalar(j):
        return (int(j),)
    return tuple(int(c) for c in j)


def _hoeffding_wrap(m_grid, n, a, d):
    """Bound on P(any |S_n,i| >= M/2), steps bounded by a per axis."""
    if a == 0:
        return 0.0
    expo = -((m_grid / 2.0) ** 2) / (2.0 * n * a * a)
    return 4.0 * d * math.exp(expo)


def gamma_constant(law, settings=None):
    """gamma with P(no return by n) ~ gamma / log n, from spectral sums.

    Partial sums U(n) = sum_{j<=n} P(S_j = 0) are computed exactly mod M on
    a DFT grid (periodized self-convolution evaluated in the Fourier
    domain) and fitted against log n on a dyadic grid; gamma = 1 / slope.
    """
    del settings  # grid sizes are derived from the law, not the quadrature
    diag = law.diagnose()
    if diag.transient:
        raise ValueError("gamma is defined for recurrent laws only")
    if diag.local_class not in ("a1", "a2"):
        raise ValueError("gamma requires a finite-variance planar law or a "
                         "symmetric Cauchy-type law on Z")

    if diag.local_class == "a2":
        zl = law
        if isinstance(law, LazyZetaLaw):
            raise ValueError("gamma for lazy heavy-tailed laws is unsupported")
        m = 1 << 24
        phi, dropped = _zeta_spectrum(zl, m)
        lam = zl.stable_scale()
        n_max_pow = 18
        u_sums, ns = _dyadic_partial_sums_real(phi, m, n_max_pow, first_pow=10)
        wrap_rel = (lam * ns[-1] / m) ** 2 * (math.pi**2 / 3.0)
        gamma, fit_err = _fit_gamma(u_sums, ns)
        err = abs(gamma) * (wrap_rel + dropped * 1e3) + 3.0 * fit_err
        return AnalyticResult(gamma, err, "series")

    _require_lattice_finite(law, "gamma_constant")
    d = law.group.dim
    n_max_pow = 14
    n_max = 1 << n_max_pow
    a = int(np.abs(law._atoms_arr).max())
    m_grid = 256
    while _hoeffding_wrap(m_grid, n_max, a, d) > 1e-9:
        m_grid *= 2
        if m_grid**d > 3 * 10**7:
            raise ValueError(
                "abort: step spread too large for a certified spectral window"
            )
    t_axis = np.arange(m_grid) * (2.0 * math.pi / m_grid)
    pts = _grid_points(t_axis, d)
    phi = law.char_fn(pts)
    u_sums, ns = _dyadic_partial_sums_complex(phi, m_grid**d, n_max_pow)
    gamma, fit_err = _fit_gamma(u_sums, ns)
    return AnalyticResult(gamma, fit_err + abs(gamma) * 1e-9, "series")


def _dyadic_partial_sums_real(phi, m, n_max_pow, first_pow=6):
    """U(n) = mean[(1 - phi^{n+1}) / (1 - phi)] on the grid, n dyadic."""
    om = 1.0 - phi
    zero = np.abs(om) < 1e-12
    zero[0] = True  # DC bin: the limit is n + 1 regardless of rounding
    om[zero] = 1.0
    sq = phi.copy()
    sums, ns = [], []
    for k in range(1, n_max_pow + 1):
        sq *= sq  # phi^(2^k) after k squarings
        n = 1 << k
        if k >= first_pow:
            pw = sq * phi
            vals = (1.0 - pw) / om
            vals[zero] = n + 1
            sums.append(_dft_mean_real(vals, m))
            ns.append(n)
    return np.array(sums), np.array(ns)


def _dyadic_partial_sums_complex(phi, n_points, n_max_pow, first_pow=6):
    om = 1.0 - phi
    zero = np.abs(om) < 1e-14
    om[zero] = 1.0
    sq = phi.copy()
    sums, ns = [], []
    for k in range(1, n_max_pow + 1):
        sq *= sq
        n = 1 << k
        if k >= first_pow:
            pw = sq * phi
            vals = (1.0 - pw) / om
            vals[zero] = n + 1
            sums.append(float(np.mean(vals.real)))
            ns.append(n)
    return np.array(sums), np.array(ns)


def _fit_gamma(u_sums, ns):
    """gamma = 1/slope of U(n) against log n, with a stability spread."""
    logs = np.log(ns.astype(np.float64))

    def slope(k):
        x, y = logs[-k:], u_sums[-k:]
        return np.polyfit(x, y, 1)[0]

    c_full = slope(min(6, len(ns)))
    c_late = slope(min(4, len(ns)))
    gamma = 1.0 / c_late
    err = abs(1.0 / c_late - 1.0 / c_full)
    return gamma, err


def hitting_constants(law, j, settings=None):
    """(c_j, d_j): avoidance constants of {0, j} and {j}.

    P(S_k != j, k <= n) ~ d_j / log n with d_j = gamma * a(-j);
    P(S_k notin {0, j}, k <= n) ~ c_j / log n with
    c_j = gamma * a(-j) / (a(j) + a(-j)).
    """
    j = _as_tuple(law, j)
    if all(c == 0 for c in j):
        raise ValueError("hitting constants need j != 0")
    neg = tuple(-c for c in j)
    gam = gamma_constant(law)
    aj = potential_kernel(law, j, settings)
    anj = potential_kernel(law, neg, settings)
    tot = aj.value + anj.value
    if aj.value <= 0 or anj.value <= 0:
        raise ValueError("potential kernels did not come out positive")
    c_val = gam.value * anj.value / tot
    d_val = gam.value * anj.value
    rel = (
        gam.error_estimate / abs(gam.value)
        + (aj.error_estimate + anj.error_estimate) / tot
    )
    return (
        AnalyticResult(c_val, abs(c_val) * rel, "series"),
        AnalyticResult(d_val, abs(d_val) * rel, "series"),
    )


def escape_from_green(law, g=None, settings=None):
    """q (no return) or q(g) (never visit g), from Green-function values."""
    gid = green(law, (0,) * law.group.dim, settings)
    q = 1.0 / gid.value
    q_err = gid.error_estimate / gid.value**2
    if g is None or all(c == 0 for c in _as_tuple(law, g)):
        return AnalyticResult(q, q_err, gid.method)
    gg = green(law, g, settings)
    val = 1.0 - gg.value / gid.value
    err = (
        gg.error_estimate / gid.value
        + gg.value * gid.error_estimate / gid.value**2
    )
    return AnalyticResult(val, err, gg.method)


def return_tail(law, g, horizon):
    """Heuristic bound on sum_{n > H} P(S_n = g) from the local limit.

    For finite-variance lattice laws P(S_n = g) ~ period * (2 pi n)^{-d/2}
    det(Sigma)^{-1/2}; the tail sum integrates to the reported value.  For
    transient heavy-tailed laws on Z the alpha-stable local limit is used.
    Reported as an estimate, not a certified bound.
    """
    diag = law.diagnose()
    if not diag.transient:
        raise ValueError("return tails apply to transient laws")
    h = float(horizon)
    if isinstance(law, SymmetricZetaLaw):
        a = law.alpha
        lam = law.stable_scale()
        g0 = math.gamma(1.0 + 1.0 / a) / math.pi  # stable density at 0
        scale = g0 / (lam ** (1.0 / a))
        # sum_{n>H} scale * n^{-1/a} ~ scale * H^{1 - 1/a} / (1/a - 1)
        val = scale * h ** (1.0 - 1.0 / a) / (1.0 / a - 1.0)
        return AnalyticResult(val, val, "series")
    _require_lattice_finite(law, "return_tail")
    d = law.group.dim
    if d < 3:
        mu = law.mean()
        drift = math.sqrt(sum(c * c for c in mu))
        if drift == 0:
            raise ValueError("return tails apply to transient laws")
        # ballistic concentration: returns after H are exponentially rare
        return AnalyticResult(0.0, 0.0, "closed-form")
    diagn = law.diagnose()
    cov = np.array(diagn.covariance, dtype=np.float64)
    det = float(np.linalg.det(cov))
    period, found = _loop_length_gcd(
        [tuple(int(c) for c in row) for row in law._atoms_arr], d
    )
    if not found or period < 1:
        period = 1
    c0 = period * (2.0 * math.pi) ** (-d / 2.0) / math.sqrt(det)
    val = c0 * 2.0 * h ** (-0.5)
    return AnalyticResult(val, val * 0.5, "series")
