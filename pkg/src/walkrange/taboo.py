"""Free and taboo transition sequences of recurrent lattice walks.

Two routes to Q_O^n(x, y), the probability of walking from x to y in n
steps while avoiding the set O at interior times:

  * the killed forward recursion: convolve the mass profile with the step
    law and zero out O after recording each arrival (exact, cost grows
    like n * box area, so it is capped);
  * first-passage renewal inversion on top of free-kernel sequences
    P^n(x -> y), which resums the same convolution algebraically and
    reaches much larger n.

Free sequences for symmetric laws come from a binned spectral measure:
characteristic-function values on a DFT grid are folded into sign-paired
magnitude bins (so periodic laws keep exact parity cancellation), and the
bin powers are advanced one step at a time.
"""

import math

import numpy as np

from .laws import FiniteSupportLaw, SymmetricZetaLaw

DIRECT_CAP = 3000  # killed-recursion horizon before renewal takes over
GRID_TAIL = 1e-9  # certified wrap mass for the spectral grid


def _is_symmetric(law):
    table = {tuple(a): p for a, p in zip(law.support, law.probs)}
    for a, p in table.items():
        neg = tuple(-c for c in a)
        if abs(table.get(neg, 0.0) - p) > 1e-12:
            return False
    return True


class SpectralMeasure:
    """Sign-paired binned spectrum of a symmetric lattice law.

    Holds magnitude-bin representatives u_b = 1 - |phi| and, per requested
    displacement, the bin masses of the positive-phi and negative-phi grid
    points.  P^n(0 -> y) = sum_b (wp_b + (-1)^n wm_b) (1 - u_b)^n.
    """

    def __init__(self, u_reps, wp, wm, displacements):
        self.u_reps = u_reps
        self.wp = wp  # (bins, K)
        self.wm = wm
        self.index = {tuple(dv): k for k, dv in enumerate(displacements)}

    def sequences(self, n_max):
        """(K, n_max + 1) array of P^n(0 -> y) for the stored displacements."""
        v = 1.0 - self.u_reps
        out = np.empty((self.wp.shape[1], n_max + 1))
        out[:, 0] = self.wp.sum(axis=0) + self.wm.sum(axis=0)
        pw = np.ones_like(v)
        sign = 1.0
        for n in range(1, n_max + 1):
            pw *= v
            sign = -sign
            out[:, n] = pw @ self.wp + sign * (pw @ self.wm)
        return out


def _bin_chunks(chunks, displacements, bins, u_floor):
    k = len(displacements)
    disp = np.array(displacements, dtype=np.float64)
    edges = np.concatenate(
        [[0.0], np.geomspace(u_floor, 2.0000001, bins)]
    )
    nb = edges.shape[0] - 1
    wp = np.zeros((nb, k))
    wm = np.zeros((nb, k))
    u_sum = np.zeros(nb)
    u_cnt = np.zeros(nb)
    for phi, tpts, w in chunks:
        u = 1.0 - np.abs(phi)
        np.clip(u, 0.0, 2.0, out=u)
        idx = np.searchsorted(edges, u, side="right") - 1
        np.clip(idx, 0, nb - 1, out=idx)
        neg = phi < 0
        phases = tpts @ disp.T  # (chunk, K)
        cosv = np.cos(phases) * w[:, None]
        for kk in range(k):
            wp[:, kk] += np.bincount(idx[~neg], cosv[~neg, kk], minlength=nb)
            wm[:, kk] += np.bincount(idx[neg], cosv[neg, kk], minlength=nb)
        u_cnt += np.bincount(idx, w, minlength=nb)
        u_sum += np.bincount(idx, u * w, minlength=nb)
    keep = u_cnt > 0
    reps = np.where(keep, u_sum / np.maximum(u_cnt, 1e-300), 0.0)
    return SpectralMeasure(reps[keep], wp[keep], wm[keep], displacements)


def _lattice_grid_m(n_max, a, d):
    """Even grid size with wrap probability below GRID_TAIL."""
    need = math.log(4.0 * d / GRID_TAIL)
    m = 2.0 * math.sqrt(2.0 * n_max * a * a * need)
    return int(2 * math.ceil(m / 2.0)) + 2


def spectral_measure(law, displacements, n_max, bins=20000):
    """Binned spectrum serving P^n(0 -> y) for every listed displacement."""
    if isinstance(law, SymmetricZetaLaw):
        from .analytic import _zeta_spectrum

        m = 1 << 24
        phi, _ = _zeta_spectrum(law, m)
        t = np.arange(phi.shape[0], dtype=np.float64) * (2.0 * math.pi / m)
        w = np.full(phi.shape[0], 2.0 / m)
        w[0] = 1.0 / m
        w[-1] = 1.0 / m
        disp = [(int(dv[0]),) for dv in displacements]
        u_floor = min(1e-10, 0.01 / max(n_max, 1))
        chunk = 1 << 22
        gen = (
            (phi[i : i + chunk], t[i : i + chunk, None], w[i : i + chunk])
            for i in range(0, phi.shape[0], chunk)
        )
        return _bin_chunks(gen, disp, bins, u_floor)

    if not isinstance(law, FiniteSupportLaw) or not law.is_lattice:
        raise ValueError("spectral sequences need a lattice law")
    if not _is_symmetric(law):
        raise ValueError(
            "spectral sequences are supported for symmetric laws; "
            "use the direct recursion for asymmetric ones"
        )
    d = law.group.dim
    a = int(np.abs(law._atoms_arr).max())
    m = _lattice_grid_m(n_max, a, d)
    atoms = law._atoms_arr.astype(np.float64)
    probs = law.probs
    axis = np.arange(m, dtype=np.float64) * (2.0 * math.pi / m)
    u_floor = min(1e-10, 0.001 / max(n_max, 1))
    disp = [tuple(int(c) for c in dv) for dv in displacements]

    def gen():
        w_row = 1.0 / m**d
        if d == 1:
            pts = axis[:, None]
            phi = np.cos(pts @ atoms.T) @ probs
            yield phi, pts, np.full(m, w_row)
            return
        rows_per = max(1, int(2e6) // m ** (d - 1))
        tail_shape = [m] * (d - 1)
        mesh = np.meshgrid(*([axis] * (d - 1)), indexing="ij")
        tail = np.stack([g.ravel() for g in mesh], axis=1)
        for lo in range(0, m, rows_per):
            hi = min(m, lo + rows_per)
            first = np.repeat(axis[lo:hi], tail.shape[0])
            rest = np.tile(tail, (hi - lo, 1))
            pts = np.concatenate([first[:, None], rest], axis=1)
            phi = np.cos(pts @ atoms.T) @ probs
            yield phi, pts, np.full(pts.shape[0], w_row)

    return _bin_chunks(gen(), disp, bins, u_floor)


def killed_sequences(law, taboo_set, x, y, n_max):
    """Q_O^n(x, y) for n = 1..n_max by the killed forward recursion."""
    if not isinstance(law, FiniteSupportLaw) or not law.is_lattice:
        raise ValueError("the killed recursion needs a lattice law")
    d = law.group.dim
    if d > 2:
        raise ValueError("the killed recursion is implemented for d <= 2")
    x = tuple(int(c) for c in x)
    y = tuple(int(c) for c in y)
    taboo = [tuple(int(c) for c in o) for o in taboo_set]
    a = int(np.abs(law._atoms_arr).max())
    far = max(
        [0]
        + [abs(c) for c in x]
        + [abs(c) for c in y]
        + [abs(c) for o in taboo for c in o]
    )
    hw = int(math.ceil(6.0 * a * math.sqrt(n_max))) + far + a + 2
    side = 2 * hw + 1
    shape = (side,) * d
    q = np.zeros(shape)
    # starting inside O is fine: the taboo binds at interior times only
    q[tuple(c + hw for c in x)] = 1.0
    out = np.empty(n_max + 1)
    out[0] = 1.0 if x == y else 0.0
    atoms = [tuple(int(c) for c in row) for row in law._atoms_arr]
    probs = law.probs
    kill_idx = [tuple(c + hw for c in o) for o in taboo]
    y_idx = tuple(c + hw for c in y)
    for n in range(1, n_max + 1):
        nxt = np.zeros(shape)
        for at, p in zip(atoms, probs):
            src = []
            dst = []
            for c in at:
                lo_s = max(0, -c)
                hi_s = side - max(0, c)
                src.append(slice(lo_s, hi_s))
                dst.append(slice(lo_s + c, hi_s + c))
            nxt[tuple(dst)] += p * q[tuple(src)]
        out[n] = nxt[y_idx]
        for ki in kill_idx:
            nxt[ki] = 0.0
        q = nxt
    return out


def _renewal_invert(pxo, poo, pxy, poy):
    """First-passage resummation of the killed convolution.

    pxo: (m, n+1) free sequences x -> o_i; poo: (m, m, n+1) o_i -> o_j;
    pxy: (n+1,) x -> y; poy: (m, n+1) o_i -> y.  Returns Q^n(x, y).
    """
    m, n1 = pxo.shape
    n_max = n1 - 1
    poo_rev = np.ascontiguousarray(poo[:, :, ::-1])  # time n_max - k at k
    f = np.zeros((m, n1))  # first arrival in O at site o_i, time j
    for j in range(1, n1):
        acc = pxo[:, j].copy()
        if j > 1:
            # arrivals at time i < j, free continuation o' -> o in j - i steps
            acc -= np.einsum(
                "ai,abi->b", f[:, 1:j], poo_rev[:, :, n_max - j + 1 : n_max]
            )
        f[:, j] = acc
    q = pxy.copy()
    for j in range(1, n1):
        # remove every path that touched O (first touch at j, any site)
        q[j + 1 :] -= f[:, j] @ poy[:, 1 : n_max - j + 1]
    return q


def taboo_sequence(law, taboo_set, x, y, n_max, direct_cap=DIRECT_CAP):
    """Q_O^n(x, y) for n = 0..n_max, switching routes at the cap."""
    if n_max <= direct_cap:
        return killed_sequences(law, taboo_set, x, y, n_max)
    taboo = [tuple(int(c) for c in o) for o in taboo_set]
    x = tuple(int(c) for c in x)
    y = tuple(int(c) for c in y)
    disp = []

    def want(dv):
        dv = tuple(int(c) for c in dv)
        if dv not in disp:
            disp.append(dv)
        return dv

    for o in taboo:
        want(np.subtract(o, x))
        want(np.subtract(y, o))
        for o2 in taboo:
            want(np.subtract(o2, o))
    want(np.subtract(y, x))
    meas = spectral_measure(law, disp, n_max)
    seqs = meas.sequences(n_max)

    def seq(dv):
        return seqs[meas.index[tuple(int(c) for c in dv)]]

    m = len(taboo)
    pxo = np.stack([seq(np.subtract(o, x)) for o in taboo])
    poy = np.stack([seq(np.subtract(y, o)) for o in taboo])
    poo = np.empty((m, m, n_max + 1))
    for i, oi in enumerate(taboo):
        for j, oj in enumerate(taboo):
            poo[i, j] = seq(np.subtract(oj, oi))
    pxy = seq(np.subtract(y, x))
    return _renewal_invert(pxo, poo, pxy, poy)
