"""Step distributions driving the walks.

Three families: finite-support laws on any of the supported groups (uniform
on generators as the common special case), and the symmetric power-tail laws
on Z with P(X = +-k) proportional to k^(-(1+alpha)), alpha in (0, 2].  The
alpha = 1 member is the lattice Cauchy law.

Increment generation is vectorized numpy and is the single authority for
randomness: both the compiled accumulator and the pure-Python one consume the
arrays produced here, so backend choice can never change results.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .groups import FreeGroup2, LatticeGroup, get_group

ZETA_TABLE_SIZE = 10**6
LOOP_HORIZON = 64
LOOP_WINDOW = 8


@dataclass
class LawDiagnostics:
    """Summary of what the analytic machinery may assume about a law."""

    mean: tuple | None = None
    covariance: np.ndarray | None = None  # E[xi xi^T]
    covariance_half: np.ndarray | None = None  # E[xi xi^T] / 2, quadratic-form normalization
    variance_finite: bool | None = None
    aperiodic: bool | None = None
    strongly_aperiodic: bool | None = None
    aperiodicity_certificate: str = "exact"
    local_class: str = "none"  # "a1" | "a2" | "none"
    stable_scale: float | None = None  # gamma with 1 - phi(t) ~ gamma*|t| when local_class == "a2"
    alpha: float | None = None
    transient: bool | None = None
    transience_provenance: str = "analytic"


def zeta_value(s, start=1):
    """Hurwitz-style sum_{k >= start} k^(-s) by direct summation plus an
    Euler-Maclaurin tail, accurate to ~1e-14 relative."""
    if s <= 1:
        raise ValueError("series diverges for s <= 1")
    cut = max(int(start), 64)
    k = np.arange(start, cut + 1, dtype=np.float64)
    head = math.fsum((k ** -s)[::-1])
    K = float(cut)
    tail = (
        K ** (1 - s) / (s - 1)
        - 0.5 * K**-s
        + s * K ** (-s - 1) / 12.0
        - s * (s + 1) * (s + 2) * K ** (-s - 3) / 720.0
        + s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * K ** (-s - 5) / 30240.0
    )
    return head + tail


def _hnf_index(vectors, dim):
    """Index of the sublattice of Z^dim generated by integer vectors.

    Returns 1 when the vectors generate the full lattice, 0 when they span a
    lower-dimensional sublattice, and the index otherwise.  Plain integer
    column reduction; exact.
    """
    rows = [list(v) for v in vectors if any(v)]
    if not rows:
        return 0
    basis = []  # triangular, basis[i] has pivot at position i
    for vec in rows:
        v = list(vec)
        for i in range(dim):
            if v[i] == 0:
                continue
            if len(basis) <= i or basis[i] is None:
                while len(basis) <= i:
                    basis.append(None)
                basis[i] = v
                break
            b = basis[i]
            while v[i] != 0:
                q = b[i] // v[i]
                b = [x - q * y for x, y in zip(b, v)]
                basis[i], v = v, b
                b = basis[i]
            # v[i] == 0 now, continue to next coordinate
        # fully reduced vectors vanish; nothing to do
    pivots = [b for b in basis if b is not None]
    if len(pivots) < dim:
        return 0
    det = 1
    for i, b in enumerate(pivots):
        det *= abs(b[i])
    return det


def _loop_length_gcd(atoms, dim):
    """gcd of lengths of short identity-return loops of the support.

    Searches products of up to LOOP_HORIZON atoms whose sum is zero, pruning
    partial sums outside a small window.  Returns (gcd, found_any).
    """
    zero = (0,) * dim
    reachable = {zero}
    g = 0
    for n in range(1, LOOP_HORIZON + 1):
        nxt = set()
        for s in reachable:
            for a in atoms:
                t = tuple(x + y for x, y in zip(s, a))
                if all(abs(c) <= LOOP_WINDOW for c in t):
                    nxt.add(t)
        reachable = nxt
        if zero in reachable:
            g = math.gcd(g, n)
            if g == 1:
                return 1, True
    return g, g != 0


class Law:
    """Base interface for step distributions."""

    token = None

    def __init__(self, group):
        self.group = group

    def sample_elements(self, gen, m):
        """Draw m group elements (Python objects) from the law."""
        raise NotImplementedError

    def sample(self, gen):
        return self.sample_elements(gen, 1)[0]

    def draw_increments(self, gen, m):
        """Vectorized draw in kernel form: int64 (m, d) array for lattice
        laws, int32 atom-index array for free-group laws."""
        raise NotImplementedError

    def char_fn(self, t):
        raise ValueError("characteristic function requires a lattice law")

    def inverse_law(self):
        raise NotImplementedError

    def diagnose(self):
        raise NotImplementedError

    def kernel_pack(self):
        """Arrays and switches consumed by the accumulator backends."""
        raise NotImplementedError

    @property
    def is_lattice(self):
        return isinstance(self.group, LatticeGroup)


def _build_alias(probs):
    """Walker alias table with a deterministic construction order."""
    K = len(probs)
    scaled = np.asarray(probs, dtype=np.float64) * K
    cut = np.ones(K)
    alias = np.arange(K, dtype=np.int32)
    small = [i for i in range(K) if scaled[i] < 1.0]
    large = [i for i in range(K) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        cut[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] - (1.0 - scaled[s])
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    for i in small + large:
        cut[i] = 1.0
        alias[i] = i
    return cut, alias


class FiniteSupportLaw(Law):
    """Law with finitely many atoms, on any supported group."""

    def __init__(self, group, atoms, token=None):
        super().__init__(group)
        if not atoms:
            raise ValueError("empty support")
        items = sorted(atoms.items())
        probs = np.array([p for _, p in items], dtype=np.float64)
        if np.any(probs < 0):
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities sum to %.12g, not 1" % probs.sum())
        keep = probs > 0
        self.support = [e for (e, _), k in zip(items, keep) if k]
        self.probs = probs[keep]
        self.probs = self.probs / self.probs.sum()
        self.token = token or "table"
        self.uniform = bool(np.all(self.probs == self.probs[0]))
        if not self.uniform:
            self._cut, self._alias = _build_alias(self.probs)
        if self.is_lattice:
            self._atoms_arr = np.array(self.support, dtype=np.int64).reshape(
                len(self.support), group.dim
            )

    @classmethod
    def simple_random_walk(cls, group):
        gens = group.generators()
        return cls(group, {g: 1.0 / len(gens) for g in gens}, token="srw")

    def _draw_indices(self, gen, m):
        K = len(self.support)
        if self.uniform:
            return gen.integers(0, K, size=m)
        u = gen.random(m) * K
        idx = u.astype(np.int64)
        np.clip(idx, 0, K - 1, out=idx)
        frac = u - idx
        return np.where(frac < self._cut[idx], idx, self._alias[idx])

    def sample_elements(self, gen, m):
        idx = self._draw_indices(gen, m)
        return [self.support[i] for i in idx]

    def draw_increments(self, gen, m):
        idx = self._draw_indices(gen, m)
        if self.is_lattice:
            return self._atoms_arr[idx]
        return idx.astype(np.int32)

    def char_fn(self, t):
        if not self.is_lattice:
            raise ValueError("characteristic function requires a lattice law")
        t = np.asarray(t, dtype=np.float64)
        d = self.group.dim
        if d == 1:
            phase = t[..., None] * self._atoms_arr[:, 0]
        else:
            phase = np.tensordot(t, self._atoms_arr.T, axes=([-1], [0]))
        return np.exp(1j * phase) @ self.probs

    def inverse_law(self):
        inv = {
            self.group.inverse(e): p for e, p in zip(self.support, self.probs)
        }
        return FiniteSupportLaw(self.group, inv, token=self.token)

    def mean(self):
        if not self.is_lattice:
            return None
        return tuple(self.probs @ self._atoms_arr)

    def diagnose(self):
        diag = LawDiagnostics()
        if not self.is_lattice:
            diag.transient, diag.transience_provenance = self._nonlattice_transience()
            return diag
        d = self.group.dim
        mu = self.probs @ self._atoms_arr
        cov = np.einsum("k,ki,kj->ij", self.probs, self._atoms_arr, self._atoms_arr)
        diag.mean = tuple(mu)
        diag.covariance = cov
        diag.covariance_half = cov / 2.0
        diag.variance_finite = True
        index = _hnf_index(self.support, d)
        diag.aperiodic = index == 1
        diffs = []
        base = self.support[0]
        for e in self.support[1:]:
            diffs.append(tuple(x - y for x, y in zip(e, base)))
        loop_gcd, found = _loop_length_gcd(self.support, d)
        if found:
            diag.strongly_aperiodic = loop_gcd == 1
        else:
            diag.strongly_aperiodic = False
            diag.aperiodicity_certificate = (
                "exact" if _hnf_index(diffs, d) == 0 and len(self.support) == 1
                else "bounded-horizon"
            )
        centered = bool(np.allclose(mu, 0.0, atol=1e-12))
        if d == 2 and centered and diag.aperiodic:
            diag.local_class = "a1"
        if d == 1:
            diag.transient = not centered
        elif d == 2:
            diag.transient = not centered
        else:
            diag.transient = True
        return diag

    def _nonlattice_transience(self):
        if isinstance(self.group, FreeGroup2):
            # Nondegenerate walks on a free group are transient.
            trivial = all(len(w) == 0 for w in self.support)
            return (not trivial), "analytic"
        # Heisenberg: polynomial growth of degree 4, admissible walks are transient.
        trivial = all(e == self.group.identity() for e in self.support)
        return (not trivial), "analytic"

    def kernel_pack(self):
        if self.is_lattice:
            return {"kind": "lattice", "d": self.group.dim}
        if isinstance(self.group, FreeGroup2):
            offsets = [0]
            letters = []
            for w in self.support:
                letters.extend(w)
                offsets.append(len(letters))
            return {
                "kind": "f2",
                "offsets": np.array(offsets, dtype=np.int64),
                "letters": np.array(letters, dtype=np.int8),
            }
        return {"kind": "generic"}


class SymmetricZetaLaw(Law):
    """Symmetric law on Z with P(X = +-k) = k^(-(1+alpha)) / (2 zeta(1+alpha)).

    Magnitudes up to ZETA_TABLE_SIZE come from an alias table; the tail is
    drawn exactly by rejection against a continuous Pareto proposal.
    """

    def __init__(self, alpha, table_size=ZETA_TABLE_SIZE, token=None):
        if not 0 < alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        super().__init__(get_group("z1"))
        self.alpha = float(alpha)
        self.s = 1.0 + self.alpha
        self.table_size = int(table_size)
        self.token = token or ("cauchy" if alpha == 1.0 else "zeta:%g" % alpha)
        self.zeta_s = zeta_value(self.s)
        k = np.arange(1, self.table_size + 1, dtype=np.float64)
        mags = k**-self.s / self.zeta_s
        self.tail_prob = zeta_value(self.s, start=self.table_size + 1) / self.zeta_s
        table = mags / mags.sum()
        self._cut, self._alias = _build_alias(table)
        x0 = self.table_size + 0.5
        self._tail_x0 = x0
        self._tail_cmax = (1.0 + 1.0 / (2.0 * (self.table_size + 1))) ** self.s / self.alpha

    def _tail_draw(self, gen):
        # Exact discrete Pareto tail: propose floor(x + 1/2) for continuous
        # Pareto x, accept with ratio target/(envelope * proposal cell mass).
        a, s = self.alpha, self.s
        while True:
            v, w = gen.random(2)
            x = self._tail_x0 * (1.0 - v) ** (-1.0 / a)
            k = math.floor(x + 0.5)
            delta = (k - 0.5) ** -a - (k + 0.5) ** -a
            accept = k**-s / (delta * self._tail_cmax)
            if w <= accept:
                return k

    def draw_increments(self, gen, m):
        sign_u = gen.random(m)
        tail_u = gen.random(m)
        mag_u = gen.random(m) * self.table_size
        idx = mag_u.astype(np.int64)
        np.clip(idx, 0, self.table_size - 1, out=idx)
        frac = mag_u - idx
        k = np.where(frac < self._cut[idx], idx, self._alias[idx]) + 1
        k = k.astype(np.int64)
        tail = np.nonzero(tail_u < self.tail_prob)[0]
        for i in tail:
            k[i] = self._tail_draw(gen)
        out = np.where(sign_u < 0.5, -k, k)
        return out.reshape(m, 1)

    def sample_elements(self, gen, m):
        return [(int(x),) for x in self.draw_increments(gen, m)[:, 0]]

    def char_fn(self, t):
        import mpmath

        scalar = np.isscalar(t)
        tt = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
        out = np.empty(tt.shape, dtype=np.float64)
        for i, x in enumerate(tt):
            if x == 0.0:
                out[i] = 1.0
            else:
                li = mpmath.polylog(self.s, mpmath.exp(1j * float(x)))
                out[i] = float(mpmath.re(li)) / self.zeta_s
        if scalar:
            return float(out[0])
        return out.reshape(np.shape(t))

    def one_minus_char_series(self, t, terms=2 * 10**6):
        """Direct-series evaluation of 1 - phi(t), for cross-checks."""
        total = 0.0
        chunk = 10**6
        for lo in range(1, terms + 1, chunk):
            k = np.arange(lo, min(lo + chunk, terms + 1), dtype=np.float64)
            total += float(np.sum(k**-self.s * (1.0 - np.cos(k * t))))
        # Oscillatory part of the remainder averages out; bound it by the
        # monotone envelope 2 * sum_{k>terms} k^-s.
        rem = 2.0 * zeta_value(self.s, start=terms + 1)
        return total / self.zeta_s, rem / self.zeta_s

    def stable_scale(self):
        """lambda with 1 - phi(t) ~ lambda |t|^alpha as t -> 0."""
        a = self.alpha
        if a == 2.0:
            return None  # slowly varying log factor, no clean constant
        c_a = math.pi / (2.0 * math.gamma(1.0 + a) * math.sin(math.pi * a / 2.0))
        return c_a / self.zeta_s

    def inverse_law(self):
        return self

    def diagnose(self):
        diag = LawDiagnostics()
        diag.mean = (0.0,) if self.alpha > 1 else None
        diag.variance_finite = False
        diag.alpha = self.alpha
        diag.aperiodic = True  # support is all of Z minus 0
        diag.strongly_aperiodic = True  # loops (k,-k) and (1,1,-2)
        diag.aperiodicity_certificate = "bounded-horizon"
        if self.alpha == 1.0:
            diag.local_class = "a2"
            diag.stable_scale = self.stable_scale()
        diag.transient = self.alpha < 1.0
        return diag

    def kernel_pack(self):
        return {"kind": "lattice", "d": 1}


class LazyZetaLaw(Law):
    """Holds with probability 1 - rho, otherwise steps by a zeta law."""

    def __init__(self, inner, rho, token=None):
        super().__init__(inner.group)
        self.inner = inner
        self.rho = float(rho)
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        self.token = token or "lazy:%g:%s" % (rho, inner.token)

    def draw_increments(self, gen, m):
        hold = gen.random(m) >= self.rho
        inc = self.inner.draw_increments(gen, m)
        inc[hold] = 0
        return inc

    def sample_elements(self, gen, m):
        return [(int(x),) for x in self.draw_increments(gen, m)[:, 0]]

    def char_fn(self, t):
        return (1.0 - self.rho) + self.rho * self.inner.char_fn(t)

    def inverse_law(self):
        return LazyZetaLaw(self.inner.inverse_law(), self.rho, token=self.token)

    def diagnose(self):
        diag = self.inner.diagnose()
        diag.strongly_aperiodic = True  # identity atom gives a length-1 loop
        diag.aperiodicity_certificate = "exact"
        if diag.stable_scale is not None:
            diag.stable_scale *= self.rho
        return diag

    def kernel_pack(self):
        return self.inner.kernel_pack()


def lazy(law, rho):
    """Law of B * xi with B ~ Bernoulli(rho): hold with probability 1 - rho."""
    rho = float(rho)
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    if isinstance(law, FiniteSupportLaw):
        ident = law.group.identity()
        atoms = {ident: 1.0 - rho}
        for e, p in zip(law.support, law.probs):
            atoms[e] = atoms.get(e, 0.0) + rho * float(p)
        return FiniteSupportLaw(
            law.group, atoms, token="lazy:%g:%s" % (rho, law.token)
        )
    return LazyZetaLaw(law, rho)


def simple_random_walk(group):
    return FiniteSupportLaw.simple_random_walk(group)


def parse_law(token, group, atom_loader=None):
    """Parse a law token: srw | atoms:<file> | zeta:<a> | cauchy | lazy:<rho>:<inner>."""
    if token == "srw":
        return simple_random_walk(group)
    if token == "cauchy":
        if group.kind != "z1":
            raise ValueError("cauchy law lives on z1")
        return SymmetricZetaLaw(1.0, token="cauchy")
    if token.startswith("zeta:"):
        if group.kind != "z1":
            raise ValueError("zeta laws live on z1")
        return SymmetricZetaLaw(float(token.split(":", 1)[1]), token=token)
    if token.startswith("lazy:"):
        _, rho, inner = token.split(":", 2)
        return lazy(parse_law(inner, group, atom_loader), float(rho))
    if token.startswith("atoms:"):
        path = token.split(":", 1)[1]
        text = atom_loader(path) if atom_loader else open(path).read()
        atoms = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            lit, prob = line.rsplit(None, 1)
            elem = group.parse(lit)
            if elem in atoms:
                raise ValueError("duplicate atom %r" % lit)
            atoms[elem] = float(Fraction(prob))
        return FiniteSupportLaw(group, atoms, token=token)
    raise ValueError("unknown law token %r" % token)
