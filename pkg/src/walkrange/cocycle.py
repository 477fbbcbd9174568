"""Cocycles over measure-preserving bases, and the random streams behind them.

Two bases are supported.  The Bernoulli base gives back ordinary random
walks: the increment at shift index k is a fresh draw addressed by
(seed, index).  The rotation base is the deterministic circle rotation with
an interval indicator observable, evaluated in exact integer arithmetic on
the rational form of its parameters (a float angle is the dyadic rational
it stores), so the indicator at index k never depends on which window was
asked for.

Stream addressing is counter-based: every (seed, purpose, trajectory,
direction) tuple owns an independent Philox stream, so results never depend
on scheduling or worker count.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .groups import get_group

# Purpose tags keep independent phases of one experiment on disjoint streams.
PURPOSE_WALK = 0
PURPOSE_ESCAPE = 1
PURPOSE_INDEXED = 2
PURPOSE_MISC = 3

FORWARD = 0
BACKWARD = 1


def substream(seed, purpose, trajectory, direction=FORWARD):
    """Independent Generator for one trajectory of one experiment phase."""
    key = np.random.SeedSequence((int(seed), purpose, int(trajectory), direction))
    return np.random.Generator(np.random.Philox(key))


def indexed_stream(seed, index):
    """Generator addressed by a (possibly negative) shift index."""
    sign = 1 if index < 0 else 0
    key = np.random.SeedSequence((int(seed), PURPOSE_INDEXED, sign, abs(int(index))))
    return np.random.Generator(np.random.Philox(key))


def convergent_for(theta, n_max):
    """Continued-fraction convergent p/q of theta with q > 2 * n_max.

    Utility for experiments that want a controlled rational stand-in for an
    angle: at denominator q > 2 * n_max the convergent reproduces the first
    n_max points of the true orbit up to perturbations smaller than half a
    lattice cell.  Orbit evaluation itself does not approximate; see
    RotationBase.
    """
    x = Fraction(theta)
    if not 0 < x < 1:
        raise ValueError("rotation angle must lie in (0, 1)")
    target = 2 * int(n_max)
    h_prev, h = 1, 0  # numerators
    k_prev, k = 0, 1  # denominators
    frac = x
    while k <= target:
        a = int(1 / frac)
        frac = 1 / frac - a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if frac == 0:
            break
    if k <= target:
        raise ValueError("rotation angle is rational with too small a denominator")
    return h, k


@dataclass
class RotationBase:
    """Rotation x -> x + theta mod 1 observed through the indicator of [0, beta).

    theta, beta and x0 are read as exact rationals (Fraction accepts floats
    and Fractions alike), and every indicator is an exact integer
    comparison.  Splitting a window into chunks therefore gives bit-identical
    results to one large evaluation, and the additivity of the induced
    cocycle holds exactly rather than up to endpoint rounding.
    """

    theta: object  # float or Fraction
    beta: object = Fraction(1, 2)
    x0: object = 0

    def _lattice(self):
        """Integerize (x0, theta, beta) over their common denominator."""
        theta = Fraction(self.theta)
        if not 0 < theta < 1:
            raise ValueError("rotation angle must lie in (0, 1)")
        beta = Fraction(self.beta)
        if not 0 < beta < 1:
            raise ValueError("indicator interval length must lie in (0, 1)")
        den = math.lcm(
            theta.denominator, beta.denominator, Fraction(self.x0).denominator
        )
        start = Fraction(self.x0).numerator * (den // Fraction(self.x0).denominator)
        step = theta.numerator * (den // theta.denominator)
        cut = beta.numerator * (den // beta.denominator)
        return start % den, step % den, cut, den

    def orbit_indicators(self, n_max, shift=0):
        """Indicator sequence f(T^k x0) for k = shift .. shift + n_max - 1."""
        n = int(n_max)
        if n <= 0:
            return np.zeros(0, dtype=np.int64)
        start, step, cut, den = self._lattice()
        # Positions are (start + k * step) mod den.  Vectorize in int64 in
        # one shot when the raw products fit; otherwise reduce blockwise,
        # with a per-block exact base and a ramp that needs at most one
        # subtraction of den per entry.
        if den <= 2**61 and (abs(shift) + n) * step < 2**62:
            ks = np.arange(shift, shift + n, dtype=np.int64)
            pos = (start + ks * step) % den
            return (pos < cut).astype(np.int64)
        if den <= 2**61:
            block = min(n, 1024)
            if (block - 1) * step < 2**62:
                ramp = (np.arange(block, dtype=np.int64) * step) % den
            else:
                ramp = np.empty(block, dtype=np.int64)
                acc = 0
                for j in range(block):
                    ramp[j] = acc
                    acc += step
                    if acc >= den:
                        acc -= den
            out = np.empty(n, dtype=np.int64)
            for lo in range(0, n, block):
                hi = min(lo + block, n)
                base = (start + (shift + lo) * step) % den
                pos = base + ramp[: hi - lo]
                pos[pos >= den] -= den
                out[lo:hi] = pos < cut
            return out
        # Astronomically fine lattice (subnormal parameters): plain integers.
        out = np.empty(n, dtype=np.int64)
        pos = (start + shift * step) % den
        for j in range(n):
            out[j] = pos < cut
            pos += step
            if pos >= den:
                pos -= den
        return out

    def increments(self, n, shift=0):
        """Z-valued cocycle increments for steps shift+1 .. shift+n."""
        return self.orbit_indicators(n, shift=shift).reshape(n, 1)


@dataclass
class CocycleSpec:
    """What to iterate: a Bernoulli base driven by a law, or a rotation base."""

    base: str  # "bernoulli" | "rotation"
    law: object = None
    rotation: RotationBase = None

    @property
    def group(self):
        if self.base == "bernoulli":
            return self.law.group
        return get_group("z1")


def evaluate_cocycle(spec, n, seed=0, shift=0):
    """F(n, T^shift omega): products of increments for n > 0, the identity at
    n = 0, inverses of pre-image increments for n < 0."""
    group = spec.group
    if n == 0:
        return group.identity()
    if spec.base == "rotation":
        if n > 0:
            total = int(spec.rotation.orbit_indicators(n, shift=shift).sum())
            return (total,)
        total = int(spec.rotation.orbit_indicators(-n, shift=shift + n).sum())
        return (-total,)
    # Bernoulli base: the increment of T^k omega lives at index k.
    acc = group.identity()
    if n > 0:
        for k in range(shift, shift + n):
            x = spec.law.sample(indexed_stream(seed, k))
            acc = group.multiply(acc, x)
        return acc
    for k in range(shift - 1, shift + n - 1, -1):
        x = spec.law.sample(indexed_stream(seed, k))
        acc = group.multiply(acc, group.inverse(x))
    return acc


class WalkStream:
    """Two-sided walk over a Bernoulli base.

    Forward endpoints are S_n = x_1 ... x_n; backward endpoints follow the
    negative-time cocycle, S^-_n = x_{-1}^{-1} ... x_{-n}^{-1}.  The two
    directions consume disjoint substreams.  Backward draws come from the
    pushforward of the law under inversion so that bulk runs and this
    stepping interface see identical trajectories.
    """

    def __init__(self, law, seed=0, trajectory=0):
        self.group = law.group
        self.law = law
        self._inv_law = law.inverse_law()
        self._gens = {
            FORWARD: substream(seed, PURPOSE_WALK, trajectory, FORWARD),
            BACKWARD: substream(seed, PURPOSE_WALK, trajectory, BACKWARD),
        }
        self.forward_pos = self.group.identity()
        self.backward_pos = self.group.identity()
        self.forward_time = 0
        self.backward_time = 0

    def advance(self, direction=FORWARD):
        """Append one increment in the given direction; returns the new endpoint."""
        if direction == FORWARD:
            x = self.law.sample(self._gens[FORWARD])
            self.forward_pos = self.group.multiply(self.forward_pos, x)
            self.forward_time += 1
            return self.forward_pos
        x = self._inv_law.sample(self._gens[BACKWARD])
        self.backward_pos = self.group.multiply(self.backward_pos, x)
        self.backward_time += 1
        return self.backward_pos
