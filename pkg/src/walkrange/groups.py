"""Countable groups the walk engine can step through.

Elements are plain hashable tuples: lattice points for Z^d and the discrete
Heisenberg group, reduced words (tuples of letter codes) for the free group.
All operations are exact integer arithmetic; lattice coordinates are kept
within int64 range so the compiled kernels and the Python paths agree.
"""

import math

# Letter codes for the free group on {a, b}.  Inverse of letter c is c ^ 1.
F2_LETTERS = "aAbB"
F2_INV = {0: 1, 1: 0, 2: 3, 3: 2}

# Hard bound mirroring the compiled kernels' signed-64-bit coordinates.
COORD_LIMIT = 1 << 62


class OverflowGuardError(OverflowError):
    """A lattice coordinate left the representable range."""


class Group:
    """Base class: group operations plus parsing/formatting of element literals."""

    kind = None
    is_virtually_cyclic = False

    def identity(self):
        raise NotImplementedError

    def multiply(self, a, b):
        raise NotImplementedError

    def inverse(self, a):
        raise NotImplementedError

    def word_norm(self, a):
        raise NotImplementedError

    def generators(self):
        """Symmetric generating set used for boundary neighborhoods."""
        raise NotImplementedError

    def neighbors(self, a):
        return [self.multiply(a, s) for s in self.generators()]

    def parse(self, text):
        raise NotImplementedError

    def format(self, a):
        raise NotImplementedError

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self.kind)


class LatticeGroup(Group):
    """Z^d with the standard basis generators."""

    def __init__(self, dim):
        if dim not in (1, 2, 3):
            raise ValueError("supported lattice dimensions are 1, 2, 3")
        self.dim = dim
        self.kind = "z%d" % dim
        self.is_virtually_cyclic = dim == 1

    def identity(self):
        return (0,) * self.dim

    def multiply(self, a, b):
        out = tuple(x + y for x, y in zip(a, b))
        for c in out:
            if not -COORD_LIMIT < c < COORD_LIMIT:
                raise OverflowGuardError("lattice coordinate overflow: %r" % (out,))
        return out

    def inverse(self, a):
        return tuple(-x for x in a)

    def word_norm(self, a):
        return sum(abs(x) for x in a)

    def generators(self):
        gens = []
        for i in range(self.dim):
            e = [0] * self.dim
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return gens

    def parse(self, text):
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != self.dim:
            raise ValueError(
                "expected %d comma-separated integers, got %r" % (self.dim, text)
            )
        return tuple(int(p) for p in parts)

    def format(self, a):
        return ",".join(str(x) for x in a)


class FreeGroup2(Group):
    """Free group on two generators; elements are reduced words over aAbB."""

    kind = "f2"
    dim = 2

    def identity(self):
        return ()

    def multiply(self, a, b):
        word = list(a)
        for c in b:
            if word and word[-1] == F2_INV[c]:
                word.pop()
            else:
                word.append(c)
        return tuple(word)

    def inverse(self, a):
        return tuple(F2_INV[c] for c in reversed(a))

    def word_norm(self, a):
        return len(a)

    def generators(self):
        return [(0,), (1,), (2,), (3,)]

    def parse(self, text):
        text = text.strip()
        if text in ("", "e"):
            return ()
        word = []
        for ch in text:
            if ch not in F2_LETTERS:
                raise ValueError("bad free-group letter %r in %r" % (ch, text))
            word.append(F2_LETTERS.index(ch))
        reduced = self.multiply((), tuple(word))
        if len(reduced) != len(word):
            raise ValueError("element literal %r is not a reduced word" % text)
        return reduced

    def format(self, a):
        if not a:
            return "e"
        return "".join(F2_LETTERS[c] for c in a)


class HeisenbergGroup(Group):
    """Discrete Heisenberg group H3(Z) as integer triples.

    Convention: (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + x y').
    The word norm is a monotone proxy for the true word metric, exact enough
    for unboundedness and escape diagnostics but not subadditive.
    """

    kind = "heis"
    dim = 3

    def identity(self):
        return (0, 0, 0)

    def multiply(self, a, b):
        x, y, z = a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]
        for c in (x, y, z):
            if not -COORD_LIMIT < c < COORD_LIMIT:
                raise OverflowGuardError("Heisenberg coordinate overflow")
        return (x, y, z)

    def inverse(self, a):
        x, y, z = a
        return (-x, -y, -z + x * y)

    def word_norm(self, a):
        x, y, z = a
        # Area term z - xy/2 is a half-integer; use the doubled value to stay exact.
        area2 = abs(2 * z - x * y)
        return abs(x) + abs(y) + math.isqrt(area2 // 2 + (area2 % 2))

    def generators(self):
        return [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]

    def parse(self, text):
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("expected x,y,z integers, got %r" % text)
        return tuple(int(p) for p in parts)

    def format(self, a):
        return ",".join(str(x) for x in a)


_REGISTRY = {
    "z1": LatticeGroup(1),
    "z2": LatticeGroup(2),
    "z3": LatticeGroup(3),
    "f2": FreeGroup2(),
    "heis": HeisenbergGroup(),
}


def get_group(token):
    try:
        return _REGISTRY[token]
    except KeyError:
        raise ValueError(
            "unknown group %r (expected one of %s)" % (token, sorted(_REGISTRY))
        ) from None
