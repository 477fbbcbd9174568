"""Incremental statistics of the range of a walk.

The accumulator ingests endpoint after endpoint and maintains, in O(degree)
per insertion:

  * |R|, the number of distinct visited elements;
  * |dR|, the visited elements with at least one unvisited generator
    neighbor (inner boundary);
  * |d_v R| = |R \\ Rv| for each tracked direction v, via the one-sided
    count of x in R with x v^-1 not in R;
  * the same one-sided counts for caller-supplied Folner probe elements,
    with inverses tracked automatically so |R triangle Rg| is available.

`brute_force_counters` recomputes everything from the bare definition and is
deliberately independent code: it is the correctness oracle for both this
class and the compiled kernels.
"""

import math
from dataclasses import dataclass, field


@dataclass
class BoundarySpec:
    """What the accumulator should track besides |R|."""

    track_boundary: bool = True
    directions: tuple = None  # defaults to the group's generator set
    probes: tuple = ()  # Folner probe elements; inverses are added

    def resolve(self, group):
        dirs = self.directions if self.directions is not None else tuple(group.generators())
        probes = []
        for g in self.probes:
            if g == group.identity():
                raise ValueError("identity is not a useful Folner probe")
            ginv = group.inverse(g)
            if g not in probes:
                probes.append(g)
            if ginv not in probes:
                probes.append(ginv)
        return tuple(dirs), tuple(probes)


@dataclass
class Snapshot:
    n: int
    range_size: int
    boundary: int = None
    direction_counts: dict = field(default_factory=dict)
    probe_counts: dict = field(default_factory=dict)

    def symdiff(self, group, g):
        """|R triangle Rg|: both one-sided deficiency counts added up."""
        a = self.probe_counts[group.format(g)]
        b = self.probe_counts[group.format(group.inverse(g))]
        return a + b

    def folner_ratio(self, group, g):
        """|R triangle Rg| / |R|, None before the first step."""
        if self.range_size == 0:
            return None
        return self.symdiff(group, g) / self.range_size

    def direction_ratio(self, group, v):
        if self.range_size == 0:
            return None
        return self.direction_counts[group.format(v)] / self.range_size


class RangeAccumulator:
    """Streaming range statistics for a walk on any supported group."""

    def __init__(self, group, spec=None):
        self.group = group
        spec = spec or BoundarySpec()
        self.track_boundary = spec.track_boundary
        self.directions, self.probes = spec.resolve(group)
        self._dir_inv = [group.inverse(v) for v in self.directions]
        self._probe_inv = [group.inverse(g) for g in self.probes]
        self.visited = set()
        self._missing = {}  # site -> number of unvisited generator neighbors
        self._gens = group.generators()
        self._gens_inv = [group.inverse(s) for s in self._gens]
        self.steps = 0
        self.range_size = 0
        self.boundary = 0
        self.dir_counts = [0] * len(self.directions)
        self.probe_counts = [0] * len(self.probes)

    def insert(self, x):
        """Record the walk's endpoint after one more step."""
        self.steps += 1
        if x in self.visited:
            return
        self.visited.add(x)
        self.range_size += 1
        group = self.group
        if self.track_boundary:
            missing = 0
            for s in self._gens:
                y = group.multiply(x, s)
                if y in self.visited:
                    m = self._missing[y] - 1
                    self._missing[y] = m
                    if m == 0:
                        self.boundary -= 1
                else:
                    missing += 1
            self._missing[x] = missing
            if missing > 0:
                self.boundary += 1
        for i, v in enumerate(self.directions):
            if group.multiply(x, self._dir_inv[i]) not in self.visited:
                self.dir_counts[i] += 1
            if group.multiply(x, v) in self.visited:
                self.dir_counts[i] -= 1
        for i, g in enumerate(self.probes):
            if group.multiply(x, self._probe_inv[i]) not in self.visited:
                self.probe_counts[i] += 1
            if group.multiply(x, g) in self.visited:
                self.probe_counts[i] -= 1

    def snapshot(self):
        group = self.group
        return Snapshot(
            n=self.steps,
            range_size=self.range_size,
            boundary=self.boundary if self.track_boundary else None,
            direction_counts={
                group.format(v): c for v, c in zip(self.directions, self.dir_counts)
            },
            probe_counts={
                group.format(g): c for g, c in zip(self.probes, self.probe_counts)
            },
        )


def brute_force_counters(group, endpoints, spec=None):
    """Counters recomputed from scratch by the definitions; test oracle."""
    spec = spec or BoundarySpec()
    dirs, probes = spec.resolve(group)
    r = set(endpoints)
    boundary = 0
    for x in r:
        if any(group.multiply(x, s) not in r for s in group.generators()):
            boundary += 1
    dir_counts = {}
    for v in dirs:
        vinv = group.inverse(v)
        dir_counts[group.format(v)] = sum(
            1 for x in r if group.multiply(x, vinv) not in r
        )
    probe_counts = {}
    for g in probes:
        ginv = group.inverse(g)
        probe_counts[group.format(g)] = sum(
            1 for x in r if group.multiply(x, ginv) not in r
        )
    return Snapshot(
        n=len(endpoints),
        range_size=len(r),
        boundary=boundary if spec.track_boundary else None,
        direction_counts=dir_counts,
        probe_counts=probe_counts,
    )


def checkpoint_schedule(n, start=1000, ratio=1.5):
    """Geometric checkpoints ceil(start * ratio^k) capped at n, n included."""
    if n < 1:
        raise ValueError("need at least one step")
    pts = []
    k = 0
    while True:
        v = math.ceil(start * ratio**k)
        if v >= n:
            break
        if v >= 1 and (not pts or v != pts[-1]):
            pts.append(v)
        k += 1
    pts.append(n)
    return pts
