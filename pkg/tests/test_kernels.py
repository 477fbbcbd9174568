"""Both statistic backends against each other and against the streaming
accumulator.  The pure kernel recomputes checkpoints by sorted set algebra
and the compiled one counts incrementally, so agreement is meaningful."""

import os
import subprocess
import sys

import numpy as np
import pytest

from walkrange import _kernel_py, backend
from walkrange.groups import OverflowGuardError, get_group
from walkrange.laws import parse_law
from walkrange.range_engine import BoundarySpec, RangeAccumulator

try:
    from walkrange import _kernel as _compiled
except ImportError:
    _compiled = None

BOTH = [_kernel_py] if _compiled is None else [_kernel_py, _compiled]


def lattice_case(dim, n, seed):
    rng = np.random.default_rng(seed)
    eye = np.eye(dim, dtype=np.int64)
    atoms = np.concatenate([eye, -eye])
    incs = atoms[rng.integers(0, 2 * dim, size=n)]
    gens = atoms
    dirs = eye.copy()
    probes = np.concatenate([eye[:1] * 2, -eye[:1] * 2]) if dim > 1 else atoms
    checkpoints = [max(1, n // 3), max(2, 2 * n // 3), n]
    checkpoints = sorted(set(checkpoints))
    return incs, checkpoints, gens, dirs, probes


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_lattice_backends_agree(dim):
    incs, cks, gens, dirs, probes = lattice_case(dim, 4000, seed=dim)
    outs = [
        impl.lattice_accumulate(incs, cks, gens, dirs, probes, True)
        for impl in BOTH
    ]
    for other in outs[1:]:
        for a, b in zip(outs[0], other):
            np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("dim", [1, 2])
def test_lattice_kernel_matches_accumulator(dim):
    incs, cks, gens, dirs, probes = lattice_case(dim, 600, seed=10 + dim)
    rng_size, boundary, dir_counts, probe_counts = backend.lattice_accumulate(
        incs, cks, gens, dirs, probes, True
    )
    group = get_group("z%d" % dim)
    spec = BoundarySpec(
        directions=tuple(tuple(v) for v in dirs),
        probes=tuple(tuple(g) for g in probes[: len(probes) // 2] if any(g)),
    )
    acc = RangeAccumulator(group, spec)
    pos = np.cumsum(incs, axis=0)
    marks = {ck: i for i, ck in enumerate(cks)}
    for step, x in enumerate(map(tuple, pos), start=1):
        acc.insert(x)
        if step in marks:
            i = marks[step]
            snap = acc.snapshot()
            assert snap.range_size == rng_size[i]
            assert snap.boundary == boundary[i]
            for j, v in enumerate(map(tuple, dirs)):
                assert snap.direction_counts[group.format(v)] == dir_counts[i, j]
            for j, g in enumerate(map(tuple, probes)):
                assert snap.probe_counts[group.format(g)] == probe_counts[i, j]


def f2_case(n, seed):
    group = get_group("f2")
    law = parse_law("srw", group)
    rng = np.random.default_rng(seed)
    atom_idx = rng.integers(0, 4, size=n).astype(np.int32)
    words = [group.parse(w) for w in ("a", "A", "b", "B")]
    offsets = np.zeros(len(words) + 1, dtype=np.int64)
    letters = []
    for i, w in enumerate(words):
        letters.extend(w)
        offsets[i + 1] = len(letters)
    letters = np.array(letters, dtype=np.int8)
    del law
    return group, atom_idx, offsets, letters, words


def test_f2_backends_agree():
    group, atom_idx, offsets, letters, _w = f2_case(5000, seed=2)
    cks = [100, 2500, 5000]
    probe_words = [np.array(group.parse("a"), dtype=np.int8),
                   np.array(group.parse("ab"), dtype=np.int8)]
    outs = [
        impl.f2_accumulate(atom_idx, offsets, letters, cks, probe_words, True)
        for impl in BOTH
    ]
    for other in outs[1:]:
        for a, b in zip(outs[0], other):
            np.testing.assert_array_equal(a, b)


def test_f2_kernel_matches_accumulator():
    group, atom_idx, offsets, letters, words = f2_case(400, seed=3)
    cks = [50, 200, 400]
    probe = group.parse("ab")
    probe_words = [np.array(probe, dtype=np.int8)]
    rng_size, boundary, dir_counts, probe_counts = backend.f2_accumulate(
        atom_idx, offsets, letters, cks, probe_words, True
    )
    spec = BoundarySpec(probes=(probe,))
    acc = RangeAccumulator(group, spec)
    pos = group.identity()
    marks = {ck: i for i, ck in enumerate(cks)}
    gens = group.generators()
    for step, a in enumerate(atom_idx, start=1):
        pos = group.multiply(pos, words[a])
        acc.insert(pos)
        if step in marks:
            i = marks[step]
            snap = acc.snapshot()
            assert snap.range_size == rng_size[i]
            assert snap.boundary == boundary[i]
            for j, v in enumerate(gens):
                assert snap.direction_counts[group.format(v)] == dir_counts[i, j]
            assert snap.probe_counts[group.format(probe)] == probe_counts[i, 0]


def test_lattice_escape_chunk_first_hits():
    rng = np.random.default_rng(8)
    B, T, d = 16, 64, 2
    eye = np.eye(d, dtype=np.int64)
    atoms = np.concatenate([eye, -eye])
    incs = atoms[rng.integers(0, 2 * d, size=(B, 3 * T))]
    targets = np.array([[0, 0], [1, 0]], dtype=np.int64)
    pos = np.zeros((B, d), dtype=np.int64)
    hit = np.full((B, len(targets)), -1, dtype=np.int64)
    for c in range(3):
        backend.lattice_escape_chunk(
            incs[:, c * T : (c + 1) * T], pos, targets, hit, c * T
        )
    paths = np.cumsum(incs, axis=1)
    np.testing.assert_array_equal(pos, paths[:, -1])
    for b in range(B):
        for j, t in enumerate(targets):
            steps = np.nonzero(np.all(paths[b] == t, axis=1))[0]
            want = steps[0] + 1 if len(steps) else -1
            assert hit[b, j] == want


def test_f2_escape_chunk_hit_and_abandon():
    group, _idx, offsets, letters, _words = f2_case(1, seed=0)
    # path a, b, B, A returns to the target "a" at steps 1 and 4
    atom_idx = np.array([0, 2, 3, 1], dtype=np.int32)
    state = backend.f2_escape_state(np.array(group.parse("a"), dtype=np.int8))
    done = backend.f2_escape_chunk(state, atom_idx, offsets, letters, 40)
    assert done and state.hit_step == 1
    # never comes back: b-steps walk straight away from "a"
    state = backend.f2_escape_state(np.array(group.parse("a"), dtype=np.int8))
    away = np.full(200, 2, dtype=np.int32)
    done = backend.f2_escape_chunk(state, away, offsets, letters, 40)
    assert done and state.hit_step == -1 and state.steps <= 45


def test_overflow_guards():
    with pytest.raises(OverflowGuardError):
        _kernel_py.pack_positions(np.array([[1 << 31, 0]], dtype=np.int64), 2)
    big = np.full((4, 1), 1 << 61, dtype=np.int64)
    with pytest.raises(OverflowGuardError):
        _kernel_py.lattice_accumulate(
            big, [4], np.array([[1]]), np.array([[1]]), np.zeros((0, 1)), True
        )


def test_checkpoints_must_cover_the_walk():
    incs = np.ones((5, 1), dtype=np.int64)
    with pytest.raises(ValueError):
        _kernel_py.lattice_accumulate(
            incs, [3], np.array([[1]]), np.array([[1]]), np.zeros((0, 1)), True
        )


def test_backend_name_reports_the_selection():
    assert backend.backend_name() in ("compiled", "python")
    env = dict(os.environ, WALKRANGE_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from walkrange.backend import backend_name; print(backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
