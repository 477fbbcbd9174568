"""Timing comparison of the statistic kernels.

Runs the planar and free-group accumulators through the compiled
extension and the pure Python twin on one shared increment stream, checks
that both return the same integers, and reports the wall-clock ratio.

    python benchmarks/bench_core.py --steps 200000 --repeat 3
"""

import argparse
import time

import numpy as np

from walkrange import _kernel_py, backend
from walkrange.groups import get_group

try:
    from walkrange import _kernel as _compiled
except ImportError:
    _compiled = None


def lattice_inputs(steps, seed=0):
    rng = np.random.default_rng(seed)
    eye = np.eye(2, dtype=np.int64)
    atoms = np.concatenate([eye, -eye])
    incs = atoms[rng.integers(0, 4, size=steps)]
    checkpoints = sorted({steps // 4, steps // 2, steps})
    probes = np.array([[1, 0], [-1, 0]], dtype=np.int64)
    return (incs, checkpoints, atoms, eye.copy(), probes, True)


def f2_inputs(steps, seed=0):
    group = get_group("f2")
    rng = np.random.default_rng(seed)
    atom_idx = rng.integers(0, 4, size=steps).astype(np.int32)
    offsets = np.zeros(5, dtype=np.int64)
    letters = []
    for i, token in enumerate(("a", "A", "b", "B")):
        letters.extend(group.parse(token))
        offsets[i + 1] = len(letters)
    letters = np.array(letters, dtype=np.int8)
    checkpoints = sorted({steps // 4, steps // 2, steps})
    probe_words = [np.array(group.parse("a"), dtype=np.int8)]
    return (atom_idx, offsets, letters, checkpoints, probe_words, True)


def best_time(fn, args, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def same(a, b):
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=200000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    cases = [
        ("lattice z2", "lattice_accumulate", lattice_inputs(args.steps)),
        ("free group", "f2_accumulate", f2_inputs(args.steps)),
    ]
    print("active backend: %s, steps = %d" % (backend.backend_name(), args.steps))
    print("%-12s %12s %12s %9s" % ("kernel", "python ms", "compiled ms", "speedup"))
    for name, attr, inputs in cases:
        out_py, t_py = best_time(getattr(_kernel_py, attr), inputs, args.repeat)
        if _compiled is None:
            print("%-12s %12.1f %12s %9s" % (name, 1e3 * t_py, "n/a", "n/a"))
            continue
        out_c, t_c = best_time(getattr(_compiled, attr), inputs, args.repeat)
        if not same(out_py, out_c):
            raise SystemExit("backends disagree on %s" % name)
        print(
            "%-12s %12.1f %12.1f %8.1fx"
            % (name, 1e3 * t_py, 1e3 * t_c, t_py / t_c)
        )


if __name__ == "__main__":
    main()
