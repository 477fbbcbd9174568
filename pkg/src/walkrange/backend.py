"""Backend selection for the statistic kernels.

The compiled extension is used when importable; setting WALKRANGE_PURE=1 (or
any build problem) selects the pure-Python twin.  Both expose the same call
contracts and produce identical integers for identical increment arrays, so
the choice affects speed only.  `backend_name()` reports which one is live.
"""

import os

from . import _kernel_py

_impl = _kernel_py
if os.environ.get("WALKRANGE_PURE", "") != "1":
    try:
        from . import _kernel as _compiled

        _impl = _compiled
    except ImportError:
        _impl = _kernel_py


def backend_name():
    return "compiled" if _impl is not _kernel_py else "python"


def lattice_accumulate(incs, checkpoints, gens, dirs, probes, track_boundary):
    return _impl.lattice_accumulate(
        incs, checkpoints, gens, dirs, probes, track_boundary
    )


def lattice_escape_chunk(incs, pos, targets, hit_step, step_offset):
    return _impl.lattice_escape_chunk(incs, pos, targets, hit_step, step_offset)


def f2_accumulate(atom_idx, offsets, letters, checkpoints, probe_words, track_boundary):
    return _impl.f2_accumulate(
        atom_idx, offsets, letters, checkpoints, probe_words, track_boundary
    )


def f2_escape_state(target_word):
    return _impl.F2EscapeState(target_word)


def f2_escape_chunk(state, atom_idx, offsets, letters, stop_distance):
    return _impl.f2_escape_chunk(state, atom_idx, offsets, letters, stop_distance)
