"""Pure-Python statistic kernels.

Same call contracts as the compiled extension, selected through `backend`.
The lattice accumulator here recomputes checkpoint statistics by sorted set
algebra on packed coordinates instead of incremental hash-table counting, so
the two backends reach the same integers through genuinely different
bookkeeping.  The free-group paths mirror the compiled trie.

Coordinate packing caps (|x| < 2^31 per axis for d=2, |x| < 2^20 for d=3)
are enforced identically in both backends; walks outside those boxes raise
instead of wrapping.
"""

import numpy as np

from .groups import OverflowGuardError

F2_INV = (1, 0, 3, 2)

_PACK_LIMIT = {1: 1 << 62, 2: 1 << 31, 3: 1 << 20}


def pack_positions(pos, dim):
    """Bijective uint64 key for integer points within the per-axis caps."""
    pos = np.ascontiguousarray(pos, dtype=np.int64)
    if pos.size:
        worst = int(np.abs(pos).max())
        if worst >= _PACK_LIMIT[dim]:
            raise OverflowGuardError(
                "coordinate %d exceeds the packed-key cap %d for dim %d"
                % (worst, _PACK_LIMIT[dim], dim)
            )
    if dim == 1:
        return pos[:, 0].astype(np.uint64)
    mask32 = np.uint64(0xFFFFFFFF)
    if dim == 2:
        x = pos[:, 0].astype(np.uint64) & mask32
        y = pos[:, 1].astype(np.uint64) & mask32
        return (x << np.uint64(32)) | y
    off = np.int64(1 << 20)
    x = (pos[:, 0] + off).astype(np.uint64)
    y = (pos[:, 1] + off).astype(np.uint64)
    z = (pos[:, 2] + off).astype(np.uint64)
    return (x << np.uint64(42)) | (y << np.uint64(21)) | z


def _member(sorted_keys, queries):
    """Boolean membership of queries in a sorted unique key array."""
    idx = np.searchsorted(sorted_keys, queries)
    idx_c = np.minimum(idx, len(sorted_keys) - 1) if len(sorted_keys) else idx
    if len(sorted_keys) == 0:
        return np.zeros(len(queries), dtype=bool)
    return (idx < len(sorted_keys)) & (sorted_keys[idx_c] == queries)


def _shifted_keys(coords, delta, dim):
    """Keys for coords+delta; sites pushed past the box cap are flagged
    invalid and treated as absent rather than raising."""
    shifted = coords + delta
    limit = _PACK_LIMIT[dim]
    valid = np.all((shifted > -limit) & (shifted < limit), axis=1)
    safe = np.where(valid[:, None], shifted, 0)
    return pack_positions(safe, dim), valid


def _guard_total(incs):
    n = incs.shape[0]
    if n == 0:
        return
    worst = int(np.abs(incs).max())
    if worst and worst > (1 << 62) // max(n, 1):
        raise OverflowGuardError("walk could leave the int64 coordinate box")


def lattice_accumulate(incs, checkpoints, gens, dirs, probes, track_boundary):
    """Checkpoint statistics for a lattice walk started at the origin.

    incs: (n, d) int64 increments; endpoint k is the k-th partial sum.
    Returns (range_size, boundary, dir_counts, probe_counts) int64 arrays
    over the checkpoint axis.
    """
    incs = np.ascontiguousarray(incs, dtype=np.int64)
    n, d = incs.shape
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if len(checkpoints) == 0 or checkpoints[-1] != n:
        raise ValueError("checkpoint list must end at the step count")
    _guard_total(incs)
    pos = np.cumsum(incs, axis=0)
    packed = pack_positions(pos, d)
    uniq, first = np.unique(packed, return_index=True)
    coords = pos[first]

    gens = np.asarray(gens, dtype=np.int64).reshape(-1, d)
    dirs = np.asarray(dirs, dtype=np.int64).reshape(-1, d)
    probes = np.asarray(probes, dtype=np.int64).reshape(-1, d)
    gen_nbrs = [_shifted_keys(coords, g, d) for g in gens]
    dir_back = [_shifted_keys(coords, -v, d) for v in dirs]
    probe_back = [_shifted_keys(coords, -g, d) for g in probes]

    k = len(checkpoints)
    range_size = np.zeros(k, dtype=np.int64)
    boundary = np.zeros(k, dtype=np.int64)
    dir_counts = np.zeros((k, len(dirs)), dtype=np.int64)
    probe_counts = np.zeros((k, len(probes)), dtype=np.int64)

    for i, ck in enumerate(checkpoints):
        mask = first < ck
        keys = uniq[mask]
        range_size[i] = len(keys)
        if track_boundary:
            missing = np.zeros(len(keys), dtype=bool)
            for nb, valid in gen_nbrs:
                missing |= ~(_member(keys, nb[mask]) & valid[mask])
            boundary[i] = int(np.count_nonzero(missing))
        for j, (nb, valid) in enumerate(dir_back):
            absent = ~(_member(keys, nb[mask]) & valid[mask])
            dir_counts[i, j] = int(np.count_nonzero(absent))
        for j, (nb, valid) in enumerate(probe_back):
            absent = ~(_member(keys, nb[mask]) & valid[mask])
            probe_counts[i, j] = int(np.count_nonzero(absent))
    return range_size, boundary, dir_counts, probe_counts


def lattice_escape_chunk(incs, pos, targets, hit_step, step_offset):
    """Advance a block of walks by one increment chunk, recording first hits.

    incs: (B, T, d); pos: (B, d) in/out; targets: (m, d);
    hit_step: (B, m) in/out, -1 while unhit, else the 1-based step index.
    """
    incs = np.asarray(incs, dtype=np.int64)
    B, T, d = incs.shape
    _guard_total(incs.reshape(B * T, d))
    if pos.size:
        worst = int(np.abs(pos).max()) + int(np.abs(incs).max(initial=0)) * T
        if worst >= 1 << 62:
            raise OverflowGuardError("walk could leave the int64 coordinate box")
    cum = pos[:, None, :] + np.cumsum(incs, axis=1)
    for j in range(targets.shape[0]):
        eq = np.all(cum == targets[j], axis=2)
        has = eq.any(axis=1)
        fresh = (hit_step[:, j] < 0) & has
        if np.any(fresh):
            firsts = np.argmax(eq[fresh], axis=1)
            hit_step[fresh, j] = step_offset + 1 + firsts
    pos[:] = cum[:, -1, :]


class _Trie:
    """Growable quadtree of reduced words; nodes may exist unvisited."""

    def __init__(self):
        self.parent = [-1]
        self.last = [-1]
        self.child = [[-1, -1, -1, -1]]
        self.visited = [False]
        self.missing = [0]

    def advance(self, node, letter):
        if node != 0 and self.last[node] == F2_INV[letter]:
            return self.parent[node]
        nxt = self.child[node][letter]
        if nxt < 0:
            nxt = len(self.parent)
            self.parent.append(node)
            self.last.append(letter)
            self.child.append([-1, -1, -1, -1])
            self.visited.append(False)
            self.missing.append(0)
            self.child[node][letter] = nxt
        return nxt

    def peek(self, node, letter):
        """Neighbor node via one letter without creating it; -1 if absent."""
        if node != 0 and self.last[node] == F2_INV[letter]:
            return self.parent[node]
        return self.child[node][letter]

    def lookup(self, node, word):
        for letter in word:
            node = self.peek(node, letter)
            if node < 0:
                return -1
        return node

    def lookup_visited(self, node, word):
        node = self.lookup(node, word)
        return node >= 0 and self.visited[node]


def f2_accumulate(atom_idx, offsets, letters, checkpoints, probe_words, track_boundary):
    """Checkpoint statistics for a free-group walk.

    atom_idx: (n,) int32 indices into the law's atom table; offsets/letters
    give each atom's reduced word.  Directions are always the four letters.
    Returns (range_size, boundary, dir_counts (k,4), probe_counts).
    """
    atom_idx = np.asarray(atom_idx)
    n = len(atom_idx)
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    if len(checkpoints) == 0 or checkpoints[-1] != n:
        raise ValueError("checkpoint list must end at the step count")
    probe_inv = [
        np.array([F2_INV[c] for c in reversed(w)], dtype=np.int8) for w in probe_words
    ]

    trie = _Trie()
    node = 0
    range_size = 0
    boundary = 0
    dir_counts = [0, 0, 0, 0]
    probe_counts = [0] * len(probe_words)

    k = len(checkpoints)
    out_range = np.zeros(k, dtype=np.int64)
    out_boundary = np.zeros(k, dtype=np.int64)
    out_dirs = np.zeros((k, 4), dtype=np.int64)
    out_probes = np.zeros((k, len(probe_words)), dtype=np.int64)
    next_ck = 0

    for step in range(n):
        a = int(atom_idx[step])
        for pos in range(offsets[a], offsets[a + 1]):
            node = trie.advance(node, int(letters[pos]))
        if not trie.visited[node]:
            trie.visited[node] = True
            range_size += 1
            if track_boundary:
                miss = 0
                for letter in range(4):
                    y = trie.peek(node, letter)
                    if y >= 0 and trie.visited[y]:
                        trie.missing[y] -= 1
                        if trie.missing[y] == 0:
                            boundary -= 1
                    else:
                        miss += 1
                trie.missing[node] = miss
                if miss > 0:
                    boundary += 1
            for letter in range(4):
                y = trie.peek(node, F2_INV[letter])
                if not (y >= 0 and trie.visited[y]):
                    dir_counts[letter] += 1
                y = trie.peek(node, letter)
                if y >= 0 and trie.visited[y]:
                    dir_counts[letter] -= 1
            for j in range(len(probe_words)):
                if not trie.lookup_visited(node, probe_inv[j]):
                    probe_counts[j] += 1
                if trie.lookup_visited(node, probe_words[j]):
                    probe_counts[j] -= 1
        while next_ck < k and checkpoints[next_ck] == step + 1:
            out_range[next_ck] = range_size
            out_boundary[next_ck] = boundary
            out_dirs[next_ck] = dir_counts
            out_probes[next_ck] = probe_counts
            next_ck += 1
    return out_range, out_boundary, out_dirs, out_probes


class F2EscapeState:
    """Mutable per-trajectory state threaded through escape chunks."""

    def __init__(self, target_word):
        self.target = np.asarray(target_word, dtype=np.int8)
        self.stack = []
        self.cp = 0  # common prefix length between stack and target
        self.hit_step = -1
        self.steps = 0
        self.done = False


def f2_escape_chunk(state, atom_idx, offsets, letters, stop_distance):
    """Feed one chunk of atoms; stops on hit or once provably escaped.

    A trajectory is abandoned ("escaped") when its tree distance to the
    target exceeds stop_distance; callers pick the margin so the abandoned
    mass is negligible and report it in the bracket.
    """
    if state.done:
        return True
    target = state.target
    tlen = len(target)
    stack = state.stack
    cp = state.cp
    for a in np.asarray(atom_idx):
        a = int(a)
        for pos in range(offsets[a], offsets[a + 1]):
            letter = int(letters[pos])
            if stack and stack[-1] == F2_INV[letter]:
                stack.pop()
                if cp > len(stack):
                    cp = len(stack)
            else:
                if cp == len(stack) and cp < tlen and target[cp] == letter:
                    cp += 1
                stack.append(letter)
        state.steps += 1
        depth = len(stack)
        if depth == tlen and cp == tlen:
            state.hit_step = state.steps
            state.done = True
            break
        if (depth - cp) + (tlen - cp) > stop_distance:
            state.done = True
            break
    state.cp = cp
    return state.done
