# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled statistic kernels: incremental hash-set range counting for
lattice walks and an array trie for free-group walks.

Call contracts match `_kernel_py`; `backend` picks whichever is importable.
The lattice accumulator maintains counters step by step (the pure twin
recomputes from sorted set algebra), so agreement between the two is a
meaningful cross-check, exercised in the test suite.
"""

import numpy as np

cimport numpy as cnp

from .groups import OverflowGuardError

cnp.import_array()

ctypedef unsigned long long u64
ctypedef long long i64

cdef u64 MASK32 = 0xFFFFFFFFULL
cdef i64 OFF21 = 1 << 20
cdef i64 LIM1 = <i64>1 << 62
cdef i64 LIM2 = <i64>1 << 31
cdef i64 LIM3 = <i64>1 << 20

F2_INV = (1, 0, 3, 2)
cdef int[4] C_F2_INV
C_F2_INV[0] = 1
C_F2_INV[1] = 0
C_F2_INV[2] = 3
C_F2_INV[3] = 2

BACKEND = "compiled"


cdef inline u64 _mix(u64 x) nogil:
    x += 0x9E3779B97F4A7C15ULL
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL
    return x ^ (x >> 31)


cdef inline i64 _limit(int dim) nogil:
    if dim == 1:
        return LIM1
    if dim == 2:
        return LIM2
    return LIM3


cdef inline u64 _pack(i64 x, i64 y, i64 z, int dim) nogil:
    if dim == 1:
        return <u64>x
    if dim == 2:
        return ((<u64>x & MASK32) << 32) | (<u64>y & MASK32)
    return ((<u64>(x + OFF21)) << 42) | ((<u64>(y + OFF21)) << 21) | (<u64>(z + OFF21))


cdef class _Map:
    """Open-addressing set of packed keys with a per-site int8 payload."""

    cdef u64[::1] keys
    cdef unsigned char[::1] state
    cdef signed char[::1] payload
    cdef Py_ssize_t cap
    cdef Py_ssize_t count

    def __cinit__(self, Py_ssize_t cap=4096):
        self.cap = cap
        self.count = 0
        self.keys = np.zeros(cap, dtype=np.uint64)
        self.state = np.zeros(cap, dtype=np.uint8)
        self.payload = np.zeros(cap, dtype=np.int8)

    cdef Py_ssize_t _slot(self, u64 key) nogil:
        cdef Py_ssize_t i = <Py_ssize_t>(_mix(key) & (self.cap - 1))
        while self.state[i] == 1 and self.keys[i] != key:
            i += 1
            if i == self.cap:
                i = 0
        return i

    cdef void _grow(self):
        cdef u64[::1] old_keys = self.keys
        cdef unsigned char[::1] old_state = self.state
        cdef signed char[::1] old_payload = self.payload
        cdef Py_ssize_t old_cap = self.cap
        cdef Py_ssize_t i, j
        self.cap = old_cap * 2
        self.keys = np.zeros(self.cap, dtype=np.uint64)
        self.state = np.zeros(self.cap, dtype=np.uint8)
        self.payload = np.zeros(self.cap, dtype=np.int8)
        for i in range(old_cap):
            if old_state[i] == 1:
                j = self._slot(old_keys[i])
                self.keys[j] = old_keys[i]
                self.state[j] = 1
                self.payload[j] = old_payload[i]

    cdef Py_ssize_t prepare(self, u64 key):
        """Slot for key, growing first so the returned slot stays valid."""
        if (self.count + 1) * 2 > self.cap:
            self._grow()
        return self._slot(key)

    cdef bint contains(self, u64 key) nogil:
        return self.state[self._slot(key)] == 1


def lattice_accumulate(incs, checkpoints, gens, dirs, probes, bint track_boundary):
    """Checkpoint statistics for a lattice walk started at the origin."""
    cdef cnp.int64_t[:, ::1] inc = np.ascontiguousarray(incs, dtype=np.int64)
    cdef cnp.int64_t[::1] cks = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t n = inc.shape[0]
    cdef int d = <int>inc.shape[1]
    if cks.shape[0] == 0 or cks[cks.shape[0] - 1] != n:
        raise ValueError("checkpoint list must end at the step count")
    cdef cnp.int64_t[:, ::1] gv = np.ascontiguousarray(gens, dtype=np.int64).reshape(-1, d)
    cdef cnp.int64_t[:, ::1] dv = np.ascontiguousarray(dirs, dtype=np.int64).reshape(-1, d)
    cdef cnp.int64_t[:, ::1] pv = np.ascontiguousarray(probes, dtype=np.int64).reshape(-1, d)
    cdef Py_ssize_t ng = gv.shape[0], nv = dv.shape[0], np_ = pv.shape[0]
    cdef Py_ssize_t nk = cks.shape[0]

    out_range = np.zeros(nk, dtype=np.int64)
    out_boundary = np.zeros(nk, dtype=np.int64)
    out_dirs = np.zeros((nk, nv), dtype=np.int64)
    out_probes = np.zeros((nk, np_), dtype=np.int64)
    cdef cnp.int64_t[::1] o_r = out_range
    cdef cnp.int64_t[::1] o_b = out_boundary
    cdef cnp.int64_t[:, ::1] o_d = out_dirs
    cdef cnp.int64_t[:, ::1] o_p = out_probes

    cdef _Map table = _Map()
    cdef i64 lim = _limit(d)
    cdef i64[3] pos
    cdef i64[3] q
    cdef i64 range_size = 0, boundary = 0
    cdef cnp.int64_t[::1] dir_counts = np.zeros(max(nv, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] probe_counts = np.zeros(max(np_, 1), dtype=np.int64)
    cdef Py_ssize_t step, i, j, slot, yslot
    cdef Py_ssize_t next_ck = 0
    cdef int a, miss
    cdef bint inside
    cdef u64 key

    pos[0] = pos[1] = pos[2] = 0
    for step in range(n):
        for a in range(d):
            pos[a] += inc[step, a]
            if pos[a] >= lim or pos[a] <= -lim:
                raise OverflowGuardError(
                    "coordinate %d exceeds the packed-key cap %d for dim %d"
                    % (pos[a], lim, d)
                )
        key = _pack(pos[0], pos[1], pos[2], d)
        slot = table.prepare(key)
        if table.state[slot] != 1:
            table.keys[slot] = key
            table.state[slot] = 1
            table.payload[slot] = 0
            table.count += 1
            range_size += 1
            if track_boundary:
                miss = 0
                for i in range(ng):
                    inside = True
                    for a in range(d):
                        q[a] = pos[a] + gv[i, a]
                        if q[a] >= lim or q[a] <= -lim:
                            inside = False
                    if not inside:
                        miss += 1
                        continue
                    yslot = table._slot(_pack(q[0], q[1], q[2], d))
                    if table.state[yslot] == 1:
                        table.payload[yslot] -= 1
                        if table.payload[yslot] == 0:
                            boundary -= 1
                    else:
                        miss += 1
                table.payload[slot] = <signed char>miss
                if miss > 0:
                    boundary += 1
            for i in range(nv):
                if not _peek(table, pos, dv, i, -1, d, lim):
                    dir_counts[i] += 1
                if _peek(table, pos, dv, i, 1, d, lim):
                    dir_counts[i] -= 1
            for i in range(np_):
                if not _peek(table, pos, pv, i, -1, d, lim):
                    probe_counts[i] += 1
                if _peek(table, pos, pv, i, 1, d, lim):
                    probe_counts[i] -= 1
        while next_ck < nk and cks[next_ck] == step + 1:
            o_r[next_ck] = range_size
            o_b[next_ck] = boundary
            for j in range(nv):
                o_d[next_ck, j] = dir_counts[j]
            for j in range(np_):
                o_p[next_ck, j] = probe_counts[j]
            next_ck += 1
    return out_range, out_boundary, out_dirs, out_probes


cdef inline bint _peek(_Map table, i64 *pos, cnp.int64_t[:, ::1] vecs,
                       Py_ssize_t row, int sign, int d, i64 lim) nogil:
    """Whether pos + sign*vecs[row] is a visited in-box site."""
    cdef i64[3] q
    cdef int a
    q[0] = q[1] = q[2] = 0
    for a in range(d):
        q[a] = pos[a] + sign * vecs[row, a]
        if q[a] >= lim or q[a] <= -lim:
            return False
    return table.contains(_pack(q[0], q[1], q[2], d))


def lattice_escape_chunk(incs, pos, targets, hit_step, i64 step_offset):
    """Advance a block of walks one chunk, recording 1-based first hits."""
    cdef cnp.int64_t[:, :, ::1] inc = np.ascontiguousarray(incs, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] p = pos
    cdef cnp.int64_t[:, ::1] tg = np.ascontiguousarray(targets, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] hs = hit_step
    cdef Py_ssize_t B = inc.shape[0], T = inc.shape[1]
    cdef int d = <int>inc.shape[2]
    cdef Py_ssize_t m = tg.shape[0]
    cdef Py_ssize_t b, t, j
    cdef int a
    cdef bint match
    with nogil:
        for b in range(B):
            for t in range(T):
                for a in range(d):
                    p[b, a] += inc[b, t, a]
                    if p[b, a] >= LIM1 or p[b, a] <= -LIM1:
                        with gil:
                            raise OverflowGuardError(
                                "walk could leave the int64 coordinate box"
                            )
                for j in range(m):
                    if hs[b, j] < 0:
                        match = True
                        for a in range(d):
                            if p[b, a] != tg[j, a]:
                                match = False
                                break
                        if match:
                            hs[b, j] = step_offset + t + 1


cdef class _Trie:
    """Growable quadtree of reduced words; nodes may exist unvisited."""

    cdef cnp.int32_t[::1] parent
    cdef cnp.int32_t[:, ::1] child
    cdef cnp.int8_t[::1] last
    cdef cnp.uint8_t[::1] visited
    cdef cnp.int8_t[::1] missing
    cdef Py_ssize_t cap
    cdef Py_ssize_t size

    def __cinit__(self, Py_ssize_t cap=4096):
        self.cap = cap
        self.size = 1
        self.parent = np.full(cap, -1, dtype=np.int32)
        self.child = np.full((cap, 4), -1, dtype=np.int32)
        self.last = np.full(cap, -1, dtype=np.int8)
        self.visited = np.zeros(cap, dtype=np.uint8)
        self.missing = np.zeros(cap, dtype=np.int8)

    cdef void _grow(self):
        cdef Py_ssize_t new_cap = self.cap * 2
        parent = np.full(new_cap, -1, dtype=np.int32)
        child = np.full((new_cap, 4), -1, dtype=np.int32)
        last = np.full(new_cap, -1, dtype=np.int8)
        visited = np.zeros(new_cap, dtype=np.uint8)
        missing = np.zeros(new_cap, dtype=np.int8)
        parent[: self.cap] = np.asarray(self.parent)
        child[: self.cap] = np.asarray(self.child)
        last[: self.cap] = np.asarray(self.last)
        visited[: self.cap] = np.asarray(self.visited)
        missing[: self.cap] = np.asarray(self.missing)
        self.parent = parent
        self.child = child
        self.last = last
        self.visited = visited
        self.missing = missing
        self.cap = new_cap

    cdef Py_ssize_t advance(self, Py_ssize_t node, int letter):
        cdef Py_ssize_t nxt
        if node != 0 and self.last[node] == C_F2_INV[letter]:
            return self.parent[node]
        nxt = self.child[node, letter]
        if nxt >= 0:
            return nxt
        if self.size == self.cap:
            self._grow()
        nxt = self.size
        self.size += 1
        self.parent[nxt] = <cnp.int32_t>node
        self.last[nxt] = <cnp.int8_t>letter
        self.child[node, letter] = <cnp.int32_t>nxt
        return nxt

    cdef inline Py_ssize_t peek(self, Py_ssize_t node, int letter) nogil:
        if node != 0 and self.last[node] == C_F2_INV[letter]:
            return self.parent[node]
        return self.child[node, letter]

    cdef Py_ssize_t lookup(self, Py_ssize_t node, cnp.int8_t[::1] word) nogil:
        cdef Py_ssize_t i
        for i in range(word.shape[0]):
            node = self.peek(node, word[i])
            if node < 0:
                return -1
        return node

    cdef bint lookup_visited(self, Py_ssize_t node, cnp.int8_t[::1] word) nogil:
        node = self.lookup(node, word)
        return node >= 0 and self.visited[node] != 0


def f2_accumulate(atom_idx, offsets, letters, checkpoints, probe_words,
                  bint track_boundary):
    """Checkpoint statistics for a free-group walk (directions = letters)."""
    cdef cnp.int32_t[::1] steps = np.ascontiguousarray(atom_idx, dtype=np.int32)
    cdef cnp.int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.int8_t[::1] let = np.ascontiguousarray(letters, dtype=np.int8)
    cdef cnp.int64_t[::1] cks = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef Py_ssize_t n = steps.shape[0]
    if cks.shape[0] == 0 or cks[cks.shape[0] - 1] != n:
        raise ValueError("checkpoint list must end at the step count")
    cdef Py_ssize_t npb = len(probe_words)
    probe_fwd = [np.ascontiguousarray(w, dtype=np.int8) for w in probe_words]
    probe_inv = [
        np.array([F2_INV[c] for c in reversed(w)], dtype=np.int8) for w in probe_words
    ]
    cdef Py_ssize_t nk = cks.shape[0]
    out_range = np.zeros(nk, dtype=np.int64)
    out_boundary = np.zeros(nk, dtype=np.int64)
    out_dirs = np.zeros((nk, 4), dtype=np.int64)
    out_probes = np.zeros((nk, npb), dtype=np.int64)
    cdef cnp.int64_t[::1] o_r = out_range
    cdef cnp.int64_t[::1] o_b = out_boundary
    cdef cnp.int64_t[:, ::1] o_d = out_dirs
    cdef cnp.int64_t[:, ::1] o_p = out_probes

    cdef _Trie trie = _Trie()
    cdef Py_ssize_t node = 0, y
    cdef i64 range_size = 0, boundary = 0
    cdef i64[4] dir_counts
    cdef cnp.int64_t[::1] probe_counts = np.zeros(max(npb, 1), dtype=np.int64)
    cdef Py_ssize_t step, pos, j, next_ck = 0
    cdef int a, letter, miss
    dir_counts[0] = dir_counts[1] = dir_counts[2] = dir_counts[3] = 0

    for step in range(n):
        a = steps[step]
        for pos in range(off[a], off[a + 1]):
            node = trie.advance(node, let[pos])
        if trie.visited[node] == 0:
            trie.visited[node] = 1
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
                trie.missing[node] = <cnp.int8_t>miss
                if miss > 0:
                    boundary += 1
            for letter in range(4):
                y = trie.peek(node, C_F2_INV[letter])
                if not (y >= 0 and trie.visited[y]):
                    dir_counts[letter] += 1
                y = trie.peek(node, letter)
                if y >= 0 and trie.visited[y]:
                    dir_counts[letter] -= 1
            for j in range(npb):
                if not trie.lookup_visited(node, probe_inv[j]):
                    probe_counts[j] += 1
                if trie.lookup_visited(node, probe_fwd[j]):
                    probe_counts[j] -= 1
        while next_ck < nk and cks[next_ck] == step + 1:
            o_r[next_ck] = range_size
            o_b[next_ck] = boundary
            for j in range(4):
                o_d[next_ck, j] = dir_counts[j]
            for j in range(npb):
                o_p[next_ck, j] = probe_counts[j]
            next_ck += 1
    return out_range, out_boundary, out_dirs, out_probes


cdef class F2EscapeState:
    """Mutable per-trajectory state threaded through escape chunks."""

    cdef public object target
    cdef cnp.int8_t[::1] _target
    cdef cnp.int8_t[::1] stack
    cdef Py_ssize_t depth
    cdef Py_ssize_t cp
    cdef public long long hit_step
    cdef public long long steps
    cdef public bint done

    def __init__(self, target_word):
        self.target = np.ascontiguousarray(target_word, dtype=np.int8)
        self._target = self.target
        self.stack = np.zeros(256, dtype=np.int8)
        self.depth = 0
        self.cp = 0
        self.hit_step = -1
        self.steps = 0
        self.done = False


def f2_escape_chunk(F2EscapeState state, atom_idx, offsets, letters,
                    i64 stop_distance):
    """Feed one chunk of atoms; stops on hit or once provably escaped."""
    if state.done:
        return True
    cdef cnp.int32_t[::1] steps = np.ascontiguousarray(atom_idx, dtype=np.int32)
    cdef cnp.int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.int8_t[::1] let = np.ascontiguousarray(letters, dtype=np.int8)
    cdef cnp.int8_t[::1] target = state._target
    cdef Py_ssize_t tlen = target.shape[0]
    cdef Py_ssize_t i, pos, depth = state.depth, cp = state.cp
    cdef int a, letter
    cdef cnp.int8_t[::1] stack = state.stack
    for i in range(steps.shape[0]):
        a = steps[i]
        for pos in range(off[a], off[a + 1]):
            letter = let[pos]
            if depth > 0 and stack[depth - 1] == C_F2_INV[letter]:
                depth -= 1
                if cp > depth:
                    cp = depth
            else:
                if depth == stack.shape[0]:
                    grown = np.zeros(stack.shape[0] * 2, dtype=np.int8)
                    grown[: stack.shape[0]] = np.asarray(stack)
                    state.stack = grown
                    stack = state.stack
                if cp == depth and cp < tlen and target[cp] == letter:
                    cp += 1
                stack[depth] = <cnp.int8_t>letter
                depth += 1
        state.steps += 1
        if depth == tlen and cp == tlen:
            state.hit_step = state.steps
            state.done = True
            break
        if (depth - cp) + (tlen - cp) > stop_distance:
            state.done = True
            break
    state.depth = depth
    state.cp = cp
    return state.done
