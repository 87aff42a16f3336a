# cython: language_level=3, boundscheck=False, wraparound=False
# cython: initializedcheck=False, cdivision=True
"""Compiled training kernel.

Mirrors the decision contract of the numpy fallback exactly (see
_kernels_py.py); the two produce bit-identical models. All randomness
is counter-hashed per (epoch_key, position, clause, literal), nothing
here consumes sequential generator state.
"""

import numpy as np

BACKEND = "compiled"

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

ctypedef unsigned long long u64

cdef u64 GOLD = 0x9E3779B97F4A7C15
cdef u64 MIX1 = 0xBF58476D1CE4E5B9
cdef u64 MIX2 = 0x94D049BB133111EB
cdef u64 U64_MAX = 0xFFFFFFFFFFFFFFFF


cdef inline u64 _mix64(u64 x) noexcept nogil:
    x = x + GOLD
    x ^= x >> 30
    x = x * MIX1
    x ^= x >> 27
    x = x * MIX2
    x ^= x >> 31
    return x


cdef inline u64 _gate_threshold(long long num, long long den) noexcept nogil:
    # floor(num/den * 2^64), capped; exact match of the Python helper
    if num >= den:
        return U64_MAX
    if num <= 0:
        return 0
    return <u64>(((<u128>num) << 64) / (<u128>den))


def gate_threshold(long long num, long long den):
    """Python-visible wrapper so tests can cross-check both backends."""
    return _gate_threshold(num, den)


cdef inline void _type_i(
    short* srow, const unsigned char* xrow, Py_ssize_t k_literals,
    bint c, u64 thr_up, u64 thr_dn, u64 base,
) noexcept nogil:
    cdef Py_ssize_t k
    cdef u64 u
    cdef short st
    for k in range(k_literals):
        u = _mix64(base + (<u64>k) * GOLD)
        st = srow[k]
        if c and xrow[k]:
            if u < thr_up and st < 256:
                srow[k] = st + 1
        else:
            if u < thr_dn and st > 1:
                srow[k] = st - 1


cdef inline void _type_ii(
    short* srow, const unsigned char* xrow, Py_ssize_t k_literals
) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(k_literals):
        if xrow[k] == 0 and srow[k] <= 128:
            srow[k] = srow[k] + 1


cdef inline void _repack_row(
    u64* arow, const short* srow, Py_ssize_t k_literals, Py_ssize_t words
) noexcept nogil:
    cdef Py_ssize_t w, b, k
    cdef u64 word
    for w in range(words):
        word = 0
        k = 64 * w
        b = 0
        while b < 64 and k + b < k_literals:
            if srow[k + b] > 128:
                word |= (<u64>1) << b
            b += 1
        arow[w] = word


def train_epoch(
    short[:, ::1] state,
    u64[:, ::1] actions_packed,
    int[:, ::1] weights,
    const u64[:, ::1] x_packed,
    const unsigned char[:, ::1] x_bool,
    const int[:] labels,
    const long long[:] order,
    long long t_threshold,
    u64 thr_up,
    u64 thr_dn,
    u64 epoch_key,
):
    cdef Py_ssize_t n_clauses = state.shape[0]
    cdef Py_ssize_t k_literals = state.shape[1]
    cdef Py_ssize_t words = actions_packed.shape[1]
    cdef Py_ssize_t n_samples = order.shape[0]
    cdef long long m = weights.shape[0]
    cdef long long den = 2 * t_threshold

    notx_arr = np.empty(words, dtype=np.uint64)
    cbuf_arr = np.empty(n_clauses, dtype=np.uint8)
    dirty_arr = np.zeros(n_clauses, dtype=np.uint8)
    cdef u64[::1] notx = notx_arr
    cdef unsigned char[::1] cbuf = cbuf_arr
    cdef unsigned char[::1] dirty = dirty_arr

    cdef Py_ssize_t t, idx, j, w
    cdef long long y, q, vy, vq, vc, wyj, wqj
    cdef u64 evt, me, gate_base, gate, u, upick
    cdef bint viol, c

    with nogil:
        for t in range(n_samples):
            idx = <Py_ssize_t>order[t]
            y = labels[idx]
            evt = _mix64(_mix64(epoch_key) ^ (<u64>t))
            me = _mix64(evt)

            for w in range(words):
                notx[w] = ~x_packed[idx, w]
            vy = 0
            for j in range(n_clauses):
                viol = 0
                for w in range(words):
                    if actions_packed[j, w] & notx[w]:
                        viol = 1
                        break
                cbuf[j] = not viol
                if cbuf[j]:
                    vy += weights[y, j]

            # positive slot: class y, push v_y up
            vc = vy
            if vc > t_threshold:
                vc = t_threshold
            elif vc < -t_threshold:
                vc = -t_threshold
            gate = _gate_threshold(t_threshold - vc, den)
            gate_base = _mix64(me ^ (<u64>1))
            for j in range(n_clauses):
                u = _mix64(gate_base + (<u64>j) * GOLD)
                if u < gate:
                    wyj = weights[y, j]
                    c = cbuf[j]
                    if wyj >= 0:
                        _type_i(&state[j, 0], &x_bool[idx, 0], k_literals,
                                c, thr_up, thr_dn,
                                _mix64(me ^ (<u64>(4 + 2 * j))))
                        dirty[j] = 1
                    elif c:
                        _type_ii(&state[j, 0], &x_bool[idx, 0], k_literals)
                        dirty[j] = 1
                    if c:
                        weights[y, j] = <int>(wyj + 1)

            # negative slot: sampled q != y, push v_q down
            upick = _mix64(me)
            q = <long long>(upick % (<u64>(m - 1)))
            if q >= y:
                q += 1
            vq = 0
            for j in range(n_clauses):
                if cbuf[j]:
                    vq += weights[q, j]
            vc = vq
            if vc > t_threshold:
                vc = t_threshold
            elif vc < -t_threshold:
                vc = -t_threshold
            gate = _gate_threshold(t_threshold + vc, den)
            gate_base = _mix64(me ^ (<u64>2))
            for j in range(n_clauses):
                u = _mix64(gate_base + (<u64>j) * GOLD)
                if u < gate:
                    wqj = weights[q, j]
                    c = cbuf[j]
                    if wqj < 0:
                        _type_i(&state[j, 0], &x_bool[idx, 0], k_literals,
                                c, thr_up, thr_dn,
                                _mix64(me ^ (<u64>(5 + 2 * j))))
                        dirty[j] = 1
                    elif c:
                        _type_ii(&state[j, 0], &x_bool[idx, 0], k_literals)
                        dirty[j] = 1
                    if c:
                        weights[q, j] = <int>(wqj - 1)

            for j in range(n_clauses):
                if dirty[j]:
                    _repack_row(&actions_packed[j, 0], &state[j, 0],
                                k_literals, words)
                    dirty[j] = 0
