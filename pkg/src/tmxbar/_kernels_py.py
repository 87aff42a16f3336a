"""Pure-numpy training kernel.

Fallback used when the compiled extension is unavailable. Every
stochastic decision is a pure function of (epoch_key, position, clause,
literal) through the splitmix64 finalizer, so this kernel and the
compiled one produce bit-identical states, actions and weights.

Decision contract, shared with the compiled kernel:

    evt = mix64_pair(epoch_key, t)            per presentation position
    mix64_pair(evt, 0) % (m-1)                negative class pick
    mix64(mix64_pair(evt, 1) + j*GOLDEN)      clause gate, positive slot
    mix64(mix64_pair(evt, 2) + j*GOLDEN)      clause gate, negative slot
    mix64(mix64_pair(evt, 4 + 2j + slot) + k*GOLDEN)
                                              state-walk draw, literal k

A draw fires when its 64-bit hash is below an integer threshold
floor(p * 2^64); gate thresholds come from exact integer division, the
two specificity thresholds are precomputed by the caller. No float
comparison is involved anywhere, so evaluation order cannot matter.
"""

from __future__ import annotations

import numpy as np

from .logic import pack_bits
from .rng import GOLDEN, MASK64, mix64, mix64_array, mix64_pair

BACKEND = "python"

_U64_SPAN = 1 << 64


def gate_threshold(num: int, den: int) -> int:
    """floor(num/den * 2^64) for 0 <= num <= den, capped at 2^64 - 1."""
    if num >= den:
        return MASK64
    if num <= 0:
        return 0
    return (num << 64) // den


def float_threshold(p: float) -> int:
    """Integer acceptance threshold for a float probability."""
    if p <= 0.0:
        return 0
    scaled = p * float(_U64_SPAN)
    if scaled >= float(_U64_SPAN):
        return MASK64
    return int(scaled)


def _type_i(
    state: np.ndarray, rows: np.ndarray, c: np.ndarray, x: np.ndarray,
    bases: np.ndarray, gold_k: np.ndarray, thr_up: np.uint64, thr_dn: np.uint64,
) -> None:
    """Stochastic state walk on the selected clause rows (in place)."""
    u = mix64_array(bases[:, None] + gold_k[None, :])
    cx = c[:, None] & x[None, :]
    inc = cx & (u < thr_up)
    dec = ~cx & (u < thr_dn)
    st = state[rows] + (inc.astype(np.int8) - dec.astype(np.int8))
    np.clip(st, 1, 256, out=st)
    state[rows] = st


def _type_ii(state: np.ndarray, rows: np.ndarray, x: np.ndarray) -> None:
    """Deterministic include push on 0-literals of firing clauses."""
    st = state[rows]
    st += ((~x[None, :]) & (st <= 128)).astype(np.int16)
    state[rows] = st


def train_epoch(
    state: np.ndarray,            # int16 (n_clauses, K), in/out
    actions_packed: np.ndarray,   # uint64 (n_clauses, W), in/out
    weights: np.ndarray,          # int32 (m, n_clauses), in/out
    x_packed: np.ndarray,         # uint64 (N, W)
    x_bool: np.ndarray,           # uint8 (N, K)
    labels: np.ndarray,           # int32 (N,)
    order: np.ndarray,            # int64 (N,), presentation order
    t_threshold: int,
    thr_up: int,
    thr_dn: int,
    epoch_key: int,
) -> None:
    n_clauses, k_literals = state.shape
    m = weights.shape[0]
    den = 2 * t_threshold
    gold_n = (np.uint64(GOLDEN) * np.arange(n_clauses, dtype=np.uint64))
    gold_k = (np.uint64(GOLDEN) * np.arange(k_literals, dtype=np.uint64))
    thr_up = np.uint64(thr_up)
    thr_dn = np.uint64(thr_dn)

    for t in range(order.shape[0]):
        idx = int(order[t])
        y = int(labels[idx])
        evt = mix64_pair(epoch_key, t)
        me = mix64(evt)
        xw = x_packed[idx]
        x = x_bool[idx] != 0

        clauses = ~((actions_packed & ~xw[None, :]).any(axis=1))

        # positive slot: class y, push v_y up
        wy = weights[y]
        vy = int(wy[clauses].sum(dtype=np.int64))
        vc = max(-t_threshold, min(t_threshold, vy))
        gate = np.uint64(gate_threshold(t_threshold - vc, den))
        u = mix64_array(np.uint64(mix64(me ^ 1)) + gold_n)
        sel = u < gate
        pos_sign = wy >= 0
        j1 = np.nonzero(sel & pos_sign)[0]
        j2 = np.nonzero(sel & ~pos_sign & clauses)[0]
        if j1.size:
            roles = (np.uint64(4) + np.uint64(2) * j1.astype(np.uint64))
            bases = mix64_array(np.uint64(me) ^ roles)
            _type_i(state, j1, clauses[j1], x, bases, gold_k, thr_up, thr_dn)
        if j2.size:
            _type_ii(state, j2, x)
        weights[y, sel & clauses] += 1
        changed = np.concatenate([j1, j2])
        if changed.size:
            actions_packed[changed] = pack_bits(state[changed] > 128)

        # negative slot: sampled class q != y, push v_q down
        q = int(mix64(me)) % (m - 1)
        if q >= y:
            q += 1
        wq = weights[q]
        vq = int(wq[clauses].sum(dtype=np.int64))
        vc = max(-t_threshold, min(t_threshold, vq))
        gate = np.uint64(gate_threshold(t_threshold + vc, den))
        u = mix64_array(np.uint64(mix64(me ^ 2)) + gold_n)
        sel = u < gate
        neg_sign = wq >= 0
        j1 = np.nonzero(sel & ~neg_sign)[0]
        j2 = np.nonzero(sel & neg_sign & clauses)[0]
        if j1.size:
            roles = (np.uint64(5) + np.uint64(2) * j1.astype(np.uint64))
            bases = mix64_array(np.uint64(me) ^ roles)
            _type_i(state, j1, clauses[j1], x, bases, gold_k, thr_up, thr_dn)
        if j2.size:
            _type_ii(state, j2, x)
        weights[q, sel & clauses] -= 1
        changed = np.concatenate([j1, j2])
        if changed.size:
            actions_packed[changed] = pack_bits(state[changed] > 128)
