"""Numba kernels for random-walk generation and skip-gram negative sampling.

Walk generation is deterministic regardless of thread count (each walk owns
a counter-derived RNG stream). The trainer is deterministic only in the
serial variant; the parallel variant is lock-free hogwild.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_U64 = np.uint64
_MIX_A = _U64(0x9E3779B97F4A7C15)
_MIX_B = _U64(0xBF58476D1CE4E5B9)
_MIX_C = _U64(0x94D049BB133111EB)
_MUL = _U64(0x2545F4914F6CDD1D)


@njit(inline="always")
def _splitmix64(x):
    x = (x + _MIX_A) & _U64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> _U64(30))) * _MIX_B) & _U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> _U64(27))) * _MIX_C) & _U64(0xFFFFFFFFFFFFFFFF)
    return x, z ^ (z >> _U64(31))


@njit(inline="always")
def _xorshift(state):
    state ^= state << _U64(13)
    state &= _U64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> _U64(7)
    state ^= state << _U64(17)
    state &= _U64(0xFFFFFFFFFFFFFFFF)
    return state, (state * _MUL) & _U64(0xFFFFFFFFFFFFFFFF)


@njit(inline="always")
def _walk_state(seed, walk_id):
    state = _U64(seed) ^ (_U64(walk_id) * _MIX_B)
    state, z = _splitmix64(state)
    if z == _U64(0):
        z = _MIX_A
    return z


@njit(cache=True, parallel=True)
def uniform_walks(indptr, indices, starts, walk_length, seed):
    n = starts.shape[0]
    walks = np.empty((n, walk_length), dtype=np.int32)
    for w in prange(n):
        state = _walk_state(seed, w)
        cur = starts[w]
        walks[w, 0] = cur
        for t in range(1, walk_length):
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg > 0:
                state, r = _xorshift(state)
                cur = indices[lo + int(r % _U64(deg))]
            walks[w, t] = cur
    return walks


@njit(inline="always")
def _is_neighbor(indptr, indices, u, x):
    lo = indptr[u]
    hi = indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] == x:
            return True
        if indices[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True, parallel=True)
def biased_walks(indptr, indices, starts, walk_length, p, q, seed):
    """Second-order walks with return parameter p and in-out parameter q."""
    n = starts.shape[0]
    walks = np.empty((n, walk_length), dtype=np.int32)
    inv_p = 1.0 / p
    inv_q = 1.0 / q
    for w in prange(n):
        state = _walk_state(seed, w)
        cur = starts[w]
        prev = -1
        walks[w, 0] = cur
        for t in range(1, walk_length):
            lo = indptr[cur]
            deg = indptr[cur + 1] - lo
            if deg == 0:
                walks[w, t] = cur
                continue
            if prev < 0:
                state, r = _xorshift(state)
                nxt = indices[lo + int(r % _U64(deg))]
            else:
                total = 0.0
                for k in range(deg):
                    cand = indices[lo + k]
                    if cand == prev:
                        total += inv_p
                    elif _is_neighbor(indptr, indices, prev, cand):
                        total += 1.0
                    else:
                        total += inv_q
                state, r = _xorshift(state)
                pick = (r >> _U64(11)) * (1.0 / 9007199254740992.0) * total
                acc = 0.0
                nxt = indices[lo + deg - 1]
                for k in range(deg):
                    cand = indices[lo + k]
                    if cand == prev:
                        acc += inv_p
                    elif _is_neighbor(indptr, indices, prev, cand):
                        acc += 1.0
                    else:
                        acc += inv_q
                    if pick < acc:
                        nxt = cand
                        break
            prev = cur
            cur = nxt
            walks[w, t] = cur
    return walks


SIGMOID_BINS = 1024
SIGMOID_MAX = 6.0


def sigmoid_table() -> np.ndarray:
    """Precomputed logistic values over [-SIGMOID_MAX, SIGMOID_MAX)."""
    x = (np.arange(SIGMOID_BINS, dtype=np.float64) * 2.0 * SIGMOID_MAX / SIGMOID_BINS) - SIGMOID_MAX
    return (1.0 / (1.0 + np.exp(-x))).astype(np.float32)


@njit(inline="always", fastmath=True)
def _train_pair(c_row, syn1, context, negatives, neg_table, sig, sig_scale, alpha, state, neu1e):
    dim = c_row.shape[0]
    table_size = neg_table.shape[0]
    zero = np.float32(0.0)
    one = np.float32(1.0)
    cap = np.float32(SIGMOID_MAX)
    for d in range(dim):
        neu1e[d] = zero
    for k in range(negatives + 1):
        if k == 0:
            target = context
            label = one
        else:
            state, r = _xorshift(state)
            target = neg_table[int(r % _U64(table_size))]
            if target == context:
                continue
            label = zero
        t_row = syn1[target]
        f = zero
        for d in range(dim):
            f += c_row[d] * t_row[d]
        if f >= cap:
            pred = one
        elif f <= -cap:
            pred = zero
        else:
            pred = sig[int((f + cap) * sig_scale)]
        g = (label - pred) * alpha
        for d in range(dim):
            neu1e[d] += g * t_row[d]
        for d in range(dim):
            t_row[d] += g * c_row[d]
    for d in range(dim):
        c_row[d] += neu1e[d]
    return state


@njit(cache=True, fastmath=True)
def train_sgns_serial(walks, syn0, syn1, window, negatives, epochs, alpha0, neg_table, sig, seed):
    n_walks, length = walks.shape
    dim = syn0.shape[1]
    neu1e = np.zeros(dim, dtype=np.float32)
    total = float(epochs * n_walks)
    state = _walk_state(seed, 0x5EED)
    sig_scale = np.float32(sig.shape[0] / (2.0 * SIGMOID_MAX))
    done = 0
    for _ in range(epochs):
        for w in range(n_walks):
            alpha = alpha0 * (1.0 - done / total)
            if alpha < alpha0 * 1e-4:
                alpha = alpha0 * 1e-4
            done += 1
            alpha32 = np.float32(alpha)
            for pos in range(length):
                c_row = syn0[walks[w, pos]]
                state, r = _xorshift(state)
                b = 1 + int(r % _U64(window))
                lo = pos - b if pos - b > 0 else 0
                hi = pos + b + 1 if pos + b + 1 < length else length
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    state = _train_pair(
                        c_row, syn1, walks[w, cpos], negatives, neg_table,
                        sig, sig_scale, alpha32, state, neu1e,
                    )


@njit(cache=True, parallel=True, fastmath=True)
def train_sgns_parallel(walks, syn0, syn1, window, negatives, epochs, alpha0, neg_table, sig, seed):
    n_walks, length = walks.shape
    dim = syn0.shape[1]
    total = float(epochs * n_walks)
    sig_scale = np.float32(sig.shape[0] / (2.0 * SIGMOID_MAX))
    for ep in range(epochs):
        for w in prange(n_walks):
            neu1e = np.zeros(dim, dtype=np.float32)
            state = _walk_state(seed + ep + 1, w)
            alpha = alpha0 * (1.0 - (ep * n_walks + w) / total)
            if alpha < alpha0 * 1e-4:
                alpha = alpha0 * 1e-4
            alpha32 = np.float32(alpha)
            for pos in range(length):
                c_row = syn0[walks[w, pos]]
                state, r = _xorshift(state)
                b = 1 + int(r % _U64(window))
                lo = pos - b if pos - b > 0 else 0
                hi = pos + b + 1 if pos + b + 1 < length else length
                for cpos in range(lo, hi):
                    if cpos == pos:
                        continue
                    state = _train_pair(
                        c_row, syn1, walks[w, cpos], negatives, neg_table,
                        sig, sig_scale, alpha32, state, neu1e,
                    )
