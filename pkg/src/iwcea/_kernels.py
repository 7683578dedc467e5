"""Compiled inner loops: first-fit decoding and the steady-state step.

Everything here works on plain arrays so the same code serves the
single-step API and the full run loop. Random draws come from a numpy
``Generator`` passed in by the caller; numba consumes it in the same order
and with the same algorithms as numpy, so results do not depend on which
entry point drove the run.
"""

import numpy as np
from numba import njit

# decoder key
KEY_BIASED_PROFIT = 0
KEY_PSEUDO_UTILITY = 1

# weight samplers
SAMPLE_UNIFORM = 0
SAMPLE_LOGNORMAL = 1

# mutation policies
MUTATE_ONE = 0
MUTATE_PER_GENE = 1

_ZOBRIST_SEED = 0x9E3779B97F4A7C15


def zobrist_keys(n):
    """Fixed per-position 64-bit keys; the phenotype hash XORs those of set bits."""
    rng = np.random.Generator(np.random.Philox(_ZOBRIST_SEED))
    return rng.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)


@njit(cache=True)
def decode_order(key, tier2, tier2_key):
    """Descending ``key`` order, ties by ascending index.

    Items flagged in ``tier2`` go after all others, ordered by descending
    ``tier2_key``.
    """
    n = key.size
    n2 = 0
    for j in range(n):
        if tier2[j]:
            n2 += 1
    if n2 == 0:
        return np.argsort(-key, kind="mergesort")
    idx1 = np.empty(n - n2, dtype=np.int64)
    idx2 = np.empty(n2, dtype=np.int64)
    a = 0
    c = 0
    for j in range(n):
        if tier2[j]:
            idx2[c] = j
            c += 1
        else:
            idx1[a] = j
            a += 1
    k1 = np.empty(idx1.size)
    for t in range(idx1.size):
        k1[t] = -key[idx1[t]]
    k2 = np.empty(n2)
    for t in range(n2):
        k2[t] = -tier2_key[idx2[t]]
    order = np.empty(n, dtype=np.int64)
    o1 = np.argsort(k1, kind="mergesort")
    o2 = np.argsort(k2, kind="mergesort")
    for t in range(idx1.size):
        order[t] = idx1[o1[t]]
    for t in range(n2):
        order[idx1.size + t] = idx2[o2[t]]
    return order


@njit(cache=True)
def first_fit(order, rT, b, p, zkeys, x):
    """Take items in ``order`` while every residual capacity stays >= 0.

    ``rT`` is the consumption matrix item-major (n x m). Writes the 0/1
    vector into ``x`` and returns ``(fitness, hash)``; fitness is summed in
    ascending item order.
    """
    n, m = rT.shape
    resid = b.copy()
    h = np.uint64(0)
    for t in range(n):
        j = order[t]
        fits = True
        for i in range(m):
            if rT[j, i] > resid[i]:
                fits = False
                break
        if fits:
            for i in range(m):
                resid[i] -= rT[j, i]
            x[j] = 1
            h ^= zkeys[j]
        else:
            x[j] = 0
    f = 0.0
    for j in range(n):
        if x[j]:
            f += p[j]
    return f, h


@njit(cache=True)
def decode(w, p, rT, b, inv_den, tier2, key_kind, zkeys, x):
    n = p.size
    biased = np.empty(n)
    for j in range(n):
        biased[j] = p[j] * w[j]
    if key_kind == KEY_PSEUDO_UTILITY:
        key = np.empty(n)
        for j in range(n):
            key[j] = biased[j] * inv_den[j]
        order = decode_order(key, tier2, biased)
    else:
        order = decode_order(biased, tier2, biased)
    return first_fit(order, rT, b, p, zkeys, x)


@njit(cache=True)
def sample_gene(rng, j, sampler, upper, log1pg):
    if sampler == SAMPLE_UNIFORM:
        return rng.random() * upper[j]
    return np.exp(rng.standard_normal() * log1pg)


@njit(cache=True)
def mutate_inplace(rng, w, sampler, policy, rate, upper, log1pg):
    n = w.size
    if policy == MUTATE_ONE:
        j = rng.integers(0, n)
        w[j] = sample_gene(rng, j, sampler, upper, log1pg)
    else:
        for j in range(n):
            if rng.random() < rate:
                w[j] = sample_gene(rng, j, sampler, upper, log1pg)


@njit(cache=True)
def tournament(rng, F, size):
    """Binary tournament over a pool of two distinct members; ties go to the first drawn."""
    if size == 1:
        return 0
    a = rng.integers(0, size)
    c = rng.integers(0, size - 1)
    if c >= a:
        c += 1
    if F[a] >= F[c]:
        return a
    return c


@njit(cache=True)
def find_duplicate(X, H, size, x, h):
    n = x.size
    for i in range(size):
        if H[i] == h:
            same = True
            for j in range(n):
                if X[i, j] != x[j]:
                    same = False
                    break
            if same:
                return i
    return -1


@njit(cache=True)
def worst_index(F, size):
    k = 0
    for i in range(1, size):
        if F[i] < F[k]:
            k = i
    return k


@njit(cache=True)
def attempt(rng, W, X, F, H, size, p, rT, b, inv_den, tier2, key_kind, zkeys,
            sampler, policy, rate, upper, log1pg, cw, cx, best):
    """One select/crossover/mutate/decode/replace attempt.

    ``cw``/``cx`` are child buffers. ``best`` holds ``[f(S*), index of the
    member equal to S*]`` and is updated in place when the child improves it.
    Returns the replaced index, or -1 if the child was a duplicate.
    """
    n = p.size
    i1 = tournament(rng, F, size)
    i2 = tournament(rng, F, size)
    for j in range(n):
        if rng.random() < 0.5:
            cw[j] = W[i1, j]
        else:
            cw[j] = W[i2, j]
    mutate_inplace(rng, cw, sampler, policy, rate, upper, log1pg)
    f, h = decode(cw, p, rT, b, inv_den, tier2, key_kind, zkeys, cx)
    if find_duplicate(X, H, size, cx, h) >= 0:
        return -1
    k = worst_index(F, size)
    for j in range(n):
        W[k, j] = cw[j]
        X[k, j] = cx[j]
    F[k] = f
    H[k] = h
    if f > best[0]:
        best[0] = f
        best[1] = k
    return k


@njit(cache=True)
def run_loop(rng, W, X, F, H, size, p, rT, b, inv_den, tier2, key_kind, zkeys,
             sampler, policy, rate, upper, log1pg, t_max, reject_cap,
             best, best_w, best_x, counters):
    """Steady-state loop until ``t_max`` accepted children or ``reject_cap``
    consecutive duplicates.

    ``counters`` is ``[t, rejected_total]`` and is updated in place so the
    caller can resume. ``best_w``/``best_x`` receive a copy of S* whenever it
    improves (the member itself may later be replaced). Returns True if the
    rejection cap stopped the run.
    """
    n = p.size
    cw = np.empty(n)
    cx = np.zeros(n, dtype=np.uint8)
    consecutive = 0
    while counters[0] < t_max:
        f_before = best[0]
        k = attempt(rng, W, X, F, H, size, p, rT, b, inv_den, tier2, key_kind, zkeys,
                    sampler, policy, rate, upper, log1pg, cw, cx, best)
        if k < 0:
            counters[1] += 1
            consecutive += 1
            if consecutive >= reject_cap:
                return True
            continue
        consecutive = 0
        counters[0] += 1
        if best[0] > f_before:
            for j in range(n):
                best_w[j] = W[k, j]
                best_x[j] = X[k, j]
    return False
