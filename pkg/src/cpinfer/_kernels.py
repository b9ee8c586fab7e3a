"""Compiled inner loops for greedy detection and the block-model Gibbs sampler.

Each kernel reseeds numba's generator (one state per thread) from its
``seed`` argument, so a call is a pure function of its inputs.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _t(n, m, k, m_pp):
    big_n = n * (n - 1) // 2
    n1 = big_n - (n - k) * (n - k - 1) // 2
    if n1 <= 0 or n1 >= big_n or m <= 0 or m >= big_n:
        return -np.inf
    a_bar = m / big_n
    d_bar = n1 / big_n
    num = (m - m_pp) - a_bar * n1
    return num / (big_n * math.sqrt(a_bar * (1.0 - a_bar) * d_bar * (1.0 - d_bar)))


@njit(cache=True, nogil=True)
def _periphery_counts(indptr, indices, c):
    n = c.shape[0]
    peri = np.zeros(n, dtype=np.int64)
    m_pp2 = 0
    for i in range(n):
        cnt = 0
        for p in range(indptr[i], indptr[i + 1]):
            if c[indices[p]] == 0:
                cnt += 1
        peri[i] = cnt
        if c[i] == 0:
            m_pp2 += cnt
    return peri, m_pp2 // 2


@njit(cache=True, nogil=True)
def greedy_toggle(indptr, indices, c, seed, max_passes):
    """Single-node toggle hill climb; ``c`` is modified in place.

    Returns (T, passes, accepted swaps).
    """
    np.random.seed(seed)
    n = c.shape[0]
    m = indices.shape[0] // 2
    peri, m_pp = _periphery_counts(indptr, indices, c)
    k = 0
    for i in range(n):
        k += c[i]
    t = _t(n, m, k, m_pp)
    passes = 0
    accepted = 0
    while passes < max_passes:
        passes += 1
        order = np.random.permutation(n)
        changed = False
        for u in order:
            if c[u] == 1:
                k2 = k - 1
                m_pp2 = m_pp + peri[u]
            else:
                k2 = k + 1
                m_pp2 = m_pp - peri[u]
            if k2 < 1 or k2 > n - 2:
                continue
            t2 = _t(n, m, k2, m_pp2)
            if t2 > t:
                step = 1 if c[u] == 1 else -1
                for p in range(indptr[u], indptr[u + 1]):
                    peri[indices[p]] += step
                c[u] = 1 - c[u]
                k = k2
                m_pp = m_pp2
                t = t2
                accepted += 1
                changed = True
        if not changed:
            break
    return t, passes, accepted


@njit(cache=True, nogil=True)
def greedy_exchange(indptr, indices, c, seed, max_passes):
    """Fixed-k hill climb over core/periphery exchanges; ``c`` modified in place.

    Each visited node is paired with the opposite-label partner giving the
    largest drop in periphery-periphery edges.
    """
    np.random.seed(seed)
    n = c.shape[0]
    m = indices.shape[0] // 2
    peri, m_pp = _periphery_counts(indptr, indices, c)
    k = 0
    for i in range(n):
        k += c[i]
    t = _t(n, m, k, m_pp)
    adj_mark = np.zeros(n, dtype=np.int64)
    passes = 0
    accepted = 0
    while passes < max_passes:
        passes += 1
        order = np.random.permutation(n)
        changed = False
        for u in order:
            side = 1 - c[u]
            for p in range(indptr[u], indptr[u + 1]):
                adj_mark[indices[p]] = 1
            # score of partner w: peri[w] + A_uw when w is periphery, -peri[w] when core
            best_w = -1
            best_score = -(1 << 60)
            for w in range(n):
                if c[w] != side:
                    continue
                if side == 0:
                    s = peri[w] + adj_mark[w]
                else:
                    s = -peri[w] + adj_mark[w]
                if s > best_score:
                    best_score = s
                    best_w = w
            for p in range(indptr[u], indptr[u + 1]):
                adj_mark[indices[p]] = 0
            if best_w < 0:
                continue
            if c[u] == 1:
                x, v = u, best_w
            else:
                x, v = best_w, u
            a_xv = 0
            for p in range(indptr[x], indptr[x + 1]):
                if indices[p] == v:
                    a_xv = 1
                    break
            m_pp2 = m_pp + peri[x] - peri[v] - a_xv
            t2 = _t(n, m, k, m_pp2)
            if t2 > t:
                for p in range(indptr[x], indptr[x + 1]):
                    peri[indices[p]] += 1
                c[x] = 0
                for p in range(indptr[v], indptr[v + 1]):
                    peri[indices[p]] -= 1
                c[v] = 1
                m_pp = m_pp2
                t = t2
                accepted += 1
                changed = True
        if not changed:
            break
    return t, passes, accepted


@njit(cache=True, nogil=True)
def gibbs_sbm(indptr, indices, c, iters, burn_in, seed, max_attempts, fallback_sort):
    """Two-block Poisson SBM Gibbs sampler with ordered block rates.

    Returns (core frequency after burn-in, k trace, rate trace, fallbacks).
    A negative fallback count means the ordering could not be met and
    ``fallback_sort`` was disabled.
    """
    np.random.seed(seed)
    n = c.shape[0]
    m = indices.shape[0] // 2
    deg = np.diff(indptr)
    core_nbrs = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            core_nbrs[i] += c[indices[p]]
    k = 0
    for i in range(n):
        k += c[i]
    freq = np.zeros(n, dtype=np.float64)
    k_trace = np.zeros(iters, dtype=np.int64)
    rates = np.zeros((iters, 3), dtype=np.float64)
    fallbacks = 0
    for it in range(iters):
        e11_2 = 0
        e12 = 0
        for i in range(n):
            if c[i] == 1:
                e11_2 += core_nbrs[i]
                e12 += deg[i] - core_nbrs[i]
        e11 = e11_2 // 2
        e22 = m - e11 - e12
        n11 = max(k * (k - 1) // 2, 1)
        n12 = max(k * (n - k), 1)
        n22 = max((n - k) * (n - k - 1) // 2, 1)
        ok = False
        p11 = p12 = p22 = 0.0
        for _ in range(max_attempts):
            p11 = np.random.gamma(e11 + 1.0, 1.0 / n11)
            p12 = np.random.gamma(e12 + 1.0, 1.0 / n12)
            p22 = np.random.gamma(e22 + 1.0, 1.0 / n22)
            if p11 > p12 and p12 > p22:
                ok = True
                break
        if not ok:
            if not fallback_sort:
                return freq, k_trace, rates, -1
            fallbacks += 1
            a = np.sort(np.array([p11, p12, p22]))
            p11, p12, p22 = a[2], a[1], a[0]
        rates[it, 0] = p11
        rates[it, 1] = p12
        rates[it, 2] = p22
        l_cc = math.log(p11 / p12) if p12 > 0 else 0.0
        l_cp = math.log(p12 / p22) if p22 > 0 else 0.0
        for u in np.random.permutation(n):
            k_u = k - c[u]
            e1 = core_nbrs[u]
            e0 = deg[u] - e1
            logit = e1 * l_cc + e0 * l_cp - k_u * (p11 - p12) - (n - 1 - k_u) * (p12 - p22)
            if logit >= 0:
                prob = 1.0 / (1.0 + math.exp(-logit))
            else:
                z = math.exp(logit)
                prob = z / (1.0 + z)
            new = 1 if np.random.random() < prob else 0
            if new != c[u]:
                step = 1 if new == 1 else -1
                for p in range(indptr[u], indptr[u + 1]):
                    core_nbrs[indices[p]] += step
                c[u] = new
                k += step
        k_trace[it] = k
        if it >= burn_in:
            for i in range(n):
                freq[i] += c[i]
    return freq, k_trace, rates, fallbacks
