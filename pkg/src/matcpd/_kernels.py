"""Compiled inner loop for multiplier-bootstrap statistics.

For one replicate with multipliers e, the bootstrap CUSUM at epoch n is

    w_n * [ R_n / (N - n) - L_n / n ]
    L_n = sum_{i<=n} e_i X_i - (sum_{i<=n} e_i) * mean(X_1..X_n)
    R_n = sum_{i>n}  e_i X_i - (sum_{i>n}  e_i) * mean(X_{n+1}..X_N)

which only needs running sums of e_i X_i, X_i and e_i. All four norms are
accumulated in the same sweep, so the cost per replicate is O(N p).
"""

import numpy as np
from numba import njit

# column order of the statistics array
COL_MODE1, COL_MODE2, COL_DOT, COL_MAX = range(4)


@njit(cache=True, nogil=True)
def _topk_sum(buf, m, k):
    """Sum of the k largest of buf[:m] and the k-th largest; reorders buf."""
    lo = 0
    hi = m - 1
    kk = k - 1
    while lo < hi:
        pivot = buf[(lo + hi) >> 1]
        i = lo
        j = hi
        while i <= j:
            while buf[i] > pivot:
                i += 1
            while buf[j] < pivot:
                j -= 1
            if i <= j:
                t = buf[i]
                buf[i] = buf[j]
                buf[j] = t
                i += 1
                j -= 1
        if kk <= j:
            hi = j
        elif kk >= i:
            lo = i
        else:
            break
    s = 0.0
    for t in range(k):
        s += buf[t]
    return s, buf[kk]


@njit(cache=True, nogil=True)
def bootstrap_statistics(X, p1, p2, E, nu, gamma, k, want_dot, out):
    """Fill ``out[b]`` with the four bootstrap statistics of replicate b.

    X : (N, p1*p2) row-major vectorised observations
    E : (B, N) multipliers
    out : (B, 4) output, columns [mode1, mode2, dot, max]
    """
    N, p = X.shape
    B = E.shape[0]
    totX = np.zeros(p)
    for i in range(N):
        for j in range(p):
            totX[j] += X[i, j]
    # epoch weights, including the gamma rescaling relative to gamma = 0.5
    wts = np.zeros(N + 1)
    for n in range(nu, N - nu + 1):
        wts[n] = np.sqrt(n * (N - n) / N)
        if gamma != 0.5:
            wts[n] *= (n * (N - n) / (N * N)) ** (0.5 - gamma)
    seX = np.empty(p)
    sX = np.empty(p)
    teX = np.empty(p)
    sq = np.empty(p)
    cand = np.empty(p)
    cols = np.empty(p2)
    for b in range(B):
        e = E[b]
        te = 0.0
        for j in range(p):
            teX[j] = 0.0
            seX[j] = 0.0
            sX[j] = 0.0
        for i in range(N):
            ei = e[i]
            te += ei
            for j in range(p):
                teX[j] += ei * X[i, j]
        se = 0.0
        m1 = 0.0
        m2 = 0.0
        md = 0.0
        mx = 0.0
        thr = 0.0
        for n in range(1, N - nu + 1):
            ei = e[n - 1]
            se += ei
            for j in range(p):
                x = X[n - 1, j]
                seX[j] += ei * x
                sX[j] += x
            if n < nu:
                continue
            w = wts[n]
            a1 = w / (N - n)
            a2 = w * (te - se) / ((N - n) * (N - n))
            a3 = w / n
            a4 = w * se / (n * n)
            al = -(a1 + a3)
            be = a2 + a4
            for j in range(p):
                v = a1 * teX[j] - a2 * totX[j] + al * seX[j] + be * sX[j]
                sq[j] = v * v
            for c in range(p2):
                cols[c] = 0.0
            j = 0
            rmax = 0.0
            for r in range(p1):
                rs = 0.0
                for c in range(p2):
                    v = sq[j]
                    rs += v
                    cols[c] += v
                    j += 1
                if rs > rmax:
                    rmax = rs
            if rmax > m1:
                m1 = rmax
            cm = 0.0
            for c in range(p2):
                if cols[c] > cm:
                    cm = cols[c]
            if cm > m2:
                m2 = cm
            amax = 0.0
            nc = 0
            for j in range(p):
                v = sq[j]
                amax = max(amax, v)
                cand[nc] = v
                nc += v >= thr
            if amax > mx:
                mx = amax
            if want_dot:
                # candidates above a fraction of the previous epoch's k-th
                # largest value; fall back to the full vector if too few
                if nc < k:
                    for q in range(p):
                        cand[q] = sq[q]
                    nc = p
                s, kth = _topk_sum(cand, nc, k)
                thr = 0.8 * kth
                if s > md:
                    md = s
        out[b, 0] = np.sqrt(m1)
        out[b, 1] = np.sqrt(m2)
        out[b, 2] = np.sqrt(md)
        out[b, 3] = np.sqrt(mx)
