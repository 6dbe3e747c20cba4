"""Numba-accelerated twins of the kernels in ``_kernels_numpy``.

Kept in lockstep with the numpy module: identical signatures, identical
comparison semantics. Selected at runtime via the HARDY_LAB_BACKEND flag
(see ``backend``).
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def max_triangle_defect(dist):
    n = dist.shape[0]
    worsts = np.full(n, -np.inf)
    args = np.zeros((n, 3), dtype=np.int64)
    for k in prange(n):
        w = -np.inf
        wi = 0
        wj = 0
        for i in range(n):
            for j in range(n):
                v = dist[i, j] - dist[i, k] - dist[k, j]
                if v > w:
                    w = v
                    wi = i
                    wj = j
        worsts[k] = w
        args[k, 0] = wi
        args[k, 1] = wj
        args[k, 2] = k
    kbest = int(np.argmax(worsts))
    return worsts[kbest], args[kbest, 0], args[kbest, 1], args[kbest, 2]


@njit(cache=True, parallel=True)
def doubling_ratios(dist, measure, radii):
    n = dist.shape[0]
    nr = radii.size
    out = np.empty((n, nr))
    for x in prange(n):
        order = np.argsort(dist[x], kind="mergesort")
        dsort = dist[x][order]
        csum = np.cumsum(measure[order])
        for ir in range(nr):
            lo = np.searchsorted(dsort, radii[ir], side="left")
            hi = np.searchsorted(dsort, 2.0 * radii[ir], side="left")
            m_lo = csum[lo - 1] if lo > 0 else 0.0
            m_hi = csum[hi - 1] if hi > 0 else 0.0
            out[x, ir] = m_hi / m_lo
    return out


@njit(cache=True, parallel=True)
def ball_masses(dist, measure, radii):
    n = dist.shape[0]
    nr = radii.size
    out = np.empty((n, nr))
    for x in prange(n):
        order = np.argsort(dist[x], kind="mergesort")
        dsort = dist[x][order]
        csum = np.cumsum(measure[order])
        for ir in range(nr):
            lo = np.searchsorted(dsort, radii[ir], side="left")
            out[x, ir] = csum[lo - 1] if lo > 0 else 0.0
    return out


@njit(cache=True, parallel=True)
def nontangential_max(abs_fields, dist, a, t_grid):
    nt = t_grid.size
    n = dist.shape[0]
    out = np.zeros(n)
    for x in prange(n):
        best = 0.0
        for it in range(nt):
            r = a * t_grid[it]
            for y in range(n):
                if dist[x, y] <= r and abs_fields[it, y] > best:
                    best = abs_fields[it, y]
        out[x] = best
    return out


@njit(cache=True, parallel=True)
def tangential_max(abs_fields, dist, gamma, t_grid):
    nt = t_grid.size
    n = dist.shape[0]
    out = np.zeros(n)
    for x in prange(n):
        best = 0.0
        for it in range(nt):
            t = t_grid[it]
            for y in range(n):
                v = abs_fields[it, y] * (1.0 + dist[x, y] / t) ** (-gamma)
                if v > best:
                    best = v
        out[x] = best
    return out


@njit(cache=True)
def hl_sup_averages(dist, measure, g):
    # sequential: different centers z race on field[y] under prange
    n = dist.shape[0]
    field = np.full(n, -np.inf)
    gm = g * measure
    for z in range(n):
        order = np.argsort(dist[z], kind="mergesort")
        dsort = dist[z][order]
        csum_g = np.cumsum(gm[order])
        csum_m = np.cumsum(measure[order])
        suffmax = np.empty(n)
        run = -np.inf
        for i in range(n - 1, -1, -1):
            valid = i == n - 1 or dsort[i + 1] > dsort[i]
            if valid:
                v = csum_g[i] / csum_m[i]
                if v > run:
                    run = v
            suffmax[i] = run
        for i in range(n):
            y = order[i]
            if suffmax[i] > field[y]:
                field[y] = suffmax[i]
    return field
