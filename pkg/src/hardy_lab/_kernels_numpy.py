"""Pure-numpy reference implementations of the hot scan kernels.

Each function here has an njit twin in ``_kernels_numba``; the two must
agree bitwise on the comparisons they make (same strict/non-strict
inequalities), since downstream set arithmetic is exact.
"""

import numpy as np


def max_triangle_defect(dist):
    """Largest dist[i,j] - dist[i,k] - dist[k,j] over all triples.

    Returns (defect, i, j, k) for the worst triple; defect <= 0 means the
    triangle inequality holds everywhere.
    """
    n = dist.shape[0]
    worst = -np.inf
    arg = (0, 0, 0)
    for k in range(n):
        gap = dist - dist[:, k][:, None] - dist[k, :][None, :]
        ij = int(np.argmax(gap))
        i, j = divmod(ij, n)
        if gap[i, j] > worst:
            worst = gap[i, j]
            arg = (i, j, k)
    return float(worst), arg[0], arg[1], arg[2]


def doubling_ratios(dist, measure, radii):
    """mu(B(x,2r))/mu(B(x,r)) for every center x and every r in radii.

    Balls are open, so the count at radius r is the number of entries
    strictly below r.
    """
    n = dist.shape[0]
    out = np.empty((n, radii.size))
    for x in range(n):
        order = np.argsort(dist[x], kind="stable")
        dsort = dist[x][order]
        csum = np.cumsum(measure[order])
        lo = np.searchsorted(dsort, radii, side="left")
        hi = np.searchsorted(dsort, 2.0 * radii, side="left")
        m_lo = np.where(lo > 0, csum[np.maximum(lo - 1, 0)], 0.0)
        m_hi = np.where(hi > 0, csum[np.maximum(hi - 1, 0)], 0.0)
        out[x] = m_hi / m_lo
    return out


def ball_masses(dist, measure, radii):
    """mu(B(x,r)) for every center and every r (open balls)."""
    n = dist.shape[0]
    out = np.empty((n, radii.size))
    for x in range(n):
        order = np.argsort(dist[x], kind="stable")
        dsort = dist[x][order]
        csum = np.cumsum(measure[order])
        lo = np.searchsorted(dsort, radii, side="left")
        out[x] = np.where(lo > 0, csum[np.maximum(lo - 1, 0)], 0.0)
    return out


def nontangential_max(abs_fields, dist, a, t_grid):
    """max over t and over y with dist(x,y) <= a*t of abs_fields[t, y]."""
    n = dist.shape[0]
    out = np.full(n, -np.inf)
    for it in range(t_grid.size):
        allowed = dist <= a * t_grid[it]
        vals = np.where(allowed, abs_fields[it][None, :], -np.inf)
        np.maximum(out, vals.max(axis=1), out=out)
    np.maximum(out, 0.0, out=out)
    return out


def tangential_max(abs_fields, dist, gamma, t_grid):
    """sup over t, y of abs_fields[t, y] / (1 + dist(x,y)/t)^gamma."""
    n = dist.shape[0]
    out = np.zeros(n)
    for it in range(t_grid.size):
        damp = (1.0 + dist / t_grid[it]) ** (-gamma)
        np.maximum(out, (damp * abs_fields[it][None, :]).max(axis=1), out=out)
    return out


def hl_sup_averages(dist, measure, g):
    """sup over realizable open balls B containing x of (int_B g dmu)/mu(B).

    Realizable balls are enumerated as prefixes of each center's sorted
    distance row, cut only between distinct distance values (ball contents
    change nowhere else); the full space is the final prefix.
    """
    n = dist.shape[0]
    field = np.full(n, -np.inf)
    gm = g * measure
    for z in range(n):
        order = np.argsort(dist[z], kind="stable")
        dsort = dist[z][order]
        csum_g = np.cumsum(gm[order])
        csum_m = np.cumsum(measure[order])
        valid = np.empty(n, dtype=bool)
        valid[:-1] = dsort[1:] > dsort[:-1]
        valid[-1] = True
        avg = np.where(valid, csum_g / csum_m, -np.inf)
        suffmax = np.maximum.accumulate(avg[::-1])[::-1]
        np.maximum(field[order], suffmax, field[order])
    return field
