"""Whitney-type ball covers of open proper subsets.

Construction is the greedy maximal disjoint subfamily of fifth-balls,
visited in order of decreasing distance-to-complement (ties by index), so
covers are deterministic. All four cover properties are verified by exact
finite set arithmetic on stored distances; no tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotProperSubset
from .space import GeometryReport, MetricMeasureSpace


@dataclass
class WhitneyCover:
    space: MetricMeasureSpace
    omega: np.ndarray              # boolean mask of the covered set
    centers: np.ndarray            # point indices, nonincreasing core radius
    core_radii: np.ndarray         # rho_j = dist(center_j, complement)

    @property
    def order(self) -> np.ndarray:
        return np.arange(self.centers.size)

    def ball_mask(self, j: int, scale: float = 0.5) -> np.ndarray:
        """Open ball B(center_j, scale * rho_j)."""
        return self.space.dist[self.centers[j]] < scale * self.core_radii[j]

    def __len__(self) -> int:
        return int(self.centers.size)


def whitney_cover(space: MetricMeasureSpace, omega) -> WhitneyCover:
    """Greedy Whitney cover of a nonempty proper subset.

    Points of omega are visited by decreasing distance-to-complement; a
    point is admitted when its fifth-ball misses every admitted fifth-ball.
    Maximality of the resulting disjoint family gives the covering property
    of the half-balls exactly.
    """
    omega = _as_mask(space.n, omega)
    if not omega.any():
        raise NotProperSubset("omega is empty")
    if omega.all():
        raise NotProperSubset("omega is the whole space; complement is empty")
    comp = ~omega
    rho = space.dist[:, comp].min(axis=1)
    members = np.flatnonzero(omega)
    # decreasing rho, ties by point index
    members = members[np.lexsort((members, -rho[members]))]
    taken = np.zeros(space.n, dtype=bool)  # union of admitted fifth-balls
    centers = []
    for x in members:
        fifth = space.dist[x] < rho[x] / 5.0
        if not (fifth & taken).any():
            centers.append(int(x))
            taken |= fifth
    centers = np.asarray(centers, dtype=int)
    return WhitneyCover(space, omega, centers, rho[centers])


@dataclass
class CoverReport:
    covers: bool                   # (a) union of half-balls == omega
    fifth_disjoint: bool           # (b)
    comparable: bool               # (c) 7-fold radius comparability
    max_overlap: int               # (d) measured, 3/4-balls
    overlap_bound: float           # 70^d c0^2
    within_bound: bool
    worst_pair: tuple = field(default=(-1, -1))

    def all_exact(self) -> bool:
        return self.covers and self.fifth_disjoint and self.comparable


def verify_cover(cover: WhitneyCover,
                 geometry: GeometryReport | None = None) -> CoverReport:
    """Exact verification of the four cover properties."""
    space = cover.space
    J = len(cover)
    union = np.zeros(space.n, dtype=bool)
    for j in range(J):
        union |= cover.ball_mask(j, 0.5)
    covers = bool((union == cover.omega).all())

    fifth = [cover.ball_mask(j, 0.2) for j in range(J)]
    three_q = [cover.ball_mask(j, 0.75) for j in range(J)]
    fifth_disjoint = True
    comparable = True
    worst = (-1, -1)
    counts = np.zeros(J, dtype=int)
    for j in range(J):
        for v in range(j + 1, J):
            if (fifth[j] & fifth[v]).any():
                fifth_disjoint = False
                worst = (j, v)
            if (three_q[j] & three_q[v]).any():
                counts[j] += 1
                counts[v] += 1
                rj, rv = cover.core_radii[j], cover.core_radii[v]
                if not (rv / 7.0 <= rj <= 7.0 * rv):
                    comparable = False
                    worst = (j, v)
    geometry = geometry if geometry is not None else space.geometry()
    bound = 70.0 ** geometry.d * geometry.c0 ** 2
    max_overlap = int(counts.max()) if J else 0
    return CoverReport(covers, fifth_disjoint, comparable, max_overlap,
                       float(bound), bool(max_overlap <= bound), worst)


def _as_mask(n: int, omega) -> np.ndarray:
    arr = np.asarray(omega)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise NotProperSubset(f"mask length {arr.shape} != {n}")
        return arr.copy()
    mask = np.zeros(n, dtype=bool)
    mask[arr.astype(int)] = True
    return mask
