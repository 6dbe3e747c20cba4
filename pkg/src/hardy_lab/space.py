"""Finite metric measure spaces and their volume-geometry diagnostics.

A space is a finite point set with a symmetric distance matrix (open balls,
strictly ``rho(x,y) < r``) and a strictly positive measure vector. The
geometry report estimates the doubling constant c0, the homogeneous
dimension d = log2(c0), the reverse-doubling constant c1 and the
non-collapse infimum c2 at the unit scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import kernels
from .errors import AsymmetricDistance, InputError, NonpositiveMass, TriangleViolation


class MetricMeasureSpace:
    """Validated (M, rho, mu): distance matrix, measure vector, unit scale.

    Immutable after construction; the lazily computed geometry report and
    radii grids are cached internally.
    """

    def __init__(self, dist: np.ndarray, measure: np.ndarray, unit: float,
                 points=None):
        self.dist = dist
        self.measure = measure
        self.unit = float(unit)
        self.points = points
        self.n = dist.shape[0]
        self.diam = float(dist.max())
        self.total_mass = float(measure.sum())
        self._geometry = None
        self._radii = None
        self._scan_radii = None

    # -- balls -------------------------------------------------------
    def ball_mask(self, x: int, r: float) -> np.ndarray:
        """Open ball B(x, r) as a boolean mask; x is always a member (r > 0)."""
        return self.dist[x] < r

    def ball(self, x: int, r: float) -> np.ndarray:
        """Open ball B(x, r) as sorted point indices."""
        if r <= 0:
            raise InputError("ball radius must be positive")
        return np.flatnonzero(self.ball_mask(x, r))

    def ball_mass(self, x: int, r: float) -> float:
        return float(self.measure[self.ball_mask(x, r)].sum())

    def ball_mass_vector(self, r: float) -> np.ndarray:
        """mu(B(x, r)) for every center x at a single radius."""
        return (self.dist < r) @ self.measure

    def dist_to_set(self, x: int, members) -> float:
        """dist(x, S) = min over S; +inf sentinel for S empty."""
        members = np.asarray(members)
        if members.dtype == bool:
            if not members.any():
                return np.inf
            return float(self.dist[x][members].min())
        if members.size == 0:
            return np.inf
        return float(self.dist[x][members].min())

    def dist_to_set_vector(self, mask: np.ndarray) -> np.ndarray:
        """dist(x, S) for every x at once; +inf everywhere when S is empty."""
        if not mask.any():
            return np.full(self.n, np.inf)
        return self.dist[:, mask].min(axis=1)

    def resolution(self) -> float:
        """Smallest positive pairwise distance."""
        pos = self.dist[self.dist > 0]
        return float(pos.min()) if pos.size else 0.0

    def eccentricity(self, x: int) -> float:
        return float(self.dist[x].max())

    def center_point(self) -> int:
        """Point of minimal eccentricity (ties broken by index)."""
        return int(np.argmin(self.dist.max(axis=1)))

    # -- radii grids --------------------------------------------------
    def radii_grid(self) -> np.ndarray:
        """Distinct positive pairwise distances plus midpoints between
        consecutive ones: the radii at which ball contents can change."""
        if self._radii is None:
            self._radii = _with_midpoints(self.dist)
        return self._radii

    def scan_radii(self) -> np.ndarray:
        """Radii grid for the doubling scan.

        The pair (B(x,r), B(x,2r)) changes only when r crosses a distance
        value or half a distance value, so the scan breakpoints are the
        distinct values of {d} union {d/2}, plus midpoints; this makes the
        reported c0 an upper bound for mu(B(x,2r))/mu(B(x,r)) over every
        real r, which downstream ball-inflation inequalities rely on.
        """
        if self._scan_radii is None:
            vals = np.unique(self.dist[self.dist > 0])
            vals = np.unique(np.concatenate([vals, vals / 2.0]))
            mids = (vals[:-1] + vals[1:]) / 2.0
            self._scan_radii = np.unique(np.concatenate([vals, mids]))
        return self._scan_radii

    def geometry(self) -> "GeometryReport":
        if self._geometry is None:
            self._geometry = geometry_report(self)
        return self._geometry


@dataclass
class GeometryReport:
    c0: float
    d: float
    c1: float | None
    c2: float
    epsilon: float | None
    unit: float
    n_scan_radii: int
    worst_center: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "d": self.d,
            "c1": self.c1,
            "c2": self.c2,
            "epsilon": self.epsilon,
            "unit": self.unit,
            "n_scan_radii": self.n_scan_radii,
        }


def _with_midpoints(dist: np.ndarray) -> np.ndarray:
    vals = np.unique(dist[dist > 0])
    if vals.size == 0:
        return vals
    mids = (vals[:-1] + vals[1:]) / 2.0
    return np.unique(np.concatenate([vals, mids]))


def _default_unit(dist: np.ndarray) -> float:
    """Median nearest-neighbor distance: the intrinsic resolution that the
    unit scale of the non-collapse diagnostic is mapped to."""
    n = dist.shape[0]
    if n < 2:
        return 1.0
    off = dist + np.where(np.eye(n, dtype=bool), np.inf, 0.0)
    return float(np.median(off.min(axis=1)))


def build_space(dist, measure, *, unit_scale=None, points=None,
                validate: bool = True) -> MetricMeasureSpace:
    """Validate and wrap a distance matrix and measure vector.

    Raises AsymmetricDistance / TriangleViolation / NonpositiveMass on
    malformed input. The O(n^3) triangle scan runs on the active kernel
    backend.
    """
    dist = np.ascontiguousarray(np.asarray(dist, dtype=float))
    measure = np.ascontiguousarray(np.asarray(measure, dtype=float))
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise InputError(f"distance matrix must be square, got {dist.shape}")
    if measure.shape != (dist.shape[0],):
        raise InputError(
            f"measure length {measure.shape} does not match {dist.shape[0]} points")
    if validate:
        scale = max(1.0, float(dist.max()))
        tol = 1e-12 * scale
        if np.abs(dist - dist.T).max() > tol:
            raise AsymmetricDistance("distance matrix is not symmetric")
        if np.abs(np.diag(dist)).max() > tol:
            raise AsymmetricDistance("distance matrix has nonzero diagonal")
        if dist.min() < 0:
            raise AsymmetricDistance("distances must be nonnegative")
        if (measure <= 0).any():
            bad = int(np.argmin(measure))
            raise NonpositiveMass(f"measure[{bad}] = {measure[bad]} is not positive")
        defect, i, j, k = kernels().max_triangle_defect(dist)
        if defect > tol:
            raise TriangleViolation(
                f"dist[{i},{j}] > dist[{i},{k}] + dist[{k},{j}] by {defect:.3g}")
    unit = float(unit_scale) if unit_scale is not None else _default_unit(dist)
    return MetricMeasureSpace(dist, measure, unit, points=points)


def dist_to_set(space: MetricMeasureSpace, x: int, members) -> float:
    return space.dist_to_set(x, members)


def geometry_report(space: MetricMeasureSpace) -> GeometryReport:
    """Exhaustive doubling scan over the refined radii grid."""
    radii = space.scan_radii()
    if radii.size == 0:
        return GeometryReport(1.0, 0.0, None, space.total_mass, None,
                              space.unit, 0)
    ratios = kernels().doubling_ratios(space.dist, space.measure, radii)
    c0 = float(ratios.max())
    per_x = ratios.max(axis=1)
    worst = int(np.argmax(per_x))
    small = radii <= space.diam / 3.0
    if small.any():
        c1 = float(ratios[:, small].min())
        epsilon = float(np.log2(c1)) if c1 > 0 else None
    else:
        c1 = None
        epsilon = None
    c2 = float(space.ball_mass_vector(space.unit).min())
    d = float(np.log2(c0)) if c0 > 1.0 else 0.0
    return GeometryReport(c0, d, c1, c2, epsilon, space.unit, int(radii.size),
                          worst_center=worst)


# -- JSON space files ------------------------------------------------------

def _closure_from_edges(n: int, edges) -> np.ndarray:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import shortest_path

    rows, cols, w = [], [], []
    for e in edges:
        i, j = int(e[0]), int(e[1])
        length = float(e[2]) if len(e) > 2 else 1.0
        rows += [i, j]
        cols += [j, i]
        w += [length, length]
    graph = coo_matrix((w, (rows, cols)), shape=(n, n))
    dist = shortest_path(graph, method="D", directed=False)
    if np.isinf(dist).any():
        raise InputError("edge list does not connect all points")
    return dist


def load_space(source, *, unit_scale=None) -> MetricMeasureSpace:
    """Load a space file: {"distances": matrix | "edges": [[i,j,len],...],
    "measure": vector, "points": optional coordinates}."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = source
    measure = np.asarray(data["measure"], dtype=float)
    n = measure.size
    if "distances" in data:
        dist = np.asarray(data["distances"], dtype=float)
        if dist.ndim == 1:
            dist = dist.reshape(n, n)
    elif "edges" in data:
        dist = _closure_from_edges(n, data["edges"])
    else:
        raise InputError("space file needs 'distances' or 'edges'")
    if unit_scale is None:
        unit_scale = data.get("unit_scale")
    return build_space(dist, measure, unit_scale=unit_scale,
                       points=data.get("points"))
