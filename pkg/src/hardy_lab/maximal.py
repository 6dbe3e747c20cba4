"""Maximal operators: radial, nontangential, tangential, grand (dictionary
lower bound), Hardy-Littlewood, and the H^p quasi-norms built on them.

The sup over t > 0 is approximated on a dyadic grid whose endpoints cover
the sub-resolution and super-diameter regimes; all field reductions are
order-independent maxima, so results are deterministic under any schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import EmptyDictionary, EmptyGrid, InputError, ProfileDomainTooSmall
from .profiles import ProfileFunction
from .space import MetricMeasureSpace
from .spectral import SpectralOperator


@dataclass
class MaximalField:
    values: np.ndarray
    kind: str
    params: dict

    def lp_norm(self, p: float, measure: np.ndarray) -> float:
        return float(((self.values ** p) * measure).sum() ** (1.0 / p))


def dyadic_t_grid(space: MetricMeasureSpace, *, k_lo: int | None = None,
                  k_hi: int | None = None, refine: bool = False) -> np.ndarray:
    """{2^-k : k_lo <= k <= k_hi}, descending in k (increasing t), with
    2^-k_hi below resolution scale and 2^-k_lo above the diameter.
    refine=True inserts the sqrt(2) midpoints."""
    if k_hi is None:
        res = max(space.resolution(), 1e-6)
        k_hi = max(8, int(math.ceil(-math.log2(res))) + 1)
    if k_lo is None:
        k_lo = -(int(math.ceil(math.log2(max(space.diam, 1e-6)))) + 1)
    if k_lo > k_hi:
        raise EmptyGrid("t grid bounds are inverted")
    ts = 2.0 ** (-np.arange(k_lo, k_hi + 1, dtype=float))
    if refine:
        ts = np.sort(np.concatenate([ts, ts * math.sqrt(2.0)]))[::-1]
    return ts


def _multiplier_rows(op: SpectralOperator, profile, t_grid) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise EmptyGrid("empty t grid")
    args = np.outer(t_grid, op.sqrt_eigenvalues)
    if isinstance(profile, ProfileFunction):
        if float(args.max()) > profile.u_max * (1.0 + 1e-12):
            raise ProfileDomainTooSmall(
                f"{profile.name}: grid reaches {float(args.max()):.4g} beyond "
                f"domain {profile.u_max:g}")
        return profile(args)
    return profile(args)


def field_stack(op: SpectralOperator, f: np.ndarray, profile,
                t_grid) -> np.ndarray:
    """|profile(t sqrt(L)) f| for every t in the grid, stacked (T, n)."""
    rows = _multiplier_rows(op, profile, t_grid)
    return np.abs(op.field_stack(rows, f))


def radial_maximal(op: SpectralOperator, f: np.ndarray,
                   profile: ProfileFunction, t_grid) -> MaximalField:
    """sup over the grid of |phi(t sqrt(L)) f| pointwise."""
    stack = field_stack(op, f, profile, t_grid)
    return MaximalField(stack.max(axis=0), "radial",
                        {"profile": getattr(profile, "name", "callable"),
                         "t_grid": list(np.asarray(t_grid, dtype=float))})


def nontangential_maximal(op: SpectralOperator, f: np.ndarray,
                          profile: ProfileFunction, a: float,
                          t_grid) -> MaximalField:
    """sup over t and over y with rho(x,y) <= a t."""
    if a < 1:
        raise InputError("aperture a must be >= 1")
    stack = field_stack(op, f, profile, t_grid)
    t_arr = np.ascontiguousarray(np.asarray(t_grid, dtype=float))
    vals = kernels().nontangential_max(stack, op.space.dist, float(a), t_arr)
    return MaximalField(vals, "nontangential",
                        {"profile": getattr(profile, "name", "callable"),
                         "a": a, "t_grid": list(t_arr)})


def tangential_maximal(op: SpectralOperator, f: np.ndarray,
                       profile: ProfileFunction, gamma: float,
                       t_grid) -> MaximalField:
    """sup over t, y of |phi(t sqrt(L)) f(y)| / (1 + rho(x,y)/t)^gamma."""
    if gamma <= 0:
        raise InputError("gamma must be positive")
    stack = field_stack(op, f, profile, t_grid)
    t_arr = np.ascontiguousarray(np.asarray(t_grid, dtype=float))
    vals = kernels().tangential_max(stack, op.space.dist, float(gamma), t_arr)
    return MaximalField(vals, "tangential",
                        {"profile": getattr(profile, "name", "callable"),
                         "gamma": gamma, "t_grid": list(t_arr)})


def grand_maximal(op: SpectralOperator, f: np.ndarray, dictionary,
                  N: int, t_grid) -> MaximalField:
    """Dictionary lower bound for the grand maximal field: pointwise max of
    aperture-1 nontangential fields over profiles pre-rescaled to unit
    N-norm. Labeled as a dictionary approximation; the true sup runs over
    an infinite class."""
    members = list(dictionary)
    if not members:
        raise EmptyDictionary("grand maximal needs at least one profile")
    out = None
    for prof in members:
        field = nontangential_maximal(op, f, prof, 1.0, t_grid).values
        out = field if out is None else np.maximum(out, field)
    return MaximalField(out, "grand (dictionary)",
                        {"N": N, "size": len(members),
                         "t_grid": list(np.asarray(t_grid, dtype=float))})


def grand_order(d: float, p: float) -> int:
    """Smallest integer N with N > 6d/p + 3d/2 + 2."""
    return int(math.floor(6.0 * d / p + 1.5 * d + 2.0)) + 1


def hl_maximal(space: MetricMeasureSpace, f: np.ndarray,
               theta: float) -> MaximalField:
    """Hardy-Littlewood variant: sup over realizable balls containing x of
    the theta-average ((1/|B|) int_B |f|^theta)^(1/theta)."""
    if theta <= 0:
        raise InputError("theta must be positive")
    g = np.abs(f) ** theta
    sup_avg = kernels().hl_sup_averages(space.dist, space.measure,
                                        np.ascontiguousarray(g))
    return MaximalField(np.maximum(sup_avg, 0.0) ** (1.0 / theta),
                        "hardy_littlewood", {"theta": theta})


_FLAVOR_MULTIPLIERS = {
    "heat": lambda t, lam, sq: np.exp(-np.outer(t * t, lam)),
    "poisson": lambda t, lam, sq: np.exp(-np.outer(t, sq)),
}


def hp_quasinorm(op: SpectralOperator, f: np.ndarray, p: float,
                 t_grid=None, flavor="heat",
                 profile: ProfileFunction | None = None) -> float:
    """(sum_x field(x)^p mu(x))^{1/p} with field the radial maximal of the
    chosen flavor: heat e^{-t^2 L}, poisson e^{-t sqrt(L)}, or a profile."""
    if p <= 0:
        raise InputError("p must be positive")
    if t_grid is None:
        t_grid = dyadic_t_grid(op.space)
    t_arr = np.asarray(t_grid, dtype=float)
    if flavor == "profile":
        if profile is None:
            raise InputError("profile flavor needs a profile")
        field = radial_maximal(op, f, profile, t_arr).values
    else:
        try:
            mult = _FLAVOR_MULTIPLIERS[flavor]
        except KeyError:
            raise InputError(f"unknown flavor {flavor!r}") from None
        rows = mult(t_arr, op.eigenvalues, op.sqrt_eigenvalues)
        field = np.abs(op.field_stack(rows, f)).max(axis=0)
    return float(((field ** p) * op.space.measure).sum() ** (1.0 / p))


def equivalence_report(op: SpectralOperator, signals, p: float, profiles,
                       *, theta: float | None = None,
                       gamma: float | None = None, a: float = 1.0,
                       t_grid=None) -> dict:
    """Empirical constants for the maximal-operator comparisons.

    For each signal: the pointwise chain ratios radial <= nontangential <=
    (1+a)^gamma tangential, the pointwise domination of the tangential
    field by the Hardy-Littlewood maximal of the radial field (with
    hypothesis values theta < p, gamma > 2d/theta), and the heat/Poisson
    quasi-norm ratio. Constants are recorded, never asserted: the theory
    leaves them unquantified.
    """
    space = op.space
    d = space.geometry().d
    theta = theta if theta is not None else p / 2.0
    gamma = gamma if gamma is not None else 2.0 * d / theta + 1.0
    if t_grid is None:
        t_grid = dyadic_t_grid(space)
    prof = profiles[0]
    chain_max = 0.0
    chain_violations = 0
    prop_constants = []
    flavor_ratios = []
    profile_ratios = []
    for f in signals:
        f = np.asarray(f, dtype=float)
        rad = radial_maximal(op, f, prof, t_grid).values
        nt = nontangential_maximal(op, f, prof, a, t_grid).values
        tang = tangential_maximal(op, f, prof, gamma, t_grid).values
        if (rad > nt * (1 + 1e-12)).any() or \
           (nt > (1 + a) ** gamma * tang * (1 + 1e-12)).any():
            chain_violations += 1
        nz = rad > 0
        if nz.any():
            chain_max = max(chain_max, float((nt[nz] / rad[nz]).max()))
        hl = hl_maximal(space, rad, theta).values
        ok = hl > 0
        if ok.any():
            prop_constants.append(float((tang[ok] / hl[ok]).max()))
        h = hp_quasinorm(op, f, p, t_grid, "heat")
        q = hp_quasinorm(op, f, p, t_grid, "poisson")
        if q > 0:
            flavor_ratios.append(h / q)
        if len(profiles) > 1:
            n1 = radial_maximal(op, f, prof, t_grid)
            n2 = radial_maximal(op, f, profiles[1], t_grid)
            r2 = n2.lp_norm(p, space.measure)
            if r2 > 0:
                profile_ratios.append(n1.lp_norm(p, space.measure) / r2)
    out = {
        "hypotheses": {"p": p, "theta": theta, "gamma": gamma, "a": a, "d": d,
                       "gamma_condition": gamma > 2.0 * d / theta,
                       "theta_condition": 0.0 < theta < p},
        "chain": {"violations": chain_violations,
                  "max_nontangential_over_radial": chain_max},
        "tangential_vs_hl_of_radial": {
            "empirical_c": max(prop_constants) if prop_constants else None},
        "heat_over_poisson": _bracket(flavor_ratios),
    }
    if profile_ratios:
        out["profile_norm_ratio"] = _bracket(profile_ratios)
    return out


def _bracket(values) -> dict:
    if not values:
        return {"count": 0}
    arr = np.asarray(values, dtype=float)
    return {"count": int(arr.size), "min": float(arr.min()),
            "max": float(arr.max()), "mean": float(arr.mean()),
            "max_over_min": float(arr.max() / arr.min()) if arr.min() > 0 else None}
