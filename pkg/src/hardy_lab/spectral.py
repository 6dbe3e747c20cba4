"""The operator L, its functional calculus f(t*sqrt(L)), heat and Poisson
semigroups, and the numerical diagnostics for the heat-kernel axioms.

Kernels follow the weighted convention (K f)(x) = sum_y K(x,y) f(y) mu(y),
so the continuum identities (row sums, semigroup laws, symmetry) transcribe
verbatim. The functional calculus is exact dense eigendecomposition: every
f(t*sqrt(L)) is a spectral multiplier on the mu-orthonormal eigenbasis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (AsymmetricAdjacency, Disconnected, FitDegenerate,
                     InputError, ProfileDomainTooSmall, QuadratureNotConverged)
from .profiles import LPPair, ProfileFunction
from .space import MetricMeasureSpace, build_space

MU_SYMMETRY_TOL = 1e-10
ORTHONORMALITY_TOL = 1e-8
EIGENVALUE_CLAMP_TOL = 1e-10


class SpectralOperator:
    """Non-negative operator, self-adjoint in the mu-weighted inner product,
    with a cached eigensystem.

    eigenvectors columns are mu-orthonormal; eigenvalues nondecreasing and
    clamped to [0, inf) after a tolerance check.
    """

    def __init__(self, space: MetricMeasureSpace, L_matrix: np.ndarray):
        self.space = space
        self.L_matrix = L_matrix
        mu = space.measure
        sq = np.sqrt(mu)
        S = (sq[:, None] * L_matrix) / sq[None, :]
        sym_defect = np.abs(S - S.T).max()
        scale = max(np.abs(S).max(), 1e-300)
        if sym_defect > MU_SYMMETRY_TOL * scale:
            raise InputError(
                f"operator is not mu-self-adjoint (defect {sym_defect:.3g})")
        lam, U = np.linalg.eigh(0.5 * (S + S.T))
        if lam[0] < -EIGENVALUE_CLAMP_TOL * max(lam[-1], 1.0):
            raise InputError(f"operator has negative eigenvalue {lam[0]:.3g}")
        self.eigenvalues = np.clip(lam, 0.0, None)
        self.eigenvectors = U / sq[:, None]
        gram = (self.eigenvectors * mu[:, None]).T @ self.eigenvectors
        ortho_defect = np.abs(gram - np.eye(space.n)).max()
        if ortho_defect > ORTHONORMALITY_TOL:
            raise InputError(
                f"eigenvector mu-orthonormality defect {ortho_defect:.3g}")
        row = np.abs(L_matrix @ np.ones(space.n)).max()
        self.markov = bool(row <= 1e-12 * max(1.0, np.abs(L_matrix).max()))
        self.sqrt_eigenvalues = np.sqrt(self.eigenvalues)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    # -- calculus ------------------------------------------------------
    def multiplier_kernel(self, values: np.ndarray) -> np.ndarray:
        """Kernel of sum_i values[i] * Pi_i with Pi_i the mu-orthogonal
        eigenprojectors."""
        V = self.eigenvectors
        return (V * values[None, :]) @ V.T

    def apply_multiplier(self, values: np.ndarray, f: np.ndarray) -> np.ndarray:
        coeff = self.eigenvectors.T @ (self.space.measure * f)
        return self.eigenvectors @ (values * coeff)

    def field_stack(self, value_rows: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Apply many multipliers at once: rows of value_rows are multiplier
        values, output rows are the corresponding fields."""
        coeff = self.eigenvectors.T @ (self.space.measure * f)
        return (value_rows * coeff[None, :]) @ self.eigenvectors.T


@dataclass
class KernelMatrix:
    """Integral kernel with the explicit mu-weight convention."""
    entries: np.ndarray
    t: float
    profile_id: str
    measure: np.ndarray

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.entries @ (self.measure * f)

    def compose(self, other: "KernelMatrix") -> "KernelMatrix":
        ent = self.entries @ (self.measure[:, None] * other.entries)
        return KernelMatrix(ent, self.t + other.t,
                            f"{self.profile_id}*{other.profile_id}", self.measure)

    def row_sum_defect(self, value_at_zero: float = 1.0) -> float:
        sums = self.entries @ self.measure
        return float(np.abs(sums - value_at_zero).max())

    def symmetry_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.T).max())


# ---------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------

def _connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] > 0):
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def from_weighted_graph(adjacency, measure_mode="degree", *,
                        space: MetricMeasureSpace | None = None) -> SpectralOperator:
    """Normalized graph Laplacian model: L = M^{-1} (D - A) on L2(mu).

    measure_mode picks mu: "degree" (row sums of A, giving L = I - D^{-1}A),
    "uniform", "space" (reuse the space's measure), or an explicit vector.
    L annihilates constants for every choice, so the Markov property holds
    by construction. When no space is given, the metric is the shortest-path
    closure with unit edge lengths.
    """
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"adjacency must be square, got {A.shape}")
    if np.abs(A - A.T).max() > 1e-12 * max(1.0, A.max()):
        raise AsymmetricAdjacency("adjacency must be symmetric")
    if A.min() < 0:
        raise AsymmetricAdjacency("adjacency must be nonnegative")
    if np.abs(np.diag(A)).max() > 0:
        raise AsymmetricAdjacency("adjacency must have zero diagonal")
    if not _connected(A):
        raise Disconnected("graph is not connected")
    n = A.shape[0]
    degree = A.sum(axis=1)
    if isinstance(measure_mode, str):
        if measure_mode == "degree":
            mu = degree.copy()
        elif measure_mode == "uniform":
            mu = np.ones(n)
        elif measure_mode == "space":
            if space is None:
                raise InputError("measure_mode='space' needs an explicit space")
            mu = space.measure
        else:
            raise InputError(f"unknown measure_mode {measure_mode!r}")
    else:
        mu = np.asarray(measure_mode, dtype=float)
        if mu.shape != (n,):
            raise InputError("custom measure length mismatch")
    if space is None:
        edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n) if A[i, j] > 0]
        from .space import _closure_from_edges
        dist = _closure_from_edges(n, edges)
        space = build_space(dist, mu, validate=False)
    else:
        if space.n != n:
            raise InputError("space size does not match adjacency")
        if not np.allclose(space.measure, mu, rtol=1e-9, atol=0.0):
            raise InputError(
                "space measure disagrees with the operator measure; "
                "use measure_mode='space' or fix the inputs")
    L = (degree[:, None] * np.eye(n) - A) / mu[:, None]
    return SpectralOperator(space, L)


# ---------------------------------------------------------------------
# semigroups and profiles
# ---------------------------------------------------------------------

def apply_profile(op: SpectralOperator, profile: ProfileFunction,
                  t: float) -> KernelMatrix:
    """Kernel of profile(t * sqrt(L))."""
    if t <= 0:
        raise InputError("scale t must be positive")
    top = t * op.sqrt_eigenvalues[-1]
    if top > profile.u_max * (1.0 + 1e-12):
        raise ProfileDomainTooSmall(
            f"profile {profile.name} sampled only to {profile.u_max:g}, "
            f"needs {top:g}")
    vals = profile(t * op.sqrt_eigenvalues)
    return KernelMatrix(op.multiplier_kernel(vals), t,
                        f"{profile.name}@t={t:g}", op.space.measure)


def heat_kernel(op: SpectralOperator, t: float) -> KernelMatrix:
    """e^{-tL}; equals the gaussian profile at scale sqrt(t)."""
    if t <= 0:
        raise InputError("t must be positive")
    vals = np.exp(-t * op.eigenvalues)
    return KernelMatrix(op.multiplier_kernel(vals), t, f"heat@t={t:g}",
                        op.space.measure)


def poisson_direct(op: SpectralOperator, t: float) -> KernelMatrix:
    """e^{-t sqrt(L)} evaluated spectrally."""
    if t <= 0:
        raise InputError("t must be positive")
    vals = np.exp(-t * op.sqrt_eigenvalues)
    return KernelMatrix(op.multiplier_kernel(vals), t, f"poisson@t={t:g}",
                        op.space.measure)


def _subordination_multipliers(t: float, lam: np.ndarray, nodes: int) -> np.ndarray:
    """(1/sqrt(pi)) int_0^inf u^{-1/2} e^{-u} e^{-(t^2/(4u)) lam} du per
    eigenvalue, after the substitution u = t^2/(4 s^2).

    Each positive eigenvalue gets the symmetrized change of variable
    u = sqrt(c) e^v (c = t^2 lam / 4), under which the integrand becomes
    c^{1/4} e^{v/2} exp(-2 sqrt(c) cosh v): doubly-exponentially decaying
    both ways, so the `nodes`-point trapezoid rule converges geometrically.
    """
    out = np.ones_like(lam)
    pos = lam > 0
    if not pos.any():
        return out
    c = (t * t * lam[pos]) / 4.0
    V = max(4.0, math.log(44.0 / math.sqrt(float(c.min()))))
    v = np.linspace(-V, V, nodes)
    h = v[1] - v[0]
    integrand = (c[:, None] ** 0.25) * np.exp(
        0.5 * v[None, :] - 2.0 * np.sqrt(c)[:, None] * np.cosh(v)[None, :])
    out[pos] = integrand.sum(axis=1) * h / math.sqrt(math.pi)
    return out


def poisson_subordinated(op: SpectralOperator, t: float,
                         quadrature_nodes: int = 64, *,
                         tol: float = 1e-8) -> KernelMatrix:
    """e^{-t sqrt(L)} through the subordination integral

        (1/sqrt(pi)) int_0^inf (t/s^2) e^{-t^2/4s^2} e^{-s^2 L} ds,

    evaluated by quadrature after the substitution u = t^2/(4 s^2).
    Convergence is certified by node doubling; QuadratureNotConverged when
    doubling moves the kernel by more than tol in max norm.
    """
    if quadrature_nodes < 16:
        raise InputError("need at least 16 quadrature nodes")
    vals = _subordination_multipliers(t, op.eigenvalues, quadrature_nodes)
    vals2 = _subordination_multipliers(t, op.eigenvalues, 2 * quadrature_nodes)
    K1 = op.multiplier_kernel(vals)
    K2 = op.multiplier_kernel(vals2)
    drift = np.abs(K1 - K2).max()
    if drift > tol:
        raise QuadratureNotConverged(
            f"node doubling moved the subordinated kernel by {drift:.3g}")
    return KernelMatrix(K1, t, f"poisson-subordinated@t={t:g}",
                        op.space.measure)


# ---------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------

@dataclass
class HeatDiagnostics:
    C_star: float
    c_star: float
    alpha: float | None
    markov_defect: float
    fit_range: tuple[float, float]
    n_points: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "C_star": self.C_star,
            "c_star": self.c_star,
            "alpha": self.alpha,
            "markov_defect": self.markov_defect,
            "fit_range": list(self.fit_range),
            "n_points": self.n_points,
        }


def propagation_tau(diag: HeatDiagnostics) -> float:
    """Locality radius constant: tau = max(1, 2 c~) with c~ = 1/(2 sqrt(c*)),
    floored at 1."""
    if diag.c_star <= 0:
        return 1.0
    return max(1.0, 1.0 / math.sqrt(diag.c_star))


def fit_heat_constants(op: SpectralOperator, t_grid) -> HeatDiagnostics:
    """Least-squares calibration of the gaussian-bound constants.

    Fits log p_t(x,y) + (1/2) log(|B(x,sqrt(t))||B(y,sqrt(t))|) against
    -rho^2(x,y)/t over all entries above 1e-14. The slope is the fitted
    c*; C* is then set to the smallest constant making the bound hold on
    every fitted point (so the reported pair is an actual certificate).
    The Holder exponent alpha is fitted from nearest-neighbor kernel
    increments at matching scales; diagnostic only.
    """
    t_grid = np.asarray(list(t_grid), dtype=float)
    if t_grid.size == 0:
        raise FitDegenerate("empty t grid")
    space = op.space
    dist = space.dist
    xs, ys = [], []
    inc_w, inc_z = [], []
    markov_defect = 0.0
    nn = np.argsort(dist + np.where(np.eye(space.n, dtype=bool), np.inf, 0.0),
                    axis=1)[:, 0]
    for t in t_grid:
        P = heat_kernel(op, t)
        markov_defect = max(markov_defect, P.row_sum_defect(1.0))
        root = math.sqrt(t)
        B = space.ball_mass_vector(root)
        mask = P.entries > 1e-14
        if mask.any():
            i, j = np.nonzero(mask)
            y = np.log(P.entries[i, j]) + 0.5 * np.log(B[i] * B[j])
            x = dist[i, j] ** 2 / t
            xs.append(x)
            ys.append(y)
        # increments p_t(x, y) - p_t(x, y') with y' the nearest neighbor of y
        diff = np.abs(P.entries - P.entries[:, nn])
        close = dist[np.arange(space.n), nn] <= root
        sel = close[None, :] & (diff > 1e-14) & mask
        if sel.any():
            i, j = np.nonzero(sel)
            w = np.log(dist[j, nn[j]] / root)
            z = (np.log(diff[i, j]) + 0.5 * np.log(B[i] * B[j])
                 + dist[i, j] ** 2 / t)
            keep = w < 0
            inc_w.append(w[keep])
            inc_z.append(z[keep])
    if not xs:
        raise FitDegenerate("no kernel entries above threshold")
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    design = np.vstack([-x, np.ones_like(x)]).T
    sol, *_ = np.linalg.lstsq(design, y, rcond=None)
    c_star = float(sol[0])
    C_star = float(np.exp((y + c_star * x).max()))
    alpha = None
    if inc_w:
        w = np.concatenate(inc_w)
        if w.size >= 2 and (w < 0).any():
            z = np.concatenate(inc_z)
            denom = float((w * w).sum())
            if denom > 0:
                # slope through the origin after removing the C* offset
                alpha = float((w * (z - math.log(C_star))).sum() / denom)
    return HeatDiagnostics(C_star, c_star, alpha, float(markov_defect),
                           (float(t_grid.min()), float(t_grid.max())),
                           n_points=int(x.size))


def finite_speed_check(op: SpectralOperator, pair: LPPair, k_range,
                       diag: HeatDiagnostics, *,
                       leak_threshold: float = 1e-3) -> dict:
    """Propagation leakage of the difference-profile kernels.

    For each dyadic scale k, reports the largest |psi_k(x,y)| over pairs
    beyond the locality radius tau 2^{-k}. Reported, not asserted: finite
    models only approximate exact finite-speed support.
    """
    if pair.phi.bandlimit is None:
        return {"applicable": False, "reason": "profile is not band-limited"}
    tau = propagation_tau(diag)
    rows = []
    dist = op.space.dist
    for k in k_range:
        t = 2.0 ** (-k)
        K = apply_profile(op, pair.psi, t)
        radius = tau * t
        outside = dist > radius
        peak = float(np.abs(K.entries).max())
        leak = float(np.abs(K.entries[outside]).max()) if outside.any() else 0.0
        rows.append({
            "k": int(k),
            "radius": radius,
            "peak": peak,
            "leakage": leak,
            "pairs_outside": int(outside.sum()) // 2,
            "within_threshold": bool(leak <= leak_threshold * max(peak, 1e-300)),
        })
    return {"applicable": True, "tau": tau, "scales": rows}


def kernel_localization_check(op: SpectralOperator, profile: ProfileFunction,
                              t: float, m: int) -> dict:
    """Smallest empirical c with
    |f(t sqrt(L))(x,y)| <= c * A_m * |B(x,t)|^{-1} (1 + rho/t)^{-m+d/2},
    where A_m is the profile's m-th norm and d the fitted dimension."""
    from .profiles import norm_N

    A_m = norm_N(profile, m)
    d = op.space.geometry().d
    K = apply_profile(op, profile, t)
    B = op.space.ball_mass_vector(t)
    weight = (1.0 + op.space.dist / t) ** (m - d / 2.0)
    c = np.abs(K.entries) * B[:, None] * weight / A_m
    return {"t": t, "m": m, "A_m": A_m, "d": d, "c": float(c.max())}
