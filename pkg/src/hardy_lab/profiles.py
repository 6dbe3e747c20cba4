"""Admissible profile functions and their algebra.

A profile is an even real function on [0, inf) used as a spectral
multiplier f(t*sqrt(L)). Profiles are stored as dense samples with cubic
interpolation; closed-form profiles additionally carry an exact callable
and exact derivatives, and band-limited profiles carry their Fourier-side
quadrature so that derivatives of any order are computed spectrally
(stable at high order, unlike finite differences).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import binom

from .errors import (GridTooCoarse, InsufficientVanishingOrder,
                     ProfileDomainTooSmall, QuadratureNotConverged)

DEFAULT_U_MAX = 256.0
DEFAULT_SAMPLES = 32769
DEFAULT_QUAD = 2048
VANISH_TOL = 1e-6


class ProfileFunction:
    """Even profile with samples on a uniform grid over [0, u_max].

    Parameters
    ----------
    name : str
        Identifier used in kernel provenance and reports.
    grid, samples : arrays
        Uniform sample grid and values.
    fn : callable, optional
        Exact evaluator; when present it wins over interpolation and the
        domain is unbounded.
    deriv_fn : callable (u, order) -> values, optional
        Exact derivative evaluator.
    vanishing_order : int
        Certified m with phi^(nu)(0) = 0 for 1 <= nu <= m (tolerance 1e-6).
    bandlimit : float or None
        A with supp(phi-hat) inside [-A, A], when certified.
    taylor : dict, optional
        nu -> phi^(nu)(0) for small-argument series work.
    """

    def __init__(self, name, grid, samples, *, fn=None, deriv_fn=None,
                 deriv_batch=None, vanishing_order=0, bandlimit=None,
                 taylor=None, u_max=None):
        self.name = name
        self.grid = np.asarray(grid, dtype=float)
        self.samples = np.asarray(samples, dtype=float)
        self.fn = fn
        self.deriv_fn = deriv_fn
        self.deriv_batch = deriv_batch
        self.vanishing_order = int(vanishing_order)
        self.bandlimit = bandlimit
        self.taylor = dict(taylor) if taylor else None
        if u_max is not None:
            self.u_max = float(u_max)
        else:
            self.u_max = math.inf if fn is not None else float(self.grid[-1])
        self.value_at_zero = float(fn(np.array([0.0]))[0]) if fn is not None \
            else float(self.samples[0])
        self._spline = None

    # ------------------------------------------------------------------
    def _interp(self):
        if self._spline is None:
            self._spline = CubicSpline(self.grid, self.samples, extrapolate=False)
        return self._spline

    def __call__(self, u):
        u = np.abs(np.asarray(u, dtype=float))
        if self.fn is not None:
            return self.fn(u)
        if u.size and float(u.max()) > self.u_max * (1.0 + 1e-12):
            raise ProfileDomainTooSmall(
                f"{self.name}: argument {float(u.max()):.4g} beyond sampled "
                f"domain [0, {self.u_max:g}]")
        out = self._interp()(np.minimum(u, self.u_max))
        return out

    def derivative(self, u, order):
        """phi^(order) on |u|; exact when the profile carries a derivative
        hook, finite differences with Richardson refinement otherwise."""
        u = np.abs(np.asarray(u, dtype=float))
        if order == 0:
            return self(u)
        if self.deriv_fn is not None:
            return self.deriv_fn(u, order)
        return self._fd_derivative(u, order)

    def derivatives_upto(self, u, N):
        """(N+1, len(u)) stack of orders 0..N; uses the batch hook when the
        profile has one (a single transform pass instead of N)."""
        u = np.abs(np.asarray(u, dtype=float))
        if self.deriv_batch is not None:
            return self.deriv_batch(u, N)
        return np.vstack([self.derivative(u, m) for m in range(N + 1)])

    def _fd_derivative(self, u, order):
        if order > 4:
            raise GridTooCoarse(
                f"{self.name}: finite differences unreliable at order {order}; "
                "profile carries no exact derivative")
        h0 = 8.0 * (self.grid[1] - self.grid[0]) if self.grid.size > 1 else 1e-2

        def central(h):
            acc = np.zeros_like(u)
            for i in range(order + 1):
                off = (order / 2.0 - i) * 2.0 * h
                acc += (-1.0) ** i * binom(order, i) * self(np.abs(u + off))
            return acc / (2.0 * h) ** order

        d1, d2 = central(h0), central(h0 / 2.0)
        rich = (4.0 * d2 - d1) / 3.0
        scale = np.abs(rich).max() + 1e-30
        if np.abs(d2 - d1).max() > 0.05 * scale + 1e-9:
            raise GridTooCoarse(
                f"{self.name}: derivative order {order} not grid-converged")
        return rich

    # ------------------------------------------------------------------
    def rescaled(self, factor, name=None):
        fn = None if self.fn is None else (lambda u, f=self.fn: factor * f(u))
        dfn = None if self.deriv_fn is None else \
            (lambda u, m, d=self.deriv_fn: factor * d(u, m))
        dbatch = None if self.deriv_batch is None else \
            (lambda u, N, d=self.deriv_batch: factor * d(u, N))
        taylor = {k: factor * v for k, v in self.taylor.items()} if self.taylor else None
        return ProfileFunction(name or f"{self.name}*{factor:.3g}",
                               self.grid, factor * self.samples, fn=fn,
                               deriv_fn=dfn, deriv_batch=dbatch,
                               vanishing_order=self.vanishing_order,
                               bandlimit=self.bandlimit, taylor=taylor,
                               u_max=self.u_max)

    def dilated(self, c, name=None):
        """Profile u -> phi(c u); bandlimit scales by c, domain by 1/c."""
        c = float(c)
        fn = None if self.fn is None else (lambda u, f=self.fn: f(c * u))
        dfn = None if self.deriv_fn is None else \
            (lambda u, m, d=self.deriv_fn: c ** m * d(c * u, m))
        dbatch = None
        if self.deriv_batch is not None:
            def dbatch(u, N, d=self.deriv_batch, c=c):
                rows = d(c * u, N)
                return rows * c ** np.arange(N + 1, dtype=float)[:, None]
        u_max = self.u_max / c
        grid = self.grid / c
        taylor = {k: c ** k * v for k, v in self.taylor.items()} if self.taylor else None
        bl = None if self.bandlimit is None else self.bandlimit * c
        return ProfileFunction(name or f"{self.name}@{c:g}", grid, self.samples,
                               fn=fn, deriv_fn=dfn, deriv_batch=dbatch,
                               vanishing_order=self.vanishing_order,
                               bandlimit=bl, taylor=taylor, u_max=u_max)

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        step = float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0
        return {
            "grid_step": step,
            "samples": [float(v) for v in self.samples],
            "metadata": {
                "name": self.name,
                "vanishing_order": self.vanishing_order,
                "bandlimit": self.bandlimit,
                "value_at_zero": self.value_at_zero,
                "u_max": self.u_max if math.isfinite(self.u_max) else None,
                "taylor": {str(k): v for k, v in (self.taylor or {}).items()},
            },
        }


def profile_from_dict(data) -> ProfileFunction:
    meta = data["metadata"]
    samples = np.asarray(data["samples"], dtype=float)
    grid = np.arange(samples.size) * float(data["grid_step"])
    taylor = {int(k): float(v) for k, v in meta.get("taylor", {}).items()} or None
    return ProfileFunction(meta.get("name", "profile"), grid, samples,
                           vanishing_order=meta.get("vanishing_order", 0),
                           bandlimit=meta.get("bandlimit"), taylor=taylor)


def load_profile(path) -> ProfileFunction:
    with open(path) as fh:
        return profile_from_dict(json.load(fh))


# =====================================================================
# band-limited factories
# =====================================================================

_GL_CACHE: dict = {}


def _gl01(nq):
    if nq not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(nq)
        _GL_CACHE[nq] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[nq]


def _cos_transform(xi, gw, u, order=0):
    """2 * int_0^1 ghat(xi) xi^order cos(xi u + order*pi/2) dxi, chunked."""
    u = np.asarray(u, dtype=float)
    flat = u.ravel()
    out = np.empty_like(flat)
    weights = gw * xi ** order
    shift = order * np.pi / 2.0
    block = 4096
    for i in range(0, flat.size, block):
        out[i:i + block] = 2.0 * np.cos(np.outer(flat[i:i + block], xi) + shift) @ weights
    return out.reshape(u.shape)


class _HatBacked:
    """Exact-derivative hook for profiles defined by an even compactly
    supported Fourier density sampled on a quadrature grid."""

    def __init__(self, xi, gw):
        self.xi = xi
        self.gw = gw

    def __call__(self, u):
        return _cos_transform(self.xi, self.gw, u, 0)

    def deriv(self, u, order):
        return _cos_transform(self.xi, self.gw, u, order)

    def deriv_batch(self, u, N):
        """Orders 0..N from one cos/sin pass: the order-m transform only
        cycles the phase by m pi/2."""
        u = np.asarray(u, dtype=float)
        A = np.outer(u.ravel(), self.xi)
        C, S = np.cos(A), np.sin(A)
        quarter = (C, -S, -C, S)
        out = np.empty((N + 1, u.size))
        for m in range(N + 1):
            out[m] = 2.0 * quarter[m % 4] @ (self.gw * self.xi ** m)
        return out.reshape((N + 1,) + u.shape)


def _finalize_bandlimited(name, m, xi, gw, u_max, n_samples, taylor_extra=12):
    grid = np.linspace(0.0, u_max, n_samples)
    hat = _HatBacked(xi, gw)
    samples = hat(grid)
    batch = hat.deriv_batch
    taylor = {}
    for nu in range(1, m + taylor_extra + 1):
        if nu % 2 == 0:
            taylor[nu] = float((-1.0) ** (nu // 2) * 2.0 * (gw * xi ** nu).sum())
        else:
            taylor[nu] = 0.0
    vo = 0
    for nu in range(1, m + taylor_extra + 1):
        if abs(taylor[nu]) < VANISH_TOL:
            vo = nu
        else:
            break
    return ProfileFunction(name, grid, samples, deriv_fn=hat.deriv,
                           deriv_batch=batch, vanishing_order=vo,
                           bandlimit=1.0, taylor=taylor, u_max=u_max)


def standard_bump(xi):
    """C-infinity bump: supp [-1/4, 1/4], even, positive inside."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros_like(xi)
    z = 4.0 * xi
    inside = np.abs(z) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def build_admissible(m: int, *, u_max=DEFAULT_U_MAX, n_samples=DEFAULT_SAMPLES,
                     n_quad=DEFAULT_QUAD, bump=standard_bump) -> ProfileFunction:
    """Even band-limited profile with phi(0)=1 and phi^(nu)(0)=0, nu=1..m,
    built from an m-fold symmetric difference of a shifted bump.

    The Fourier density is xi^{-1} (T_h - T_{-h})^m Theta(xi) with
    Theta(xi) = bump(xi+1/2) - bump(xi-1/2) and h = 1/(8m), normalized so
    phi(0) = 1; its support sits inside [-1, 1]. Numerically this recipe is
    only well conditioned for small m (the normalization shrinks like
    (2h)^m m!); prefer `bandlimited_admissible` for m >= 8.
    """
    if m < 2 or m % 2:
        raise InsufficientVanishingOrder("m must be an even integer >= 2")
    h = 1.0 / (8 * m)
    xi, wq = _gl01(n_quad)

    def theta(x):
        return bump(x + 0.5) - bump(x - 0.5)

    acc = np.zeros_like(xi)
    for j in range(m + 1):
        acc += binom(m, j) * (-1.0) ** j * theta(xi + (m - 2 * j) * h)
    ghat = np.where(xi > 1e-12, acc / np.maximum(xi, 1e-300), 0.0)
    z = 2.0 * (wq * ghat).sum()
    if abs(z) < 1e-300:
        raise QuadratureNotConverged("difference construction degenerated")
    gw = wq * ghat / z
    return _finalize_bandlimited(f"bandlimited-m{m}", m, xi, gw, u_max, n_samples)


def bandlimited_admissible(m: int, *, u_max=DEFAULT_U_MAX,
                           n_samples=DEFAULT_SAMPLES,
                           n_quad=DEFAULT_QUAD) -> ProfileFunction:
    """Well-conditioned variant of `build_admissible`.

    Same mathematical object (even C-infinity Fourier density supported in
    [-1, 1] whose moments int xi^nu ghat vanish for nu = 1..m, equivalently
    phi^(nu)(0) = 0), parameterized through orthogonal polynomials instead
    of iterated differences: ghat = G(xi) * q(xi^2) where q is the
    Christoffel kernel at 0 of the weight G. The result satisfies
    max|phi| = phi(0) = 1 at every order, so it stays usable at the high
    vanishing orders the decomposition pipeline requires.
    """
    if m < 2 or m % 2:
        raise InsufficientVanishingOrder("m must be an even integer >= 2")
    xi, wq = _gl01(n_quad)
    G = np.exp(-1.0 / np.maximum(1e-300, 1.0 - xi ** 2))
    G[xi >= 1.0] = 0.0
    s = xi ** 2
    deg = m // 2
    weight = 2.0 * wq * G
    basis = np.vstack([s ** j for j in range(deg + 1)])
    P = np.zeros_like(basis)
    p_at_zero = np.empty(deg + 1)
    coeffs = np.zeros((deg + 1, deg + 1))
    for j in range(deg + 1):
        v = basis[j].copy()
        cj = np.zeros(deg + 1)
        cj[j] = 1.0
        for _ in range(2):  # modified GS, one re-orthogonalization pass
            for i in range(j):
                proj = (weight * v * P[i]).sum()
                v -= proj * P[i]
                cj -= proj * coeffs[i]
        nrm = np.sqrt((weight * v * v).sum())
        P[j] = v / nrm
        coeffs[j] = cj / nrm
        p_at_zero[j] = coeffs[j, 0]
    q = (p_at_zero[:, None] * P).sum(axis=0)
    ghat = G * q
    z = 2.0 * (wq * ghat).sum()
    gw = wq * ghat / z
    return _finalize_bandlimited(f"bandlimited-stable-m{m}", m, xi, gw,
                                 u_max, n_samples)


# =====================================================================
# closed-form profiles
# =====================================================================

def gaussian_profile() -> ProfileFunction:
    """phi(u) = exp(-u^2); the heat-flavor profile."""
    grid = np.linspace(0.0, 32.0, 4097)

    def fn(u):
        return np.exp(-np.square(u))

    def deriv(u, order):
        herm = np.zeros(order + 1)
        herm[order] = 1.0
        return (-1.0) ** order * np.polynomial.hermite.hermval(u, herm) * np.exp(-u * u)

    return ProfileFunction("gaussian", grid, fn(grid), fn=fn, deriv_fn=deriv,
                           deriv_batch=lambda u, N: np.stack(
                               [deriv(u, m) for m in range(N + 1)]),
                           vanishing_order=0, bandlimit=None, u_max=math.inf)


def exp_profile() -> ProfileFunction:
    """phi(u) = exp(-u); Poisson-flavor multiplier (not even: spectral use
    on [0, inf) only)."""
    grid = np.linspace(0.0, 64.0, 4097)

    def fn(u):
        return np.exp(-u)

    def deriv(u, order):
        return (-1.0) ** order * np.exp(-u)

    return ProfileFunction("exp", grid, fn(grid), fn=fn, deriv_fn=deriv,
                           vanishing_order=0, bandlimit=None, u_max=math.inf)


# =====================================================================
# Stein's eta and its smoothed exponential
# =====================================================================

_OMEGA_RE = math.cos(math.pi / 4.0)


def stein_eta(s):
    """eta(s) = (e / (pi s)) Im exp(-omega (s-1)^{1/4}), omega = e^{-i pi/4}.

    Vanishing moments against s^k make Phi below a smooth even majorant of
    the decaying exponential.
    """
    s = np.asarray(s, dtype=float)
    u = np.power(np.maximum(s - 1.0, 0.0), 0.25)
    return (np.e / (np.pi * s)) * np.exp(-_OMEGA_RE * u) * np.sin(_OMEGA_RE * u)


def _eta_u_integrand(u, extra=1.0):
    # substitution s = 1 + u^4 smooths the s^{1/4} branch point
    return extra * (np.e / np.pi) * np.exp(-_OMEGA_RE * u) * np.sin(_OMEGA_RE * u) \
        * 4.0 * u ** 3 / (1.0 + u ** 4)


def stein_eta_moment(k: int, *, tol=1e-10) -> float:
    """int_1^inf s^k eta(s) ds via adaptive quadrature (s = 1 + u^4)."""
    from scipy.integrate import quad

    val, err = quad(lambda u: _eta_u_integrand(u, (1.0 + u ** 4) ** k),
                    0.0, 170.0, limit=800, epsabs=tol, epsrel=tol)
    if not math.isfinite(val):
        raise QuadratureNotConverged(f"eta moment k={k} failed")
    return float(val)


def _stein_nodes():
    """Composite Gauss-Legendre grid in the u = (s-1)^{1/4} variable, dense
    near 0 where e^{-s*lam} varies fastest."""
    pieces = [(0.0, 2.0, 400), (2.0, 8.0, 400), (8.0, 32.0, 400), (32.0, 170.0, 400)]
    us, ws = [], []
    for a, b, nq in pieces:
        x, w = np.polynomial.legendre.leggauss(nq)
        us.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(us), np.concatenate(ws)


def stein_phi_value(lam, *, nodes=None) -> float:
    """Phi(lam) = int_1^inf eta(s) e^{-s |lam|} ds."""
    u, w = nodes if nodes is not None else _stein_nodes()
    s = 1.0 + u ** 4
    integ = _eta_u_integrand(u) * np.exp(-s * abs(float(lam)))
    return float((w * integ).sum())


def stein_phi_profile(*, u_max=64.0, n_samples=4097) -> ProfileFunction:
    """Smoothed decaying exponential as an admissible profile: even, all
    derivatives vanish at 0 (eta's vanishing moments), Schwartz tail."""
    u, w = _stein_nodes()
    s = 1.0 + u ** 4
    base = _eta_u_integrand(u)

    def fn(lam):
        lam = np.abs(np.asarray(lam, dtype=float))
        flat = lam.ravel()
        out = np.empty_like(flat)
        block = 2048
        for i in range(0, flat.size, block):
            ex = np.exp(-np.outer(flat[i:i + block], s))
            out[i:i + block] = ex @ (w * base)
        return out.reshape(lam.shape)

    def deriv(lam, order):
        lam = np.abs(np.asarray(lam, dtype=float))
        out = np.empty_like(lam.ravel())
        flat = lam.ravel()
        coeff = w * base * (-s) ** order
        block = 2048
        for i in range(0, flat.size, block):
            ex = np.exp(-np.outer(flat[i:i + block], s))
            out[i:i + block] = ex @ coeff
        out = out.reshape(lam.shape)
        # even extension: every derivative vanishes at 0 by the moment
        # identities, and odd orders are odd functions
        out[lam == 0.0] = 0.0
        return out

    def deriv_batch(lam, N):
        lam = np.abs(np.asarray(lam, dtype=float))
        ex = np.exp(-np.outer(lam.ravel(), s))
        out = np.empty((N + 1, lam.size))
        for m in range(N + 1):
            out[m] = ex @ (w * base * (-s) ** m)
            if m:
                out[m][lam.ravel() == 0.0] = 0.0
        return out.reshape((N + 1,) + lam.shape)

    grid = np.linspace(0.0, u_max, n_samples)
    return ProfileFunction("stein-phi", grid, fn(grid), fn=fn, deriv_fn=deriv,
                           deriv_batch=deriv_batch, vanishing_order=0,
                           bandlimit=None, u_max=math.inf)


# =====================================================================
# norms, pairs, Rychkov decomposition, dictionary
# =====================================================================

def norm_N(phi: ProfileFunction, N: int, *, grid=None) -> float:
    """sup over the grid of (1+u)^N max_{0<=m<=N} |phi^(m)(u)|.

    A grid supremum, hence a lower bound of the continuum value; exact
    derivative hooks keep high orders stable. The default scan grid is
    coarser than the sample grid: admissible profiles are band-limited to
    O(1), so their derivatives carry no sub-unit-scale features.
    """
    if grid is None:
        top = phi.grid[-1] if phi.grid.size else 32.0
        u = np.linspace(0.0, float(top), 1025)
    else:
        u = np.asarray(grid, dtype=float)
    best = np.abs(phi.derivatives_upto(u, N)).max(axis=0)
    return float(((1.0 + u) ** N * best).max())


@dataclass
class LPPair:
    """phi with its difference/sum companions psi, psi_tilde and the
    certified even vanishing order K."""
    phi: ProfileFunction
    psi: ProfileFunction
    psi_tilde: ProfileFunction
    K: int

    @property
    def bandlimited(self) -> bool:
        return self.phi.bandlimit is not None


def required_vanishing(p: float, d: float) -> tuple[int, int]:
    """(n, K): n = floor(d/2p) + 1; K = smallest even >= 2n + d + d/p + 1."""
    n = int(math.floor(d / (2.0 * p))) + 1
    K = 2 * n + d + d / p + 1.0
    K_even = int(math.ceil(K / 2.0)) * 2
    return n, K_even


def lp_pair(phi: ProfileFunction, p: float, d: float) -> LPPair:
    """Build psi = phi(.) - phi(2.), psi_tilde = phi(.) + phi(2.) with the
    vanishing order demanded by the exponent p and dimension d."""
    n, K = required_vanishing(p, d)
    if phi.vanishing_order < K - 1:
        raise InsufficientVanishingOrder(
            f"need vanishing order >= {K - 1}, profile {phi.name} certifies "
            f"{phi.vanishing_order}")
    half = phi.u_max / 2.0
    if math.isfinite(half):
        grid = phi.grid[phi.grid <= half]
    else:
        grid = phi.grid

    def mk(sign, label):
        def fn(u, s=sign):
            return phi(u) + s * phi(2.0 * u)

        taylor = None
        if phi.taylor:
            taylor = {k: (1.0 + sign * 2.0 ** k) * v for k, v in phi.taylor.items()}
        return ProfileFunction(f"{label}[{phi.name}]", grid, fn(grid), fn=fn,
                               vanishing_order=phi.vanishing_order,
                               bandlimit=None if phi.bandlimit is None
                               else 2.0 * phi.bandlimit,
                               taylor=taylor, u_max=half)

    return LPPair(phi, mk(-1.0, "psi"), mk(+1.0, "psi_tilde"), K)


def rychkov_pair(phi: ProfileFunction, N: int):
    """Companions (psi0, psi) with psi0(0)=1, psi^(nu)(0)=0 for nu<=N, and
    the dyadic partition identity

        psi0(l)phi(l) + sum_k psi(2^-k l)[phi(2^-k l) - phi(2^-k+1 l)] = 1.

    Built from binomial expansions of (phi^2 + (1-phi^2))^{N+2}.
    """
    if abs(phi.value_at_zero - 1.0) > 1e-9:
        raise InsufficientVanishingOrder("rychkov companions need phi(0) = 1")
    Np = N + 2

    def psi0_fn(lam):
        a = phi(lam)
        acc = np.zeros_like(a)
        for mm in range(1, Np + 1):
            acc += binom(Np, mm) * a ** (2 * mm - 1) * (1.0 - a * a) ** (Np - mm)
        return acc

    def psi_fn(lam):
        a = phi(lam)
        b = phi(2.0 * np.asarray(lam, dtype=float))
        diff2 = a * a - b * b
        acc = np.zeros_like(a)
        for mm in range(1, Np + 1):
            acc += binom(Np, mm) * diff2 ** (mm - 1) * (1.0 - a * a) ** (Np - mm)
        return (a + b) * acc

    half = phi.u_max / 2.0
    g_full = phi.grid if not math.isfinite(phi.u_max) else phi.grid
    g_half = g_full[g_full <= half] if math.isfinite(half) else g_full
    psi0 = ProfileFunction(f"rychkov0[{phi.name},N={N}]", g_full, psi0_fn(g_full),
                           fn=psi0_fn, u_max=phi.u_max)
    psi = ProfileFunction(f"rychkov[{phi.name},N={N}]", g_half, psi_fn(g_half),
                          fn=psi_fn, vanishing_order=N, u_max=half)
    return psi0, psi


def rychkov_identity_residual(phi: ProfileFunction, N: int, lam_grid,
                              terms: int = 60) -> float:
    """sup over the grid of |partition identity - 1| with a finite dyadic sum."""
    psi0, psi = rychkov_pair(phi, N)
    lam = np.asarray(lam_grid, dtype=float)
    total = psi0(lam) * phi(lam)
    for k in range(1, terms + 1):
        lk = 2.0 ** (-k) * lam
        total += psi(lk) * (phi(lk) - phi(2.0 * lk))
    return float(np.abs(total - 1.0).max())


_BASE_CACHE: dict = {}


def _cached_base(key, builder):
    if key not in _BASE_CACHE:
        _BASE_CACHE[key] = builder()
    return _BASE_CACHE[key]


def build_dictionary(N: int, *, orders=(2, 4, 6), dilations=(0.5, 1.0, 2.0),
                     norm_grid=None) -> list[ProfileFunction]:
    """Library approximating the unit ball of the N-th profile norm from
    below: gaussian, the smoothed exponential, stable band-limited profiles,
    and their dyadic dilates, each rescaled to norm exactly 1."""
    base = [_cached_base("gaussian", gaussian_profile),
            _cached_base("stein", stein_phi_profile)]
    base += [_cached_base(("bandlimited", m),
                          lambda m=m: bandlimited_admissible(m))
             for m in orders]
    members = []
    for prof in base:
        for c in dilations:
            cand = prof if c == 1.0 else prof.dilated(c)
            nn = norm_N(cand, N, grid=norm_grid)
            if nn <= 0 or not math.isfinite(nn):
                continue
            members.append(cand.rescaled(1.0 / nn, name=f"{cand.name}/N{N}"))
    return members


# =====================================================================
# certificates
# =====================================================================

def fourier_mass_outside(phi: ProfileFunction, limit: float) -> float:
    """Relative L1 mass of the reconstructed transform outside [-limit, limit],
    from a DFT of the evenly extended sample grid."""
    vals = phi.samples
    step = float(phi.grid[1] - phi.grid[0])
    full = np.concatenate([vals[:0:-1], vals])
    F = np.abs(np.fft.rfft(full)) * step
    freq = np.fft.rfftfreq(full.size, step) * 2.0 * np.pi
    total = F.sum()
    if total == 0:
        return 0.0
    return float(F[freq > limit].sum() / total)


def grid_convergence_error(phi: ProfileFunction) -> float:
    """Max gap between cubic interpolation at midpoints and the profile's
    exact evaluator there; 0.0 when no exact evaluator exists."""
    if phi.fn is None and phi.deriv_fn is None:
        return 0.0
    mid = (phi.grid[:-1] + phi.grid[1:]) / 2.0
    exact = phi.fn(mid) if phi.fn is not None else phi.deriv_fn(mid, 0)
    interp = CubicSpline(phi.grid, phi.samples)(mid)
    return float(np.abs(exact - interp).max())


def certificates(phi: ProfileFunction, m: int | None = None) -> dict:
    """Admissibility certificates: value at zero, derivative vanishing at
    zero up to m, band-limit mass, grid convergence."""
    m = m if m is not None else phi.vanishing_order
    derivs = {}
    if phi.taylor:
        for nu in range(1, m + 1):
            derivs[nu] = abs(phi.taylor.get(nu, 0.0))
    out = {
        "name": phi.name,
        "value_at_zero": phi.value_at_zero,
        "vanishing_order": phi.vanishing_order,
        "max_deriv_at_zero": max(derivs.values()) if derivs else None,
        "grid_convergence": grid_convergence_error(phi),
    }
    if phi.bandlimit is not None:
        out["fourier_mass_outside_bandlimit"] = fourier_mass_outside(phi, phi.bandlimit)
    return out
