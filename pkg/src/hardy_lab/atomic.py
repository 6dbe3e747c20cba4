"""Constructive atomic decomposition.

Pipeline: grand maximal field -> dyadic level sets Omega_r -> per-scale
annuli E_rk -> Whitney cover per level -> ball pieces F_B -> atoms
(a, b, ball) with calibrated normalization.

Exactness discipline: every kernel is truncated to its locality radius
tau * 2^{-k} before use, which makes supports and regroupings exact set
arithmetic; the discarded kernel mass, the scale-truncation tail, and any
clipped levels are logged so the reconstruction defect is fully accounted
for. Levels whose set is the whole space (always present, since the lowest
threshold sits below the field minimum) cannot carry a Whitney cover and
are routed through a single full-space ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import InputError, VanishingOrderTooLow, ZeroField
from .maximal import (MaximalField, dyadic_t_grid, grand_maximal, grand_order,
                      hp_quasinorm)
from .profiles import LPPair, build_dictionary
from .spectral import (HeatDiagnostics, SpectralOperator, fit_heat_constants,
                       propagation_tau)
from .whitney import WhitneyCover, whitney_cover

# Pieces whose admissibility constant sits this far below the run's binding
# constant are logged instead of emitted: their coefficients are negligible
# and their values sit at the cross-scale noise floor, where the relative
# operator-consistency check is meaningless.
ATOM_FLOOR = 1e-6
CAL_SLACK = 1e-12    # multiplicative head-room after constant calibration


# =====================================================================
# level sets
# =====================================================================

@dataclass
class LevelStructure:
    r_min: int
    r_max: int
    omegas: dict          # r -> boolean mask
    s_r: dict             # r -> smallest k in window with E_rk nonempty (or None)
    e_rk: dict            # (r, k) -> boolean mask
    tau: float
    k_window: list
    full_levels: list     # r with Omega_r == M

    def levels(self):
        return range(self.r_min, self.r_max + 1)

    def omega_mass(self, r, measure) -> float:
        return float(measure[self.omegas[r]].sum())


def level_sets(grand_field, tau: float, k_window, space) -> LevelStructure:
    """Dyadic level sets of the grand maximal field and their annuli.

    E_rk peels Omega_r into the points deeper than 2 tau 2^{-k} inside
    Omega_r but not that deep inside Omega_{r+1}; for fixed k the E_rk
    partition the deep part of the lowest level exactly. dist(x, empty)
    is +inf, so levels equal to the whole space qualify at every scale.
    """
    values = grand_field.values if isinstance(grand_field, MaximalField) \
        else np.asarray(grand_field, dtype=float)
    vmax = float(values.max())
    if vmax <= 0.0:
        raise ZeroField("grand maximal field is identically zero")
    pos = values[values > 0]
    vmin = float(pos.min())
    r_min = int(math.floor(math.log2(vmin)))
    if 2.0 ** r_min >= vmin:
        r_min -= 1
    r_max = int(math.ceil(math.log2(vmax)))
    k_window = list(k_window)
    omegas, depth = {}, {}
    for r in range(r_min, r_max + 2):
        mask = values > 2.0 ** r
        omegas[r] = mask
        depth[r] = space.dist_to_set_vector(~mask) if mask.any() else None
    e_rk, s_r = {}, {}
    full = []
    for r in range(r_min, r_max + 1):
        if omegas[r].all():
            full.append(r)
        first = None
        for k in k_window:
            reach = 2.0 * tau * 2.0 ** (-k)
            u_r = omegas[r] & (depth[r] > reach) if depth[r] is not None \
                else np.zeros(space.n, dtype=bool)
            up = omegas[r + 1]
            u_r1 = up & (depth[r + 1] > reach) if depth[r + 1] is not None \
                else np.zeros(space.n, dtype=bool)
            mask = u_r & ~u_r1
            e_rk[(r, k)] = mask
            if first is None and mask.any():
                first = k
        s_r[r] = first
    omegas = {r: omegas[r] for r in range(r_min, r_max + 1)}
    return LevelStructure(r_min, r_max, omegas, s_r, e_rk, float(tau),
                          k_window, full)


def e_rk(levels: LevelStructure, r: int, k: int) -> np.ndarray:
    """Point set E_rk as indices."""
    return np.flatnonzero(levels.e_rk[(r, k)])


# =====================================================================
# truncated scale calculus
# =====================================================================

class ScaleCalculus:
    """Truncated kernels of psi, psi_tilde and the inverse-power companions
    g_m(lambda) = lambda^{-2m} psi(lambda) at every scale in the window.

    Truncation zeroes every kernel entry with rho(x,y) > tau 2^{-k}; the
    discarded mass is logged per scale. g_m is evaluated through the psi
    series near zero (psi vanishes to high order there, so the ratio
    psi(u)/u^{2m} would otherwise drown in interpolation noise).
    """

    def __init__(self, op: SpectralOperator, pair: LPPair, tau: float,
                 k_window, n_orders: int):
        if not pair.bandlimited:
            raise InputError("scale calculus needs a band-limited pair")
        if pair.psi.taylor is None:
            raise VanishingOrderTooLow(
                "pair carries no series data for the inverse companions")
        self.op = op
        self.pair = pair
        self.tau = float(tau)
        self.ks = list(k_window)
        self.n_orders = int(n_orders)
        self.psi_t, self.psi_full, self.psit_t, self.psit_full = {}, {}, {}, {}
        self.g_t = {m: {} for m in range(1, n_orders + 1)}
        self.truncation_log = []
        sq = op.sqrt_eigenvalues
        dist = op.space.dist
        mu = op.space.measure
        for k in self.ks:
            t = 2.0 ** (-k)
            radius = self.tau * t
            outside = dist > radius
            psi_vals = pair.psi(t * sq)
            psit_vals = pair.psi_tilde(t * sq)
            P = op.multiplier_kernel(psi_vals)
            Q = op.multiplier_kernel(psit_vals)
            Pt = np.where(outside, 0.0, P)
            Qt = np.where(outside, 0.0, Q)
            self.psi_full[k], self.psi_t[k] = P, Pt
            self.psit_full[k], self.psit_t[k] = Q, Qt
            discarded = np.abs(P[outside])
            self.truncation_log.append({
                "k": int(k),
                "radius": radius,
                "pairs_cut": int(outside.sum()) // 2,
                "max_discarded": float(discarded.max()) if discarded.size else 0.0,
                "l1_discarded": float((np.abs(P) * mu[None, :])[outside].sum()),
            })
            for m in range(1, self.n_orders + 1):
                g_vals = self._g_values(t * sq, m)
                self.g_t[m][k] = np.where(outside, 0.0, op.multiplier_kernel(g_vals))

    def _g_values(self, u: np.ndarray, m: int, switch: float = 1.0) -> np.ndarray:
        psi = self.pair.psi
        out = np.empty_like(u)
        big = u >= switch
        if big.any():
            out[big] = psi(u[big]) / u[big] ** (2 * m)
        small = ~big
        if small.any():
            acc = np.zeros(int(small.sum()))
            us = u[small]
            for nu, c in sorted(psi.taylor.items()):
                if nu < 2 * m or c == 0.0:
                    continue
                acc += c / math.factorial(nu) * us ** (nu - 2 * m)
            out[small] = acc
        return out

    def weights(self, f: np.ndarray) -> dict:
        """psi_tilde_k f with truncated kernels, per scale."""
        mu = self.op.space.measure
        return {k: self.psit_t[k] @ (mu * f) for k in self.ks}

    def kernel_defect(self, f: np.ndarray) -> np.ndarray:
        """sum_k (psi_k psit_k - psi_k^t psit_k^t) f: the reconstruction
        defect attributable to kernel truncation."""
        mu = self.op.space.measure
        out = np.zeros(self.op.n)
        for k in self.ks:
            exact = self.psi_full[k] @ (mu * (self.psit_full[k] @ (mu * f)))
            trunc = self.psi_t[k] @ (mu * (self.psit_t[k] @ (mu * f)))
            out += exact - trunc
        return out


# =====================================================================
# pieces
# =====================================================================

@dataclass
class BallPiece:
    level_r: int
    center: int
    core_radius: float          # rho_ell; ball B = B(center, rho/2), B* = 7B
    terms: list                 # [(k, region mask)]
    F: np.ndarray               # the piece, truncated kernels
    lkG: np.ndarray             # rows m = 0..n: L^m (L^{-n} piece)
    k0: int

    @property
    def star_radius(self) -> float:
        return 3.5 * self.core_radius


def piece_f_r(op: SpectralOperator, pair: LPPair, f: np.ndarray,
              levels: LevelStructure, r: int, *,
              calculus: ScaleCalculus | None = None,
              weights: dict | None = None) -> np.ndarray:
    """F_r = sum over window scales of the E_rk-restricted kernel integrals."""
    calc = calculus if calculus is not None else \
        ScaleCalculus(op, pair, levels.tau, levels.k_window, 1)
    w = weights if weights is not None else calc.weights(f)
    mu = op.space.measure
    out = np.zeros(op.n)
    for k in calc.ks:
        mask = levels.e_rk[(r, k)]
        if mask.any():
            out += calc.psi_t[k][:, mask] @ (mu[mask] * w[k][mask])
    return out


def _ball_regions(levels: LevelStructure, r: int, cover: WhitneyCover,
                  k: int, space) -> list[np.ndarray]:
    """R_rk per ball: E_rk cap {dist(.,B) < 2 tau 2^{-k}} (empty unless the
    ball meets E_rk), minus the same sets of all later balls."""
    e_mask = levels.e_rk[(r, k)]
    J = len(cover)
    reach = 2.0 * levels.tau * 2.0 ** (-k)
    e_balls = []
    if not e_mask.any():
        return [np.zeros(space.n, dtype=bool) for _ in range(J)]
    for j in range(J):
        ball = cover.ball_mask(j, 0.5)
        if (ball & e_mask).any():
            near = space.dist_to_set_vector(ball) < reach
            e_balls.append(e_mask & near)
        else:
            e_balls.append(np.zeros(space.n, dtype=bool))
    regions = []
    later = np.zeros(space.n, dtype=bool)
    for j in range(J - 1, -1, -1):
        regions.append(e_balls[j] & ~later)
        later |= e_balls[j]
    regions.reverse()
    return regions


def _integrate_piece(calc: ScaleCalculus, weights: dict, terms,
                     n_orders: int) -> tuple[np.ndarray, np.ndarray]:
    """(F, lkG) for a term list [(k, mask)]: F from truncated psi kernels,
    row m of lkG from the order n-m inverse companions (row n is F)."""
    op = calc.op
    mu = op.space.measure
    F = np.zeros(op.n)
    lkG = np.zeros((n_orders + 1, op.n))
    for k, mask in terms:
        if not mask.any():
            continue
        t = 2.0 ** (-k)
        wk = mu[mask] * weights[k][mask]
        F += calc.psi_t[k][:, mask] @ wk
        for m in range(n_orders):
            order = n_orders - m
            lkG[m] += t ** (2 * order) * (calc.g_t[order][k][:, mask] @ wk)
    lkG[n_orders] = F
    return F, lkG


def ball_piece(op: SpectralOperator, pair: LPPair, f: np.ndarray,
               levels: LevelStructure, r: int, cover: WhitneyCover,
               ell: int, *, calculus: ScaleCalculus | None = None,
               weights: dict | None = None, n_orders: int = 1) -> BallPiece:
    """Piece of F_r carried by the ell-th cover ball, with its inverse
    companions; support sits inside 7 B_ell exactly (truncated kernels)."""
    calc = calculus if calculus is not None else \
        ScaleCalculus(op, pair, levels.tau, levels.k_window, n_orders)
    w = weights if weights is not None else calc.weights(f)
    rho = float(cover.core_radii[ell])
    k0 = _k_start(calc.ks, levels.tau, rho)
    terms = []
    for k in calc.ks:
        if k < k0:
            continue
        regions = _ball_regions(levels, r, cover, k, op.space)
        terms.append((k, regions[ell]))
    F, lkG = _integrate_piece(calc, w, terms, calc.n_orders)
    return BallPiece(r, int(cover.centers[ell]), rho, terms, F, lkG, k0)


def _k_start(ks, tau, rho) -> int:
    for k in ks:
        if tau * 2.0 ** (-k) < rho:
            return k
    return ks[-1] + 1 if ks else 0


# =====================================================================
# atoms
# =====================================================================

@dataclass
class Atom:
    a: np.ndarray
    b: np.ndarray
    ball: tuple               # (center index, radius of B* = 7B)
    n: int
    p: float
    lk_b: np.ndarray          # rows m = 0..n: L^m b (truncated construction)
    lk_b_sup: np.ndarray
    kind: str                 # "regular" | "outstanding"
    level_r: int | None = None
    support: np.ndarray | None = None
    star_mass: float = 0.0


def make_atom(op: SpectralOperator, pair: LPPair, piece: BallPiece, r: int,
              ball: tuple, p: float, d: float,
              c_sharp: float | None = None) -> tuple[float, Atom]:
    """Normalize a ball piece into an atom: a = s F_B, b = s L^{-n} F_B with
    s = c#^{-1} |B*|^{-1/p} 2^{-r}, coefficient c# |B*|^{1/p} 2^r.

    When no run-level c# is supplied, the smallest constant making this
    piece admissible is used.
    """
    n_atom = piece.lkG.shape[0] - 1
    if pair.K <= 2 * n_atom:
        raise VanishingOrderTooLow(
            f"pair order K={pair.K} must exceed 2n = {2 * n_atom}")
    center, star_radius = ball
    star_mask = op.space.ball_mask(center, star_radius)
    mass = float(op.space.measure[star_mask].sum())
    if c_sharp is None:
        c_sharp = piece_constant(piece) * (1.0 + CAL_SLACK)
    scale = 2.0 ** (-r) / (c_sharp * mass ** (1.0 / p))
    lk_b = scale * piece.lkG
    atom = Atom(a=lk_b[n_atom], b=lk_b[0], ball=(center, star_radius),
                n=n_atom, p=p, lk_b=lk_b,
                lk_b_sup=np.abs(lk_b).max(axis=1), kind="regular",
                level_r=r, support=star_mask, star_mass=mass)
    lam = c_sharp * mass ** (1.0 / p) * 2.0 ** r
    return lam, atom


def piece_constant(piece: BallPiece) -> float:
    """Smallest c with ||L^m G_B||_inf <= c 2^r rB*^{2(n-m)} for m = 0..n."""
    n_atom = piece.lkG.shape[0] - 1
    rb = piece.star_radius
    best = 0.0
    for m in range(n_atom + 1):
        sup = float(np.abs(piece.lkG[m]).max())
        best = max(best, sup / rb ** (2 * (n_atom - m)))
    return best * 2.0 ** (-piece.level_r)


# =====================================================================
# decomposition
# =====================================================================

@dataclass
class DecomposeConfig:
    N: int | None = None
    t_grid: np.ndarray | None = None
    dictionary: list | None = None
    diagnostics: HeatDiagnostics | None = None
    k_max_extra: int = 0
    mode: str = "compact"            # "compact" | "noncompact"
    clip_ratio: float = 1e-12
    atom_floor: float = ATOM_FLOOR


@dataclass
class AtomicDecomposition:
    terms: list                      # [(lambda, Atom)]
    outstanding: tuple | None        # (lambda_A, Atom) or None
    residual: np.ndarray
    budget: float                    # sum |lambda|^p including outstanding
    budget_regular: float
    hp_norm: float
    c_sharp: float
    truncation_log: dict
    signal: np.ndarray
    p: float
    meta: dict = dfield(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return len(self.terms) + (1 if self.outstanding else 0)

    def reconstruction(self) -> np.ndarray:
        out = np.zeros_like(self.signal)
        for lam, atom in self.terms:
            out += lam * atom.a
        if self.outstanding is not None:
            lam_a, atom_a = self.outstanding
            out += lam_a * atom_a.a
        return out


def _max_full_scale_index(space, x0: int) -> int:
    """Maximal j with the open ball B(x0, 2^{-j}) equal to the whole space."""
    ecc = space.eccentricity(x0)
    j = int(math.floor(-math.log2(max(ecc, 1e-300))))
    while 2.0 ** (-j) <= ecc:
        j -= 1
    return j


def decompose(op: SpectralOperator, pair: LPPair, f: np.ndarray, p: float,
              config: DecomposeConfig | None = None) -> AtomicDecomposition:
    """Full pipeline: split off the coarse part at the scale where a ball
    fills the space (outstanding atom), decompose the rest through level
    sets, Whitney covers and ball pieces, then calibrate the normalization
    constant so every emitted atom is admissible.

    "noncompact" mode skips the coarse split and lets every level start at
    its own first populated scale; the coarse remainder then stays in the
    logged residual.
    """
    config = config or DecomposeConfig()
    if not 0.0 < p <= 1.0:
        raise InputError(f"p = {p} outside (0, 1]")
    f = np.asarray(f, dtype=float)
    space = op.space
    mu = space.measure
    if not np.abs(f).max() > 0.0:
        empty_log = {"scales": [], "tail_l2": 0.0, "kernel_defect_l2": 0.0,
                     "clipped_levels": [], "skipped_pieces": 0}
        return AtomicDecomposition([], None, np.zeros_like(f), 0.0, 0.0, 0.0,
                                   0.0, empty_log, f, p, {"empty": True})

    geom = space.geometry()
    d = geom.d
    n_atom = int(math.floor(d / (2.0 * p))) + 1
    if pair.K <= 2 * n_atom:
        raise VanishingOrderTooLow(
            f"pair K={pair.K} too low for n={n_atom} (need K > 2n)")
    if not pair.bandlimited:
        raise InputError("decomposition needs a band-limited pair")

    diag = config.diagnostics or fit_heat_constants(op, dyadic_t_grid(space))
    tau = propagation_tau(diag)
    t_grid = config.t_grid if config.t_grid is not None else dyadic_t_grid(space)
    N = config.N or grand_order(d, p)
    dictionary = config.dictionary or build_dictionary(N)

    grand = grand_maximal(op, f, dictionary, N, t_grid)
    hp = hp_quasinorm(op, f, p, t_grid, "heat")

    x0 = space.center_point()
    j = _max_full_scale_index(space, x0)
    res = max(space.resolution(), 1e-6)
    k_max = int(math.floor(math.log2(4.0 / res))) + 1 + config.k_max_extra
    k_window = list(range(j + 1, k_max + 1))

    sq = op.sqrt_eigenvalues
    phi_j_sq = pair.phi(2.0 ** (-j) * sq) ** 2
    outstanding = None
    lam_a = 0.0
    if config.mode == "compact":
        f0 = op.apply_multiplier(phi_j_sq, f)
        f0_sup = float(np.abs(f0).max())
        if f0_sup > 0.0 and hp > 0.0:
            mass_m = space.total_mass
            c_star_out = f0_sup * mass_m ** (1.0 / p) / hp * (1.0 + CAL_SLACK)
            lam_a = c_star_out * hp
            a_vec = f0 / lam_a
            atom_a = Atom(a=a_vec, b=a_vec.copy(),
                          ball=(x0, 14.0 * space.eccentricity(x0)), n=0, p=p,
                          lk_b=a_vec[None, :],
                          lk_b_sup=np.array([np.abs(a_vec).max()]),
                          kind="outstanding",
                          support=np.ones(space.n, dtype=bool),
                          star_mass=mass_m)
            outstanding = (lam_a, atom_a)
    else:
        f0 = np.zeros_like(f)

    levels = level_sets(grand, tau, k_window, space)
    calc = ScaleCalculus(op, pair, tau, k_window, n_atom)
    weights = calc.weights(f)

    # level clipping by budget weight
    level_weights = {r: 2.0 ** (p * r) * levels.omega_mass(r, mu)
                     for r in levels.levels()}
    total_weight = sum(level_weights.values())
    clipped = [r for r, wgt in level_weights.items()
               if wgt < config.clip_ratio * total_weight]
    kept = [r for r in levels.levels() if r not in clipped]

    pieces: list[BallPiece] = []
    level_pieces: dict[int, list[BallPiece]] = {}
    covers: dict[int, WhitneyCover | None] = {}
    for r in kept:
        omega = levels.omegas[r]
        if not omega.any():
            continue
        entries = []
        if r in levels.full_levels:
            rho_full = 4.0 * space.eccentricity(x0)
            terms = [(k, levels.e_rk[(r, k)]) for k in calc.ks]
            F, lkG = _integrate_piece(calc, weights, terms, n_atom)
            entries.append(BallPiece(r, x0, rho_full, terms, F, lkG,
                                     calc.ks[0] if calc.ks else 0))
            covers[r] = None
        else:
            cover = whitney_cover(space, omega)
            covers[r] = cover
            region_cache = {k: _ball_regions(levels, r, cover, k, space)
                            for k in calc.ks
                            if levels.e_rk[(r, k)].any()}
            for ell in range(len(cover)):
                rho = float(cover.core_radii[ell])
                k0 = _k_start(calc.ks, tau, rho)
                terms = [(k, region_cache[k][ell]) for k in region_cache
                         if k >= k0]
                if not terms:
                    continue
                F, lkG = _integrate_piece(calc, weights, terms, n_atom)
                entries.append(BallPiece(r, int(cover.centers[ell]), rho,
                                         terms, F, lkG, k0))
        level_pieces[r] = entries
        pieces.extend(entries)

    constants = [piece_constant(pc) for pc in pieces]
    c_sharp = max(constants) * (1.0 + CAL_SLACK) if constants else 0.0
    floor = config.atom_floor * c_sharp
    terms_out = []
    skipped = 0
    skipped_mass = np.zeros(space.n)
    for pc, const in zip(pieces, constants):
        if const <= floor:
            skipped += 1
            skipped_mass += pc.F
            continue
        lam, atom = make_atom(op, pair, pc, pc.level_r,
                              (pc.center, pc.star_radius), p, d,
                              c_sharp=c_sharp)
        terms_out.append((lam, atom))

    recon = np.zeros_like(f)
    for lam, atom in terms_out:
        recon += lam * atom.a
    if outstanding is not None:
        recon += lam_a * outstanding[1].a
    residual = f - recon

    # scale-window tail, spectrally (telescoping): (1 - phi(2^-kmax .)^2) f
    # in compact mode; plus the coarse remainder phi_j^2 f when no coarse
    # split was made
    phi_kmax_sq = pair.phi(2.0 ** (-k_max) * sq) ** 2
    if config.mode == "compact":
        tail = op.apply_multiplier(1.0 - phi_kmax_sq, f)
    else:
        tail = op.apply_multiplier(1.0 - phi_kmax_sq + phi_j_sq, f)

    kernel_defect = calc.kernel_defect(f)
    clipped_defect = np.zeros(space.n)
    for r in clipped:
        for k in calc.ks:
            mask = levels.e_rk[(r, k)]
            if mask.any():
                clipped_defect += calc.psi_t[k][:, mask] @ (mu[mask] * weights[k][mask])
    # points outside every level annulus at some scale (possible only when
    # the grand field vanishes somewhere): their scale mass is unassigned
    uncovered_defect = np.zeros(space.n)
    for k in calc.ks:
        covered = np.zeros(space.n, dtype=bool)
        for r in levels.levels():
            covered |= levels.e_rk[(r, k)]
        unc = ~covered
        if unc.any():
            uncovered_defect += calc.psi_t[k][:, unc] @ (mu[unc] * weights[k][unc])

    budget_regular = float(sum(abs(lam) ** p for lam, _ in terms_out))
    budget = budget_regular + (abs(lam_a) ** p if outstanding else 0.0)

    accounted = kernel_defect + clipped_defect + uncovered_defect
    truncation_log = {
        "scales": calc.truncation_log,
        "tail_l2": float(np.linalg.norm(tail)),
        "kernel_defect_l2": float(np.linalg.norm(kernel_defect)),
        "clipped_levels": clipped,
        "clipped_defect_l2": float(np.linalg.norm(clipped_defect)),
        "uncovered_defect_l2": float(np.linalg.norm(uncovered_defect)),
        "accounted_defect_l2": float(np.linalg.norm(accounted)),
        "skipped_pieces": skipped,
        "skipped_mass_l2": float(np.linalg.norm(skipped_mass)),
    }
    meta = {
        "d": d, "n": n_atom, "K": pair.K, "tau": tau, "N": N,
        "x0": x0, "j": j, "k_window": k_window,
        "r_range": [levels.r_min, levels.r_max],
        "mode": config.mode,
        "levels_kept": kept,
        "level_ball_counts": {r: len(v) for r, v in level_pieces.items()},
        "omega_masses": {r: levels.omega_mass(r, mu) for r in kept},
    }
    decomp = AtomicDecomposition(terms_out, outstanding, residual, budget,
                                 budget_regular, hp, c_sharp, truncation_log,
                                 f, p, meta)
    decomp.meta["levels"] = levels
    decomp.meta["calculus"] = calc
    decomp.meta["level_pieces"] = level_pieces
    decomp.meta["weights"] = weights
    decomp.meta["covers"] = covers
    return decomp


# =====================================================================
# validation / reconstruction
# =====================================================================

def validate_atom(op: SpectralOperator, atom: Atom, p: float, d: float) -> dict:
    """Per-item admissibility report with measured slacks."""
    if atom.kind == "outstanding":
        bound = op.space.total_mass ** (-1.0 / p)
        sup = float(np.abs(atom.a).max())
        return {"kind": "outstanding", "sup": sup, "bound": bound,
                "passes": bool(sup <= bound)}
    n_atom = atom.n
    lnb = atom.b.copy()
    for _ in range(n_atom):
        lnb = op.L_matrix @ lnb
    a_sup = float(np.abs(atom.a).max())
    residual_i = float(np.abs(atom.a - lnb).max())
    rel_i = residual_i / a_sup if a_sup > 0 else 0.0
    outside = ~atom.support
    max_outside = float(np.abs(atom.lk_b[:, outside]).max()) if outside.any() else 0.0
    center, radius = atom.ball
    mass = atom.star_mass
    bounds = np.array([radius ** (2 * (n_atom - m)) * mass ** (-1.0 / p)
                       for m in range(n_atom + 1)])
    sups = np.abs(atom.lk_b).max(axis=1)
    ok_iii = bool((sups <= bounds).all())
    return {
        "kind": "regular",
        "i": {"residual": residual_i, "relative": rel_i,
              "passes": bool(rel_i < 1e-9)},
        "ii": {"max_outside": max_outside, "passes": bool(max_outside == 0.0)},
        "iii": {"sups": sups.tolist(), "bounds": bounds.tolist(),
                "slack": (bounds / np.maximum(sups, 1e-300)).min(),
                "passes": ok_iii},
        "passes": bool(rel_i < 1e-9 and max_outside == 0.0 and ok_iii),
    }


def atom_hp_norm(op: SpectralOperator, atom: Atom, p: float,
                 t_grid=None) -> float:
    """Heat-flavor quasi-norm of the atom; collected across atoms these
    exhibit the uniform boundedness the theory asserts."""
    return hp_quasinorm(op, atom.a, p, t_grid, "heat")


def reconstruct(op: SpectralOperator, decomp: AtomicDecomposition):
    """Finite sum of coefficient-weighted atoms plus residual norms."""
    vec = decomp.reconstruction()
    diff = decomp.signal - vec
    norms = {
        "l2": float(np.linalg.norm(diff)),
        "linf": float(np.abs(diff).max()) if diff.size else 0.0,
        "rel_l2": float(np.linalg.norm(diff) /
                        max(np.linalg.norm(decomp.signal), 1e-300)),
        "hp": hp_quasinorm(op, diff, decomp.p) if np.abs(diff).max() > 0 else 0.0,
    }
    return vec, norms


def budget_bound_report(decomp: AtomicDecomposition, geom) -> dict:
    """Coefficient budget against the level-mass bound
    sum |lambda_B|^p <= c#^p c0 7^d sum_r 2^{pr} |Omega_r|."""
    p = decomp.p
    rhs_sum = sum(2.0 ** (p * r) * m
                  for r, m in decomp.meta["omega_masses"].items())
    rhs = decomp.c_sharp ** p * geom.c0 * 7.0 ** geom.d * rhs_sum
    per_level = {}
    for lam, atom in decomp.terms:
        per_level.setdefault(atom.level_r, 0.0)
        per_level[atom.level_r] += abs(lam) ** p
    identity = {}
    for r, pieces in decomp.meta["level_pieces"].items():
        emitted = [a for lam, a in decomp.terms if a.level_r == r]
        mass_sum = sum(a.star_mass for a in emitted)
        identity[r] = {
            "lhs": per_level.get(r, 0.0),
            "identity_rhs": decomp.c_sharp ** p * 2.0 ** (p * r) * mass_sum,
        }
    return {
        "budget_regular": decomp.budget_regular,
        "bound": float(rhs),
        "holds": bool(decomp.budget_regular <= rhs * (1 + 1e-12)),
        "per_level_identity": identity,
    }
