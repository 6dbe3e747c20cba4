"""Command-line front end.

Subcommands: space | spectral | profile | maximal | whitney | decompose |
validate-atoms | report. All artifacts are JSON (CSV for plot-ready
matrices); outputs are byte-identical for identical inputs, config and
seed. Exit codes: 0 success, 1 a verification failed, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import atomic, maximal, profiles, spectral, whitney
from .errors import HardyLabError, InputError
from .space import load_space

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2


@dataclass
class RunConfig:
    p: float = 1.0
    N: int | None = None
    k_lo: int | None = None
    k_hi: int | None = None
    dictionary_orders: tuple = (2, 4, 6)
    k_max_extra: int = 0
    mode: str = "compact"
    clip_ratio: float = 1e-12
    out: str | None = None
    seed: int = 0

    def validate_decompose(self):
        if not 0.0 < self.p <= 1.0:
            raise InputError(f"P_OUT_OF_RANGE: p = {self.p} outside (0, 1]")


def pv(value, provenance: str) -> dict:
    """Tag a report numeric with its provenance:
    measured | fitted | paper-formula."""
    return {"value": value, "provenance": provenance}


def _dump(obj, path: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _load_vector(path: str, n: int, seed_tag=None) -> np.ndarray:
    if path.startswith("random:"):
        rng = np.random.default_rng(int(path.split(":", 1)[1]))
        return rng.standard_normal(n)
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("values", data.get("signal"))
    arr = np.asarray(data, dtype=float)
    if arr.shape != (n,):
        raise InputError(f"signal length {arr.shape} != {n}")
    return arr


def _load_operator(space, path: str):
    with open(path) as fh:
        data = json.load(fh)
    mode = data.get("measure_mode", "degree")
    if "adjacency" in data and isinstance(data["adjacency"][0], list) \
            and len(data["adjacency"]) == space.n \
            and len(data["adjacency"][0]) == space.n:
        adj = np.asarray(data["adjacency"], dtype=float)
    else:
        edges = data.get("adjacency", data.get("edges"))
        adj = np.zeros((space.n, space.n))
        for e in edges:
            i, j = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            adj[i, j] = adj[j, i] = w
    return spectral.from_weighted_graph(adj, mode, space=space)


def parse_tgrid(expr: str) -> np.ndarray:
    """Parse '2^-8..2^2' into the dyadic grid it brackets."""
    def side(tok):
        tok = tok.strip()
        if "^" in tok:
            base, expo = tok.split("^")
            return float(base) ** float(expo)
        return float(tok)

    lo, hi = (side(t) for t in expr.split(".."))
    if lo > hi:
        lo, hi = hi, lo
    k_hi = int(round(-math.log2(lo)))
    k_lo = int(round(-math.log2(hi)))
    return 2.0 ** (-np.arange(k_lo, k_hi + 1, dtype=float))


def fixture_path(name: str) -> Path:
    return Path(__file__).parent / "fixtures" / name


# ---------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------

def cmd_space(args) -> int:
    space = load_space(args.file, unit_scale=args.unit_scale)
    if args.action == "validate":
        print(f"ok: {space.n} points, diam {space.diam:g}, "
              f"mass {space.total_mass:g}, unit {space.unit:g}")
        return EXIT_OK
    geom = space.geometry()
    report = {
        "n": space.n,
        "diam": pv(space.diam, "measured"),
        "total_mass": pv(space.total_mass, "measured"),
        "unit": pv(space.unit, "measured"),
        "c0": pv(geom.c0, "measured"),
        "d": pv(geom.d, "paper-formula"),
        "c1": pv(geom.c1, "measured"),
        "c2": pv(geom.c2, "measured"),
        "epsilon": pv(geom.epsilon, "measured"),
    }
    _dump(report, args.out)
    return EXIT_OK


def cmd_spectral(args) -> int:
    space = load_space(args.space)
    op = _load_operator(space, args.operator)
    t_grid = parse_tgrid(args.tgrid)
    diag = spectral.fit_heat_constants(op, t_grid)
    tau = spectral.propagation_tau(diag)
    sub_t = float(t_grid[t_grid.size // 2])
    direct = spectral.poisson_direct(op, sub_t)
    sub = spectral.poisson_subordinated(op, sub_t)
    report = {
        "eigenvalue_range": pv([float(op.eigenvalues[0]),
                                float(op.eigenvalues[-1])], "measured"),
        "markov": op.markov,
        "markov_defect": pv(diag.markov_defect, "measured"),
        "C_star": pv(diag.C_star, "fitted"),
        "c_star": pv(diag.c_star, "fitted"),
        "alpha": pv(diag.alpha, "fitted"),
        "tau": pv(tau, "paper-formula"),
        "fit_range": pv(list(diag.fit_range), "measured"),
        "subordination_gap": pv(
            float(np.abs(direct.entries - sub.entries).max()), "measured"),
    }
    _dump(report, args.out)
    return EXIT_OK


def cmd_profile(args) -> int:
    if args.action == "build":
        if args.m % 2 or args.m < 2:
            raise InputError("profile order --m must be even and >= 2")
        builder = profiles.bandlimited_admissible if args.stable \
            else profiles.build_admissible
        prof = builder(args.m)
        _dump(prof.to_dict(), args.out)
        return EXIT_OK
    prof = profiles.load_profile(args.file)
    certs = profiles.certificates(prof)
    bad = abs(certs["value_at_zero"] - 1.0) > 1e-9
    if certs["max_deriv_at_zero"] is not None:
        bad = bad or certs["max_deriv_at_zero"] > 1e-6
    _dump({k: pv(v, "measured") if isinstance(v, (int, float)) else v
           for k, v in certs.items()}, args.out)
    return EXIT_CHECK_FAILED if bad else EXIT_OK


def cmd_maximal(args) -> int:
    space = load_space(args.space)
    op = _load_operator(space, args.operator)
    f = _load_vector(args.signal, space.n)
    t_grid = maximal.dyadic_t_grid(space, k_lo=args.k_lo, k_hi=args.k_hi)
    if args.kind == "hl":
        field = maximal.hl_maximal(space, f, args.theta)
    elif args.kind == "grand":
        d = space.geometry().d
        N = args.N or maximal.grand_order(d, args.p)
        dictionary = profiles.build_dictionary(N)
        field = maximal.grand_maximal(op, f, dictionary, N, t_grid)
    else:
        prof = profiles.gaussian_profile()
        if args.kind == "radial":
            field = maximal.radial_maximal(op, f, prof, t_grid)
        elif args.kind == "nontangential":
            field = maximal.nontangential_maximal(op, f, prof, args.a, t_grid)
        elif args.kind == "tangential":
            field = maximal.tangential_maximal(op, f, prof, args.gamma, t_grid)
        else:
            raise InputError(f"unknown kind {args.kind!r}")
    lp = field.lp_norm(args.p, space.measure)
    report = {
        "kind": field.kind,
        "params": {k: (list(v) if isinstance(v, (list, np.ndarray)) else v)
                   for k, v in field.params.items()},
        "values": [float(v) for v in field.values],
        "lp_norm": pv(lp, "measured"),
        "p": args.p,
    }
    _dump(report, args.out)
    if args.csv:
        rows = ["x,value"] + [f"{i},{v!r}" for i, v in enumerate(field.values)]
        Path(args.csv).write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_whitney(args) -> int:
    space = load_space(args.space)
    with open(args.omega) as fh:
        data = json.load(fh)
    nodes = data["nodes"] if isinstance(data, dict) else data
    cover = whitney.whitney_cover(space, np.asarray(nodes, dtype=int))
    report_obj = whitney.verify_cover(cover)
    report = {
        "n_balls": len(cover),
        "centers": [int(c) for c in cover.centers],
        "core_radii": [float(r) for r in cover.core_radii],
        "covers": report_obj.covers,
        "fifth_disjoint": report_obj.fifth_disjoint,
        "comparable": report_obj.comparable,
        "max_overlap": pv(report_obj.max_overlap, "measured"),
        "overlap_bound": pv(report_obj.overlap_bound, "paper-formula"),
        "within_bound": report_obj.within_bound,
    }
    _dump(report, args.out)
    return EXIT_OK if report_obj.all_exact() and report_obj.within_bound \
        else EXIT_CHECK_FAILED


def _decomp_to_json(decomp, space_path, op_path) -> dict:
    terms = []
    for lam, atom in decomp.terms:
        terms.append({
            "lambda": float(lam),
            "ball": {"center": int(atom.ball[0]), "radius": float(atom.ball[1])},
            "a": [float(v) for v in atom.a],
            "b": [float(v) for v in atom.b],
            "level_r": atom.level_r,
        })
    outstanding = None
    if decomp.outstanding is not None:
        lam_a, atom_a = decomp.outstanding
        outstanding = {"lambda": float(lam_a),
                       "a": [float(v) for v in atom_a.a]}
    res = decomp.residual
    residual_norms = {
        "l2": float(np.linalg.norm(res)),
        "linf": float(np.abs(res).max()) if res.size else 0.0,
        "rel_l2": float(np.linalg.norm(res) /
                        max(np.linalg.norm(decomp.signal), 1e-300)),
    }
    return {
        "p": decomp.p,
        "terms": terms,
        "outstanding": outstanding,
        "residual_norms": residual_norms,
        "budget": decomp.budget,
        "c_sharp": decomp.c_sharp,
        "truncation_log": decomp.truncation_log,
        "hp_norm": decomp.hp_norm,
        "signal": [float(v) for v in decomp.signal],
        "inputs": {"space": str(space_path), "operator": str(op_path)},
        "meta": {k: v for k, v in decomp.meta.items()
                 if isinstance(v, (int, float, str, list, dict, type(None)))
                 and k not in ("levels", "calculus", "level_pieces", "weights",
                               "covers", "omega_masses", "level_ball_counts")},
    }


def _pair_for(op, p):
    d = op.space.geometry().d
    _, K = profiles.required_vanishing(p, d)
    m = K if K % 2 == 0 else K + 1
    phi = profiles.bandlimited_admissible(max(m, 4))
    return profiles.lp_pair(phi, p, d)


def cmd_decompose(args) -> int:
    cfg = RunConfig(p=args.p, k_max_extra=args.k_max_extra, mode=args.mode,
                    out=args.out, seed=args.seed)
    cfg.validate_decompose()
    space = load_space(args.space)
    op = _load_operator(space, args.operator)
    f = _load_vector(args.signal, space.n)
    pair = _pair_for(op, cfg.p)
    decomp = atomic.decompose(op, pair, f, cfg.p, atomic.DecomposeConfig(
        k_max_extra=cfg.k_max_extra, mode=cfg.mode, clip_ratio=cfg.clip_ratio))
    _dump(_decomp_to_json(decomp, args.space, args.operator), args.out)
    return EXIT_OK


def _revalidate(path: str):
    with open(path) as fh:
        data = json.load(fh)
    space = load_space(data["inputs"]["space"])
    op = _load_operator(space, data["inputs"]["operator"])
    f = np.asarray(data["signal"], dtype=float)
    pair = _pair_for(op, data["p"])
    decomp = atomic.decompose(op, pair, f, data["p"])
    return data, op, decomp


def cmd_validate_atoms(args) -> int:
    data, op, decomp = _revalidate(args.file)
    d = op.space.geometry().d
    reports = [atomic.validate_atom(op, atom, decomp.p, d)
               for _, atom in decomp.terms]
    if decomp.outstanding is not None:
        reports.append(atomic.validate_atom(op, decomp.outstanding[1],
                                            decomp.p, d))
    n_fail = sum(not r["passes"] for r in reports)
    _dump({"atoms": len(reports), "failed": n_fail,
           "reports": reports}, args.out)
    return EXIT_OK if n_fail == 0 else EXIT_CHECK_FAILED


def cmd_report(args) -> int:
    data, op, decomp = _revalidate(args.file)
    d = op.space.geometry().d
    print(f"decomposition: {len(decomp.terms)} regular atom(s)"
          f"{' + outstanding' if decomp.outstanding else ''}, p = {decomp.p}")
    print(f"  budget {decomp.budget:.6g}   c# {decomp.c_sharp:.6g}   "
          f"Hp norm {decomp.hp_norm:.6g}")
    res = decomp.residual
    print(f"  residual rel l2 "
          f"{np.linalg.norm(res) / max(np.linalg.norm(decomp.signal), 1e-300):.3e}")
    for i, (lam, atom) in enumerate(decomp.terms):
        rep = atomic.validate_atom(op, atom, decomp.p, d)
        print(f"  atom {i:3d}: level {atom.level_r:+d} ball({atom.ball[0]}, "
              f"{atom.ball[1]:.3g}) lambda {lam:.4g} "
              f"| (i) rel {rep['i']['relative']:.2e} "
              f"| (ii) outside {rep['ii']['max_outside']:.1e} "
              f"| (iii) slack x{rep['iii']['slack']:.3g} "
              f"| {'pass' if rep['passes'] else 'FAIL'}")
    if decomp.outstanding is not None:
        lam_a, atom_a = decomp.outstanding
        rep = atomic.validate_atom(op, atom_a, decomp.p, d)
        print(f"  outstanding: lambda {lam_a:.4g} sup {rep['sup']:.4g} "
              f"bound {rep['bound']:.4g} "
              f"| {'pass' if rep['passes'] else 'FAIL'}")
    return EXIT_OK


# ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardy-lab")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="validate a space file or report geometry")
    sp.add_argument("action", choices=["validate", "report"])
    sp.add_argument("file")
    sp.add_argument("--unit-scale", type=float, default=None)
    sp.add_argument("--json", dest="as_json", action="store_true")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_space)

    sd = sub.add_parser("spectral", help="heat-kernel diagnostics")
    sd.add_argument("action", choices=["diagnose"])
    sd.add_argument("space")
    sd.add_argument("operator")
    sd.add_argument("--tgrid", default="2^-8..2^2")
    sd.add_argument("--json", dest="as_json", action="store_true")
    sd.add_argument("--out", default=None)
    sd.set_defaults(func=cmd_spectral)

    pf = sub.add_parser("profile", help="build or check admissible profiles")
    pf_sub = pf.add_subparsers(dest="action", required=True)
    pf_b = pf_sub.add_parser("build")
    pf_b.add_argument("--m", type=int, default=6)
    pf_b.add_argument("--stable", action="store_true",
                      help="orthogonal-polynomial construction (recommended for m >= 8)")
    pf_b.add_argument("--out", default=None)
    pf_b.set_defaults(func=cmd_profile)
    pf_c = pf_sub.add_parser("check")
    pf_c.add_argument("file")
    pf_c.add_argument("--out", default=None)
    pf_c.set_defaults(func=cmd_profile)

    mx = sub.add_parser("maximal", help="maximal fields of a signal")
    mx.add_argument("space")
    mx.add_argument("operator")
    mx.add_argument("signal")
    mx.add_argument("--kind", default="radial",
                    choices=["radial", "nontangential", "tangential", "grand", "hl"])
    mx.add_argument("--p", type=float, default=1.0)
    mx.add_argument("--a", type=float, default=1.0)
    mx.add_argument("--gamma", type=float, default=2.0)
    mx.add_argument("--theta", type=float, default=0.5)
    mx.add_argument("--N", type=int, default=None)
    mx.add_argument("--k-lo", type=int, default=None)
    mx.add_argument("--k-hi", type=int, default=None)
    mx.add_argument("--json", dest="as_json", action="store_true")
    mx.add_argument("--csv", default=None)
    mx.add_argument("--out", default=None)
    mx.set_defaults(func=cmd_maximal)

    wt = sub.add_parser("whitney", help="Whitney cover of a node set")
    wt.add_argument("space")
    wt.add_argument("--omega", required=True)
    wt.add_argument("--json", dest="as_json", action="store_true")
    wt.add_argument("--out", default=None)
    wt.set_defaults(func=cmd_whitney)

    dc = sub.add_parser("decompose", help="atomic decomposition of a signal")
    dc.add_argument("space")
    dc.add_argument("operator")
    dc.add_argument("signal")
    dc.add_argument("--p", type=float, default=1.0)
    dc.add_argument("--k-max-extra", dest="k_max_extra", type=int, default=0)
    dc.add_argument("--mode", choices=["compact", "noncompact"], default="compact")
    dc.add_argument("--seed", type=int, default=0)
    dc.add_argument("--out", default=None)
    dc.set_defaults(func=cmd_decompose)

    va = sub.add_parser("validate-atoms", help="re-validate a decomposition file")
    va.add_argument("file")
    va.add_argument("--out", default=None)
    va.set_defaults(func=cmd_validate_atoms)

    rp = sub.add_parser("report", help="human-readable decomposition summary")
    rp.add_argument("file")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_INPUT
    except HardyLabError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(json.dumps({"error": "INPUT", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
