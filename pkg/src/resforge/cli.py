"""Command-line front end: every subcommand writes CSV or JSON and nothing else.

Exit codes: 0 success, 1 domain error or failed hard check, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, bragg, radial
from .core import (
    AdmissibleSet,
    InapplicableError,
    ResforgeError,
    SearchRect,
    Structure,
    asymmetry,
    read_structure,
    validate_structure,
    write_structure,
)
from .forward1d import EPS_TOP, evaluate_mode, find_resonances, newton_resonance, transmission
from .optimizer import OptimizerConfig, extract_transitions, optimize_width

SCHEMA = 1

EPILOG = """\
figure data:
  optimized structures and mode moduli, j = 0..9:
      resforge optimize --j 0-9 --cells 512 --L 1 --nmin 1 --nmax 2 --out runs/ --jobs 4
      (each runs/j<k>/ holds structure.json, history.csv, diagnostics.json, mode.csv, sigma.csv)
  transmission of each optimum over [0, 2 Re w*]:
      resforge transmission --run runs/j4 --samples 2001 --out t4.csv
  optimal structure against Im(alpha w^2 u^2):  sigma.csv of any optimize run
  slab / disk / ball resonances (n0 = 2, a = 1):
      resforge radial --dim 1 --n0 2 --rect 0,12,-1,-1e-6 --out slab.csv
      resforge radial --dim 2 --n0 2 --ell 0-9 --lowest --out disk.csv
      resforge radial --dim 3 --n0 2 --ell 0-9 --lowest --out ball.csv
  long-lived disk mode (ell = 6) modulus along r:
      resforge radial --dim 2 --n0 2 --ell 6 --lowest --mode-out mode6.csv --out r6.csv
  dispersion relation of the quarter-wave stack and R(gamma):
      resforge bragg --n1 1 --n2 2 --d 1 --dispersion 0:0.01:8 --out disp.csv
      resforge bragg --n1 1 --n2 2 --d 1 --gamma 0.05:0.05:1.95 --out rg.csv
  width lower bound against Re w:
      resforge bounds --nmax 2 --L 1 --re 0:0.1:10 --out bound.csv
"""

log = logging.getLogger("resforge")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output helpers

def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([v if isinstance(v, str) else _num(v) for v in r])
    if path is None or str(path) == "-":
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, payload: dict) -> None:
    text = json.dumps(_jsonable({"schema": SCHEMA, **payload}), indent=2, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- argument parsing helpers

def parse_int_list(text: str) -> list[int]:
    """``3``, ``0-9`` or ``0,2,5``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return out


def parse_complex(text: str) -> complex:
    parts = [float(p) for p in str(text).split(",")]
    if len(parts) != 2:
        raise UsageError("complex values are given as re,im")
    return complex(*parts)


def _jobs(args) -> int:
    if getattr(args, "jobs", None):
        return max(1, int(args.jobs))
    env = os.environ.get("RESFORGE_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"RESFORGE_JOBS must be an integer, got {env!r}") from exc
    return 1


def _load_structure(path) -> Structure:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"structure file not found: {path}")
    return read_structure(p)


def _load_run(path):
    d = Path(path)
    files = [d / "structure.json", d / "diagnostics.json"]
    missing = [str(f) for f in files if not f.is_file()]
    if missing:
        raise UsageError(f"run directory is missing {', '.join(missing)}")
    s = read_structure(files[0])
    diag = json.loads(files[1].read_text(encoding="utf-8"))
    return s, diag


def _mode_rows(mode, samples: int):
    x = np.linspace(0.0, mode.structure.L, samples)
    u, _ = evaluate_mode(mode, x)
    return [(xi, ui.real, ui.imag, abs(ui)) for xi, ui in zip(x, np.atleast_1d(u))]


# ---------------------------------------------------------------- subcommands

def cmd_resonances(args) -> int:
    s = _load_structure(args.structure)
    rect = SearchRect.parse(args.rect)
    roots = find_resonances(s, rect, args.grid_nx, args.grid_ny)
    if roots.warning:
        print(f"warning: {roots.warning}", file=sys.stderr)
    write_csv(args.out, ["re_omega", "im_omega", "residual"],
              [(p.omega.real, p.omega.imag, p.residual) for p in roots])
    if args.mode_out is not None:
        if not 0 <= args.mode_index < len(roots):
            raise UsageError(f"--mode-index must lie in 0..{len(roots) - 1}")
        write_csv(args.mode_out, ["x", "re_u", "im_u", "abs_u"],
                  _mode_rows(roots[args.mode_index].mode, args.samples))
    return 0


def _optimize_one(payload):
    cfg_dict, out_dir, samples = payload
    cfg = OptimizerConfig.from_dict(cfg_dict)
    run = optimize_width(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_structure(run.structure, out / "structure.json")
    write_csv(out / "history.csv", ["iteration", "level", "cells", "re_omega", "im_omega", "step", "pg_norm"],
              [(h.iteration, h.level, h.cells, h.re_omega, h.im_omega, h.step, h.pg_norm) for h in run.history])
    write_json(out / "diagnostics.json", {"config": cfg.to_dict(), **run.diagnostics})
    write_csv(out / "mode.csv", ["x", "re_u", "im_u", "abs_u"], _mode_rows(run.pair.mode, samples))
    x = np.linspace(0.0, run.structure.L, samples)
    sig = analysis.sigma_profile(run.pair, run.structure, x)
    write_csv(out / "sigma.csv", ["x", "n", "sigma"], zip(x, run.structure.value_at(x), sig))
    return cfg.j, run.omega, str(out)


def _optimizer_config(args, j) -> dict:
    d = {
        "L": args.L, "n_minus": args.nmin, "n_plus": args.nmax, "cells": args.cells, "j": j,
        "max_iter": args.max_iter, "refine_levels": args.refine_levels, "polish": not args.no_polish,
        "symmetric": args.symmetric, "seed": args.seed,
    }
    if args.rho is not None:
        d["rho"] = args.rho
    if args.omega0 is not None:
        d["j"] = None
        d["omega0"] = [args.omega0.real, args.omega0.imag]
    return OptimizerConfig.from_dict(d).to_dict()


def cmd_optimize(args) -> int:
    if args.j is None and args.omega0 is None:
        raise UsageError("give --j or --omega0")
    js = [None] if args.omega0 is not None else parse_int_list(args.j)
    out = Path(args.out)
    if len(js) == 1:
        payloads = [(_optimizer_config(args, js[0]), out, args.samples)]
    else:
        payloads = [(_optimizer_config(args, j), out / f"j{j}", args.samples) for j in js]
    jobs = min(_jobs(args), len(payloads))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_optimize_one, payloads))
    else:
        results = [_optimize_one(p) for p in payloads]
    for j, w, path in results:
        print(f"j={j} omega={w.real:.12g}{w.imag:+.12g}i -> {path}")
    return 0


def cmd_transmission(args) -> int:
    omega_star = None
    if args.run is not None:
        s, diag = _load_run(args.run)
        omega_star = complex(*diag["omega"])
    elif args.structure is not None:
        s = _load_structure(args.structure)
    else:
        raise UsageError("give --structure or --run")
    if args.omega is not None:
        grid = bragg.parse_range(args.omega)
    else:
        if omega_star is None or abs(omega_star.real) <= 1e-12:
            raise UsageError("--omega start:step:stop is required unless --run has Re w* > 0")
        grid = np.linspace(0.0, 2 * abs(omega_star.real), args.samples + 1)[1:]
    grid = grid[grid > 0]
    rows = []
    for w in grid:
        t, r = transmission(s, float(w))
        rows.append((w, abs(t), abs(r)))
    write_csv(args.out, ["omega", "abs_t", "abs_r"], rows)
    return 0


def cmd_bounds(args) -> int:
    if args.structure is None:
        grid = bragg.parse_range(args.re)
        rows = []
        for x in grid:
            b = analysis.lower_bound_width(float(x), args.nmax, args.L)
            try:
                c = analysis.closed_form_width_bound(float(x), args.nmax, args.L)
            except InapplicableError:
                c = float("nan")
            rows.append((x, b, c))
        write_csv(args.out, ["re_omega", "bound", "closed_form"], rows)
        return 0
    s = _load_structure(args.structure)
    rect = SearchRect.parse(args.rect)
    n_plus = float(np.max(s.n)) if args.nmax is None else args.nmax
    symmetric = asymmetry(s) == 0.0
    rows, failed = [], False
    for p in find_resonances(s, rect, args.grid_nx, args.grid_ny):
        b = analysis.lower_bound_width(abs(p.omega.real), n_plus, s.L)
        ok = abs(p.omega.imag) >= b
        tri = analysis.in_exclusion_triangle(p.omega, n_plus, s.L)
        failed |= (not ok) or (symmetric and tri)
        rows.append((p.omega.real, p.omega.imag, b, ok, tri))
    write_csv(args.out, ["re_omega", "im_omega", "bound", "bound_ok", "in_triangle"], rows)
    return 1 if failed else 0


def cmd_bragg(args) -> int:
    if args.run is not None:
        s, diag = _load_run(args.run)
        cfg = diag.get("config", {})
        n_minus = args.nmin if args.nmin is not None else cfg.get("n_minus", float(np.min(s.n)))
        n_plus = args.nmax if args.nmax is not None else cfg.get("n_plus", float(np.max(s.n)))
        tr = extract_transitions(s, n_minus, n_plus)
        rep = bragg.compare_to_bragg(tr, complex(*diag["omega"]), n_plus, n_minus)
        write_json(args.out, {
            "omega": rep.omega, "d_plus": rep.d_plus, "center_width": rep.center_width,
            "center_ok": rep.center_ok, "max_deviation": rep.max_deviation, "N": tr.N, "M": tr.M,
            "intervals": [{"kind": iv.kind, "index": iv.index, "width": iv.width, "n": iv.n,
                           "quarter_wave": iv.quarter_wave, "ratio": iv.ratio} for iv in rep.intervals],
        })
        return 0
    if args.gamma is not None:
        scan = bragg.scan_gamma(args.n1, args.n2, args.d, bragg.parse_range(args.gamma))
        write_csv(args.out, ["gamma", "ratio", "width", "valid"],
                  zip(scan.gamma, scan.ratio, scan.width, scan.valid))
        print(f"argmax gamma = {scan.argmax:g}", file=sys.stderr)
        return 0
    m = (bragg.LayeredMedium.quarter_wave(args.n1, args.n2, args.d) if args.b is None
         else bragg.LayeredMedium(args.n1, args.n2, args.b, args.d))
    if args.dispersion is not None:
        w = bragg.parse_range(args.dispersion)
        rhs = np.atleast_1d(bragg.dispersion_rhs(m, w))
        kd = np.arccos(np.clip(rhs, -1.0, 1.0))
        write_csv(args.out, ["omega", "rhs", "kd"], zip(w, rhs, kd))
        return 0
    gap = bragg.first_gap_edges(m)
    write_json(args.out, {"n1": m.n1, "n2": m.n2, "b": m.b, "d": m.d, "omega1": gap.omega1,
                          "omega2": gap.omega2, "center": gap.center, "width": gap.width, "ratio": gap.ratio})
    return 0


def _radial_one(payload):
    dim, n0, a, ell, rect, lowest = payload
    c = radial.RadialCavity(dim, n0, a, ell)
    if lowest:
        return ell, [radial.lowest_branch_resonance(c)]
    return ell, radial.find_radial_resonances(c, rect)


def _radial_mode_rows(c: radial.RadialCavity, omega: complex, samples: int, r_max: float):
    fj, fh, _ = radial._funcs(c)
    inner = fj(c.ell, c.n0 * omega * c.a).value
    outer = fh(c.ell, omega * c.a).value
    rows = []
    for r in np.linspace(r_max / samples, r_max, samples):
        if r <= c.a:
            v = fj(c.ell, c.n0 * omega * r).value / inner
        else:
            v = fh(c.ell, omega * r).value / outer
        rows.append((r, v.real, v.imag, abs(v)))
    return rows


def cmd_radial(args) -> int:
    ells = parse_int_list(args.ell)
    if args.dim == 1:
        ells = [0]
    rect = SearchRect.parse(args.rect) if args.rect else None
    if rect is None and not args.lowest:
        raise UsageError("give --rect or --lowest")
    payloads = [(args.dim, args.n0, args.a, ell, rect, args.lowest) for ell in ells]
    jobs = min(_jobs(args), len(payloads))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_radial_one, payloads))
    else:
        results = [_radial_one(p) for p in payloads]
    rows = []
    for ell, roots in results:
        for k, r in enumerate(roots):
            rows.append((args.dim, ell, k, r.omega.real, r.omega.imag, r.multiplicity, r.residual))
    write_csv(args.out, ["dim", "ell", "index", "re_omega", "im_omega", "multiplicity", "residual"], rows)
    if args.mode_out is not None:
        if args.dim == 1 or len(results) != 1 or not results[0][1]:
            raise UsageError("--mode-out needs dim 2 or 3, a single --ell and at least one root")
        c = radial.RadialCavity(args.dim, args.n0, args.a, ells[0])
        write_csv(args.mode_out, ["r", "re_u", "im_u", "abs_u"],
                  _radial_mode_rows(c, results[0][1][0].omega, args.samples, args.r_max * args.a))
    return 0


def cmd_verify(args) -> int:
    from .verify import verify_run, verify_structure

    if args.run is not None:
        report = verify_run(*_load_run(args.run))
    elif args.structure is not None:
        a = AdmissibleSet(args.L, args.nmin, args.nmax, math.inf if args.rho is None else args.rho,
                          args.symmetric)
        s = _load_structure(args.structure)
        rect = SearchRect.parse(args.rect) if args.rect else None
        report = verify_structure(s, a, rect)
    else:
        raise UsageError("give --structure or --run")
    write_json(args.out, report)
    return 0 if report["ok"] else 1


# ---------------------------------------------------------------- parser

def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="resforge", description="Scattering resonances of 1D layered media and their width optimization.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)
    sp = {}

    def add(name, help_):
        p = subs.add_parser(name, help=help_, description=help_, epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="JSON file of option defaults; flags take precedence")
        p.add_argument("--out", default="-", help="output path ('-' for stdout)")
        sp[name] = p
        return p

    p = add("resonances", "resonances of a structure inside a rectangle (CSV re_omega,im_omega,residual)")
    p.add_argument("--structure", required=True)
    p.add_argument("--rect", default="0,10,-2,-1e-6", help="re_min,re_max,im_min,im_max")
    p.add_argument("--grid-nx", type=int, default=24)
    p.add_argument("--grid-ny", type=int, default=6)
    p.add_argument("--mode-out", help="also write the mode of root --mode-index (x,re_u,im_u,abs_u)")
    p.add_argument("--mode-index", type=int, default=0)
    p.add_argument("--samples", type=int, default=1001)

    p = add("optimize", "minimize the width of the j-th resonance over [nmin, nmax]-valued structures")
    p.add_argument("--j", help="mode index, list (0,2) or range (0-9)")
    p.add_argument("--omega0", type=parse_complex, help="track the root nearest re,im instead of --j")
    p.add_argument("--cells", type=int, default=512)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--nmin", type=float, default=1.0)
    p.add_argument("--nmax", type=float, default=2.0)
    p.add_argument("--rho", type=float)
    p.add_argument("--max-iter", type=int, default=4000)
    p.add_argument("--refine-levels", type=int, default=1)
    p.add_argument("--no-polish", action="store_true", help="skip the continuous breakpoint stage")
    p.add_argument("--symmetric", action="store_true", help="project onto mirror-symmetric structures")
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, help="parallel runs (default: $RESFORGE_JOBS or 1)")

    p = add("transmission", "|t| and |r| of a structure on a real frequency grid")
    p.add_argument("--structure")
    p.add_argument("--run", help="optimize output directory; default band [0, 2 Re w*]")
    p.add_argument("--omega", help="start:step:stop")
    p.add_argument("--samples", type=int, default=2001)

    p = add("bounds", "width lower bound curve, or bound/exclusion checks for a structure's resonances")
    p.add_argument("--structure")
    p.add_argument("--rect", default="0,10,-2,-1e-6")
    p.add_argument("--re", default="0:0.1:10", help="start:step:stop for the bound curve")
    p.add_argument("--nmax", type=float)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--grid-nx", type=int, default=24)
    p.add_argument("--grid-ny", type=int, default=6)

    p = add("bragg", "band gap, dispersion curve, R(gamma) scan, or quarter-wave comparison of a run")
    p.add_argument("--n1", type=float, default=1.0)
    p.add_argument("--n2", type=float, default=2.0)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--b", type=float, help="layer width (default: quarter-wave)")
    p.add_argument("--gamma", help="start:step:stop; writes gamma,ratio,width,valid")
    p.add_argument("--dispersion", help="start:step:stop; writes omega,rhs,kd")
    p.add_argument("--run", help="optimize output directory to compare with quarter-wave widths")
    p.add_argument("--nmin", type=float)
    p.add_argument("--nmax", type=float)

    p = add("radial", "resonances of a homogeneous slab (dim 1), disk (2) or ball (3)")
    p.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--n0", type=float, default=2.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--ell", default="0", help="angular momentum, list or range")
    p.add_argument("--rect")
    p.add_argument("--lowest", action="store_true", help="only the lowest root of the main branch")
    p.add_argument("--mode-out", help="radial mode of the first root (r,re_u,im_u,abs_u)")
    p.add_argument("--samples", type=int, default=1001)
    p.add_argument("--r-max", type=float, default=2.0, help="mode trace extent in units of a")
    p.add_argument("--jobs", type=int)

    p = add("verify", "run the structural checks on a structure or an optimize run (JSON report)")
    p.add_argument("--structure")
    p.add_argument("--run")
    p.add_argument("--rect")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--nmin", type=float, default=1.0)
    p.add_argument("--nmax", type=float, default=2.0)
    p.add_argument("--rho", type=float)
    p.add_argument("--symmetric", action="store_true")
    return parser, sp


COMMANDS = {
    "resonances": cmd_resonances,
    "optimize": cmd_optimize,
    "transmission": cmd_transmission,
    "bounds": cmd_bounds,
    "bragg": cmd_bragg,
    "radial": cmd_radial,
    "verify": cmd_verify,
}


def _apply_config(parser, subparsers, argv, args):
    """Re-parse with the config file as defaults so explicit flags still win."""
    path = Path(args.config)
    if not path.is_file():
        parser.error(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        parser.error(f"config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        parser.error("config file must hold a JSON object")
    sub = subparsers[args.command]
    dests = {a.dest for a in sub._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - dests - {"config"})
    if unknown:
        parser.error(f"unknown config keys for {args.command}: {unknown}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        args = _apply_config(parser, subparsers, argv, args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        subparsers[args.command].print_usage(sys.stderr)
        print(f"resforge {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ResforgeError, ValueError) as exc:
        print(f"resforge {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
