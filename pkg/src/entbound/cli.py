"""Command-line front end.

Subcommands cover the measurement-to-certificate pipeline end to end:

  spin-sim     simulate a Heisenberg lattice and export S(q) tables
  spin-bound   turn an S(q) or correlator table into an entanglement bound map
  boson-sim    simulate a Bose-Hubbard lattice and export a detector image
  boson-bound  turn a detector image into an entanglement bound map
  validate     run a self-check suite and emit a machine-readable report
  sweep        scan one model parameter, tracking the bound at a fixed target

Every text output starts with a version line and a `# config: {...}` echo of
the effective parameters, so identical invocations produce identical bytes.
Exit codes: 0 success, 1 physics/validation failure (failed self-check suite
or a bound map with every point masked), 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, bosons, bounds, io, oracle, spin, tof
from .bounds import MASK_MISSING, MASK_OK
from .errors import EntboundError, InputError, InternalConsistencyError, ResourceError
from .lattice import Lattice, q_grid
from .tof import TofCalibration
from .util import config_comment, fmt_float, write_text_atomic

DEFAULT_Q_RES = 17          # odd, so q = 0 sits on the grid
DEFAULT_GRID_RES = 17
DEFAULT_WANNIER_FRACTION = 0.15   # default Wannier width, in lattice spacings


def _config(command: str, args: argparse.Namespace, keys: Sequence[str]) -> list[str]:
    """One comment line echoing the effective run configuration."""
    cfg = {"command": command}
    for key in keys:
        val = getattr(args, key)
        if isinstance(val, Path):
            val = str(val)
        cfg[key.replace("_", "-")] = val
    return [config_comment(cfg)]


def _plot_path(out: str) -> str:
    p = Path(out)
    if p.suffix.lower() == ".png":
        return str(p) + ".png"
    return str(p.with_suffix(".png"))


def _report_map(bmap: bounds.BoundMap, path: str) -> int:
    """Print a one-line summary; exit 1 when no point survived masking."""
    total = int(bmap.mask.size)
    n_ok = int(np.count_nonzero(bmap.ok))
    if n_ok == 0:
        print(f"entbound: error: all {total} points masked in {path}; "
              "no usable bound", file=sys.stderr)
        return 1
    e_max = float(np.max(bmap.E[bmap.ok]))
    print(f"wrote {path}: {n_ok}/{total} points ok, max E = {fmt_float(e_max)}")
    return 0


def _plot_sq(sf, path: str) -> None:
    from . import plotting
    if sf.qs.shape[1] == 1:
        plotting.plot_profile(sf.qs[:, 0], sf.S, sf.coord_names[0], "S(q)", path)
    else:
        plotting.plot_surface(sf.qs[:, :2], sf.S,
                              (sf.coord_names[0], sf.coord_names[1]), "S(q)", path)


def _warn_degenerate(state) -> None:
    if getattr(state, "degenerate", False):
        print("entbound: warning: ground state is degenerate; "
              "correlations refer to one representative eigenvector", file=sys.stderr)


# ---------------------------------------------------------------- spin-sim

def cmd_spin_sim(args: argparse.Namespace) -> int:
    lattice = io.load_lattice(args.lattice)
    comments = _config("spin-sim", args,
                       ("lattice", "J", "beta", "ground", "q_res", "out"))
    H = spin.build_heisenberg(lattice, args.J)
    if args.ground:
        state = spin.ground_state(H)
        _warn_degenerate(state)
    else:
        state = spin.thermal_state(H, args.beta)
    corr = spin.correlators(state)
    sf = spin.structure_factor_grid(corr, lattice, q_grid(lattice, args.q_res))
    io.save_sq_csv(sf.qs, sf.S, sf.coord_names, args.out, comments=comments)
    print(f"wrote {args.out}: {sf.S.size} q points")
    if args.correlators_out:
        io.save_correlators(corr, args.correlators_out, comments=comments)
    if args.plot:
        _plot_sq(sf, _plot_path(args.out))
    rc = 0
    if args.bound_out:
        bmap = bounds.spin_bound_map(sf, comments=comments)
        io.save_bound_map(bmap, args.bound_out)
        if args.plot:
            from . import plotting
            plotting.plot_bound_map(bmap, _plot_path(args.bound_out))
        rc = _report_map(bmap, args.bound_out)
    return rc


# -------------------------------------------------------------- spin-bound

def cmd_spin_bound(args: argparse.Namespace) -> int:
    comments = _config("spin-bound", args,
                       ("sq", "correlators", "lattice", "q_res", "out"))
    if args.sq and args.correlators:
        raise InputError("give --sq or --correlators, not both")
    if args.sq:
        dataset = io.load_sq_csv(args.sq)
        bmap = bounds.spin_bound_map(dataset, comments=comments)
    elif args.correlators:
        if not args.lattice:
            raise InputError("--correlators input also needs --lattice")
        lattice = io.load_lattice(args.lattice)
        corr = io.load_correlators(args.correlators)
        if corr.num_sites != lattice.num_sites:
            raise InputError(
                f"correlator table covers {corr.num_sites} sites but the "
                f"lattice has {lattice.num_sites}")
        sf = spin.structure_factor_grid(corr, lattice, q_grid(lattice, args.q_res))
        bmap = bounds.spin_bound_map(sf, comments=comments)
    else:
        raise InputError("one of --sq or --correlators is required")
    io.save_bound_map(bmap, args.out)
    if args.plot:
        from . import plotting
        plotting.plot_bound_map(bmap, _plot_path(args.out))
    return _report_map(bmap, args.out)


# --------------------------------------------------------------- boson-sim

def _default_calibration(lattice: Lattice) -> TofCalibration:
    return TofCalibration(units="natural", mass=1.0, flight_time=1.0,
                          wannier_width=DEFAULT_WANNIER_FRACTION * lattice.spacing,
                          far_field=False)


def _boson_calibration(args: argparse.Namespace, lattice: Lattice) -> TofCalibration:
    calib = io.load_calibration(args.calib) if args.calib else _default_calibration(lattice)
    if calib.lattice is not None and calib.lattice != lattice.spec:
        raise InputError("calibration lattice disagrees with --lattice")
    if args.far_field:
        calib = replace(calib, far_field=True)
    return replace(calib, lattice=lattice.spec)


def _boson_state(args: argparse.Namespace, lattice: Lattice, J: float, U: float,
                 beta, ground: bool) -> bosons.BosonState:
    M = lattice.num_sites
    if args.grand:
        if args.N is not None:
            raise InputError("--grand and --N are mutually exclusive")
        if ground:
            raise InputError("--grand needs --beta (thermal mixture over sectors)")
        n_max = args.n_max if args.n_max is not None else 2 * M
        if n_max < 0:
            raise InputError(f"--n-max must be >= 0, got {n_max}")
        sector: int | tuple[int, int] = (0, n_max)
    else:
        if args.n_max is not None:
            raise InputError("--n-max only applies together with --grand")
        sector = args.N if args.N is not None else M
        if sector < 0:
            raise InputError(f"--N must be >= 0, got {sector}")
    H = bosons.build_bose_hubbard(lattice, J, U, args.mu, sector)
    if ground:
        state = bosons.ground_state_sector(H, int(sector))
        _warn_degenerate(state)
        return state
    return bosons.thermal_state_sector(H, beta)


def _simulate_image(G: bosons.OneBodyDM, lattice: Lattice, calib: TofCalibration,
                    x_axis: np.ndarray, y_axis: np.ndarray, k_space: bool) -> io.TofImage:
    """Detector image over a rectangular grid, densities via the shared kernel path."""
    shell = io.TofImage(x_axis=x_axis, y_axis=y_axis,
                        values=np.zeros((x_axis.size, y_axis.size)), k_space=k_space)
    pos = shell.position_coords(calib)
    vals = tof.tof_density_grid(G.G, pos[:, 0], pos[:, 1], lattice, calib)
    return io.TofImage(x_axis=x_axis, y_axis=y_axis,
                       values=vals.reshape(x_axis.size, y_axis.size),
                       k_space=k_space, mean_atom_number=G.mean_number)


def cmd_boson_sim(args: argparse.Namespace) -> int:
    lattice = io.load_lattice(args.lattice)
    if args.grid_res < 2:
        raise InputError(f"--grid-res must be >= 2, got {args.grid_res}")
    comments = _config("boson-sim", args,
                       ("lattice", "N", "grand", "n_max", "J", "U", "mu", "beta",
                        "ground", "grid_res", "k_space", "far_field", "out"))
    calib = _boson_calibration(args, lattice)
    state = _boson_state(args, lattice, args.J, args.U, args.beta, args.ground)
    G = bosons.one_body_dm(state)

    kx, ky = io.bz_axes(lattice.spec, args.grid_res, args.grid_res)
    if args.k_space:
        x_axis, y_axis = kx, ky
    else:
        c = calib.momentum_scale
        x_axis, y_axis = kx / c, ky / c
    img = _simulate_image(G, lattice, calib, x_axis, y_axis, bool(args.k_space))

    if args.binary:
        io.save_tof_binary(img, args.out)
    else:
        io.save_tof_csv(img, args.out, comments=comments)
    print(f"wrote {args.out}: {img.shape[0]}x{img.shape[1]} image, "
          f"<N> = {fmt_float(G.mean_number)}")

    calib_out = args.calib_out if args.calib_out else args.out + ".calib.json"
    io.save_calibration(calib.with_mean_atom_number(G.mean_number), calib_out)
    print(f"wrote {calib_out}")

    if args.plot:
        from . import plotting
        plotting.plot_surface(img.coords(), np.asarray(img.values).reshape(-1),
                              ("kx" if args.k_space else "x",
                               "ky" if args.k_space else "y"),
                              "n", _plot_path(args.out))
    rc = 0
    if args.bound_out:
        bmap = bounds.boson_bound_map(img, calib.with_mean_atom_number(G.mean_number),
                                      lattice, f_floor=args.f_floor, comments=comments)
        io.save_bound_map(bmap, args.bound_out)
        if args.plot:
            from . import plotting
            plotting.plot_bound_map(bmap, _plot_path(args.bound_out))
        rc = _report_map(bmap, args.bound_out)
    return rc


# ------------------------------------------------------------- boson-bound

def cmd_boson_bound(args: argparse.Namespace) -> int:
    comments = _config("boson-bound", args,
                       ("image", "calib", "lattice", "k_space", "f_floor", "out"))
    calib = io.load_calibration(args.calib)
    lattice = io.load_lattice(args.lattice) if args.lattice else None
    img = io.load_tof(args.image, calib, k_space=args.k_space)
    bmap = bounds.boson_bound_map(img, calib, lattice,
                                  f_floor=args.f_floor, comments=comments)
    io.save_bound_map(bmap, args.out)
    if args.plot:
        from . import plotting
        plotting.plot_bound_map(bmap, _plot_path(args.out))
    return _report_map(bmap, args.out)


# ----------------------------------------------------------------- validate

def _run_suite(args: argparse.Namespace) -> oracle.OracleReport:
    name = args.suite
    if name == "spin-witness":
        kw = {"num_sites": args.M, "seed": args.seed}
        if args.samples is not None:
            kw["samples"] = args.samples
        return oracle.check_spin_witness(**kw)
    if name == "uncertainty":
        kw = {"seed": args.seed}
        if args.samples is not None:
            kw["samples"] = args.samples
        return oracle.check_uncertainty(**kw)
    if name == "sector-eigs":
        kw = {"M_max": args.Mmax, "N_max": args.Nmax, "points": args.points,
              "seed": args.seed}
        if args.samples is not None:
            kw["separable_samples"] = args.samples
        if args.calib:
            kw["calib"] = io.load_calibration(args.calib)
        return oracle.check_sector_witness_eigs(**kw)
    if name == "ssr-separable":
        kw = {"M_max": args.Mmax, "N_max": args.Nmax, "seed": args.seed}
        if args.samples is not None:
            kw["samples"] = args.samples
        return oracle.check_ssr_separable(**kw)
    if name == "bsa-consistency":
        kw = {"seed": args.seed, "effort": args.effort, "q_resolution": args.q_res}
        if args.samples is not None:
            kw["samples"] = args.samples
        return oracle.check_bsa_consistency(**kw)
    raise InputError(f"unknown suite {name!r}")


def cmd_validate(args: argparse.Namespace) -> int:
    report = _run_suite(args)
    text = report.to_json()
    if args.out:
        write_text_atomic(args.out, text)
        print(f"suite={report.suite} pass={report.passed} "
              f"margin={fmt_float(report.margin)} samples={report.samples} "
              f"seed={report.seed}")
    else:
        sys.stdout.write(text)
    if not report.passed:
        print(f"entbound: suite {report.suite} FAILED "
              f"(margin {fmt_float(report.margin)}, tolerance "
              f"{fmt_float(report.tolerance)})", file=sys.stderr)
        return 1
    return 0


# -------------------------------------------------------------------- sweep

def _parse_values(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise InputError("--values must list at least one number")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise InputError(f"bad --values entry: {exc}") from None
    if not all(np.isfinite(vals)):
        raise InputError("--values entries must be finite")
    return vals


def _parse_vector(text: str, dim: int, flag: str) -> np.ndarray:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != dim:
        raise InputError(f"{flag} needs {dim} comma-separated numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise InputError(f"bad {flag} entry: {exc}") from None


def _sweep_spin_point(args, lattice: Lattice, qvec: np.ndarray, value: float):
    J = value if args.param == "J" else args.J
    beta = value if args.param == "beta" else args.beta
    H = spin.build_heisenberg(lattice, J)
    state = spin.ground_state(H) if (args.ground and args.param != "beta") \
        else spin.thermal_state(H, beta)
    corr = spin.correlators(state)
    S = spin.structure_factor(corr, lattice, qvec)
    _, E, mask = bounds.spin_bound_values(np.array([S]))
    return (float(E[0]) if mask[0] == MASK_OK else None), mask[0]


def _sweep_boson_point(args, lattice: Lattice, pixel: np.ndarray, value: float):
    J = value if args.param == "J" else args.J
    U = value if args.param == "U" else args.U
    beta = value if args.param == "beta" else args.beta
    ground = bool(args.ground and args.param != "beta")
    calib = _boson_calibration(args, lattice)
    state = _boson_state(args, lattice, J, U, beta, ground)
    G = bosons.one_body_dm(state)
    img = _simulate_image(G, lattice, calib,
                          np.array([pixel[0]]), np.array([pixel[1]]),
                          bool(args.k_space))
    bmap = bounds.boson_bound_map(img, calib.with_mean_atom_number(G.mean_number),
                                  lattice, f_floor=args.f_floor)
    return (float(bmap.E[0]) if bmap.mask[0] == MASK_OK else None), bmap.mask[0]


def cmd_sweep(args: argparse.Namespace) -> int:
    values = _parse_values(args.values)
    lattice = io.load_lattice(args.lattice)
    if args.param == "U" and args.model == "spin":
        raise InputError("the spin model has no interaction parameter U")
    if args.param == "beta":
        if args.ground or args.beta is not None:
            raise InputError("--param beta conflicts with --beta/--ground")
    elif args.ground == (args.beta is not None):
        raise InputError("give exactly one of --beta or --ground")

    if args.model == "spin":
        if not args.q:
            raise InputError("--model spin needs a --q target")
        target = _parse_vector(args.q, lattice.ndim, "--q")
        point = lambda v: _sweep_spin_point(args, lattice, target, v)
    else:
        if not args.pixel:
            raise InputError("--model boson needs a --pixel target")
        target = _parse_vector(args.pixel, 2, "--pixel")
        point = lambda v: _sweep_boson_point(args, lattice, target, v)

    comments = _config("sweep", args,
                       ("model", "param", "values", "lattice", "N", "J", "U", "mu",
                        "beta", "ground", "q", "pixel", "k_space", "f_floor", "out"))
    Es, masks = [], []
    for v in values:
        try:
            E, mask = point(v)
        except ResourceError as exc:
            print(f"entbound: warning: {args.param}={fmt_float(v)} skipped: {exc}",
                  file=sys.stderr)
            E, mask = None, MASK_MISSING
        Es.append(E)
        masks.append(mask)
    io.save_sweep_csv(args.param, values, Es, masks, args.out, comments=comments)
    ok = [m == MASK_OK for m in masks]
    n_ok = sum(ok)
    print(f"wrote {args.out}: {n_ok}/{len(values)} points ok")
    if args.plot and n_ok:
        from . import plotting
        xs = np.array([v for v, good in zip(values, ok) if good])
        ys = np.array([e for e, good in zip(Es, ok) if good])
        plotting.plot_profile(xs, ys, args.param, "E", _plot_path(args.out))
    return 0 if n_ok else 1


# ------------------------------------------------------------------- parser

def _add_common_sim_state(sp: argparse.ArgumentParser) -> None:
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--beta", type=float, default=None,
                       help="inverse temperature of the Gibbs state")
    group.add_argument("--ground", action="store_true",
                       help="use the ground state instead of a thermal state")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entbound",
        description="Entanglement lower bounds from structure factors and "
                    "time-of-flight images.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("spin-sim", help="simulate a Heisenberg lattice, export S(q)")
    p.add_argument("--lattice", required=True, help="lattice JSON file")
    p.add_argument("--J", type=float, default=1.0, help="exchange coupling (default 1)")
    _add_common_sim_state(p)
    p.add_argument("--q-res", type=int, default=DEFAULT_Q_RES,
                   help=f"q points per axis (default {DEFAULT_Q_RES}; odd keeps q=0 on-grid)")
    p.add_argument("--out", required=True, help="S(q) CSV output path")
    p.add_argument("--correlators-out", default=None,
                   help="also export the correlator table to this CSV")
    p.add_argument("--bound-out", default=None,
                   help="also compute the bound map and write it here")
    p.add_argument("--plot", action="store_true",
                   help="render PNG figures next to each output")
    p.set_defaults(func=cmd_spin_sim)

    p = sub.add_parser("spin-bound", help="bound map from S(q) or correlator data")
    p.add_argument("--sq", default=None, help="S(q) CSV input")
    p.add_argument("--correlators", default=None,
                   help="correlator CSV input (needs --lattice)")
    p.add_argument("--lattice", default=None, help="lattice JSON (with --correlators)")
    p.add_argument("--q-res", type=int, default=DEFAULT_Q_RES,
                   help="q points per axis when computing S(q) from correlators")
    p.add_argument("--out", required=True, help="bound map CSV output path")
    p.add_argument("--plot", action="store_true",
                   help="render a PNG figure next to the output")
    p.set_defaults(func=cmd_spin_bound)

    p = sub.add_parser("boson-sim",
                       help="simulate a Bose-Hubbard lattice, export a detector image")
    p.add_argument("--lattice", required=True, help="lattice JSON file")
    p.add_argument("--N", type=int, default=None,
                   help="particle number (default: one per site)")
    p.add_argument("--grand", action="store_true",
                   help="thermal mixture over particle-number sectors 0..n-max")
    p.add_argument("--n-max", type=int, default=None,
                   help="largest sector with --grand (default 2M)")
    p.add_argument("--J", type=float, default=1.0, help="hopping (default 1)")
    p.add_argument("--U", type=float, default=0.0, help="on-site interaction (default 0)")
    p.add_argument("--mu", type=float, default=0.0, help="chemical potential (default 0)")
    _add_common_sim_state(p)
    p.add_argument("--grid-res", type=int, default=DEFAULT_GRID_RES,
                   help=f"detector pixels per axis (default {DEFAULT_GRID_RES})")
    p.add_argument("--calib", default=None,
                   help="calibration JSON (default: natural units, width 0.15a)")
    p.add_argument("--far-field", action="store_true",
                   help="drop the quadratic expansion phase")
    p.add_argument("--k-space", action="store_true",
                   help="write detector coordinates as momenta instead of positions")
    p.add_argument("--binary", action="store_true",
                   help="write the image in the binary format instead of CSV")
    p.add_argument("--out", required=True, help="detector image output path")
    p.add_argument("--calib-out", default=None,
                   help="calibration echo path (default: <out>.calib.json)")
    p.add_argument("--bound-out", default=None,
                   help="also compute the bound map and write it here")
    p.add_argument("--f-floor", type=float, default=bounds.DEFAULT_F_FLOOR,
                   help="envelope floor as a fraction of its maximum (with --bound-out)")
    p.add_argument("--plot", action="store_true",
                   help="render PNG figures next to each output")
    p.set_defaults(func=cmd_boson_sim)

    p = sub.add_parser("boson-bound", help="bound map from a detector image")
    p.add_argument("--image", required=True, help="detector image (CSV or binary)")
    p.add_argument("--calib", required=True, help="calibration JSON file")
    p.add_argument("--lattice", default=None,
                   help="lattice JSON (default: taken from the calibration)")
    p.add_argument("--k-space", action="store_true", default=None,
                   help="force momentum interpretation of CSV coordinates")
    p.add_argument("--f-floor", type=float, default=bounds.DEFAULT_F_FLOOR,
                   help="envelope floor as a fraction of its maximum "
                        f"(default {bounds.DEFAULT_F_FLOOR:g})")
    p.add_argument("--out", required=True, help="bound map CSV output path")
    p.add_argument("--plot", action="store_true",
                   help="render a PNG figure next to the output")
    p.set_defaults(func=cmd_boson_bound)

    p = sub.add_parser("validate", help="run a self-check suite")
    p.add_argument("--suite", required=True, choices=sorted(oracle.SUITES),
                   help="which falsifier suite to run")
    p.add_argument("--seed", type=int, required=True, help="RNG seed (required)")
    p.add_argument("--samples", type=int, default=None,
                   help="sample count (default: per-suite)")
    p.add_argument("--out", default=None,
                   help="report JSON path (default: print to stdout)")
    p.add_argument("--M", type=int, default=6,
                   help="spin-witness: number of chain sites (default 6)")
    p.add_argument("--Mmax", type=int, default=4,
                   help="sector-eigs/ssr-separable: largest site count (default 4)")
    p.add_argument("--Nmax", type=int, default=3,
                   help="sector-eigs/ssr-separable: largest particle number (default 3)")
    p.add_argument("--points", type=int, default=16,
                   help="sector-eigs: detector points per axis (default 16)")
    p.add_argument("--effort", type=int, default=1,
                   help="bsa-consistency: search effort multiplier (default 1)")
    p.add_argument("--q-res", type=int, default=16,
                   help="bsa-consistency: q points (default 16)")
    p.add_argument("--calib", default=None,
                   help="sector-eigs: calibration JSON (default: natural units)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", help="scan one parameter, tracking the bound")
    p.add_argument("--model", required=True, choices=("spin", "boson"))
    p.add_argument("--param", required=True, choices=("beta", "J", "U"),
                   help="which parameter the values apply to")
    p.add_argument("--values", required=True,
                   help="comma-separated parameter values")
    p.add_argument("--lattice", required=True, help="lattice JSON file")
    p.add_argument("--q", default=None,
                   help="spin target wave vector, comma-separated components")
    p.add_argument("--pixel", default=None,
                   help="boson target detector pixel 'x,y'")
    p.add_argument("--k-space", action="store_true",
                   help="interpret --pixel as momenta")
    p.add_argument("--N", type=int, default=None,
                   help="boson particle number (default: one per site)")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--U", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=None,
                   help="fixed inverse temperature (when not the swept parameter)")
    p.add_argument("--ground", action="store_true",
                   help="use ground states (when beta is not the swept parameter)")
    p.add_argument("--calib", default=None, help="boson calibration JSON")
    p.add_argument("--far-field", action="store_true")
    p.add_argument("--f-floor", type=float, default=bounds.DEFAULT_F_FLOOR)
    p.add_argument("--out", required=True, help="sweep CSV output path")
    p.add_argument("--plot", action="store_true",
                   help="render a PNG figure next to the output")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:            # argparse already printed the message
        return int(exc.code) if exc.code else 0
    # sweep has no --grand/--n-max flags; the shared boson helpers expect them
    for attr in ("grand", "n_max"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        return args.func(args)
    except InternalConsistencyError as exc:
        print(f"entbound: consistency failure: {exc}", file=sys.stderr)
        return 1
    except EntboundError as exc:
        print(f"entbound: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"entbound: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
