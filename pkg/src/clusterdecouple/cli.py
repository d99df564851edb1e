"""Command line interface: ``check``, ``spectrum``, ``quench`` and ``ion-ring``.

Exit codes: 0 success, 1 domain error (e.g. a coupling that does not
factorize, an unstable mode), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, model
from .errors import ConfigError, DomainError, NotDecoupled
from .ion_ring import CA40_ION_MASS, CONSTANTS, PRESET_N, PRESET_RHO, build_scenario, validate_small_displacement
from .normal_modes import (
    brute_force_full_harmonic,
    build_cm_stiffness,
    cm_energy,
    decompose,
    max_relative_deviation,
    separated_spectrum,
)
from .outputs import content_hash, manifest, manifest_text, write_csv, write_manifest
from .quench import DEFAULT_ATOL, DEFAULT_GRID, DEFAULT_RTOL, DEFAULT_T_MAX, QuenchScenario, run_quench
from .separation import DEFAULT_REL_TOL, check_system, separate

QUENCH_HEADER = ["t_omega0", "lambda_x", "lambda_y", "var_zI_natural"]
DEFAULT_GAMMAS = (0.1, 0.5, 10.0)


def _err(msg):
    print(msg, file=sys.stderr)


def _load_config(path):
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    spec = model.loads(raw.decode("utf-8"))
    violations = model.validate_system(spec)
    if violations:
        lines = "\n".join(f"  [{v.code}] {v.message}" for v in violations)
        raise ConfigError(f"{path}: invalid scenario\n{lines}")
    spec, _ = model.to_natural(spec)
    return spec, raw


def _emit_manifest(args, data, name):
    """Place the manifest in --out when given, otherwise on stderr."""
    if getattr(args, "out", None):
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out / f"{name}_manifest.json", data)
    elif not getattr(args, "json", False):
        _err("manifest: " + json.dumps(data, sort_keys=True))


def _tol(args):
    return DEFAULT_REL_TOL if args.tol is None else args.tol


# -- check ---------------------------------------------------------------------

def cmd_check(args):
    t0 = time.perf_counter()
    spec, raw = _load_config(args.config)
    tol = _tol(args)
    reports = check_system(spec, tol)
    ok = all(r.decoupled for r in reports)
    data = manifest(
        "check", {"config": Path(args.config).name}, {"rel_tol": tol}, content_hash(raw),
        residuals={"max_residual": max((r.max_residual for r in reports), default=0.0)},
    )
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        rows = [(f"{r.pair[0]}", f"{r.pair[1]}", int(r.decoupled), r.d0 if r.d0 is not None else "",
                 r.max_residual, r.transformed_residual) for r in reports]
        write_csv(Path(args.out) / "check_reports.csv",
                  ["alpha", "beta", "decoupled", "d0", "max_residual", "transformed_residual"], rows)
        data["outputs"] = ["check_reports.csv"]
    data["wall_time_s"] = time.perf_counter() - t0

    if args.json:
        print(json.dumps({"all_decoupled": ok, "reports": [r.as_dict() for r in reports],
                          "manifest": data}, indent=2, sort_keys=True))
    else:
        print(f"{'pair':<8}{'decoupled':<11}{'d0':>16}{'max_residual':>15}{'transformed':>15}")
        for r in reports:
            d0 = f"{r.d0:.9g}" if r.d0 is not None else "-"
            print(f"{str(r.pair):<8}{'yes' if r.decoupled else 'NO':<11}{d0:>16}"
                  f"{r.max_residual:>15.3e}{r.transformed_residual:>15.3e}")
            for i, k, res in r.offending[:10]:
                print(f"    offending d[{i},{k}]: residual {res:.3e}")
        if not reports:
            print("(no couplings: clusters are independent)")
    _emit_manifest(args, data, "check")
    if not ok:
        _err(str(NotDecoupled([r for r in reports if not r.decoupled])))
        return 1
    return 0


# -- spectrum ------------------------------------------------------------------

def cmd_spectrum(args):
    t0 = time.perf_counter()
    spec, raw = _load_config(args.config)
    tol = _tol(args)
    if args.brute_force:
        multiset, dec, rels = separated_spectrum(spec, rel_tol=tol)
    else:
        # relative modes need harmonic in-group terms; the CM part does not
        cm, rels = separate(spec, rel_tol=tol)
        dec = decompose(cm)
    result = {
        "modes": [
            {"index": i, "omega": float(w), "zero_mode": bool(z)}
            for i, (w, z) in enumerate(zip(dec.frequencies, dec.zero_mask))
        ],
        "dimension": dec.dimension,
        "zero_modes": dec.zero_modes,
        "equilibrium": dec.equilibrium.tolist(),
        "energy_offset": dec.energy_offset,
        "ground_energy_cm": cm_energy(dec),
        "effective_frequencies": [r.omega_bar for r in rels],
    }
    residuals = {}
    if args.brute_force:
        brute = brute_force_full_harmonic(spec)
        dev = max_relative_deviation(brute, multiset)
        result["brute_force"] = brute.tolist()
        result["separated"] = multiset.tolist()
        result["max_relative_deviation"] = dev
        residuals["max_relative_deviation"] = dev

    data = manifest("spectrum", {"config": Path(args.config).name, "brute_force": bool(args.brute_force)},
                    {"rel_tol": tol}, content_hash(raw), residuals=residuals)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "spectrum_modes.csv", ["index", "omega", "zero_mode"],
                  [(m["index"], m["omega"], int(m["zero_mode"])) for m in result["modes"]])
        data["outputs"] = ["spectrum_modes.csv"]
        if args.brute_force:
            write_csv(out / "spectrum_multisets.csv", ["brute_force", "separated"], zip(brute, multiset))
            data["outputs"].append("spectrum_multisets.csv")
    data["wall_time_s"] = time.perf_counter() - t0

    if args.json:
        result["manifest"] = data
        print(json.dumps(result, indent=2, sort_keys=True))
    else:
        print(f"{'mode':<6}{'omega':>22}  zero")
        for m in result["modes"]:
            print(f"{m['index']:<6}{m['omega']:>22.15g}  {'yes' if m['zero_mode'] else 'no'}")
        print(f"dimension: {dec.dimension}   zero modes (all dimensions): {dec.zero_modes}")
        print("equilibrium R*:", np.array2string(dec.equilibrium, precision=12))
        print(f"E_0: {dec.energy_offset:.15g}")
        print(f"ground-state E_cm: {result['ground_energy_cm']:.15g}")
        for r in rels:
            print(f"cluster {r.alpha}: effective frequency {r.omega_bar:.15g}")
        if args.brute_force:
            print("brute force :", " ".join(f"{w:.12g}" for w in result["brute_force"]))
            print("separated   :", " ".join(f"{w:.12g}" for w in result["separated"]))
            print(f"max relative deviation: {result['max_relative_deviation']:.3e}")
    _emit_manifest(args, data, "spectrum")
    return 0


# -- quench --------------------------------------------------------------------

def _scenario_from_config(spec, final_ratio):
    """Read coupling and initial frequency off a (1, N) impurity-bath system."""
    sizes = [c.size for c in spec.clusters]
    if len(sizes) != 2 or 1 not in sizes:
        raise ConfigError("quench config must have two clusters, one with a single particle")
    cm, _ = separate(spec)
    k, _, _ = build_cm_stiffness(cm)
    if not math.isclose(k[0, 0], k[1, 1], rel_tol=1e-9):
        raise ConfigError("quench needs equal impurity and bath centre-of-mass frequencies")
    w2 = k[0, 0]
    coupling = abs(k[0, 1]) / w2
    n_bath = max(sizes)
    return QuenchScenario(coupling, 1.0, final_ratio * coupling, n_bath)


def _gamma_label(g):
    return f"{g:g}"


def cmd_quench(args):
    t0 = time.perf_counter()
    gammas = args.gamma or list(DEFAULT_GAMMAS)
    build = None
    if args.config:
        spec, raw = _load_config(args.config)
        scenario = _scenario_from_config(spec, args.final_ratio)
        input_hash = content_hash(raw)
        source = Path(args.config).name
    else:
        build = build_scenario(n_bath=args.n_bath, rho=args.rho,
                               initial_ratio=args.initial_ratio, final_ratio=args.final_ratio)
        scenario = build.quench
        input_hash = content_hash({"n_bath": args.n_bath, "rho": args.rho,
                                   "initial_ratio": args.initial_ratio, "final_ratio": args.final_ratio})
        source = "ion-ring preset"
    rtol = args.rtol
    atol = args.atol if args.atol is not None else rtol * 1e-2
    records = run_quench(scenario, gammas, t_max=args.t_max, grid=args.grid, rtol=rtol, atol=atol)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files, residuals = [], {}
    for g, rec in records.items():
        name = f"quench_gamma{_gamma_label(g)}.csv"
        lam_x, lam_y = rec.branches["x"].lam, rec.branches["y"].lam
        write_csv(out / name, QUENCH_HEADER, zip(rec.t_omega0, lam_x, lam_y, rec.variance))
        files.append(name)
        res = rec.residuals()
        if build is not None:
            res["small_displacement"] = validate_small_displacement(build, rec).as_dict()
        residuals[_gamma_label(g)] = res
        _err(f"gamma={_gamma_label(g)}: wrote {name}; wronskian drift {res['max_wronskian_drift']:.2e}, "
             f"ermakov residual {res['max_ermakov_residual']:.2e}")

    params = {
        "source": source,
        "gammas": list(gammas),
        "t_max_omega0": args.t_max,
        "grid": args.grid,
        "coupling": scenario.coupling,
        "omega2_init": scenario.omega2_init,
        "omega2_final": scenario.omega2_final,
        "n_bath": scenario.n_bath,
    }
    data = manifest("quench", params, {"rtol": rtol, "atol": atol}, input_hash,
                    residuals=residuals, outputs=files, wall_time=time.perf_counter() - t0)
    write_manifest(out / "quench_manifest.json", data)
    if args.json:
        print(manifest_text(data), end="")
    return 0


# -- ion-ring ------------------------------------------------------------------

def cmd_ion_ring(args):
    t0 = time.perf_counter()
    explicit = args.omega_ext is not None or args.Omega_ext is not None
    if explicit and args.preset:
        raise ConfigError("--preset cannot be combined with --omega-ext/--Omega-ext")
    if explicit and (args.omega_ext is None or args.Omega_ext is None):
        raise ConfigError("give both --omega-ext and --Omega-ext")
    mass = args.mass_u * CONSTANTS.atomic_mass - CONSTANTS.electron_mass if args.mass_u else CA40_ION_MASS
    build = build_scenario(n_bath=args.N, rho=args.rho, mass=mass,
                           omega_ext=args.omega_ext, Omega_ext=args.Omega_ext,
                           final_ratio=args.final_ratio)
    summary = build.summary()
    if args.write_config:
        Path(args.write_config).write_text(model.dumps(build.spec), encoding="utf-8")
    data = manifest("ion-ring", {"N": args.N, "rho": args.rho, "mass": mass,
                                 "omega_ext": args.omega_ext, "Omega_ext": args.Omega_ext},
                    {}, content_hash(summary), wall_time=time.perf_counter() - t0)
    if args.json:
        summary["manifest"] = data
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    for key, value in summary.items():
        if isinstance(value, dict):
            continue
        print(f"{key:<22}{value:.10g}" if isinstance(value, float) else f"{key:<22}{value}")
    print("natural units (hbar = m = omega(0) = 1):")
    for key, value in summary["natural"].items():
        print(f"  {key:<20}{value:.10g}")
    if build.quench is not None:
        q = summary["quench"]
        print(f"quench flags: --n-bath {args.N} --rho {args.rho:g} "
              f"--initial-ratio {q['initial_ratio']:.10g} --final-ratio {q['final_ratio']:g}")
    else:
        print("omega_zI != Omega: the two-branch quench does not apply")
    _emit_manifest(args, data, "ion_ring")
    return 0


# -- parser --------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                        help=f"relative decoupling tolerance (default {DEFAULT_REL_TOL:g})")
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")

    p = argparse.ArgumentParser(prog="clusterdecouple", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--tol", type=float, default=None, help="global tolerance override")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="test the factorization condition per coupling pair")
    c.add_argument("config")
    c.add_argument("--out", help="directory for the report CSV and manifest")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("spectrum", parents=[common], help="centre-of-mass normal modes")
    s.add_argument("config")
    s.add_argument("--brute-force", action="store_true",
                   help="compare with the full all-harmonic spectrum")
    s.add_argument("--out", help="directory for mode CSV and manifest")
    s.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("quench", parents=[common], help="impurity variance after a trap ramp")
    q.add_argument("--config", help="two-cluster (1, N) scenario; default is the ion-ring preset")
    q.add_argument("--gamma", type=float, action="append", help="ramp speed (repeatable)")
    q.add_argument("--t-max", type=float, default=DEFAULT_T_MAX, help="window in units of 1/omega(0)")
    q.add_argument("--grid", type=int, default=DEFAULT_GRID, help="number of output times")
    q.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    q.add_argument("--atol", type=float, default=None, help=f"default rtol/100 ({DEFAULT_ATOL:g})")
    q.add_argument("--initial-ratio", type=float, default=20.0,
                   help="m omega^2(0) / (d_z sqrt(N))")
    q.add_argument("--final-ratio", type=float, default=2.0,
                   help="m omega^2(t_f) / (d_z sqrt(N))")
    q.add_argument("--n-bath", type=int, default=PRESET_N)
    q.add_argument("--rho", type=float, default=PRESET_RHO, help="ring radius in m")
    q.add_argument("--out", default=".", help="output directory")
    q.set_defaults(func=cmd_quench)

    r = sub.add_parser("ion-ring", parents=[common], help="derive the ring scenario from SI inputs")
    r.add_argument("--preset", choices=["paper"], help="40Ca+, rho = 45 um, N = 10")
    r.add_argument("--N", type=int, default=PRESET_N)
    r.add_argument("--rho", type=float, default=PRESET_RHO)
    r.add_argument("--mass-u", type=float, default=None, help="atomic mass in u (default 40Ca)")
    r.add_argument("--omega-ext", type=float, default=None, help="impurity trap, rad/s")
    r.add_argument("--Omega-ext", type=float, default=None, help="bath axial trap, rad/s")
    r.add_argument("--final-ratio", type=float, default=2.0)
    r.add_argument("--write-config", help="write the natural-unit scenario JSON here")
    r.set_defaults(func=cmd_ion_ring)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "json"):
        args.json = False
    try:
        if getattr(args, "grid", 2) < 2:
            raise ConfigError("--grid must be at least 2")
        return args.func(args)
    except DomainError as exc:
        _err(f"error: {exc}")
        return 1
    except (ConfigError, ValueError) as exc:
        _err(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
