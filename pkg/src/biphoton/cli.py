"""Command line entry point: ``biphoton <command> [options]``.

Exit codes: 0 success (all reproduction rows pass), 1 a reproduction row
failed, 2 configuration error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import crystal, runner
from .config import COMMANDS, GEOMETRIES, SWEEP_PARAMETERS, parse_config
from .errors import BiphotonError, ConfigError, DomainError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

# flag dest -> config key
_FLAG_KEYS = {
    "geometry": "geometry",
    "np_eff": "np_eff",
    "alpha_mrad": "alpha_mrad",
    "L_cm": "L_cm",
    "lambda_nm": "lambda_nm",
    "crystal": "crystal",
    "out": "output_dir",
    "workers": "workers",
    "from_dispersion": "from_dispersion",
    "points": "curve_points",
    "schmidt_points": "schmidt_points",
    "parameter": "sweep_parameter",
    "start": "sweep_start",
    "stop": "sweep_stop",
    "steps": "sweep_steps",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biphoton", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="key = value file; flags override it")
    p.add_argument("--geometry", choices=GEOMETRIES)
    p.add_argument("--np-eff", dest="np_eff", type=float, help="custom anisotropy (implies --geometry custom)")
    p.add_argument("--alpha-mrad", dest="alpha_mrad", type=float, help="pump angular FWHM in mrad")
    p.add_argument("--L-cm", dest="L_cm", type=float, help="crystal length in cm")
    p.add_argument("--lambda-nm", dest="lambda_nm", type=float, help="pump wavelength in nm")
    p.add_argument("--crystal", help="bundled crystal name")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--workers", type=int, help="parallel sweep steps")
    p.add_argument(
        "--from-dispersion",
        dest="from_dispersion",
        action="store_const",
        const="true",
        help="reproduce with the Sellmeier-derived anisotropy (report labelled prediction)",
    )
    p.add_argument("--points", type=int, help="samples per curve")
    p.add_argument("--schmidt-points", dest="schmidt_points", type=int, help="grid points per axis for K")
    p.add_argument("--parameter", choices=SWEEP_PARAMETERS, help="sweep variable (alpha in mrad, L in cm)")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--steps", type=int)
    return p


def load_config(args):
    text = args.config.read_text() if args.config else ""
    overrides = {_FLAG_KEYS[k]: v for k, v in vars(args).items() if k in _FLAG_KEYS}
    return parse_config(text, overrides, origin=str(args.config or "<flags>"))


def _widths_dict(res):
    return {name: asdict(rep) for name, rep in sorted(res.widths.items())}


def _analysis(cfg):
    scn = runner.resolve_scenario(cfg)
    res = runner.analyze_momentum(scn, points=cfg.curve_points)
    if runner.validity_check(scn).ok:
        runner.analyze_coordinate(scn, res, points=cfg.curve_points)
    return scn, res


def _scenario_dict(scn):
    return {**asdict(scn), "kp0_per_cm": scn.kp0}


def cmd_curves(cfg, out, args):
    scn, res = _analysis(cfg)
    paths = runner.write_curves(res.curves, out)
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_widths(cfg, out, args):
    scn, res = _analysis(cfg)
    data = {"scenario": _scenario_dict(scn), "widths": _widths_dict(res)}
    runner.write_report(data, out)
    for name, rep in sorted(res.widths.items()):
        print(f"{name:22s} FWHM = {rep.fwhm:.6g} {rep.units}  peak at {rep.peak_location:.4g}  ({rep.n_peaks_detected} peak(s))")
    return EXIT_OK


def cmd_schmidt(cfg, out, args):
    scn, res = _analysis(cfg)
    ent = runner.entanglement_report(res, cfg.schmidt_points)
    runner.write_report({"scenario": _scenario_dict(scn), "entanglement": ent.to_dict()}, out)
    print(f"K = {ent.schmidt_k:.6g} (convergence delta {ent.provenance['convergence_delta']:.2e})")
    print(f"R_k = {ent.r_k:.6g}")
    if ent.c_epr_halfmax is not None:
        print(f"C_EPR = {ent.c_epr_halfmax:.6g}, ratio to baseline = {ent.c_epr_ratio:.6g}")
    return EXIT_OK


def cmd_sweep(cfg, out, args):
    rows = runner.run_sweep(cfg)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    path.write_text(runner.format_sweep_csv(rows, cfg.sweep_parameter))
    print(path)
    return EXIT_OK


def cmd_crystal(cfg, out, args):
    names = [cfg.crystal] if args.crystal else crystal.list_crystals()
    table = []
    for name in names:
        optics = crystal.solve_phase_matching(crystal.get_model(name), cfg.lambda_nm)
        table.append(
            {
                "crystal": name,
                "lambda_p_nm": cfg.lambda_nm,
                "phi0_deg": math.degrees(optics.phi0),
                "np_prime": optics.np_prime,
                "n_o_pump": optics.n_o_pump,
                "n_e_pump": optics.n_e_pump,
                "n_signal": optics.n_o_signal,
                "source": optics.model.source,
            }
        )
        print(f"{name:6s} phi0 = {math.degrees(optics.phi0):8.4f} deg   n_p' = {optics.np_prime:+.5f}   n(2 lambda_p) = {optics.n_o_signal:.6f}")
    runner.write_report({"crystals": table}, out)
    return EXIT_OK


def cmd_reproduce(cfg, out, args):
    rep = runner.run_reproduce(cfg)
    runner.write_curves(rep.curves, out)
    runner.write_report(rep.to_dict(), out)
    print(f"{rep.label} at np_eff = {rep.np_eff:+.6g}")
    for row in rep.rows:
        print(row.line())
    print(f"overall: {'PASS' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_FAIL


HANDLERS = {
    "curves": cmd_curves,
    "widths": cmd_widths,
    "schmidt": cmd_schmidt,
    "sweep": cmd_sweep,
    "crystal": cmd_crystal,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    started = time.time()
    try:
        cfg = load_config(args)
        out = Path(cfg.output_dir)
        code = HANDLERS[args.command](cfg, out, args)
    except (ConfigError, DomainError, OSError) as exc:
        print(f"biphoton: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BiphotonError as exc:
        print(f"biphoton: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    runner.write_provenance(cfg, args.command, started, out)
    return code


if __name__ == "__main__":
    sys.exit(main())
