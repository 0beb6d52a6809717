"""Command line front end.

    nledlab tof --config run.cfg --out results/run
    nledlab sweep --models bi duality family --lambda 0.25 --coeffs 0.02
    nledlab verify-exact --model family --lambda 0.25 --by 0.5
    nledlab duality --model bi --kappa 1
    nledlab invert-check --model bi --kappa 1 --seed 3

Every subcommand reads an optional flat config file; flags override it.
Outputs are ``<out>.csv`` and ``<out>.json`` when ``--out`` is given, and the
JSON summary always goes to stdout.

Exit codes: 0 success, 1 validation failure, 2 runtime error, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from . import config as cfgmod
from .errors import DomainError, FitError, NoConvergence
from .exact_solutions import (
    AnsatzSpec,
    GaussianPulse,
    field_equation_residual,
    matched_wave,
    refinement_study,
    residual_amplitude,
    sample_points,
    velocity_BI,
    write_residual_csv,
)
from .lagrangian_models import BornInfeld, Maxwell, model_from_dict
from .tof_lab import (
    _jsonable,
    discrimination_sweep,
    duality_scan,
    invert_check,
    measure_tof,
    model_id,
    sweep_summary,
    tof_config_from_dict,
    write_json,
    write_sweep_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_USAGE = 64

SPEED_TOL = 2e-3  # coplanar speed spread accepted as fit noise
FIDELITY_RATIO = 10.0
ROUNDTRIP_TOL = 1e-10
DEFAULT_TAIL = "1.0"  # F = xi/2 + xi^2


class UsageError(Exception):
    def __init__(self, message, printed=False):
        super().__init__(message)
        self.printed = printed


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        sys.stderr.write(f"\n{self.prog}: error: {message}\n")
        raise UsageError(message, printed=True)


def _add_model_args(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--model", choices=["maxwell", "bi", "duality", "family"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--coeffs", help="family tail coefficients a2,a3,... of F = xi/2 + sum a_n xi^n")
    p.add_argument("--bx", type=float)
    p.add_argument("--by", type=float)
    p.add_argument("--bz", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output prefix for <out>.csv and <out>.json")


def build_parser():
    parser = _Parser(prog="nledlab", description="Nonlinear electrodynamics laboratory")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("tof", help="time-of-flight measurement of one pulse")
    _add_model_args(p)
    p.add_argument("--n", type=int, help="grid cells")
    p.add_argument("--scheme", choices=["leapfrog", "lax-friedrichs"])
    p.add_argument("--cfl", type=float)
    p.add_argument("--snapshots", help="CSV path for first/last field snapshots")

    p = sub.add_parser("sweep", help="coplanar vs non-coplanar discrimination sweep")
    _add_model_args(p)
    p.add_argument("--models", nargs="+", choices=["bi", "duality", "family"],
                   default=["bi", "family"])
    p.add_argument("--backgrounds", nargs="+", default=["1,0,1", "1,0.7,1"],
                   help="backgrounds as bx,by,bz")
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--cfl", type=float)

    p = sub.add_parser("verify-exact", help="residual refinement test of the travelling wave")
    _add_model_args(p)
    p.add_argument("--v", type=float, help="phase velocity (default: the model's exact or matched wave)")
    p.add_argument("--chi", type=float, help="longitudinal coefficient")
    p.add_argument("--amplitude", type=float)

    p = sub.add_parser("duality", help="duality residual over random field points")
    _add_model_args(p)
    p.add_argument("--points", type=int, default=10_000)
    p.add_argument("--bound", type=float, default=0.5)

    p = sub.add_parser("invert-check", help="constitutive (E,B) -> D -> E round trip")
    _add_model_args(p)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--bound", type=float, default=0.5)
    return parser


def _merged_config(args):
    """Config file entries overlaid by explicit flags, as a flat dotted dict."""
    cfg = cfgmod.load_config(args.config) if args.config else {}
    flags = {
        "model.kind": args.model,
        "model.kappa": args.kappa,
        "model.lambda": args.lam,
        "model.coeffs": args.coeffs,
        "background.bx": args.bx,
        "background.by": args.by,
        "background.bz": args.bz,
    }
    for k, v in flags.items():
        if v is not None:
            cfg[k] = str(v)
    if cfg.get("model.kind") == "family" and "model.coeffs" not in cfg:
        cfg["model.coeffs"] = DEFAULT_TAIL
    return cfg


def _model(cfg):
    m = cfgmod.section(cfg, "model")
    if not m:
        return Maxwell()
    if m.get("kind") in ("duality", "family") and "lambda" not in m:
        raise UsageError("model needs --lambda")
    return model_from_dict(m)


def _B0(cfg, default=(0.0, 0.0, 0.0)):
    bg = cfgmod.section(cfg, "background")
    return tuple(float(bg.get(k, d)) for k, d in zip(("bx", "by", "bz"), default))


def _emit(summary, out=None):
    if out:
        write_json(out + ".json", summary)
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))


def cmd_tof(args):
    cfg = _merged_config(args)
    if args.n is not None:
        cfg["grid.n"] = str(args.n)
    if args.scheme is not None:
        cfg["solver.scheme"] = args.scheme
    if args.cfl is not None:
        cfg["solver.cfl"] = str(args.cfl)
    if args.out:
        cfg["output.csv"] = args.out + ".csv"
        cfg["output.json"] = args.out + ".json"
    if args.snapshots:
        cfg["output.snapshots"] = args.snapshots
    tof = tof_config_from_dict(cfg)
    try:
        tof.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = measure_tof(tof)
    summary = {"model": model_id(tof.build_model()), **result.summary()}
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    return EXIT_OK


def _parse_vec(text):
    try:
        v = tuple(float(x) for x in text.split(","))
    except ValueError:
        v = ()
    if len(v) != 3:
        raise UsageError(f"background {text!r} is not bx,by,bz")
    return v


def cmd_sweep(args):
    cfg = _merged_config(args)
    lam = args.lam if args.lam is not None else float(cfg.get("model.lambda", 0.25))
    coeffs = args.coeffs or cfg.get("model.coeffs") or "0.02"
    factories = {
        "bi": lambda: BornInfeld(2.0 * math.sqrt(lam)),
        "duality": lambda: model_from_dict({"kind": "duality", "lambda": lam}),
        "family": lambda: model_from_dict({"kind": "family", "lambda": lam, "coeffs": coeffs}),
    }
    models = [factories[k]() for k in args.models]
    grid = [_parse_vec(b) for b in args.backgrounds]
    template = tof_config_from_dict(cfg)
    template = replace(template, N=args.n, cfl=args.cfl if args.cfl is not None else template.cfl)
    rows = discrimination_sweep(models, grid, template)
    summary_rows = sweep_summary(rows)
    checks = []
    if len(models) > 1:
        for s in summary_rows:
            if s["by"] == 0.0:
                checks.append(s["speed_spread"] <= SPEED_TOL)
            else:
                checks.append(s["fidelity_ratio"] >= FIDELITY_RATIO)
    ok = all(checks)
    if args.out:
        write_sweep_csv(args.out + ".csv", rows)
    _emit({"lambda": lam, "rows": rows, "backgrounds": summary_rows, "passed": ok}, args.out)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_verify_exact(args):
    cfg = _merged_config(args)
    model = _model(cfg)
    B0 = _B0(cfg, default=(1.0, 0.0, 1.0))
    v, chi = matched_wave(model, B0)
    if args.v is not None:
        v = args.v
    if args.chi is not None:
        chi = args.chi
    A = args.amplitude if args.amplitude is not None else residual_amplitude(model)
    spec = AnsatzSpec(GaussianPulse(A), v, chi, B0)
    report = refinement_study(model, spec)
    summary = {
        "model": model_id(model), "B0": list(B0), "v": v, "chi": chi, "amplitude": A,
        "steps": list(report.steps), "norms": list(report.norms), "slope": report.slope,
        "extrapolated": report.extrapolated, "passed": report.passed,
        "diagnostic": report.diagnostic,
    }
    if not isinstance(model, (Maxwell, BornInfeld)):
        kappa = 2.0 * math.sqrt(model.lam)
        bi_spec = AnsatzSpec(GaussianPulse(A), *velocity_BI(kappa, B0), B0)
        ref = refinement_study(BornInfeld(kappa), bi_spec)
        summary["bi_extrapolated"] = ref.extrapolated
        summary["plateau_ratio"] = report.extrapolated / max(ref.extrapolated, 1e-300)
    if args.out:
        rows = []
        t, z = sample_points(spec)
        for h in report.steps:
            rF, rG = field_equation_residual(model, spec, t, z, h)
            rows.append((model_id(model), B0, v, chi, h,
                         float(np.max(np.abs(rF))), float(np.max(np.abs(rG)))))
        write_residual_csv(args.out + ".csv", rows)
    _emit(summary, args.out)
    if not report.passed:
        print(report.diagnostic, file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_duality(args):
    cfg = _merged_config(args)
    model = _model(cfg)
    summary = duality_scan(model, args.points, args.bound, seed=args.seed)
    summary["seed"] = args.seed
    if args.out:
        with open(args.out + ".csv", "w") as fh:
            fh.write("model,points,bound,seed,max_abs_C,mean_abs_C\n")
            fh.write(f"{summary['model']},{args.points},{args.bound!r},{args.seed},"
                     f"{summary['max_abs_C']!r},{summary['mean_abs_C']!r}\n")
    _emit(summary, args.out)
    return EXIT_OK


def cmd_invert_check(args):
    cfg = _merged_config(args)
    model = _model(cfg)
    summary = invert_check(model, args.points, args.bound, seed=args.seed)
    summary["seed"] = args.seed
    summary["passed"] = summary["max_error"] <= ROUNDTRIP_TOL
    if args.out:
        with open(args.out + ".csv", "w") as fh:
            fh.write("model,points,bound,seed,max_error,mean_iterations\n")
            fh.write(f"{summary['model']},{args.points},{args.bound!r},{args.seed},"
                     f"{summary['max_error']!r},{summary['mean_iterations']!r}\n")
    _emit(summary, args.out)
    return EXIT_OK if summary["passed"] else EXIT_VALIDATION


COMMANDS = {
    "tof": cmd_tof,
    "sweep": cmd_sweep,
    "verify-exact": cmd_verify_exact,
    "duality": cmd_duality,
    "invert-check": cmd_invert_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        if not exc.printed:
            parser.print_help(sys.stderr)
            print(f"\nnledlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except FitError as exc:
        print(f"nledlab: fit rejected: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DomainError, NoConvergence, ValueError, OSError) as exc:
        print(f"nledlab: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
