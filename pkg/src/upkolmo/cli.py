"""Batch front door: run solvers, parameter sweeps and verification suites.

Exit codes are the machine contract: 0 success, 1 config/validation error,
2 aborted on non-finite values, 3 at least one verification check failed.
Human-readable output goes to stdout, diagnostics to stderr, reports and
trajectories to files.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io as config_io
from . import solver, verify
from .problem import ZeroInitialDataError, refined_max_bound
from .scheme import NaNDetectedError, Stepper, predicted_sup


def _load(path):
    try:
        return config_io.load_config(path)
    except (config_io.ParseError, config_io.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def _k_bank(spec, n=9):
    """Kruzhkov constants spanning the invariant region."""
    try:
        m = refined_max_bound(spec, spec.T, inflate=verify.NORM_INFLATION)
    except (ZeroInitialDataError, ValueError):
        m = max(1.0, 1.05 * predicted_sup(spec))
    return list(np.linspace(-m, m, n))


def _solve(loaded, mode):
    spec, grid, options = loaded.spec, loaded.grid, loaded.options
    if mode == "regularized":
        return solver.solve_regularized(spec, grid, options=options)
    if mode == "impulsive":
        return solver.solve_impulsive(spec, grid, options=options)
    return solver.solve_entropy(spec, grid, options=options)


def _cmd_run(args):
    loaded = _load(args.config)
    if loaded is None:
        return 1
    try:
        traj = _solve(loaded, args.mode)
    except NaNDetectedError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    except (solver.GammaOutOfRangeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out or loaded.output_dir)
    config_io.write_trajectory(out, traj, d=loaded.spec.d)
    grid = traj.grid
    print(f"{'t':>10}  {'sup|u|':>12}  {'||u||_L2^2':>12}")
    for t, fld in zip(traj.times, traj.fields):
        l2 = float(np.sum(fld.values ** 2)) * grid.cell_volume
        print(f"{t:10.6f}  {fld.sup_norm():12.6g}  {l2:12.6g}")
    print(f"wrote {len(traj.times)} snapshots to {out}")
    return 0


def _run_entropy_for_gamma(payload):
    spec, grid, options, gamma, dt, m_common = payload
    return solver.solve_entropy(spec, grid, gamma=gamma, options=options,
                                dt=dt, m_bound=m_common)


def _run_regularized_for_eps(payload):
    spec, grid, options, eps, gamma, dt, m_common = payload
    return solver.solve_regularized(spec, grid, eps=eps, gamma=gamma,
                                    options=options, dt=dt, m_bound=m_common)


def _cmd_sweep(args):
    loaded = _load(args.config)
    if loaded is None:
        return 1
    values = [float(v) for v in args.values.split(",")]
    spec, grid, options = loaded.spec, loaded.grid, loaded.options
    out = Path(args.out or loaded.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        m_common = 1.05 * predicted_sup(spec) + 0.5
        if args.param == "gamma":
            dts = [Stepper(spec, grid, eps=0.0, gamma=g, options=options,
                           m_bound=m_common).dt for g in values]
            dts.append(Stepper(spec, grid, eps=0.0, gamma=0.0, options=options,
                               m_bound=m_common).dt)
            dt = min(dts)
            ref = solver.solve_impulsive(spec, grid, options=options, dt=dt,
                                         m_bound=m_common)
            payloads = [(spec, grid, options, g, dt, m_common) for g in values]
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    trajs = list(pool.map(_run_entropy_for_gamma, payloads))
            else:
                trajs = [_run_entropy_for_gamma(p) for p in payloads]
            errors = [verify.spacetime_l1_diff(traj, ref) for traj in trajs]
            report = verify.gamma_limit_report(spec, values, errors, trajs, ref)
        else:
            gamma = spec.gamma if spec.beta is not None else 0.0
            if spec.beta is not None and gamma <= 0:
                print("error: epsilon sweep with a delayed source needs "
                      "gamma > 0 in the config", file=sys.stderr)
                return 1
            dt = min(Stepper(spec, grid, eps=e, gamma=gamma, options=options,
                             m_bound=m_common).dt for e in values)
            payloads = [(spec, grid, options, e, gamma, dt, m_common)
                        for e in values]
            if args.jobs > 1:
                with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                    trajs = list(pool.map(_run_regularized_for_eps, payloads))
            else:
                trajs = [_run_regularized_for_eps(p) for p in payloads]
            errors = [verify.spacetime_l1_diff(trajs[i], trajs[i + 1])
                      for i in range(len(trajs) - 1)]
            report = verify.epsilon_cauchy_report(spec, values, errors)
    except NaNDetectedError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    except (solver.GammaOutOfRangeError, verify.GammaOutOfRangeError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(out / f"{args.param}_sweep.csv", "w", encoding="utf-8") as fh:
        fh.write(f"{args.param},error\n")
        if args.param == "gamma":
            for v, e in zip(values, errors):
                fh.write(f"{v!r},{e!r}\n")
        else:
            for (v1, v2), e in zip(zip(values[:-1], values[1:]), errors):
                fh.write(f"{v1!r}->{v2!r},{e!r}\n")
    verify.write_reports(out / "sweep_report.csv", [report])
    print(f"{args.param} sweep: errors = {errors}")
    print(f"report: {report.check} pass={report.passed}")
    return 0


def _cmd_verify(args):
    loaded = _load(args.config)
    if loaded is None:
        return 1
    spec = loaded.spec
    traj = config_io.read_trajectory(args.traj, L=spec.L, S=spec.S)
    reports = [verify.check_max_principle(traj, spec)]
    if args.traj2:
        traj2 = config_io.read_trajectory(args.traj2, L=spec.L, S=spec.S)
        reports.append(verify.check_stability(traj, traj2, spec, spec))
    else:
        reports.append(verify.check_stability(traj, traj, spec, spec))
    k_bank = _k_bank(spec)
    if traj.meta.get("mode") == "impulsive":
        reports.append(verify.check_jump(traj, spec))
    if traj.meta.get("eps", 1.0) == 0.0:
        reports.append(verify.check_bln(traj, spec, k_bank))
        if traj.meta.get("stride") == 1:
            reports.append(verify.check_entropy_residual(traj, spec, k_bank))
    out = Path(args.out) if args.out else Path(args.traj) / "reports.csv"
    verify.write_reports(out, reports)
    for rep in reports:
        print(f"{rep.check}: measured={rep.measured:.6g} "
              f"bound={rep.bound:.6g} pass={rep.passed}")
    return 0 if all(r.passed for r in reports) else 3


def _cmd_validate_flux(args):
    loaded = _load(args.config)
    if loaded is None:
        return 1
    report = verify.validate_genuine_nonlinearity(
        loaded.spec.flux_a, args.Lambda, n_dirs=args.dirs)
    quantiles = report.context["mu_quantiles"]
    deltas = report.context["deltas"]
    print(f"{'delta':>10}  " + "  ".join(f"{q:>12}" for q in quantiles))
    for i, d in enumerate(deltas):
        row = "  ".join(f"{quantiles[q][i]:12.6g}" for q in quantiles)
        print(f"{d:10.2g}  {row}")
    print(f"worst mu(delta_min) = {report.measured:.6g} "
          f"(bound {report.bound:.6g}) pass={report.passed}")
    return 0 if report.passed else 3


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="upkolmo",
        description="Solvers and verification for ultra-parabolic equations "
                    "with delayed or impulsive sources")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one solve and write the trajectory")
    p_run.add_argument("config")
    p_run.add_argument("--mode", choices=["regularized", "entropy", "impulsive"],
                       default="entropy")
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep gamma or epsilon")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", choices=["gamma", "epsilon"], required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated decreasing values")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="verify stored trajectories")
    p_verify.add_argument("config")
    p_verify.add_argument("--traj", required=True)
    p_verify.add_argument("--traj2", default=None)
    p_verify.add_argument("--out", default=None)
    p_verify.set_defaults(func=_cmd_verify)

    p_flux = sub.add_parser("validate-flux",
                            help="check the s-flux non-degeneracy profile")
    p_flux.add_argument("config")
    p_flux.add_argument("--Lambda", type=float, default=10.0)
    p_flux.add_argument("--dirs", type=int, default=64)
    p_flux.set_defaults(func=_cmd_validate_flux)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
