"""Command-line front end.

Subcommands: simulate, certify, sweep-eta, spectrum, kkt-check, gen.
Exit codes: 0 success, 1 validation failure (failed certificate sweep,
unverified equilibrium, diverged run), 2 usage error. Standard output
carries a short human summary only; data goes to CSV files under --out.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .certificates import (
    build_certificate_eq,
    build_certificate_ineq,
    build_certificate_rank,
    lmi_sweep,
)
from .dynamics import State, vector_field
from .equilibrium import solve_equilibrium
from .errors import SaddleflowError
from .experiments import (
    KIND_EQUALITY_QP,
    KIND_LOGISTIC_INEQ,
    ExperimentSpec,
    fit_decay_rate,
    gen_equality_qp,
    gen_logistic_ineq,
    pick_step_size,
    run_experiment,
)
from .integrator import simulate
from .problem import (
    DynamicsParams,
    EqualityConstraints,
    InequalityConstraints,
    QuadraticObjective,
    TwoSidedConstraints,
)
from .spectral import eta_sweep


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saddleflow",
        description="Primal-dual gradient flows with stability certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, horizon=False):
        sp.add_argument("--problem", default="eq-qp",
                        help="generator name (eq-qp, logistic) or a problem file path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--n", type=int, default=None, help="primal dimension")
        sp.add_argument("--m", type=int, default=None, help="constraint count")
        sp.add_argument("--n-data", type=int, default=100,
                        help="logistic dataset size")
        sp.add_argument("--reg", type=float, default=0.1,
                        help="logistic ridge weight")
        sp.add_argument("--eta", type=float, default=1.0)
        sp.add_argument("--rho", type=float, default=1.0)
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--variant", choices=["eq", "ineq", "ts", "rank"],
                        default=None, help="certificate variant (default: by problem)")
        if horizon:
            sp.add_argument("--delta", type=float, default=None)
            sp.add_argument("--horizon", type=float, default=5.0)

    common(sub.add_parser("simulate", help="integrate the flow, write a trajectory"),
           horizon=True)
    common(sub.add_parser("certify", help="build a certificate and sweep the LMI"))
    sp = sub.add_parser("sweep-eta", help="run the experiment driver over an eta grid")
    common(sp, horizon=True)
    sp.add_argument("--eta-grid", default="0.1:10:5:log",
                    help="a:b:steps for linear, a:b:steps:log for logarithmic")
    sp = sub.add_parser("spectrum", help="exact LTI decay rates over an eta grid")
    common(sp)
    sp.add_argument("--eta-grid", default="0.01:100:25:log")
    common(sub.add_parser("kkt-check", help="solve and verify the equilibrium"))
    common(sub.add_parser("gen", help="write the generated problem to a file"))
    return parser


def _parse_grid(text: str) -> np.ndarray:
    spec = text.replace("(log)", ":log").strip()
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"bad grid {text!r}; expected a:b:steps or a:b:steps:log")
    try:
        a, b = float(parts[0]), float(parts[1])
        steps = int(parts[2])
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}: {exc}") from None
    if steps < 1 or a <= 0 or b <= 0:
        raise UsageError(f"bad grid {text!r}; endpoints and steps must be positive")
    if len(parts) == 4:
        if parts[3] != "log":
            raise UsageError(f"bad grid suffix {parts[3]!r}; only 'log' is known")
        return np.logspace(np.log10(a), np.log10(b), steps)
    return np.linspace(a, b, steps)


def _load_problem(args):
    name = args.problem
    if name == "eq-qp":
        n = args.n if args.n is not None else 5
        m = args.m if args.m is not None else 2
        return gen_equality_qp(args.seed, n, m), KIND_EQUALITY_QP
    if name == "logistic":
        n = args.n if args.n is not None else 50
        m = args.m if args.m is not None else 40
        return gen_logistic_ineq(args.seed, n, m, args.n_data, args.reg), KIND_LOGISTIC_INEQ
    path = Path(name)
    if path.exists():
        return fileio.load_problem(path), None
    raise UsageError(
        f"--problem must be 'eq-qp', 'logistic' or an existing file; got {name!r}"
    )


def _default_variant(p):
    if isinstance(p.constraints, EqualityConstraints):
        return "eq"
    if isinstance(p.constraints, InequalityConstraints):
        return "ineq"
    return "ts"


def _build_certificate(p, params, variant, tol):
    kind = _default_variant(p)
    if variant is None:
        variant = kind
    ok = {
        "eq": kind == "eq",
        "ineq": kind == "ineq",
        "ts": kind == "ts",
        "rank": kind == "ineq",
    }
    if not ok[variant]:
        raise UsageError(
            f"variant {variant!r} does not apply to a problem with "
            f"{type(p.constraints).__name__}"
        )
    if variant == "eq":
        return build_certificate_eq(p, params)
    if variant in ("ineq", "ts"):
        return build_certificate_ineq(p, params)
    eq = solve_equilibrium(p, params, tol=min(tol, 1e-9))
    z0 = State(x=np.zeros(p.dim_n), lam=np.zeros(p.dim_m))
    return build_certificate_rank(p, params, z0, eq.state)


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path("saddleflow-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_simulate(args) -> int:
    p, _ = _load_problem(args)
    params = DynamicsParams(eta=args.eta, rho=args.rho)
    cert = _build_certificate(p, params, args.variant, args.tol)
    eq = solve_equilibrium(p, params, tol=min(args.tol, 1e-9))
    if args.delta is not None:
        delta, certified = args.delta, "user-supplied"
    else:
        delta, certified = pick_step_size(p, params, cert, args.horizon)
    field = vector_field(p, params)
    z0 = np.zeros(p.dim_n + p.dim_m)
    steps = int(np.ceil(args.horizon / delta))
    traj = simulate(field, z0, delta, args.horizon, cert=cert, eq=eq.state,
                    record_every=max(1, steps // 200_000))
    U = traj.zs - eq.state.stacked()[None, :]
    dist_x = np.linalg.norm(U[:, : p.dim_n], axis=1)
    dist_lam = np.linalg.norm(U[:, p.dim_n:], axis=1)
    out = _out_dir(args)
    fileio.write_csv(out / "trajectory.csv", ["t", "dist_x", "dist_lambda", "V"],
                     zip(traj.times, dist_x, dist_lam, traj.v_values))
    fileio.write_metadata(out / "metadata.txt", {
        "command": "simulate",
        "problem": args.problem,
        "seed": args.seed,
        "eta": params.eta,
        "rho": params.rho,
        "delta": float(delta),
        "delta_certified": str(certified),
        "horizon": float(args.horizon),
        "c": cert.c,
        "tau": cert.tau,
        "variant": cert.variant.value,
    })
    rate = fit_decay_rate(traj.times, traj.distances)
    print(f"simulated {len(traj)} recorded steps to t={traj.times[-1]:g}")
    print(f"final distance {traj.distances[-1]:.6g}, measured rate {rate:.6g}, "
          f"certified rate {cert.tau / 2:.6g}")
    print(f"wrote {out / 'trajectory.csv'}")
    return 0


def _cmd_certify(args) -> int:
    p, _ = _load_problem(args)
    params = DynamicsParams(eta=args.eta, rho=args.rho)
    cert = _build_certificate(p, params, args.variant, args.tol)
    report = lmi_sweep(cert, p, params, b_samples=100, seed=args.seed)
    print(f"variant {cert.variant.value}: c = {cert.c:.6g}, tau = {cert.tau:.6g}")
    print(f"LMI sweep: {report.samples_checked} samples, "
          f"min margin {report.min_margin:.6g}, "
          f"{'pass' if report.passed else 'FAIL'}")
    if args.out:
        out = _out_dir(args)
        fileio.write_csv(out / "lmi_report.csv",
                         ["variant", "samples_checked", "min_margin", "passed"],
                         [(cert.variant.value, float(report.samples_checked),
                           report.min_margin, float(report.passed))])
        fileio.write_metadata(out / "metadata.txt", {
            "command": "certify",
            "problem": args.problem,
            "seed": args.seed,
            "eta": params.eta,
            "rho": params.rho,
            "c": cert.c,
            "tau": cert.tau,
            "variant": cert.variant.value,
        })
    return 0 if report.passed else 1


def _cmd_sweep_eta(args) -> int:
    p, kind = _load_problem(args)
    if kind is None:
        raise UsageError("sweep-eta needs a generator problem (eq-qp or logistic)")
    grid = _parse_grid(args.eta_grid)
    spec = ExperimentSpec(
        kind=kind,
        seed=args.seed,
        n=p.dim_n,
        m=p.dim_m,
        params=DynamicsParams(eta=args.eta, rho=args.rho),
        eta_grid=grid,
        delta=args.delta,
        horizon=args.horizon,
        n_data=args.n_data,
        reg=args.reg,
    )
    paths = run_experiment(spec, _out_dir(args))
    print(f"swept {grid.size} eta values; wrote {len(paths)} artifacts:")
    for path in paths:
        print(f"  {path}")
    return 0


def _cmd_spectrum(args) -> int:
    p, _ = _load_problem(args)
    if not (isinstance(p.objective, QuadraticObjective)
            and isinstance(p.constraints, EqualityConstraints)):
        raise UsageError("spectrum needs a quadratic objective with equality "
                         "constraints (the flow must be linear)")
    grid = _parse_grid(args.eta_grid)
    table = eta_sweep(p.objective.W, p.constraints.A, grid)
    out = _out_dir(args)
    fileio.write_csv(out / "spectrum.csv",
                     ["eta", "spectral_rate", "certified_rate"], table.rows())
    fileio.write_metadata(out / "metadata.txt", {
        "command": "spectrum",
        "problem": args.problem,
        "seed": args.seed,
        "grid": args.eta_grid,
    })
    print(f"rates span [{table.rates.min():.6g}, {table.rates.max():.6g}] "
          f"over {grid.size} grid points")
    print(f"wrote {out / 'spectrum.csv'}")
    return 0


def _cmd_kkt_check(args) -> int:
    p, _ = _load_problem(args)
    params = DynamicsParams(eta=args.eta, rho=args.rho)
    eq = solve_equilibrium(p, params, tol=min(args.tol, 1e-9))
    res = eq.residual
    print(f"stationarity     {res.stationarity:.3e}")
    print(f"primal           {res.primal:.3e}")
    print(f"dual             {res.dual:.3e}")
    print(f"complementarity  {res.complementarity:.3e}")
    print(f"active set       {list(eq.active_set)}")
    ok = res.total <= args.tol
    print(f"total {res.total:.3e} {'<=' if ok else '>'} tol {args.tol:g}")
    return 0 if ok else 1


def _cmd_gen(args) -> int:
    p, _ = _load_problem(args)
    out = _out_dir(args)
    path = fileio.save_problem(out / "problem.txt", p)
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "certify": _cmd_certify,
    "sweep-eta": _cmd_sweep_eta,
    "spectrum": _cmd_spectrum,
    "kkt-check": _cmd_kkt_check,
    "gen": _cmd_gen,
}


def run_cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        # argparse handles --help (code 0) and usage errors (code 2) itself
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SaddleflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
