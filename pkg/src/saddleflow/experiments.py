"""Seeded problem generators and the experiment driver.

Both generators split the master seed into one named substream per random
matrix (PCG64 via numpy's SeedSequence.spawn, children in declaration
order), so individual matrices can be reproduced without replaying the
whole generation. Bit-level determinism is promised within this
implementation only; the generator structure is what ports.

run_experiment sweeps the dual gain over a grid, certifying and simulating
at each point, and leaves behind diff-friendly CSV artifacts plus a small
plotting script.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import fileio
from .certificates import build_certificate_eq, build_certificate_ineq, condition_number
from .dynamics import vector_field
from .equilibrium import solve_equilibrium
from .errors import RankDeficientError
from .integrator import choose_step_size, lipschitz_bound, simulate
from .parallel import parallel_map
from .problem import (
    ConstrainedProblem,
    DynamicsParams,
    EqualityConstraints,
    InequalityConstraints,
    LogisticObjective,
    QuadraticObjective,
    spectral_bounds,
    validate_problem,
)
from .spectral import lti_matrix

KIND_EQUALITY_QP = "equality-qp"
KIND_LOGISTIC_INEQ = "logistic-ineq"

# Above this many Euler steps the certified step size is abandoned for the
# stability heuristic; conservative certificates can demand absurd budgets.
MAX_CERTIFIED_STEPS = 4_000_000

# Trajectory CSVs are thinned to at most this many rows.
MAX_RECORDED_ROWS = 200_000


def _full_rank_matrix(rng, m, n, attempts=100):
    for _ in range(attempts):
        A = rng.standard_normal((m, n))
        eigs = np.linalg.eigvalsh(A @ A.T)
        if eigs[0] > 1e-10 * eigs[-1]:
            return A
    raise RankDeficientError(
        f"no full-row-rank {m}x{n} draw in {attempts} attempts"
    )


def gen_equality_qp(seed: int, n: int = 5, m: int = 2) -> ConstrainedProblem:
    """Random strongly convex QP with equality constraints.

    f(x) = 1/2 x^T W x with W = 10 I + W0 W0^T (W0 standard normal), so
    mu >= 10 for every seed; A and b standard normal, A redrawn until full
    row rank. Substreams: W0, A, b.
    """
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    ss_w, ss_a, ss_b = np.random.SeedSequence(seed).spawn(3)
    W0 = np.random.default_rng(ss_w).standard_normal((n, n))
    W = 10.0 * np.eye(n) + W0 @ W0.T
    A = _full_rank_matrix(np.random.default_rng(ss_a), m, n)
    b = np.random.default_rng(ss_b).standard_normal(m)
    return ConstrainedProblem(
        objective=QuadraticObjective(W),
        constraints=EqualityConstraints(A=A, b=b),
        bounds=spectral_bounds(A),
    )


def gen_logistic_ineq(seed: int, n: int = 50, m: int = 40,
                      n_data: int = 100, reg: float = 0.1) -> ConstrainedProblem:
    """Ridge-regularized logistic regression under random linear inequalities.

    Data rows and constraint data are standard normal, labels uniform in
    {-1, +1}; plain logistic loss is not strongly convex, so the ridge term
    (implementation default reg = 0.1, n_data = 100) supplies mu = reg.
    Substreams: D, labels, A, b.
    """
    if not (1 <= m <= n):
        raise ValueError(f"need 1 <= m <= n, got n={n}, m={m}")
    if reg <= 0:
        raise ValueError(f"reg must be positive, got {reg}")
    ss_d, ss_y, ss_a, ss_b = np.random.SeedSequence(seed).spawn(4)
    D = np.random.default_rng(ss_d).standard_normal((n_data, n))
    y = np.random.default_rng(ss_y).integers(0, 2, size=n_data) * 2.0 - 1.0
    A = _full_rank_matrix(np.random.default_rng(ss_a), m, n)
    b = np.random.default_rng(ss_b).standard_normal(m)
    return ConstrainedProblem(
        objective=LogisticObjective(D, y, reg),
        constraints=InequalityConstraints(A=A, b=b),
        bounds=spectral_bounds(A),
    )


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment run."""

    kind: str
    seed: int
    n: int
    m: int
    params: DynamicsParams
    eta_grid: Optional[np.ndarray] = None
    delta: Optional[float] = None
    horizon: float = 5.0
    n_data: int = 100
    reg: float = 0.1

    def __post_init__(self):
        if self.kind not in (KIND_EQUALITY_QP, KIND_LOGISTIC_INEQ):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be at least 1")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive when given")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.eta_grid is not None:
            grid = np.atleast_1d(np.asarray(self.eta_grid, dtype=float))
            if grid.size == 0 or np.any(grid <= 0):
                raise ValueError("eta grid must be nonempty and positive")
            object.__setattr__(self, "eta_grid", grid)


def build_problem(spec: ExperimentSpec) -> ConstrainedProblem:
    if spec.kind == KIND_EQUALITY_QP:
        return gen_equality_qp(spec.seed, spec.n, spec.m)
    return gen_logistic_ineq(spec.seed, spec.n, spec.m, spec.n_data, spec.reg)


def fit_decay_rate(times, dists) -> float:
    """Least-squares slope of log distance over the final half, negated.

    The first half of the trajectory is discarded as transient. Returns
    NaN when fewer than two usable points remain.
    """
    times = np.asarray(times, dtype=float)
    dists = np.maximum(np.asarray(dists, dtype=float), 1e-300)
    half = len(times) // 2
    t = times[half:]
    d = np.log(dists[half:])
    if len(t) < 2 or t[-1] == t[0]:
        return float("nan")
    slope = np.polyfit(t, d, 1)[0]
    return float(-slope)


def pick_step_size(p: ConstrainedProblem, params: DynamicsParams, cert,
                   horizon: float):
    """Certified step when affordable, stability heuristic otherwise.

    Returns (delta, certified_flag). The certified dyadic step is kept
    only if the run fits the step budget; conservative certificates (tiny
    tau against a large Lipschitz bound) otherwise force deltas that could
    never finish, and the heuristic min(1/(2 nu), rho/eta) keeps Euler
    stable on these flows while preserving the exact multiplier
    nonnegativity cap delta eta <= rho.
    """
    nu = lipschitz_bound(p, params)
    kappa_p = condition_number(cert.P)
    heuristic = min(0.5 / nu, params.rho / params.eta)
    try:
        delta = choose_step_size(cert.tau, nu, kappa_p,
                                 eta=params.eta, rho=params.rho)
    except ValueError:
        return heuristic, False
    if horizon > 0 and horizon / delta > MAX_CERTIFIED_STEPS:
        return heuristic, False
    return delta, True


def _plot_script() -> str:
    return """\
# Renders the CSV artifacts written next to this script.
import glob
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))

summary = np.genfromtxt(os.path.join(here, "summary.csv"),
                        delimiter=",", names=True)
summary = np.atleast_1d(summary)
fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 8))
top.loglog(summary["eta"], summary["measured_rate"], "o-", label="measured")
top.loglog(summary["eta"], summary["theoretical_rate"], "s--", label="certified")
if not np.all(np.isnan(summary["spectral_rate"])):
    top.loglog(summary["eta"], summary["spectral_rate"], "^:", label="spectral")
top.set_xlabel("eta")
top.set_ylabel("decay rate")
top.legend()

for path in sorted(glob.glob(os.path.join(here, "trajectory_eta*.csv"))):
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    if data.size < 2:
        continue
    dist = np.hypot(data["dist_x"], data["dist_lambda"])
    label = os.path.basename(path)[len("trajectory_"):-len(".csv")]
    bottom.semilogy(data["t"], dist, label=label)
bottom.set_xlabel("t")
bottom.set_ylabel("distance to equilibrium")
bottom.legend()

fig.tight_layout()
fig.savefig(os.path.join(here, "rates.png"), dpi=150)
print("wrote", os.path.join(here, "rates.png"))
"""


def _run_one_eta(p, spec, eq, eta):
    params = DynamicsParams(eta=float(eta), rho=spec.params.rho)
    if isinstance(p.constraints, EqualityConstraints):
        cert = build_certificate_eq(p, params)
    else:
        cert = build_certificate_ineq(p, params)
    if spec.delta is not None:
        delta, certified = float(spec.delta), None
    else:
        delta, certified = pick_step_size(p, params, cert, spec.horizon)

    if spec.horizon > 0:
        steps = math.ceil(spec.horizon / delta)
        stride = max(1, math.ceil(steps / MAX_RECORDED_ROWS))
        field = vector_field(p, params)
        z0 = np.zeros(p.dim_n + p.dim_m)
        traj = simulate(field, z0, delta, spec.horizon, cert=cert,
                        eq=eq.state, record_every=stride)
        z_star = eq.state.stacked()
        U = traj.zs - z_star[None, :]
        dist_x = np.linalg.norm(U[:, : p.dim_n], axis=1)
        dist_lam = np.linalg.norm(U[:, p.dim_n:], axis=1)
        rows = list(zip(traj.times, dist_x, dist_lam, traj.v_values))
        measured = fit_decay_rate(traj.times, traj.distances)
    else:
        rows = []
        measured = float("nan")

    if isinstance(p.objective, QuadraticObjective) and isinstance(
        p.constraints, EqualityConstraints
    ):
        spectral = lti_matrix(p.objective.W, p.constraints.A, params.eta).rate
    else:
        spectral = float("nan")
    return {
        "eta": float(eta),
        "rho": params.rho,
        "delta": delta,
        "certified": certified,
        "cert": cert,
        "rows": rows,
        "measured": measured,
        "spectral": spectral,
    }


def run_experiment(spec: ExperimentSpec, out_dir) -> list:
    """Run one experiment sweep and write its artifacts into out_dir.

    Per eta: a trajectory CSV (t, dist_x, dist_lambda, V) starting from
    the origin. Overall: summary.csv with measured, certified and (when
    the flow is linear) spectral rates, a metadata sidecar, and plot.py.
    Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = build_problem(spec)
    report = validate_problem(p, samples=50, seed=spec.seed)
    eq = solve_equilibrium(p, spec.params, tol=1e-9)
    etas = spec.eta_grid if spec.eta_grid is not None else np.array([spec.params.eta])

    results = parallel_map(lambda e: _run_one_eta(p, spec, eq, e), etas)

    paths = []
    summary_rows = []
    meta = {
        "kind": spec.kind,
        "seed": spec.seed,
        "n": spec.n,
        "m": spec.m,
        "rho": float(spec.params.rho),
        "horizon": float(spec.horizon),
        "start": "origin (x = 0, lambda = 0)",
        "mu": p.objective.mu,
        "ell": p.objective.ell,
        "kappa1": p.bounds.kappa1,
        "kappa2": p.bounds.kappa2,
        "validated": report.passed,
    }
    if spec.kind == KIND_LOGISTIC_INEQ:
        meta["n_data"] = spec.n_data
        meta["reg"] = float(spec.reg)
        meta["n_data_provenance"] = "implementation default, not part of the benchmark definition"
        meta["reg_provenance"] = "implementation default, not part of the benchmark definition"
    for res in results:
        tag = f"{res['eta']:g}"
        traj_path = fileio.write_csv(
            out / f"trajectory_eta{tag}.csv",
            ["t", "dist_x", "dist_lambda", "V"],
            res["rows"],
        )
        paths.append(traj_path)
        summary_rows.append((res["eta"], res["rho"], res["measured"],
                             res["cert"].tau / 2.0, res["spectral"]))
        meta[f"delta_eta{tag}"] = res["delta"]
        meta[f"delta_certified_eta{tag}"] = (
            "user-supplied" if res["certified"] is None else str(res["certified"])
        )
        meta[f"c_eta{tag}"] = res["cert"].c
        meta[f"tau_eta{tag}"] = res["cert"].tau

    paths.append(fileio.write_csv(
        out / "summary.csv",
        ["eta", "rho", "measured_rate", "theoretical_rate", "spectral_rate"],
        summary_rows,
    ))
    paths.append(fileio.write_metadata(out / "metadata.txt", meta))
    plot_path = out / "plot.py"
    plot_path.write_text(_plot_script(), encoding="utf-8")
    paths.append(plot_path)
    return paths
