"""Equilibria of the flows and their KKT characterization.

The unique equilibrium of each flow is the primal-dual optimum of the
underlying problem: stationarity grad f(x) + A^T lam = 0 plus feasibility
and, for inequalities, sign and complementary slackness conditions. For
the two-sided band the single multiplier vector splits by sign into upper
and lower multipliers, lam_bar = max(lam, 0) and lam_under = -min(lam, 0),
which cannot both be nonzero for the same row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import ACTIVE_TOL
from .dynamics import State, vector_field
from .errors import DimensionMismatchError, DivergedError, MaxIterationsError
from .integrator import DIVERGENCE_NORM, lipschitz_bound
from .problem import (
    ConstrainedProblem,
    DynamicsParams,
    EqualityConstraints,
    InequalityConstraints,
    QuadraticObjective,
    TwoSidedConstraints,
)


@dataclass(frozen=True)
class KktResidual:
    stationarity: float
    primal: float
    dual: float
    complementarity: float

    @property
    def total(self) -> float:
        return max(self.stationarity, self.primal, self.dual, self.complementarity)


@dataclass(frozen=True)
class Equilibrium:
    x_star: np.ndarray
    lambda_star: np.ndarray
    residual: KktResidual
    active_set: tuple

    @property
    def state(self) -> State:
        return State(x=self.x_star, lam=self.lambda_star)


def kkt_residual(p: ConstrainedProblem, s: State) -> KktResidual:
    """Componentwise optimality residual of (x, lam) for p's KKT system."""
    A = p.constraints.A
    g = p.objective.grad(s.x)
    stationarity = float(np.linalg.norm(g + A.T @ s.lam))
    if isinstance(p.constraints, EqualityConstraints):
        primal = float(np.linalg.norm(A @ s.x - p.constraints.b))
        return KktResidual(stationarity, primal, 0.0, 0.0)
    if isinstance(p.constraints, InequalityConstraints):
        r = A @ s.x - p.constraints.b
        primal = float(np.linalg.norm(np.maximum(r, 0.0)))
        dual = float(np.linalg.norm(np.minimum(s.lam, 0.0)))
        comp = float(np.max(np.abs(s.lam * r))) if r.size else 0.0
        return KktResidual(stationarity, primal, dual, comp)
    ax = A @ s.x
    lo, hi = p.constraints.b_lo, p.constraints.b_hi
    over = np.maximum(ax - hi, 0.0)
    under = np.maximum(lo - ax, 0.0)
    primal = float(np.sqrt(np.sum(over**2) + np.sum(under**2)))
    lam_bar = np.maximum(s.lam, 0.0)
    lam_under = -np.minimum(s.lam, 0.0)
    comp = float(np.max(np.maximum(lam_bar * np.abs(ax - hi),
                                   lam_under * np.abs(ax - lo))))
    return KktResidual(stationarity, primal, 0.0, comp)


def _fd_jacobian(grad, x):
    """Forward-difference Jacobian of the gradient (exact for quadratics)."""
    n = x.shape[0]
    g0 = grad(x)
    J = np.empty((n, n))
    for i in range(n):
        h = 1e-7 * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        J[:, i] = (grad(xp) - g0) / h
    return 0.5 * (J + J.T)


def _active_set(p: ConstrainedProblem, x: np.ndarray) -> tuple:
    A = p.constraints.A
    if isinstance(p.constraints, EqualityConstraints):
        return tuple(range(p.dim_m))
    ax = A @ x
    if isinstance(p.constraints, InequalityConstraints):
        mask = np.abs(ax - p.constraints.b) <= ACTIVE_TOL
    else:
        mask = (np.abs(ax - p.constraints.b_lo) <= ACTIVE_TOL) | (
            np.abs(ax - p.constraints.b_hi) <= ACTIVE_TOL
        )
    return tuple(int(j) for j in np.flatnonzero(mask))


def _solve_equality_newton(p, tol, x0=None):
    A, b = p.constraints.A, p.constraints.b
    n, m = p.dim_n, p.dim_m
    if isinstance(p.objective, QuadraticObjective):
        K = np.block([[p.objective.W, A.T], [A, np.zeros((m, m))]])
        sol = np.linalg.solve(K, np.concatenate([-p.objective.q, b]))
        return sol[:n], sol[n:]
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    lam = np.zeros(m)
    for _ in range(100):
        r1 = p.objective.grad(x) + A.T @ lam
        r2 = A @ x - b
        if max(np.linalg.norm(r1), np.linalg.norm(r2)) <= tol:
            return x, lam
        K = np.block([[_fd_jacobian(p.objective.grad, x), A.T],
                      [A, np.zeros((m, m))]])
        step = np.linalg.solve(K, -np.concatenate([r1, r2]))
        x = x + step[:n]
        lam = lam + step[n:]
        if not np.all(np.isfinite(x)):
            break
    return None


def _integrate_to_equilibrium(p, params, tol, z0, max_steps):
    """Drive the flow until the KKT residual drops below tol.

    The step size is a stability heuristic, min(1/(2 nu), rho/eta): the
    certified contraction step can be impractically small when the
    certificate constants are conservative, while the flow itself
    converges at its true (much faster) rate. The rho/eta cap keeps the
    multiplier update a convex combination, so inequality multipliers
    stay nonnegative exactly.
    """
    field = vector_field(p, params)
    nu = lipschitz_bound(p, params)
    delta = min(0.5 / nu, params.rho / params.eta)
    n = p.dim_n
    z = z0.copy()
    limit2 = DIVERGENCE_NORM * DIVERGENCE_NORM
    check_every = 100
    stepper = getattr(field, "euler_update", None)
    steps = 0
    while steps < max_steps:
        for _ in range(check_every):
            if stepper is not None:
                z = stepper(z, delta)
            else:
                z = z + delta * field(z)
        steps += check_every
        nsq = z @ z
        if not (nsq <= limit2):
            raise DivergedError("equilibrium integration diverged")
        s = State(x=z[:n], lam=z[n:])
        if kkt_residual(p, s).total <= tol:
            return z[:n], z[n:]
    raise MaxIterationsError(
        f"KKT residual did not reach {tol:g} within {max_steps} steps"
    )


def solve_equilibrium(p: ConstrainedProblem, params: DynamicsParams = None,
                      tol: float = 1e-9, z0: State = None,
                      max_steps: int = 10_000_000) -> Equilibrium:
    """Compute the unique primal-dual equilibrium of p's flow.

    Equality constraints: Newton on the stacked KKT residual, which is a
    single exact linear solve for quadratic objectives; integration of the
    flow is the fallback if Newton stalls. Inequality and two-sided
    constraints: integrate the augmented flow from z0 (default the origin)
    until the total KKT residual is at most tol.
    """
    if params is None:
        params = DynamicsParams()
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    n, m = p.dim_n, p.dim_m
    if z0 is None:
        start = np.zeros(n + m)
    elif isinstance(z0, State):
        start = z0.stacked()
    else:
        start = np.asarray(z0, dtype=float)
        if start.shape != (n + m,):
            raise DimensionMismatchError(
                f"z0 must have length {n + m}, got shape {start.shape}"
            )
    if isinstance(p.constraints, EqualityConstraints):
        out = _solve_equality_newton(p, tol, x0=start[:n] if z0 is not None else None)
        if out is None:
            out = _integrate_to_equilibrium(p, params, tol, start, max_steps)
        x, lam = out
    else:
        x, lam = _integrate_to_equilibrium(p, params, tol, start, max_steps)
    s = State(x=x, lam=lam)
    res = kkt_residual(p, s)
    if res.total > tol:
        raise MaxIterationsError(
            f"equilibrium residual {res.total:g} exceeds tolerance {tol:g}"
        )
    return Equilibrium(x_star=s.x, lambda_star=s.lam, residual=res,
                       active_set=_active_set(p, s.x))
