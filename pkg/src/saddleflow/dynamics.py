"""Continuous-time primal-dual vector fields.

Plain equality flow:

    dx/dt      = -grad f(x) - A^T lam
    dlam/dt    = eta (A x - b)

Augmented flow for A x <= b, driven by the effective multiplier
m_j = max(rho (a_j x - b_j) + lam_j, 0):

    dx/dt      = -grad f(x) - sum_j m_j a_j
    dlam_j/dt  = eta (m_j - lam_j) / rho

The two-sided band b_lo <= A x <= b_hi replaces max(., 0) with the soft
threshold S(y) = max(min(y - rho b_lo, 0), y - rho b_hi) applied to
y_j = rho a_j x + lam_j. No projections anywhere: multipliers stay
nonnegative (inequality case) because dlam_j >= 0 whenever lam_j = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidBandError
from .problem import (
    ConstrainedProblem,
    DynamicsParams,
    EqualityConstraints,
    InequalityConstraints,
    QuadraticObjective,
    TwoSidedConstraints,
    _readonly,
)

# Relative scale below which a secant denominator counts as degenerate.
GAMMA_DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class State:
    """Primal-dual point (x, lam)."""

    x: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        x = _readonly(np.atleast_1d(self.x))
        lam = _readonly(np.atleast_1d(self.lam))
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "lam", lam)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam])

    @classmethod
    def from_stacked(cls, z, n: int) -> "State":
        z = np.asarray(z, dtype=float)
        return cls(x=z[:n], lam=z[n:])


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative (dx, dlam) of a primal-dual point."""

    dx: np.ndarray
    dlam: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.dx, self.dlam])


def soft_threshold(y, lo, hi):
    """S(y) = max(min(y - lo, 0), y - hi), the two-sided shrinkage map.

    Zero on [lo, hi], slope one outside; lo < hi is required. Inputs
    broadcast, so scalar and vector bands both work.
    """
    y = np.asarray(y, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if not np.all(lo < hi):
        raise InvalidBandError(f"soft threshold needs lo < hi, got lo={lo}, hi={hi}")
    return np.maximum(np.minimum(y - lo, 0.0), y - hi)


def effective_multiplier(kind: str, ax, bounds, lam, rho: float):
    """Multiplier actually exerted by the penalty at constraint value ax.

    kind "inequality": max(rho (ax - b) + lam, 0) with bounds = b.
    kind "two-sided":  S(rho ax + lam) with band [rho b_lo, rho b_hi] and
    bounds = (b_lo, b_hi). Vectorized over constraints.
    """
    ax = np.asarray(ax, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if kind == "inequality":
        b = np.asarray(bounds, dtype=float)
        return np.maximum(rho * (ax - b) + lam, 0.0)
    if kind == "two-sided":
        lo, hi = bounds
        return soft_threshold(rho * ax + lam, rho * np.asarray(lo, dtype=float),
                              rho * np.asarray(hi, dtype=float))
    raise ValueError(f"unknown constraint kind {kind!r}")


def penalty_value(kind: str, ax, bounds, lam, rho: float):
    """Value of the smoothed constraint penalty at (ax, lam).

    The penalty is the partial maximization of the augmented Lagrangian
    term over the auxiliary slack; its gradient in ax is the effective
    multiplier and its gradient in lam is (m - lam) / rho.
    """
    ax = np.asarray(ax, dtype=float)
    lam = np.asarray(lam, dtype=float)
    dead = -lam * lam / (2.0 * rho)
    if kind == "inequality":
        b = np.asarray(bounds, dtype=float)
        r = ax - b
        active = rho * r + lam >= 0
        return np.where(active, r * lam + 0.5 * rho * r * r, dead)
    if kind == "two-sided":
        lo = np.asarray(bounds[0], dtype=float)
        hi = np.asarray(bounds[1], dtype=float)
        if not np.all(lo < hi):
            raise InvalidBandError(f"penalty needs b_lo < b_hi, got {lo}, {hi}")
        y = rho * ax + lam
        r_hi = ax - hi
        r_lo = ax - lo
        upper = r_hi * lam + 0.5 * rho * r_hi * r_hi
        lower = r_lo * lam + 0.5 * rho * r_lo * r_lo
        return np.where(y > rho * hi, upper, np.where(y < rho * lo, lower, dead))
    raise ValueError(f"unknown constraint kind {kind!r}")


def _check_state(p: ConstrainedProblem, s: State):
    if s.x.shape != (p.dim_n,) or s.lam.shape != (p.dim_m,):
        raise DimensionMismatchError(
            f"state has shapes x{s.x.shape}, lam{s.lam.shape}; problem wants "
            f"({p.dim_n},), ({p.dim_m},)"
        )


def pdgd_eq_field(p: ConstrainedProblem, params: DynamicsParams, s: State) -> StateDerivative:
    """Plain primal-dual flow for equality constraints A x = b."""
    if not isinstance(p.constraints, EqualityConstraints):
        raise ValueError("pdgd_eq_field requires equality constraints")
    _check_state(p, s)
    A, b = p.constraints.A, p.constraints.b
    dx = -p.objective.grad(s.x) - A.T @ s.lam
    dlam = params.eta * (A @ s.x - b)
    return StateDerivative(dx=dx, dlam=dlam)


def aug_pdgd_field(p: ConstrainedProblem, params: DynamicsParams, s: State) -> StateDerivative:
    """Augmented primal-dual flow for inequality constraints A x <= b."""
    if not isinstance(p.constraints, InequalityConstraints):
        raise ValueError("aug_pdgd_field requires inequality constraints")
    _check_state(p, s)
    A, b = p.constraints.A, p.constraints.b
    m = effective_multiplier("inequality", A @ s.x, b, s.lam, params.rho)
    dx = -p.objective.grad(s.x) - A.T @ m
    dlam = params.eta * (m - s.lam) / params.rho
    return StateDerivative(dx=dx, dlam=dlam)


def aug_pdgd_ts_field(p: ConstrainedProblem, params: DynamicsParams, s: State) -> StateDerivative:
    """Augmented primal-dual flow for a two-sided band b_lo <= A x <= b_hi."""
    if not isinstance(p.constraints, TwoSidedConstraints):
        raise ValueError("aug_pdgd_ts_field requires two-sided constraints")
    _check_state(p, s)
    A = p.constraints.A
    m = effective_multiplier(
        "two-sided", A @ s.x, (p.constraints.b_lo, p.constraints.b_hi), s.lam, params.rho
    )
    dx = -p.objective.grad(s.x) - A.T @ m
    dlam = params.eta * (m - s.lam) / params.rho
    return StateDerivative(dx=dx, dlam=dlam)


def gamma_coefficients(p: ConstrainedProblem, params: DynamicsParams, s: State,
                       eq: State) -> np.ndarray:
    """Secant slopes of the effective multiplier between s and a reference eq.

    For each constraint j the slope is

        gamma_j = (m_j(z) - m_j(z*)) / (rho a_j (x - x*) + (lam_j - lam_j*)),

    set to zero when the denominator is degenerate. Each gamma_j lies in
    [0, 1] because the multiplier map is monotone and 1-Lipschitz in its
    scalar argument. With these slopes the dual residual satisfies exactly

        dlam = eta Gamma A (x - x*) + (eta / rho) (Gamma - I)(lam - lam*)

    whenever eq is an equilibrium of the flow.
    """
    _check_state(p, s)
    _check_state(p, eq)
    A = p.constraints.A
    rho = params.rho
    if isinstance(p.constraints, InequalityConstraints):
        b = p.constraints.b
        m_s = effective_multiplier("inequality", A @ s.x, b, s.lam, rho)
        m_e = effective_multiplier("inequality", A @ eq.x, b, eq.lam, rho)
    elif isinstance(p.constraints, TwoSidedConstraints):
        band = (p.constraints.b_lo, p.constraints.b_hi)
        m_s = effective_multiplier("two-sided", A @ s.x, band, s.lam, rho)
        m_e = effective_multiplier("two-sided", A @ eq.x, band, eq.lam, rho)
    else:
        raise ValueError("gamma coefficients are defined for inequality and "
                         "two-sided constraints only")
    num = m_s - m_e
    den = rho * (A @ (s.x - eq.x)) + (s.lam - eq.lam)
    out = np.zeros(p.dim_m)
    ok = np.abs(den) >= GAMMA_DEGENERATE_TOL * (1.0 + np.abs(num))
    out[ok] = num[ok] / den[ok]
    return np.clip(out, 0.0, 1.0)


# ----------------------------------------------------------------------
# Stacked-vector fields for the integrator hot loop. Each object maps a
# concatenated z = (x, lam) to dz and, where it matters, knows how to take
# one explicit Euler step in a numerically careful arrangement.
# ----------------------------------------------------------------------


class AffineVectorField:
    """dz = G z + g. Used for quadratic objectives with equality constraints,
    where the whole flow is linear time-invariant."""

    def __init__(self, G, g, n: int):
        self.G = np.asarray(G, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.n = int(n)
        self.m = self.G.shape[0] - self.n

    def __call__(self, z):
        return self.G @ z + self.g


class _SmoothEqualityField:
    """Equality flow with a black-box gradient."""

    def __init__(self, p: ConstrainedProblem, params: DynamicsParams):
        self.grad = p.objective.grad
        self.A = p.constraints.A
        self.At = p.constraints.A.T.copy()
        self.eta_b = params.eta * p.constraints.b
        self.eta = params.eta
        self.n = p.dim_n
        self.m = p.dim_m

    def __call__(self, z):
        x = z[: self.n]
        lam = z[self.n:]
        return np.concatenate(
            [-self.grad(x) - self.At @ lam, self.eta * (self.A @ x) - self.eta_b]
        )


class _AugmentedField:
    """Inequality or two-sided augmented flow on stacked vectors.

    euler_update performs z + delta * field(z) with the dual block written
    as the convex combination (1 - a) lam + a m, a = delta eta / rho. The
    two forms agree algebraically; the combination keeps lam >= 0 exact in
    floating point for the inequality flow whenever a <= 1 and m >= 0.
    """

    def __init__(self, p: ConstrainedProblem, params: DynamicsParams):
        self.grad = p.objective.grad
        self.A = p.constraints.A
        self.At = p.constraints.A.T.copy()
        self.eta = params.eta
        self.rho = params.rho
        self.n = p.dim_n
        self.m = p.dim_m
        if isinstance(p.constraints, InequalityConstraints):
            self._b = p.constraints.b

            def mult(ax, lam):
                return np.maximum(self.rho * (ax - self._b) + lam, 0.0)

        else:
            self._lo = params.rho * p.constraints.b_lo
            self._hi = params.rho * p.constraints.b_hi

            def mult(ax, lam):
                y = self.rho * ax + lam
                return np.maximum(np.minimum(y - self._lo, 0.0), y - self._hi)

        self.multiplier = mult

    def __call__(self, z):
        x = z[: self.n]
        lam = z[self.n:]
        m = self.multiplier(self.A @ x, lam)
        return np.concatenate(
            [-self.grad(x) - self.At @ m, (self.eta / self.rho) * (m - lam)]
        )

    def euler_update(self, z, delta):
        x = z[: self.n]
        lam = z[self.n:]
        m = self.multiplier(self.A @ x, lam)
        a = delta * self.eta / self.rho
        x_next = x + delta * (-self.grad(x) - self.At @ m)
        if a <= 1.0:
            lam_next = (1.0 - a) * lam + a * m
        else:
            lam_next = lam + a * (m - lam)
        return np.concatenate([x_next, lam_next])


def vector_field(p: ConstrainedProblem, params: DynamicsParams):
    """Stacked-vector field for p, picking the cheapest faithful form.

    Quadratic equality problems come back as an AffineVectorField (one
    matrix-vector product per evaluation); everything else is a closure
    over the oracle gradient.
    """
    if isinstance(p.constraints, EqualityConstraints):
        if isinstance(p.objective, QuadraticObjective):
            n, m = p.dim_n, p.dim_m
            A, b = p.constraints.A, p.constraints.b
            G = np.zeros((n + m, n + m))
            G[:n, :n] = -p.objective.W
            G[:n, n:] = -A.T
            G[n:, :n] = params.eta * A
            g = np.concatenate([-p.objective.q, -params.eta * b])
            return AffineVectorField(G, g, n)
        return _SmoothEqualityField(p, params)
    return _AugmentedField(p, params)
