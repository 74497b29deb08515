"""Explicit Euler integration with a contraction certificate.

For a nu-Lipschitz field contracting in the P-norm at rate tau/2, the
Euler map with step delta contracts by at least

    r = exp(-tau delta / 2) + kappa_P nu^2 delta^2 / 2

per step in the P-norm, where kappa_P is the condition number of P. Any
delta with r < 1 is admissible: the discrete iterates then inherit the
exponential decay of the flow. Only explicit Euler carries this
certificate; a classic fourth-order step is included purely as a
high-accuracy reference (no certificate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import AffineVectorField, State, StateDerivative
from .errors import DivergedError, NonFiniteFieldError
from .problem import ConstrainedProblem, DynamicsParams, EqualityConstraints

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class StepCertificate:
    delta: float
    nu: float
    kappa_P: float
    contraction: float

    @property
    def admissible(self) -> bool:
        return self.contraction < 1.0


@dataclass
class Trajectory:
    """Recorded Euler iterates on the stacked state z = (x, lam).

    zs has one row per recorded step; n is the primal dimension used to
    split rows back into State objects. v_values and distances are filled
    when simulate was given a certificate / equilibrium to measure against.
    """

    times: np.ndarray
    zs: np.ndarray
    n: int
    v_values: Optional[np.ndarray] = None
    distances: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.times) != len(self.zs):
            raise ValueError("times and states must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def states(self):
        return [State(x=row[: self.n], lam=row[self.n:]) for row in self.zs]

    def __len__(self):
        return len(self.times)


def _as_stacked(field, z0):
    """Normalize (field, z0) to stacked-vector convention.

    State inputs paired with a plain callable are treated as State-level
    fields (returning StateDerivative); field objects from
    dynamics.vector_field carry their own split and are used as is.
    """
    if isinstance(z0, State):
        n = z0.x.shape[0]
        z = z0.stacked()
        if hasattr(field, "n"):
            return field, z, n

        def stacked(zv, _f=field, _n=n):
            d = _f(State(x=zv[:_n], lam=zv[_n:]))
            return d.stacked() if isinstance(d, StateDerivative) else np.asarray(d, float)

        return stacked, z, n
    z = np.atleast_1d(np.asarray(z0, dtype=float))
    n = getattr(field, "n", z.shape[0])
    return field, z, n


def euler_step(field, s, delta: float):
    """One explicit Euler step s + delta * field(s).

    Accepts either a State (field returns a StateDerivative) or a plain
    vector (field returns a vector). Raises NonFiniteField when the field
    evaluates to NaN or infinity.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if isinstance(s, State):
        d = field(s)
        dz = d.stacked() if isinstance(d, StateDerivative) else np.asarray(d, float)
        if not np.all(np.isfinite(dz)):
            raise NonFiniteFieldError("field returned non-finite values")
        n = s.x.shape[0]
        return State(x=s.x + delta * dz[:n], lam=s.lam + delta * dz[n:])
    z = np.atleast_1d(np.asarray(s, dtype=float))
    dz = np.asarray(field(z), dtype=float)
    if not np.all(np.isfinite(dz)):
        raise NonFiniteFieldError("field returned non-finite values")
    return z + delta * dz


def rk4_step(field, s, delta: float):
    """Classic fourth-order step; reference accuracy only, no certificate."""
    if isinstance(s, State):
        n = s.x.shape[0]

        def f(zv):
            d = field(State(x=zv[:n], lam=zv[n:]))
            return d.stacked() if isinstance(d, StateDerivative) else np.asarray(d, float)

        z = s.stacked()
        out = _rk4(f, z, delta)
        return State(x=out[:n], lam=out[n:])
    return _rk4(field, np.atleast_1d(np.asarray(s, dtype=float)), delta)


def _rk4(f, z, delta):
    k1 = np.asarray(f(z), dtype=float)
    k2 = np.asarray(f(z + 0.5 * delta * k1), dtype=float)
    k3 = np.asarray(f(z + 0.5 * delta * k2), dtype=float)
    k4 = np.asarray(f(z + delta * k3), dtype=float)
    if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(k4))):
        raise NonFiniteFieldError("field returned non-finite values")
    return z + (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate(field, z0, delta: float, horizon: float,
             cert=None, eq=None, record_every: int = 1) -> Trajectory:
    """Integrate for ceil(horizon/delta) Euler steps, recording iterates.

    cert (a LyapunovCertificate) and eq (the equilibrium State) are
    optional: with eq the distances ||z - z*|| are recorded, with both the
    Lyapunov values as well. record_every thins the recording for long
    runs; step 0 and the final step are always kept.

    Raises Diverged as soon as the state norm passes 1e12 (inadmissible
    step sizes blow up geometrically, so this trips fast).
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if horizon < delta:
        raise ValueError(f"horizon must be at least delta, got {horizon} < {delta}")
    if cert is not None and eq is None:
        raise ValueError("recording Lyapunov values requires the equilibrium")
    f, z, n = _as_stacked(field, z0)
    steps = int(math.ceil(horizon / delta - 1e-9))
    stride = max(int(record_every), 1)

    rec_idx = list(range(0, steps + 1, stride))
    if rec_idx[-1] != steps:
        rec_idx.append(steps)
    zs = np.empty((len(rec_idx), z.shape[0]))
    zs[0] = z
    pos = 1
    next_rec = rec_idx[1] if len(rec_idx) > 1 else None

    limit2 = DIVERGENCE_NORM * DIVERGENCE_NORM

    if isinstance(field, AffineVectorField):
        M = np.eye(z.shape[0]) + delta * field.G
        d = delta * field.g
        for k in range(1, steps + 1):
            z = M @ z + d
            nsq = z @ z
            if not (nsq <= limit2):
                raise DivergedError(
                    f"state norm passed {DIVERGENCE_NORM:g} at step {k}"
                )
            if k == next_rec:
                zs[pos] = z
                pos += 1
                next_rec = rec_idx[pos] if pos < len(rec_idx) else None
    elif hasattr(field, "euler_update"):
        for k in range(1, steps + 1):
            z = field.euler_update(z, delta)
            nsq = z @ z
            if not (nsq <= limit2):
                raise DivergedError(
                    f"state norm passed {DIVERGENCE_NORM:g} at step {k}"
                )
            if k == next_rec:
                zs[pos] = z
                pos += 1
                next_rec = rec_idx[pos] if pos < len(rec_idx) else None
    else:
        for k in range(1, steps + 1):
            z = z + delta * np.asarray(f(z), dtype=float)
            nsq = z @ z
            if not (nsq <= limit2):
                raise DivergedError(
                    f"state norm passed {DIVERGENCE_NORM:g} at step {k}"
                )
            if k == next_rec:
                zs[pos] = z
                pos += 1
                next_rec = rec_idx[pos] if pos < len(rec_idx) else None

    times = np.asarray(rec_idx, dtype=float) * delta
    v_values = None
    distances = None
    if eq is not None:
        z_star = eq.stacked() if isinstance(eq, State) else np.asarray(eq, dtype=float)
        U = zs - z_star[None, :]
        distances = np.linalg.norm(U, axis=1)
        if cert is not None:
            v_values = np.einsum("ij,ij->i", U @ cert.P, U)
    return Trajectory(times=times, zs=zs, n=n, v_values=v_values,
                      distances=distances)


def lipschitz_bound(p: ConstrainedProblem, params: DynamicsParams) -> float:
    """Conservative Lipschitz constant of the stacked vector field.

    Triangle-inequality block bound: each term is the operator norm of one
    block of the field's (generalized) Jacobian, summed. Equality flow:
    ell from the gradient, sqrt(kappa_2) from each constraint coupling.
    Augmented flow adds rho kappa_2 for the penalty curvature and eta/rho
    for the multiplier leak term.
    """
    ell = p.objective.ell
    k2 = p.bounds.kappa2
    eta, rho = params.eta, params.rho
    if isinstance(p.constraints, EqualityConstraints):
        return ell + (1.0 + eta) * math.sqrt(k2)
    return ell + rho * k2 + (1.0 + eta) * math.sqrt(k2) + eta / rho


def step_size_admissible(delta: float, tau: float, nu: float,
                         kappa_P: float) -> StepCertificate:
    """Contraction factor of one Euler step; admissible iff below one."""
    if min(delta, tau, nu, kappa_P) <= 0:
        raise ValueError("delta, tau, nu and kappa_P must all be positive")
    r = math.exp(-tau * delta / 2.0) + kappa_P * nu * nu * delta * delta / 2.0
    return StepCertificate(delta=float(delta), nu=float(nu),
                           kappa_P=float(kappa_P), contraction=float(r))


def choose_step_size(tau: float, nu: float, kappa_P: float,
                     eta: float = 1.0, rho: float = 1.0,
                     r_target: float = 0.999, max_exp: int = 200) -> float:
    """Deterministic step-size choice on the dyadic grid {2^-k}.

    Returns the largest dyadic delta with contraction r <= r_target and
    delta eta / rho <= 1 (the latter keeps the discrete multiplier update
    a convex combination). Conservative certificates can make any fixed
    target unreachable (the best attainable r is 1 - tau^2/(8 kappa_P nu^2),
    arbitrarily close to one); in that case the admissible dyadic delta
    with the smallest r is returned instead.
    """
    best = None
    best_r = np.inf
    for k in range(max_exp + 1):
        delta = 2.0 ** (-k)
        if delta * eta / rho > 1.0:
            continue
        r = step_size_admissible(delta, tau, nu, kappa_P).contraction
        if r <= r_target:
            return delta
        if r < 1.0 and r < best_r:
            best, best_r = delta, r
    if best is None:
        raise ValueError(
            "no admissible dyadic step size found; the certificate constants "
            "leave no contracting Euler step"
        )
    return best
