"""Explicit CFL-adaptive integration of u_t = nu*div(a(grad u) grad u) - g(u, grad u).

Forward Euler on the monotone spatial discretization. Explicitness keeps the
scheme monotone, which is what the positivity and comparison tests lean on;
the step size follows both the parabolic bound and the Hamiltonian wave-speed
bound and is truncated to land exactly on requested snapshot times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .ledger import EnergyLedger, NormTrace
from .problem import DomainMode, Field, ProblemSpec, support_fraction, validate_spec

__all__ = [
    "StepControl",
    "RunResult",
    "SolverAbort",
    "StabilityError",
    "stable_dt",
    "step",
    "run",
]

_TINY = 1e-30


class SolverAbort(RuntimeError):
    """Raised when the state leaves the finite range; carries the step index."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


class StabilityError(RuntimeError):
    """dt_min sits far above what the parabolic bound allows."""


@dataclass(frozen=True)
class StepControl:
    cfl_safety: float = 0.4
    dt_min: float = 1e-14
    dt_max: float = 0.1
    snapshot_times: tuple[float, ...] = ()

    def validate(self, horizon: float) -> list[str]:
        bad = []
        if not 0 < self.cfl_safety <= 1:
            bad.append("cfl_safety must lie in (0, 1]")
        if not 0 < self.dt_min <= self.dt_max:
            bad.append("need 0 < dt_min <= dt_max")
        ts = self.snapshot_times
        if any(b <= a for a, b in zip(ts, ts[1:])):
            bad.append("snapshot_times must be strictly increasing")
        if ts and ts[-1] > horizon * (1 + 1e-12):
            bad.append("snapshot_times must not exceed the horizon")
        if any(t < 0 for t in ts):
            bad.append("snapshot_times must be nonnegative")
        return bad


@dataclass
class RunResult:
    snapshots: list[Field]
    trace: NormTrace
    steps: int
    dt_history: np.ndarray
    support_flag: bool
    support_fraction_max: float
    spec: ProblemSpec


def stable_dt(
    u: Field,
    spec: ProblemSpec,
    control: StepControl,
    epsilon_p: float | None = None,
    grad2: np.ndarray | None = None,
) -> float:
    """CFL step: cfl * min(h^2/(2N Dmax), h/(q*gamma*Umax^lam*Gmax^(q-1) + tiny)).

    Dmax is the largest edge diffusivity times nu and Gmax the largest upwind
    gradient magnitude; the absorption prefactor gamma*Umax^lam enters the
    Hamiltonian wave speed so large-amplitude runs stay monotone. The result
    is clamped to [dt_min, dt_max].
    """
    h = u.grid.h
    ndim = u.grid.dim
    if epsilon_p is None:
        epsilon_p = ops.default_epsilon_p(spec.p, u.grid)

    dt_diff = math.inf
    if spec.nu > 0:
        d_max = spec.nu * ops.edge_diffusivity_max(u, spec.p, epsilon_p)
        if d_max > 0:
            dt_diff = h * h / (2.0 * ndim * d_max)

    if grad2 is None:
        grad2 = ops.upwind_gradient_squared(u)
    g_max = math.sqrt(float(np.max(grad2)))
    amp = spec.gamma
    if spec.lam > 0:
        amp *= float(np.max(np.abs(u.values))) ** spec.lam
    speed = spec.q * amp * g_max ** (spec.q - 1.0)
    dt_grad = h / (speed + _TINY)

    bound = min(dt_diff, dt_grad)
    if control.dt_min > 10.0 * dt_diff:
        raise StabilityError(
            f"dt_min={control.dt_min:g} exceeds 10x the parabolic bound {dt_diff:g}"
        )
    dt = control.cfl_safety * bound
    return min(max(dt, control.dt_min), control.dt_max)


def _rhs(
    u: Field,
    spec: ProblemSpec,
    epsilon_p: float,
    epsilon_u: float,
    grad_q: Field | None = None,
) -> np.ndarray:
    out = np.zeros_like(u.values)
    if spec.nu > 0:
        out += spec.nu * ops.p_laplacian(u, spec.p, epsilon_p).values
    if spec.gamma > 0:
        if grad_q is None:
            grad_q = ops.upwind_hamiltonian(u, spec.q)
        out -= ops.absorption(u, grad_q, spec.lam, spec.gamma, epsilon_u).values
    return out


def step(
    u: Field,
    spec: ProblemSpec,
    dt: float,
    workspace: ops.OperatorWorkspace | None = None,
) -> Field:
    """One forward Euler step; re-zeroes the Dirichlet ghosts."""
    ws = workspace or ops.OperatorWorkspace.for_problem(spec.p, u.grid)
    new = Field(
        u.values + dt * _rhs(u, spec, ws.epsilon_p, ws.epsilon_u),
        u.grid,
        u.time + dt,
    )
    new.zero_boundary()
    if not np.all(np.isfinite(new.values)):
        raise SolverAbort("state became NaN/Inf", step_index=0)
    return new


def run(
    u0: Field,
    spec: ProblemSpec,
    control: StepControl | None = None,
    ledger_orders: tuple[float, ...] = (1.0, 2.0),
    extra_norms: tuple[float, ...] = (),
    workspace: ops.OperatorWorkspace | None = None,
    support_threshold: float = 1e-8,
) -> RunResult:
    """Integrate to the horizon, recording a norm trace at every step and
    snapshots at the requested times. Deterministic for fixed inputs."""
    control = control or StepControl()
    report = validate_spec(spec)
    if not report.ok:
        raise ValueError(f"invalid problem spec: {report}")
    bad = control.validate(spec.horizon)
    if bad:
        raise ValueError("; ".join(bad))

    ws = workspace or ops.OperatorWorkspace.for_problem(spec.p, u0.grid)
    t_final = spec.horizon
    snap_times = list(control.snapshot_times) or [t_final]

    u = u0.copy()
    u.zero_boundary()
    u.assert_finite()
    u.time = 0.0

    trace = NormTrace.for_run(spec, ledger_orders, extra_norms)
    snapshots: list[Field] = []
    dt_hist: list[float] = []
    support_flag = False
    support_max = 0.0
    monitor = spec.domain.mode is DomainMode.WHOLE_SPACE_PROXY

    if monitor:
        support_max = support_fraction(u)
        support_flag = support_max > support_threshold

    snap_idx = 0
    while snap_idx < len(snap_times) and snap_times[snap_idx] <= 1e-15:
        snapshots.append(u.copy())
        snap_idx += 1

    steps = 0
    t = 0.0
    time_eps = 1e-12 * max(1.0, t_final)
    while t < t_final - time_eps:
        grad2 = ops.upwind_gradient_squared(u)
        grad_q = Field(np.power(grad2, 0.5 * spec.q), u.grid, t)
        trace.record(u, grad_q)

        dt = stable_dt(u, spec, control, epsilon_p=ws.epsilon_p, grad2=grad2)
        t_next = snap_times[snap_idx] if snap_idx < len(snap_times) else t_final
        t_next = min(t_next, t_final)
        if t + dt >= t_next - time_eps:
            dt = t_next - t
        try:
            new_vals = u.values + dt * _rhs(u, spec, ws.epsilon_p, ws.epsilon_u, grad_q)
        except FloatingPointError:
            raise SolverAbort("right-hand side overflowed", step_index=steps)
        new = Field(new_vals, u.grid, t + dt)
        new.zero_boundary()
        if not np.all(np.isfinite(new.values)):
            raise SolverAbort(f"state became NaN/Inf at step {steps}", step_index=steps)

        trace.accumulate(u, new, grad_q, dt)
        u = new
        t = t + dt
        steps += 1
        dt_hist.append(dt)

        if snap_idx < len(snap_times) and abs(t - snap_times[snap_idx]) <= time_eps:
            t = snap_times[snap_idx]
            u.time = t
            snapshots.append(u.copy())
            snap_idx += 1

        if monitor:
            frac = support_fraction(u)
            support_max = max(support_max, frac)
            if frac > support_threshold:
                support_flag = True

    grad2 = ops.upwind_gradient_squared(u)
    grad_q = Field(np.power(grad2, 0.5 * spec.q), u.grid, t)
    trace.record(u, grad_q)
    if t_final <= 1e-15 and not snapshots:
        snapshots.append(u.copy())

    return RunResult(
        snapshots=snapshots,
        trace=trace,
        steps=steps,
        dt_history=np.asarray(dt_hist),
        support_flag=support_flag,
        support_fraction_max=support_max,
        spec=spec,
    )
