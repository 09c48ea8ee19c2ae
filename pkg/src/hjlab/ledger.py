"""Norms, energy ledgers, power-law fits and the estimate checks.

Everything here is post-processing over fields and traces: grid L^r norms,
the per-step energy ledger whose residual measures how well the discrete
dynamics honors the exact balance

    ||u(t)||_r^r + r*gamma*int |u|^(lam+r-1)|grad u|^q
               + r(r-1)*nu*int |u|^(r-2)|grad u|^p  =  ||u(0)||_r^r,

log-log slope fitting, the pointwise gradient-ratio check t|grad u|^q <= u,
the far-field tail bound, and the amplitude-independence helper for the
universal sup-norm bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .problem import Field, ProblemSpec

__all__ = [
    "lr_norm",
    "NormTrace",
    "EnergyLedger",
    "update_ledger",
    "DecayFit",
    "DegenerateFitError",
    "fit_loglog",
    "fit_decay",
    "RegimeError",
    "GradientBoundReport",
    "gradient_bound_check",
    "FarFieldReport",
    "far_field_check",
    "universal_bound_spread",
]


def lr_norm(u: Field, r: float) -> float:
    """Grid L^r norm (h^N node quadrature); r = inf gives max |u|."""
    if r == math.inf:
        return float(np.max(np.abs(u.values)))
    if r < 1:
        raise ValueError("r must be >= 1")
    vol = u.grid.cell_volume
    return float(np.sum(np.abs(u.values) ** r) * vol) ** (1.0 / r)


def _edge_dissipation(u: Field, spec: ProblemSpec, r: float, epsilon_p: float) -> float:
    """Sum over edges of mid(|u|)^(r-2) * a(grad u) * (D u)^2 * h^N.

    The edge diffusivity a matches the scheme's flux, so for r = 2 the
    viscous ledger term reproduces the discrete summation by parts exactly.
    """
    v = u.values
    h = u.grid.h
    vol = u.grid.cell_volume
    expo = 0.5 * (spec.p - 2.0)
    total = 0.0
    for ax in range(v.ndim):
        du = np.diff(v, axis=ax) / h
        if spec.p == 2.0 and epsilon_p == 0.0:
            a = 1.0
        else:
            g2 = du * du
            if v.ndim == 2:
                g2 = g2 + ops._edge_tangential_sq(v, h, ax)
            a = np.power(g2 + epsilon_p * epsilon_p, expo)
        if r == 2.0:
            w = 1.0
        else:
            lo = ops._axis_slices(v.ndim, ax, slice(0, -1))
            hi = ops._axis_slices(v.ndim, ax, slice(1, None))
            mid = 0.5 * (np.abs(v[lo]) + np.abs(v[hi]))
            with np.errstate(divide="ignore"):
                w = np.where(mid > 0, mid ** (r - 2.0), 0.0)
        total += float(np.sum(w * a * du * du)) * vol
    return total


@dataclass
class EnergyLedger:
    """Running balance of mass, absorption and viscous dissipation at one r."""

    r: float
    mass: list[float] = field(default_factory=list)
    diss_grad: list[float] = field(default_factory=list)
    diss_visc: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    _acc_grad: float = 0.0
    _acc_visc: float = 0.0

    def mass_of(self, u: Field) -> float:
        return float(np.sum(np.abs(u.values) ** self.r)) * u.grid.cell_volume

    def accumulate(self, u_before: Field, grad_q: Field, dt: float, spec: ProblemSpec,
                   epsilon_p: float = 0.0) -> None:
        r = self.r
        if spec.gamma > 0:
            w = np.abs(u_before.values) ** (spec.lam + r - 1.0)
            self._acc_grad += (
                r * spec.gamma * dt * float(np.sum(w * grad_q.values)) * u_before.grid.cell_volume
            )
        if spec.nu > 0 and r > 1.0:
            self._acc_visc += (
                r * (r - 1.0) * spec.nu * dt * _edge_dissipation(u_before, spec, r, epsilon_p)
            )

    def record(self, u: Field) -> None:
        m = self.mass_of(u)
        self.mass.append(m)
        self.diss_grad.append(self._acc_grad)
        self.diss_visc.append(self._acc_visc)
        self.residual.append(m + self._acc_grad + self._acc_visc - self.mass[0])

    def relative_residual(self) -> float:
        m0 = self.mass[0] if self.mass else 0.0
        if m0 == 0.0:
            return 0.0
        return max(abs(x) for x in self.residual) / m0


def update_ledger(
    ledger: EnergyLedger,
    u_before: Field,
    u_after: Field,
    dt: float,
    spec: ProblemSpec,
    epsilon_p: float = 0.0,
) -> EnergyLedger:
    """Advance the ledger across one step (pre-step quadrature) and record."""
    if not ledger.mass:
        ledger.record(u_before)
    grad_q = ops.upwind_hamiltonian(u_before, spec.q)
    ledger.accumulate(u_before, grad_q, dt, spec, epsilon_p)
    ledger.record(u_after)
    return ledger


@dataclass
class NormTrace:
    """Per-step time series of norms plus the energy ledgers of a run."""

    times: list[float] = field(default_factory=list)
    l1: list[float] = field(default_factory=list)
    l2: list[float] = field(default_factory=list)
    sup: list[float] = field(default_factory=list)
    grad_lq: list[float] = field(default_factory=list)
    extra: dict[float, list[float]] = field(default_factory=dict)
    ledgers: dict[float, EnergyLedger] = field(default_factory=dict)
    _spec: ProblemSpec | None = None
    _epsilon_p: float = 0.0

    @staticmethod
    def for_run(
        spec: ProblemSpec,
        ledger_orders: tuple[float, ...],
        extra_norms: tuple[float, ...] = (),
    ) -> "NormTrace":
        tr = NormTrace()
        tr._spec = spec
        tr.extra = {float(r): [] for r in extra_norms if float(r) not in (1.0, 2.0, math.inf)}
        tr.ledgers = {float(r): EnergyLedger(float(r)) for r in ledger_orders}
        return tr

    def record(self, u: Field, grad_q: Field) -> None:
        vol = u.grid.cell_volume
        q = self._spec.q if self._spec else 2.0
        self.times.append(u.time)
        self.l1.append(lr_norm(u, 1.0))
        self.l2.append(lr_norm(u, 2.0))
        self.sup.append(lr_norm(u, math.inf))
        self.grad_lq.append(float(np.sum(grad_q.values) * vol) ** (1.0 / q))
        for r, series in self.extra.items():
            series.append(lr_norm(u, r))
        for ledger in self.ledgers.values():
            ledger.record(u)

    def accumulate(self, u_before: Field, u_after: Field, grad_q: Field, dt: float) -> None:
        for ledger in self.ledgers.values():
            ledger.accumulate(u_before, grad_q, dt, self._spec, self._epsilon_p)

    def series(self, which: str | float) -> tuple[np.ndarray, np.ndarray]:
        t = np.asarray(self.times)
        if isinstance(which, str):
            name = which.lower()
            if name in ("sup", "linf", "inf"):
                return t, np.asarray(self.sup)
            if name in ("l1", "1"):
                return t, np.asarray(self.l1)
            if name in ("l2", "2"):
                return t, np.asarray(self.l2)
            if name == "grad_lq":
                return t, np.asarray(self.grad_lq)
            raise KeyError(f"unknown norm {which!r}")
        r = float(which)
        if r == 1.0:
            return t, np.asarray(self.l1)
        if r == 2.0:
            return t, np.asarray(self.l2)
        if r == math.inf:
            return t, np.asarray(self.sup)
        return t, np.asarray(self.extra[r])


# --- power-law fitting ----------------------------------------------------


class DegenerateFitError(ValueError):
    pass


@dataclass
class DecayFit:
    window: tuple[float, float]
    slope: float
    intercept: float
    r_squared: float
    n_samples: int


def fit_loglog(times: np.ndarray, values: np.ndarray, window: tuple[float, float]) -> DecayFit:
    """Least squares on (log t, log y) over the window.

    Needs at least 8 samples, positive values, and a window of at least one
    decade in t; anything else is a degenerate fit.
    """
    t_a, t_b = window
    if not (t_a > 0 and t_b > t_a):
        raise DegenerateFitError("window must satisfy 0 < t_a < t_b")
    if t_b < 10.0 * t_a * (1.0 - 1e-9):
        raise DegenerateFitError("window spans less than one decade of t")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (times >= t_a * (1 - 1e-12)) & (times <= t_b * (1 + 1e-12))
    t = times[mask]
    y = values[mask]
    if t.size < 8:
        raise DegenerateFitError(f"only {t.size} samples in window, need >= 8")
    if np.any(y <= 0):
        raise DegenerateFitError("norm must stay positive over the window")
    lt, ly = np.log(t), np.log(y)
    slope, intercept = np.polyfit(lt, ly, 1)
    pred = slope * lt + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(window=(t_a, t_b), slope=float(slope), intercept=float(intercept),
                    r_squared=r2, n_samples=int(t.size))


def fit_decay(trace: NormTrace, which_norm: str | float, window: tuple[float, float]) -> DecayFit:
    t, y = trace.series(which_norm)
    return fit_loglog(t, y, window)


# --- pointwise gradient bound ----------------------------------------------


class RegimeError(ValueError):
    pass


@dataclass
class GradientBoundReport:
    worst_ratio: float
    per_snapshot: list[tuple[float, float]]
    u_floor: float
    paper_ref: str = "gradient-ratio-u-over-t"


def gradient_bound_check(run_result, spec: ProblemSpec, u_floor: float = 1e-12) -> GradientBoundReport:
    """Worst over snapshots of max_x t * |grad u|^q / max(u, floor).

    Only meaningful in the smooth viscous regime nu = 1, p = 2, gamma = 1,
    lam = 0, q <= 2 with nonnegative data; refuses to run elsewhere.
    """
    if not (spec.nu == 1 and spec.p == 2 and spec.gamma == 1 and spec.lam == 0):
        raise RegimeError("gradient bound check needs nu=1, p=2, gamma=1, lambda=0")
    if spec.q > 2:
        raise RegimeError("gradient bound check needs q <= 2")
    per: list[tuple[float, float]] = []
    worst = 0.0
    for snap in run_result.snapshots:
        if snap.time <= 0:
            continue
        if float(np.min(snap.values)) < -1e-12:
            raise RegimeError("gradient bound check needs nonnegative fields")
        gq = ops.upwind_hamiltonian(snap, spec.q).values
        denom = np.maximum(snap.values, u_floor)
        ratio = float(np.max(snap.time * gq / denom))
        per.append((snap.time, ratio))
        worst = max(worst, ratio)
    return GradientBoundReport(worst_ratio=worst, per_snapshot=per, u_floor=u_floor)


# --- far-field tail bound ---------------------------------------------------


@dataclass
class FarFieldReport:
    a: float
    rho: float
    tail_slope_prediction: float
    fitted_constant: float
    max_ratio: float
    samples: list[tuple[float, float, float]]  # (t, mass_r, bound)
    mass_fit: DecayFit
    paper_ref: str = "far-field-tail-bound"


def far_field_check(
    spec: ProblemSpec,
    datum,
    r: float,
    window: tuple[float, float] | None = None,
    n_samples: int = 12,
    control=None,
) -> FarFieldReport:
    """Compare ||u(t)||_r^r against C*(tail integral beyond sqrt(t) + t^-rho).

    rho = (a*r - N)/2 with a = (2-q)/(q-1); C is the smallest constant that
    makes the bound hold at the first sample. Also fits the measured mass
    slope for comparison with the tail-driven prediction -(b*r - N)/2.
    Subcritical range 1 < q < (N + 2r)/(N + r) only.
    """
    from .data import PowerTail, sample
    from .integrate import StepControl, run

    N = spec.dim
    if not isinstance(datum, PowerTail):
        raise RegimeError("far-field check needs a power-tail datum")
    if not (1.0 < spec.q < (N + 2.0 * r) / (N + r)):
        raise RegimeError(f"far-field check needs 1 < q < (N+2r)/(N+r) = {(N + 2 * r) / (N + r):g}")
    b = datum.tail_exponent
    if not b * r > N:
        raise RegimeError("power tail must lie in L^r: need b*r > N")

    a = (2.0 - spec.q) / (spec.q - 1.0)
    rho = (a * r - N) / 2.0
    window = window or (spec.horizon / 50.0, spec.horizon)
    t_a, t_b = window
    times = np.geomspace(t_a, t_b, n_samples)

    grid_dim = spec.dim
    from .problem import make_grid

    grid = make_grid(spec.domain, grid_dim)
    u0 = sample(datum, grid, for_lr=r)
    u0r = np.abs(u0.values) ** r
    radius = grid.radius()
    vol = grid.cell_volume

    def tail_mass(cut: float) -> float:
        return float(np.sum(u0r[radius > cut])) * vol

    control = control or StepControl(snapshot_times=tuple(times))
    result = run(u0, spec, control, ledger_orders=(r,), extra_norms=(r,))
    t_tr, m_tr = result.trace.series(r)
    mass_r = np.interp(times, t_tr, m_tr**r)

    bounds_raw = np.array([tail_mass(math.sqrt(t)) + t ** (-rho) for t in times])
    c_fit = mass_r[0] / bounds_raw[0]
    ratios = mass_r / (c_fit * bounds_raw)
    fit = fit_loglog(t_tr, m_tr**r, window)
    return FarFieldReport(
        a=a,
        rho=rho,
        tail_slope_prediction=(b * r - N) / 2.0,
        fitted_constant=float(c_fit),
        max_ratio=float(np.max(ratios)),
        samples=[(float(t), float(m), float(c_fit * bb)) for t, m, bb in zip(times, mass_r, bounds_raw)],
        mass_fit=fit,
    )


# --- universal bound amplitude independence ---------------------------------


def universal_bound_spread(
    traces: list[NormTrace],
    exponent: float,
    window: tuple[float, float],
) -> tuple[float, list[float]]:
    """Spread across runs of sup over the window of t^exponent * ||u(t)||_inf."""
    qs = []
    for tr in traces:
        t, s = tr.series("sup")
        mask = (t >= window[0]) & (t <= window[1])
        if not np.any(mask):
            raise ValueError("no trace samples inside the window")
        qs.append(float(np.max(t[mask] ** exponent * s[mask])))
    spread = max(qs) / min(qs) if min(qs) > 0 else math.inf
    return spread, qs
