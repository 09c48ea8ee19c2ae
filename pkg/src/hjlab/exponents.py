"""Closed-form exponent calculus behind the decay and smoothing estimates.

The iteration machinery turns an L^r -> L^(beta*m*theta) gain into the
sup-norm estimate

    ||v(t)||_inf <= C t^(-sigma) ||v0||_r^varpi,
    sigma = 1 / (r/theta' + lam + m - 1),   varpi = (r/theta') * sigma,

with theta' = theta/(theta - 1). This module evaluates those closed forms,
the bootstrap bound that removes an a-priori constant, the underlying
recursion r_{n+1} = (r_n + lam + m - 1)*theta with its limits, and the
parameter table the solvers are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "VoidEstimateError",
    "ConvergenceError",
    "theta_conjugate",
    "sigma_varpi",
    "ExponentSpec",
    "bootstrap_bound",
    "RecursionTrace",
    "simulate_recursion",
    "iteration_constant",
    "ExponentTable",
    "exponent_table",
]


class VoidEstimateError(ValueError):
    """The closed form has a nonpositive denominator: no estimate there."""


class ConvergenceError(RuntimeError):
    """The recursion did not reach its limits at the requested depth."""


def theta_conjugate(theta: float) -> float:
    if theta <= 1:
        raise ValueError("theta must exceed 1")
    return theta / (theta - 1.0)


def sigma_varpi(r: float, m: float, lam: float, theta: float) -> tuple[float, float]:
    """Smoothing exponents (sigma, varpi) for the (r, m, lam, theta) gain."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if m <= 1:
        raise ValueError("m must exceed 1")
    tc = theta_conjugate(theta)
    den = r / tc + lam + m - 1.0
    if den <= 0:
        raise VoidEstimateError(f"nonpositive denominator {den:g}: estimate void")
    sigma = 1.0 / den
    return sigma, (r / tc) * sigma


@dataclass(frozen=True)
class ExponentSpec:
    """One (r, m, lam, theta) quadruple with its derived exponents."""

    r: float
    m: float
    lam: float
    theta: float

    @property
    def theta_conj(self) -> float:
        return theta_conjugate(self.theta)

    @property
    def sigma(self) -> float:
        return sigma_varpi(self.r, self.m, self.lam, self.theta)[0]

    @property
    def varpi(self) -> float:
        return sigma_varpi(self.r, self.m, self.lam, self.theta)[1]

    def admissible(self, dim: int | None = None) -> bool:
        """r > (N/m)(1 - m - lam), with N read off theta = N/(N - m) if absent."""
        if dim is None:
            n_eff = self.m * self.theta / (self.theta - 1.0)
        else:
            n_eff = float(dim)
        return self.r > (n_eff / self.m) * (1.0 - self.m - self.lam)


def bootstrap_bound(omega: float, sigma: float, k: float, t: float) -> float:
    """Self-improvement bound 2^(sigma (1-omega)^-2) * (K t^-sigma)^(1/(1-omega)).

    Removes the a-priori constant from y(t) <= K (t-s)^-sigma y(s)^omega.
    """
    if not 0 < omega < 1:
        raise ValueError("omega must lie in (0, 1)")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if k <= 0 or t <= 0:
        raise ValueError("K and t must be positive")
    inv = 1.0 / (1.0 - omega)
    return 2.0 ** (sigma * inv * inv) * (k * t ** (-sigma)) ** inv


@dataclass
class RecursionTrace:
    """Iterates and partial limits of r_{n+1} = (r_n + lam + m - 1) theta.

    r_log10 stores log10(r_n) (the raw sequence overflows quickly);
    ratios[n]       = theta^(n+1) r / r_{n+1}            -> varpi
    partial_sums[n] = (1/r_{n+1}) sum_{k=1}^{n+1} theta^(n+2-k) -> sigma
    k_series[n]     = sum_{k=1}^{n+1} k theta^(1-k)      -> theta'^2
    """

    params: tuple[float, float, float, float]
    r_log10: list[float] = field(default_factory=list)
    ratios: list[float] = field(default_factory=list)
    partial_sums: list[float] = field(default_factory=list)
    k_series: list[float] = field(default_factory=list)
    sigma: float = 0.0
    varpi: float = 0.0
    theta_conj_sq: float = 0.0

    @property
    def errors(self) -> tuple[float, float, float]:
        return (
            abs(self.ratios[-1] - self.varpi),
            abs(self.partial_sums[-1] - self.sigma),
            abs(self.k_series[-1] - self.theta_conj_sq),
        )

    def r_value(self, n: int) -> float:
        """r_n as a float, inf once past the representable range."""
        lg = self.r_log10[n]
        return math.inf if lg > 308 else 10.0**lg


def simulate_recursion(
    r: float,
    m: float,
    lam: float,
    theta: float,
    n_max: int = 200,
    assert_limits: bool = True,
    tol: float = 1e-6,
) -> RecursionTrace:
    """Run the iteration and track its three limits.

    The iterate is carried as y_n = r_n / theta^n (bounded, so theta^n never
    overflows); y_{n+1} = y_n + c/theta^n with c = lam + m - 1. With
    assert_limits, a deviation above tol at n_max >= 200 raises, which flags
    parameter draws whose geometric convergence is too slow for the depth.
    """
    if n_max < 10:
        raise ValueError("n_max must be at least 10")
    sigma, varpi = sigma_varpi(r, m, lam, theta)
    tc = theta_conjugate(theta)
    c = lam + m - 1.0
    trace = RecursionTrace(params=(r, m, lam, theta), sigma=sigma, varpi=varpi,
                           theta_conj_sq=tc * tc)

    y = r  # y_n = r_n / theta^n
    log10_theta = math.log10(theta)
    trace.r_log10.append(math.log10(r))
    k_sum = 0.0
    for n in range(n_max):
        y = y + c / theta**n
        trace.r_log10.append((n + 1) * log10_theta + math.log10(y))
        trace.ratios.append(r / y)
        # sum_{k=1}^{n+1} theta^(n+2-k) = theta'(theta^(n+1) - 1)
        trace.partial_sums.append(tc * (1.0 - theta ** (-(n + 1))) / y)
        k_sum += (n + 1) * theta ** (-n)
        trace.k_series.append(k_sum)

    if assert_limits and n_max >= 200:
        errs = trace.errors
        if max(errs) > tol:
            raise ConvergenceError(
                f"recursion limits off by {max(errs):.3g} at n={n_max} "
                f"(theta={theta:g} converges too slowly for this depth)"
            )
    return trace


def iteration_constant(r: float, m: float, lam: float, theta: float, n_terms: int = 400) -> float:
    """Numerical value of the iteration constant
    exp(varpi/r * ((m*theta - 1) S - m*theta*ln r)) with S = sum theta^-k ln r_k.

    Diagnostic only; nothing pins its value.
    """
    sigma, varpi = sigma_varpi(r, m, lam, theta)
    c = lam + m - 1.0
    y = r
    s = math.log(r)  # k = 0 term
    for k in range(1, n_terms + 1):
        y = y + c / theta ** (k - 1)
        ln_rk = k * math.log(theta) + math.log(y)
        s += ln_rk / theta**k
    return math.exp((varpi / r) * ((m * theta - 1.0) * s - m * theta * math.log(r)))


# --- exponent table ----------------------------------------------------------


@dataclass
class TableEntry:
    value: float | None
    note: str = ""

    def text(self) -> str:
        if self.value is None:
            return f"void({self.note})" if self.note else "void"
        s = f"{self.value:.6g}"
        return f"{s} [{self.note}]" if self.note else s


@dataclass
class ExponentTable:
    dim: int
    q: float
    p: float
    lam: float
    columns: list[str]
    rows: list[dict[str, TableEntry]]

    def to_text(self) -> str:
        headers = ["r"] + self.columns
        cells = [[f"{row['r'].value:g}"] + [row[c].text() for c in self.columns] for row in self.rows]
        widths = [max(len(h), *(len(row[i]) for row in cells)) for i, h in enumerate(headers)]
        lines = [
            f"# dim={self.dim} q={self.q:g} p={self.p:g} lambda={self.lam:g}",
            "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        ]
        for row in cells:
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        headers = ["r"] + self.columns
        lines = [",".join(headers)]
        for row in self.rows:
            vals = [f"{row['r'].value!r}"]
            for c in self.columns:
                e = row[c]
                vals.append("" if e.value is None else repr(e.value))
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


_COLUMNS = [
    "sigma_grad",       # gradient-absorption smoothing, lam = 0
    "varpi_grad",
    "sigma_grad_lam",   # quasilinear gradient absorption with lam
    "varpi_grad_lam",
    "sigma_visc",       # coercive diffusion route (m = p, lam = -1)
    "varpi_visc",
    "sigma_heat",       # heat-kernel rate N/(2r)
    "universal_grad",   # 1/(q - 1 + lam)
    "universal_visc",   # 1/(p - 2)
    "fallback_grad",    # 1/(q + r - 1 + lam), the q >= N route
    "fallback_visc",    # 1/(r + p - 2), the p >= N route
]


def exponent_table(dim: int, q: float, p: float, lam: float, r_list: list[float]) -> ExponentTable:
    """All exponent specializations for one (N, q, p, lam), one row per r.

    Rows outside a formula's validity range are marked void rather than
    erroring; when the Sobolev gain is unavailable (q >= N or p >= N) the
    fallback columns carry the replacement exponents.
    """
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    rows: list[dict[str, TableEntry]] = []
    n = float(dim)
    for r in r_list:
        r = float(r)
        if r < 1:
            raise ValueError("r must be >= 1")
        row: dict[str, TableEntry] = {"r": TableEntry(r)}

        sg = 1.0 / (r * q / n + q - 1.0)
        note = "" if q < n else "sobolev needs q<N"
        row["sigma_grad"] = TableEntry(sg, note)
        row["varpi_grad"] = TableEntry(r * q / n * sg, note)

        sgl = 1.0 / (r * q / n + lam + q - 1.0)
        row["sigma_grad_lam"] = TableEntry(sgl, note)
        row["varpi_grad_lam"] = TableEntry(r * q / n * sgl, note)

        den_v = r * p / n + p - 2.0
        if den_v <= 0:
            row["sigma_visc"] = TableEntry(None, "need r > (2-p)N/p")
            row["varpi_visc"] = TableEntry(None, "need r > (2-p)N/p")
        else:
            note_v = "" if p < n else "sobolev needs p<N"
            sv = 1.0 / den_v
            row["sigma_visc"] = TableEntry(sv, note_v)
            row["varpi_visc"] = TableEntry(r * p / n * sv, note_v)

        row["sigma_heat"] = TableEntry(n / (2.0 * r))
        row["universal_grad"] = TableEntry(1.0 / (q - 1.0 + lam))
        row["universal_visc"] = TableEntry(1.0 / (p - 2.0) if p > 2 else None,
                                           "" if p > 2 else "need p > 2")
        row["fallback_grad"] = TableEntry(
            1.0 / (q + r - 1.0 + lam) if q >= n else None,
            "" if q >= n else "only for q >= N",
        )
        den_f = r + p - 2.0
        row["fallback_visc"] = TableEntry(
            1.0 / den_f if (p >= n and den_f > 0) else None,
            "" if p >= n else "only for p >= N",
        )
        rows.append(row)
    return ExponentTable(dim=dim, q=q, p=p, lam=lam, columns=list(_COLUMNS), rows=rows)
