"""Initial data generators and the truncation pair T_k / Theta_k.

Covers the data classes the decay and smoothing checks need: L^r profiles
(Gaussians, power tails), point masses proxied by compactly supported
mollifier bumps, indicator boxes, and fields loaded from CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .problem import Field, Grid, as_field

__all__ = [
    "InitialDatum",
    "Gaussian",
    "PowerTail",
    "MollifiedDirac",
    "Indicator",
    "FromFile",
    "sample",
    "truncate",
    "theta_k",
    "tk_values",
    "theta_values",
    "mollifier_widths",
    "save_field_csv",
    "load_field_csv",
]


@dataclass(frozen=True)
class InitialDatum:
    """Base for all generators; sign records the intended solution class."""

    sign: str = "nonnegative"


@dataclass(frozen=True)
class Gaussian(InitialDatum):
    amplitude: float = 1.0
    center: float = 0.0
    width: float = 0.5


@dataclass(frozen=True)
class PowerTail(InitialDatum):
    """u0(x) = amplitude * min(1, |x|^-b); lies in L^r iff b*r > N."""

    amplitude: float = 1.0
    tail_exponent: float = 1.5


@dataclass(frozen=True)
class MollifiedDirac(InitialDatum):
    """Compact bump exp(1/((|x|/eps)^2 - 1)) renormalized to grid mass M0."""

    mass: float = 1.0
    width: float = 0.1


@dataclass(frozen=True)
class Indicator(InitialDatum):
    """height * 1_{[lo, hi]^N} (per-axis interval)."""

    lo: float = -0.5
    hi: float = 0.5
    height: float = 1.0


@dataclass(frozen=True)
class FromFile(InitialDatum):
    path: str = ""


def _bump(scaled_r2: np.ndarray) -> np.ndarray:
    """exp(1/(s^2 - 1)) on s^2 < 1, else 0 (s^2 passed in)."""
    out = np.zeros_like(scaled_r2)
    inside = scaled_r2 < 1.0
    out[inside] = np.exp(1.0 / (scaled_r2[inside] - 1.0))
    return out


def sample(datum: InitialDatum, grid: Grid, for_lr: float | None = None) -> Field:
    """Sample the datum on the grid nodes (deterministic; ghosts zeroed).

    A MollifiedDirac is renormalized after sampling so its grid quadrature
    equals the requested mass exactly. `for_lr` declares that the run needs
    u0 in L^r; power tails that fail b*r > N are rejected.
    """
    if isinstance(datum, Gaussian):
        xs = grid.coords()
        r2 = sum((x - datum.center) ** 2 for x in xs)
        vals = datum.amplitude * np.exp(-r2 / (2.0 * datum.width**2))
    elif isinstance(datum, PowerTail):
        b = datum.tail_exponent
        if b <= 0:
            raise ValueError("tail exponent must be positive")
        if for_lr is not None and not (b * for_lr > grid.dim):
            raise ValueError(
                f"power tail with b={b} is not in L^{for_lr} for dim {grid.dim} (need b*r > N)"
            )
        r = grid.radius()
        with np.errstate(divide="ignore"):
            vals = datum.amplitude * np.minimum(1.0, np.where(r > 0, r, np.inf) ** (-b))
    elif isinstance(datum, MollifiedDirac):
        if datum.width <= 0:
            raise ValueError("mollifier width must be positive")
        r = grid.radius()
        vals = _bump((r / datum.width) ** 2)
        quad = float(np.sum(vals)) * grid.cell_volume
        if quad == 0.0:
            raise ValueError("mollifier width below grid resolution")
        vals = vals * (datum.mass / quad)
    elif isinstance(datum, Indicator):
        xs = grid.coords()
        inside = np.ones(grid.shape, dtype=bool)
        for x in xs:
            inside &= (x >= datum.lo) & (x <= datum.hi)
        vals = np.where(inside, datum.height, 0.0)
    elif isinstance(datum, FromFile):
        return load_field_csv(datum.path, grid)
    else:
        raise TypeError(f"unknown datum kind: {type(datum).__name__}")
    f = Field(vals, grid, 0.0)
    f.zero_boundary()
    return f


def mollifier_widths(grid: Grid, multiples: tuple[int, ...] = (16, 8, 4)) -> list[float]:
    """Mollifier family eps = multiple * h, widest first."""
    return [m * grid.h for m in multiples]


def tk_values(values: np.ndarray, k: float) -> np.ndarray:
    """T_k(u) = max(-k, min(k, u))."""
    if k <= 0:
        raise ValueError("k must be positive")
    return np.clip(values, -k, k)


def theta_values(values: np.ndarray, k: float) -> np.ndarray:
    """Theta_k(u), the primitive of T_k: u^2/2 below k, k|u| - k^2/2 beyond."""
    if k <= 0:
        raise ValueError("k must be positive")
    a = np.abs(values)
    return np.where(a <= k, 0.5 * values**2, k * a - 0.5 * k * k)


def truncate(u: Field, k: float) -> Field:
    return as_field(tk_values(u.values, k), u)


def theta_k(u: Field, k: float) -> Field:
    return as_field(theta_values(u.values, k), u)


# --- CSV field format ----------------------------------------------------
#
# Header "x,u" (1D) or "x,y,u" (2D), one node per row in C order; floats are
# written with repr so a round trip is bit exact.


def save_field_csv(u: Field, path: str | Path) -> None:
    grid = u.grid
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "u"] if grid.dim == 1 else ["x", "y", "u"])
        coords = grid.coords()
        flat = [c.ravel() for c in coords] + [u.values.ravel()]
        for row in zip(*flat):
            writer.writerow([repr(float(v)) for v in row])


def load_field_csv(path: str | Path, grid: Grid) -> Field:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header not in (["x", "u"], ["x", "y", "u"]):
            raise ValueError(f"unexpected field CSV header: {header}")
        want_dim = len(header) - 1
        if want_dim != grid.dim:
            raise ValueError(f"field CSV is {want_dim}D but grid is {grid.dim}D")
        rows = list(reader)
    expected = int(np.prod(grid.shape))
    if len(rows) != expected:
        raise ValueError(f"field CSV has {len(rows)} rows, grid needs {expected}")
    vals = np.empty(grid.shape)
    flat = vals.ravel()
    axis = grid.axis
    for idx, row in enumerate(rows):
        *xs, uval = row
        node = np.unravel_index(idx, grid.shape)
        for d, x in enumerate(xs):
            if abs(float(x) - axis[node[d]]) > 1e-9 * max(1.0, abs(axis[node[d]])):
                raise ValueError(f"row {idx + 2}: node coordinate does not match grid")
        flat[idx] = float(uval)
    return Field(vals, grid, 0.0)
