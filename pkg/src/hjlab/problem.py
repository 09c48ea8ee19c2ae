"""Problem definition: PDE parameters, domains, grids and fields.

The model equation is

    u_t - nu * div(|grad u|^(p-2) grad u) + gamma * |u|^(lam-1) u * |grad u|^q = 0

on the box [-L, L]^N with homogeneous Dirichlet values on the boundary.
The box either *is* the domain (Dirichlet mode) or stands in for the whole
space (WholeSpaceProxy mode, where a support monitor tracks how much mass
reaches the boundary layers).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

__all__ = [
    "DomainMode",
    "DomainSpec",
    "ProblemSpec",
    "Grid",
    "Field",
    "ValidationReport",
    "validate_spec",
    "make_grid",
    "spec_to_dict",
    "spec_from_dict",
    "spec_to_json",
    "spec_from_json",
    "spec_to_kv",
    "spec_from_kv",
]


class DomainMode(Enum):
    WHOLE_SPACE_PROXY = "whole_space_proxy"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class DomainSpec:
    """Box [-L, L]^N with n uniform cells per axis (n + 1 nodes per axis)."""

    half_width: float = 1.0
    mode: DomainMode = DomainMode.WHOLE_SPACE_PROXY
    cells_per_axis: int = 64


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of the gradient-absorption equation.

    q    gradient-absorption exponent, q > 1
    p    diffusion exponent, p > 1 (p = 2 is the ordinary Laplacian)
    lam  zero-order absorption exponent, lam >= 0
    gamma  absorption coefficient, gamma >= 0
    nu     diffusivity, nu >= 0
    dim    spatial dimension, 1 or 2
    """

    q: float = 1.5
    p: float = 2.0
    lam: float = 0.0
    gamma: float = 1.0
    nu: float = 1.0
    dim: int = 1
    domain: DomainSpec = field(default_factory=DomainSpec)
    horizon: float = 1.0

    def with_(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        return "ok" if self.ok else "; ".join(self.violations)


def validate_spec(spec: ProblemSpec) -> ValidationReport:
    """Collect every violated invariant; an empty report means usable."""
    bad: list[str] = []
    if not spec.q > 1:
        bad.append("q must exceed 1")
    if not spec.p > 1:
        bad.append("p must exceed 1")
    if spec.lam < 0:
        bad.append("lambda must be >= 0")
    if spec.gamma < 0:
        bad.append("gamma must be >= 0")
    if spec.nu < 0:
        bad.append("nu must be >= 0")
    if spec.nu == 0 and spec.gamma == 0:
        bad.append("degenerate: no diffusion and no absorption")
    if spec.p != 2 and spec.nu == 0:
        bad.append("p != 2 requires nu > 0")
    if spec.dim not in (1, 2):
        bad.append("dim must be 1 or 2")
    if not spec.horizon >= 0:
        bad.append("horizon must be >= 0")
    if not spec.domain.half_width > 0:
        bad.append("half_width must be positive")
    if spec.domain.cells_per_axis < 8:
        bad.append("cells_per_axis must be at least 8")
    if not isinstance(spec.domain.mode, DomainMode):
        bad.append("mode must be a DomainMode")
    return ValidationReport(bad)


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered grid for the box [-L, L]^N.

    Nodes along each axis sit at -L + i*h, i = 0..n, so the boundary nodes
    are part of the array; they act as the zero Dirichlet ghosts.
    """

    domain: DomainSpec
    dim: int

    @property
    def n(self) -> int:
        return self.domain.cells_per_axis

    @property
    def h(self) -> float:
        return 2.0 * self.domain.half_width / self.domain.cells_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n + 1,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @property
    def axis(self) -> np.ndarray:
        n, L = self.n, self.domain.half_width
        return -L + self.h * np.arange(n + 1)

    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of node coordinates, one array per axis."""
        return np.meshgrid(*([self.axis] * self.dim), indexing="ij")

    def radius(self) -> np.ndarray:
        """Euclidean distance of every node from the origin."""
        xs = self.coords()
        return np.sqrt(sum(x * x for x in xs))

    def node_coord(self, index: tuple[int, ...]) -> tuple[float, ...]:
        L = self.domain.half_width
        return tuple(-L + i * self.h for i in index)

    def node_index(self, coord: tuple[float, ...]) -> tuple[int, ...]:
        L = self.domain.half_width
        return tuple(int(round((x + L) / self.h)) for x in coord)

    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.dim

    def boundary_mask(self, layers: int = 1) -> np.ndarray:
        """Nodes within `layers` cells of the box boundary."""
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            sl_lo = [slice(None)] * self.dim
            sl_hi = [slice(None)] * self.dim
            sl_lo[ax] = slice(0, layers + 1)
            sl_hi[ax] = slice(-(layers + 1), None)
            mask[tuple(sl_lo)] = True
            mask[tuple(sl_hi)] = True
        return mask


def make_grid(domain: DomainSpec, dim: int = 1) -> Grid:
    """Build the node grid; rejects under-resolved domains."""
    if domain.cells_per_axis < 8:
        raise ValueError("cells_per_axis must be at least 8")
    if domain.half_width <= 0:
        raise ValueError("half_width must be positive")
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    return Grid(domain=domain, dim=dim)


@dataclass
class Field:
    """Node samples of u at one time. The buffer belongs to one owner."""

    values: np.ndarray
    grid: Grid
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.grid, self.time)

    def assert_finite(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("field contains NaN or Inf")

    def zero_boundary(self) -> None:
        """Pin the boundary ghost nodes to the Dirichlet value 0."""
        v = self.values
        for ax in range(v.ndim):
            lo = [slice(None)] * v.ndim
            hi = [slice(None)] * v.ndim
            lo[ax] = 0
            hi[ax] = -1
            v[tuple(lo)] = 0.0
            v[tuple(hi)] = 0.0

    @staticmethod
    def zeros(grid: Grid, time: float = 0.0) -> "Field":
        return Field(np.zeros(grid.shape), grid, time)


# --- serialization ------------------------------------------------------
#
# Flat key=value text and JSON share one flat key set:
#   q, p, lambda, gamma, nu, dim, half_width, mode, cells_per_axis, horizon

_SPEC_KEYS = (
    "q",
    "p",
    "lambda",
    "gamma",
    "nu",
    "dim",
    "half_width",
    "mode",
    "cells_per_axis",
    "horizon",
)


def spec_to_dict(spec: ProblemSpec) -> dict:
    return {
        "q": spec.q,
        "p": spec.p,
        "lambda": spec.lam,
        "gamma": spec.gamma,
        "nu": spec.nu,
        "dim": spec.dim,
        "half_width": spec.domain.half_width,
        "mode": spec.domain.mode.value,
        "cells_per_axis": spec.domain.cells_per_axis,
        "horizon": spec.horizon,
    }


def spec_from_dict(d: dict) -> ProblemSpec:
    unknown = set(d) - set(_SPEC_KEYS)
    if unknown:
        raise ValueError(f"unknown problem keys: {sorted(unknown)}")
    domain = DomainSpec(
        half_width=float(d.get("half_width", 1.0)),
        mode=DomainMode(str(d.get("mode", "whole_space_proxy"))),
        cells_per_axis=int(d.get("cells_per_axis", 64)),
    )
    return ProblemSpec(
        q=float(d.get("q", 1.5)),
        p=float(d.get("p", 2.0)),
        lam=float(d.get("lambda", 0.0)),
        gamma=float(d.get("gamma", 1.0)),
        nu=float(d.get("nu", 1.0)),
        dim=int(d.get("dim", 1)),
        domain=domain,
        horizon=float(d.get("horizon", 1.0)),
    )


def spec_to_json(spec: ProblemSpec) -> str:
    return json.dumps(spec_to_dict(spec), sort_keys=True, indent=2)


def spec_from_json(text: str) -> ProblemSpec:
    return spec_from_dict(json.loads(text))


def spec_to_kv(spec: ProblemSpec) -> str:
    d = spec_to_dict(spec)
    return "".join(f"{k} = {d[k]!r}\n" if isinstance(d[k], str) else f"{k} = {d[k]}\n" for k in _SPEC_KEYS)


def spec_from_kv(text: str) -> ProblemSpec:
    d: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        d[k] = v.strip("'\"")
    return spec_from_dict(d)


def box_measure(grid: Grid) -> float:
    """|Omega| of the open box, approximated by interior quadrature."""
    n = grid.n
    return ((n - 1) * grid.h) ** grid.dim


def support_fraction(u: Field, layers: int = 2) -> float:
    """|u|-mass fraction sitting within `layers` cells of the boundary."""
    mask = u.grid.boundary_mask(layers)
    total = float(np.sum(np.abs(u.values)))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(u.values[mask]))) / total


def as_field(values: np.ndarray, like: Field) -> Field:
    return Field(values, like.grid, like.time)
