"""Spatial kernels: Laplacian, regularized p-Laplacian, monotone upwind
Hamiltonian |grad u|^q and the absorption term gamma*|u|^(lam-1)u*|grad u|^q.

All kernels read a field with zeroed boundary ghosts and write a field whose
boundary nodes are zero again, so they compose freely inside the explicit
integrator. Reductions rely on numpy's pairwise summation, which keeps runs
bit-reproducible for a fixed shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import Field, Grid, as_field

__all__ = [
    "OperatorWorkspace",
    "laplacian",
    "p_laplacian",
    "upwind_gradient_squared",
    "upwind_hamiltonian",
    "absorption",
    "default_epsilon_p",
    "edge_diffusivity_max",
]


def default_epsilon_p(p: float, grid: Grid) -> float:
    """Degeneracy regularization: 0 at p = 2, else 1e-8 * (L / n)."""
    if p == 2.0:
        return 0.0
    return 1e-8 * grid.domain.half_width / grid.n


@dataclass
class OperatorWorkspace:
    """Per-run knobs for the kernels.

    epsilon_p regularizes the p-Laplacian diffusivity (must be 0 iff p = 2);
    epsilon_u floors |u| inside the absorption prefactor.
    """

    epsilon_p: float = 0.0
    epsilon_u: float = 0.0

    @staticmethod
    def for_problem(p: float, grid: Grid, epsilon_u: float = 0.0) -> "OperatorWorkspace":
        return OperatorWorkspace(epsilon_p=default_epsilon_p(p, grid), epsilon_u=epsilon_u)


def _zero_boundary(v: np.ndarray) -> np.ndarray:
    for ax in range(v.ndim):
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[ax] = 0
        hi[ax] = -1
        v[tuple(lo)] = 0.0
        v[tuple(hi)] = 0.0
    return v


def _axis_slices(ndim: int, ax: int, sl: slice) -> tuple[slice, ...]:
    out = [slice(None)] * ndim
    out[ax] = sl
    return tuple(out)


def _edge_normal_gradients(v: np.ndarray, h: float, ax: int) -> np.ndarray:
    """First differences across the n edges of every grid line along `ax`."""
    return np.diff(v, axis=ax) / h


def _edge_tangential_sq(v: np.ndarray, h: float, ax: int) -> np.ndarray:
    """Squared tangential gradient at the `ax`-edges (2D only).

    Central differences at the two edge endpoints, averaged onto the edge;
    boundary rows fall back to zero, which only touches ghost values.
    """
    other = 1 - ax
    ct = np.zeros_like(v)
    interior = _axis_slices(v.ndim, other, slice(1, -1))
    up = _axis_slices(v.ndim, other, slice(2, None))
    dn = _axis_slices(v.ndim, other, slice(0, -2))
    ct[interior] = (v[up] - v[dn]) / (2.0 * h)
    lo = _axis_slices(v.ndim, ax, slice(0, -1))
    hi = _axis_slices(v.ndim, ax, slice(1, None))
    tang = 0.5 * (ct[lo] + ct[hi])
    return tang * tang


def laplacian(u: Field) -> Field:
    """Standard second-difference Laplacian, 1/h^2 scaling, ghosts zeroed."""
    v = u.values
    h = u.grid.h
    out = np.zeros_like(v)
    for ax in range(v.ndim):
        body = _axis_slices(v.ndim, ax, slice(1, -1))
        up = _axis_slices(v.ndim, ax, slice(2, None))
        dn = _axis_slices(v.ndim, ax, slice(0, -2))
        out[body] += (v[up] - 2.0 * v[body] + v[dn]) / (h * h)
    return as_field(_zero_boundary(out), u)


def p_laplacian(u: Field, p: float, epsilon_p: float = 0.0) -> Field:
    """Divergence of the regularized p-Laplacian flux.

    Edge diffusivity a = (|grad u|^2 + epsilon_p^2)^((p-2)/2) with the normal
    component from first differences (plus averaged tangential differences in
    2D); reduces exactly to `laplacian` when p = 2 and epsilon_p = 0.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if p == 2.0 and epsilon_p == 0.0:
        return laplacian(u)
    v = u.values
    h = u.grid.h
    out = np.zeros_like(v)
    expo = 0.5 * (p - 2.0)
    for ax in range(v.ndim):
        gn = _edge_normal_gradients(v, h, ax)
        g2 = gn * gn
        if v.ndim == 2:
            g2 = g2 + _edge_tangential_sq(v, h, ax)
        flux = np.power(g2 + epsilon_p * epsilon_p, expo) * gn
        body = _axis_slices(v.ndim, ax, slice(1, -1))
        e_hi = _axis_slices(v.ndim, ax, slice(1, None))
        e_lo = _axis_slices(v.ndim, ax, slice(0, -1))
        out[body] += (flux[e_hi] - flux[e_lo]) / h
    return as_field(_zero_boundary(out), u)


def upwind_gradient_squared(u: Field) -> np.ndarray:
    """Godunov/level-set upwind gradient magnitude squared.

    Per axis g2 += max(D-, 0)^2 + min(D+, 0)^2, the monotone combination for
    a convex Hamiltonian of |grad u|: consistent on smooth data, picks the
    outward slopes at a maximum and switches off at a minimum.
    """
    v = u.values
    h = u.grid.h
    g2 = np.zeros_like(v)
    for ax in range(v.ndim):
        body = _axis_slices(v.ndim, ax, slice(1, -1))
        up = _axis_slices(v.ndim, ax, slice(2, None))
        dn = _axis_slices(v.ndim, ax, slice(0, -2))
        dm = (v[body] - v[dn]) / h
        dp = (v[up] - v[body]) / h
        g2[body] += np.maximum(dm, 0.0) ** 2 + np.minimum(dp, 0.0) ** 2
    return _zero_boundary(g2)


def upwind_hamiltonian(u: Field, q: float) -> Field:
    """Monotone discretization of |grad u|^q (nonnegative, 0 on constants)."""
    if q <= 1:
        raise ValueError("q must exceed 1")
    g2 = upwind_gradient_squared(u)
    return as_field(np.power(g2, 0.5 * q), u)


def absorption(
    u: Field,
    grad_q: Field,
    lam: float,
    gamma: float,
    epsilon_u: float = 0.0,
) -> Field:
    """Zero-order absorption gamma * sign(u)|u|^lam * |grad u|^q.

    For lam = 0 the scalar Hamilton-Jacobi convention applies: the term is
    gamma * grad_q as written for nonnegative solutions. A positive epsilon_u
    turns that into the smoothed-sign variant gamma * u/max(|u|,eps) * grad_q
    for signed runs.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    g = grad_q.values
    if gamma == 0.0:
        return as_field(np.zeros_like(g), u)
    if lam == 0.0:
        if epsilon_u > 0.0:
            w = u.values / np.maximum(np.abs(u.values), epsilon_u)
            return as_field(gamma * w * g, u)
        return as_field(gamma * g, u)
    mag = np.abs(u.values)
    if epsilon_u > 0.0:
        mag = np.maximum(mag, epsilon_u)
    return as_field(gamma * np.sign(u.values) * np.power(mag, lam) * g, u)


def edge_diffusivity_max(u: Field, p: float, epsilon_p: float) -> float:
    """Max over edges of (|grad u|^2 + eps^2)^((p-2)/2); exactly 1 for p = 2."""
    if p == 2.0 and epsilon_p == 0.0:
        return 1.0
    v = u.values
    h = u.grid.h
    expo = 0.5 * (p - 2.0)
    worst = 0.0
    for ax in range(v.ndim):
        gn = _edge_normal_gradients(v, h, ax)
        g2 = gn * gn
        if v.ndim == 2:
            g2 = g2 + _edge_tangential_sq(v, h, ax)
        a = np.power(g2 + epsilon_p * epsilon_p, expo)
        worst = max(worst, float(np.max(a)) if a.size else 0.0)
    return worst
