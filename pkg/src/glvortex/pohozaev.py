"""Euler-Lagrange residual, stress-energy tensor and Pohozaev identities.

Pointwise derivatives come from the fourth-order stencils in ``derivatives``;
off-grid values (circles and disks that are not centred on the grid) use
bilinear interpolation of the nodal data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .derivatives import cartesian_derivatives
from .energy import potential
from .grid import PolarField, SectorField, as_disk, interpolate_array


def _rewrap(field, disk: PolarField, values: np.ndarray):
    out = PolarField(disk.r, values, disk.symmetry)
    if isinstance(field, SectorField):
        return SectorField.from_disk(out, field.symmetry, field.meta)
    return out


def el_residual(field, delta: float):
    """(1-delta) Lap u + 2 delta grad(div u) - (|u|^2 - 1) u at every node.

    Returned in the same container as ``field``; the origin and the outer
    ring carry zeros (the residual is only defined at interior nodes).
    """
    disk = as_disk(field)
    u = disk.values
    D = cartesian_derivatives(disk.r, u)
    lap = D.fxx + D.fyy
    grad_div = np.stack([D.fxx[..., 0] + D.fxy[..., 1], D.fxy[..., 0] + D.fyy[..., 1]], axis=-1)
    s = u[..., 0] ** 2 + u[..., 1] ** 2
    res = (1 - delta) * lap + 2 * delta * grad_div - (s - 1)[..., None] * u
    res[0] = 0.0
    res[-1] = 0.0
    return _rewrap(field, disk, res)


def el_residual_norm(field, delta: float) -> float:
    return float(np.max(np.abs(as_disk(el_residual(field, delta)).values)))


@dataclass(frozen=True)
class StressTensorField:
    """Nodal components of T(u, grad u); arrays of shape (Nr+1, M)."""

    r: np.ndarray
    T11: np.ndarray
    T12: np.ndarray
    T21: np.ndarray
    T22: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.stack([np.stack([self.T11, self.T12], -1), np.stack([self.T21, self.T22], -1)], -2)


def _tensor_from_derivatives(u, ux, uy, delta):
    """ux, uy: Cartesian partials of both components, shape (..., 2)."""
    W = potential(u)
    p1 = np.sum(ux * ux, axis=-1)  # |d1 u|^2
    p2 = np.sum(uy * uy, axis=-1)
    g1 = ux[..., 0] ** 2 + uy[..., 0] ** 2  # |grad u1|^2
    g2 = ux[..., 1] ** 2 + uy[..., 1] ** 2
    cross = np.sum(ux * uy, axis=-1)
    gg = ux[..., 0] * ux[..., 1] + uy[..., 0] * uy[..., 1]
    div = ux[..., 0] + uy[..., 1]
    curl = ux[..., 1] - uy[..., 0]
    T11 = 0.5 * (p1 - p2) + 0.5 * delta * (g1 - g2) - W
    T22 = 0.5 * (p2 - p1) + 0.5 * delta * (g2 - g1) - W
    T12 = cross + delta * gg + delta * div * curl
    T21 = cross + delta * gg - delta * div * curl
    return T11, T12, T21, T22


def stress_tensor(field, delta: float) -> StressTensorField:
    disk = as_disk(field)
    D = cartesian_derivatives(disk.r, disk.values, second=False)
    return StressTensorField(disk.r, *_tensor_from_derivatives(disk.values, D.fx, D.fy, delta))


def div_T(field, delta: float) -> np.ndarray:
    """Row divergence d_j T_ij by differentiating the nodal tensor, shape (Nr+1, M, 2)."""
    disk = as_disk(field)
    T = stress_tensor(disk, delta)
    rows = np.stack([np.stack([T.T11, T.T12], -1), np.stack([T.T21, T.T22], -1)], -2)
    # rows[..., i, j] = T_ij; differentiate the 4 components at once
    D = cartesian_derivatives(disk.r, rows.reshape(rows.shape[0], rows.shape[1], 4), second=False)
    dx = D.fx.reshape(rows.shape)
    dy = D.fy.reshape(rows.shape)
    return dx[..., 0] + dy[..., 1]


def div_T_norm(field, delta: float) -> float:
    """sup |div T| over nodes strictly between the origin and the outer ring."""
    return float(np.max(np.linalg.norm(div_T(field, delta)[1:-1], axis=-1)))


# --- Pohozaev identities ------------------------------------------------------


@dataclass(frozen=True)
class PohozaevReport:
    center: tuple
    radius: float
    lhs1: float
    rhs1: float
    residual1: float
    lhs2: float
    rhs2: float
    residual2: float
    quadrature_order: int
    scale1: float = 0.0  # integral of absolute integrands, used for relative residuals
    scale2: float = 0.0

    @property
    def relative1(self) -> float:
        return self.residual1 / self.scale1 if self.scale1 > 0 else 0.0

    @property
    def relative2(self) -> float:
        return self.residual2 / self.scale2 if self.scale2 > 0 else 0.0

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "radius", "lhs1", "rhs1", "residual1", "lhs2", "rhs2", "residual2", "quadrature_order",
        )}
        out["center_x"], out["center_y"] = self.center
        out["relative1"] = self.relative1
        out["relative2"] = self.relative2
        return out


def _nodal_data(disk: PolarField) -> np.ndarray:
    """Stack (u, u_x, u_y) as 6 channels for interpolation."""
    D = cartesian_derivatives(disk.r, disk.values, second=False)
    return np.concatenate([disk.values, D.fx, D.fy], axis=-1)


def _sample(disk: PolarField, data: np.ndarray, x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    vals = interpolate_array(disk.r, data, np.hypot(x, y).ravel(), np.arctan2(y, x).ravel())
    vals = vals.reshape(x.shape + (data.shape[-1],))
    return vals[..., 0:2], vals[..., 2:4], vals[..., 4:6]


def circle_integrands(u, ux, uy, c, s, delta):
    """Pointwise boundary integrands of both identities at x0 + r (c, s).

    Returns (poz1 terms, poz2 terms): poz1 as (W, a_tt, a_tr, a_rr, a_rt) with
    integrand W + a_tt + a_tr - a_rr - a_rt; poz2 as (b_dc, b_grad, b_rt)
    with integrand b_dc - b_grad - b_rt.
    """
    er = np.stack([c, s], -1)
    et = np.stack([-s, c], -1)
    dr = c[..., None] * ux + s[..., None] * uy
    dt = -s[..., None] * ux + c[..., None] * uy
    W = potential(u)
    a_tt = 0.5 * (1 + delta) * np.sum(dt * et, -1) ** 2
    a_tr = 0.5 * (1 - delta) * np.sum(dt * er, -1) ** 2
    a_rr = 0.5 * (1 + delta) * np.sum(dr * er, -1) ** 2
    a_rt = 0.5 * (1 - delta) * np.sum(dr * et, -1) ** 2
    div = ux[..., 0] + uy[..., 1]
    curl = ux[..., 1] - uy[..., 0]
    # gradients of u.e_r and u.e_theta with the frames frozen at the point
    g1 = np.stack([ux[..., 0], uy[..., 0]], -1)
    g2 = np.stack([ux[..., 1], uy[..., 1]], -1)
    grad_r = c[..., None] * g1 + s[..., None] * g2
    grad_t = -s[..., None] * g1 + c[..., None] * g2
    b_dc = delta * div * curl
    b_grad = delta * np.sum(grad_r * grad_t, -1)
    b_rt = np.sum(dr * dt, -1)
    return (W, a_tt, a_tr, a_rr, a_rt), (b_dc, b_grad, b_rt)


def pohozaev(field, delta: float, center=(0.0, 0.0), radius: float | None = None,
             quadrature_order: int = 4, n_angles: int | None = None) -> PohozaevReport:
    """Both sides of the two Pohozaev identities on the disk D_radius(center).

    Circle integrals use the trapezoidal rule; the area integrals use polar
    coordinates about the centre with composite Gauss-Legendre panels in the
    radius (``quadrature_order`` nodes per panel of width about one grid step).
    """
    disk = as_disk(field)
    cx, cy = float(center[0]), float(center[1])
    rho = 0.5 * disk.R if radius is None else float(radius)
    if rho <= 0:
        raise ValueError("radius must be positive")
    if np.hypot(cx, cy) + rho > disk.R * (1 + 1e-12):
        raise ValueError(
            f"disk exits domain: |center| + radius = {np.hypot(cx, cy) + rho:.4g} > R = {disk.R:.4g}"
        )
    data = _nodal_data(disk)
    K = n_angles or max(4 * disk.M, 64)
    phi = 2 * np.pi * np.arange(K) / K
    c, s = np.cos(phi), np.sin(phi)

    # boundary terms
    u, ux, uy = _sample(disk, data, cx + rho * c, cy + rho * s)
    t1, t2 = circle_integrands(u, ux, uy, c, s, delta)
    # r * (line integral) with ds = r dphi
    w_circ = rho * rho * (2 * np.pi / K)
    circ = [w_circ * float(np.sum(t)) for t in t1]
    circ2 = [w_circ * float(np.sum(t)) for t in t2]
    rhs1 = circ[0] + circ[1] + circ[2] - circ[3] - circ[4]
    rhs2 = circ2[0] - circ2[1] - circ2[2]

    # area terms
    panels = max(int(np.ceil(rho / disk.dr)), 2)
    gx, gw = np.polynomial.legendre.leggauss(quadrature_order)
    edges = np.linspace(0.0, rho, panels + 1)
    half = 0.5 * np.diff(edges)
    radii = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    X = cx + radii[:, None] * c[None, :]
    Y = cy + radii[:, None] * s[None, :]
    u, ux, uy = _sample(disk, data, X, Y)
    jac = (weights * radii)[:, None] * (2 * np.pi / K)
    int_W = float(np.sum(jac * potential(u)))
    dc = (ux[..., 0] + uy[..., 1]) * (ux[..., 1] - uy[..., 0])
    int_dc = float(np.sum(jac * dc))
    lhs1 = 2 * int_W
    lhs2 = 2 * delta * int_dc

    # scales: integrals of the absolute integrands, so that an identity whose
    # terms all vanish pointwise still gets a meaningful relative residual
    scale1 = 2 * float(np.sum(jac * potential(u))) + w_circ * sum(float(np.sum(np.abs(t))) for t in t1)
    scale2 = 2 * abs(delta) * float(np.sum(jac * np.abs(dc))) + w_circ * sum(
        float(np.sum(np.abs(t))) for t in t2)
    return PohozaevReport(
        (cx, cy), rho, lhs1, rhs1, abs(lhs1 - rhs1), lhs2, rhs2, abs(lhs2 - rhs2),
        int(quadrature_order), scale1, scale2,
    )
