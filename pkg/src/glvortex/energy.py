"""Discrete anisotropic Ginzburg-Landau energies on a uniform polar disk grid.

Quadrature layout (all integrals over the full disk D_R):

* ``|grad u|^2`` is split into radial edges (midpoint radius ``r_{i+1/2}``)
  and angular edges (node radius ``r_i``, half control width at ``r = R``),
  which reproduces the five-point polar Laplacian.
* ``div u`` and ``curl u`` are taken in flux form at cell centres
  ``(r_{i+1/2}, theta_{j+1/2})``.
* ``W(u)`` is integrated with nodal control-volume areas (their sum is pi R^2).

Everything quadratic is stored as sparse matrices, so the energy is
``1/2 x^T Q x + sum a W(x)`` and its gradient is exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import PolarField, SectorField, as_disk


def potential(values: np.ndarray) -> np.ndarray:
    """W(u) = (1 - |u|^2)^2 / 4."""
    s = values[..., 0] ** 2 + values[..., 1] ** 2
    return 0.25 * (1.0 - s) ** 2


def potential_gradient(values: np.ndarray) -> np.ndarray:
    s = values[..., 0] ** 2 + values[..., 1] ** 2
    return (s - 1.0)[..., None] * values


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    div_term: float
    potential: float
    total: float
    delta: float

    def as_dict(self) -> dict:
        return {
            "dirichlet": self.dirichlet,
            "div_term": self.div_term,
            "potential": self.potential,
            "total": self.total,
            "delta": self.delta,
        }


class DiskOperators:
    """Sparse difference operators and quadrature weights for one (R, Nr, M) grid."""

    def __init__(self, R: float, Nr: int, M: int):
        if Nr < 4 or M < 4:
            raise ValueError("degenerate grid: need Nr >= 4 and at least 4 angular nodes")
        self.R, self.Nr, self.M = float(R), int(Nr), int(M)
        self.dr = self.R / Nr
        self.dtheta = 2 * np.pi / M
        self.r = np.linspace(0.0, self.R, Nr + 1)
        self.size = (Nr + 1) * M * 2
        self._build()

    def index(self, i, j, c):
        return ((np.asarray(i) * self.M + np.asarray(j) % self.M) * 2 + c).astype(np.int64)

    def _build(self):
        Nr, M, dr, dt, r = self.Nr, self.M, self.dr, self.dtheta, self.r
        th = np.arange(M) * dt
        cos, sin = np.cos(th), np.sin(th)

        # radial edges (i -> i+1), both components
        I, J, C = np.meshgrid(np.arange(Nr), np.arange(M), np.arange(2), indexing="ij")
        rows = np.arange(I.size)
        Dr = sp.csr_matrix(
            (
                np.concatenate([np.full(I.size, 1 / dr), np.full(I.size, -1 / dr)]),
                (np.concatenate([rows, rows]), np.concatenate([self.index(I + 1, J, C).ravel(), self.index(I, J, C).ravel()])),
            ),
            shape=(I.size, self.size),
        )
        wr = ((r[:-1] + 0.5 * dr) * dr * dt)[:, None, None] * np.ones((1, M, 2))

        # angular edges on rings 1..Nr
        I, J, C = np.meshgrid(np.arange(1, Nr + 1), np.arange(M), np.arange(2), indexing="ij")
        rows = np.arange(I.size)
        Dt = sp.csr_matrix(
            (
                np.concatenate([np.full(I.size, 1 / dt), np.full(I.size, -1 / dt)]),
                (np.concatenate([rows, rows]), np.concatenate([self.index(I, J + 1, C).ravel(), self.index(I, J, C).ravel()])),
            ),
            shape=(I.size, self.size),
        )
        width = np.full(Nr, dr)
        width[-1] = 0.5 * dr
        wt = (width / r[1:] * dt)[:, None, None] * np.ones((1, M, 2))

        self.Q_dirichlet = (Dr.T @ sp.diags(wr.ravel()) @ Dr + Dt.T @ sp.diags(wt.ravel()) @ Dt).tocsr()

        # cell-centred divergence and curl in flux form
        I, J = np.meshgrid(np.arange(Nr), np.arange(M), indexing="ij")
        rc = (r[:-1] + 0.5 * dr)[:, None] * np.ones((1, M))
        ncell = I.size
        cell = np.arange(ncell).reshape(Nr, M)

        def polar_rows(coef_r, coef_t, ii, jj):
            """Rows contributing coef_r * u_r(ii, jj) + coef_t * u_theta(ii, jj)."""
            jm = jj % M
            c, s = cos[jm], sin[jm]
            # u_r = c u1 + s u2, u_theta = -s u1 + c u2
            v1 = coef_r * c - coef_t * s
            v2 = coef_r * s + coef_t * c
            return (
                np.concatenate([v1.ravel(), v2.ravel()]),
                np.concatenate([cell.ravel(), cell.ravel()]),
                np.concatenate([self.index(ii, jj, 0).ravel(), self.index(ii, jj, 1).ravel()]),
            )

        def flux_operator(radial_is_ur: bool):
            parts = []
            rin = r[:-1][:, None] * np.ones((1, M))
            rout = r[1:][:, None] * np.ones((1, M))
            a = 1.0 / (2 * dr * rc)
            # 1/(2 tan(dt/2)) instead of 1/dt balances the two-node angular average:
            # constant fields are then exactly div- and curl-free
            b = 1.0 / (4 * np.tan(0.5 * dt) * rc)
            sgn = 1.0 if radial_is_ur else -1.0
            for di, dj, radial in ((1, 0, rout * a), (1, 1, rout * a), (0, 0, -rin * a), (0, 1, -rin * a)):
                ang = (b if dj == 1 else -b) * sgn
                if radial_is_ur:
                    parts.append(polar_rows(radial, ang, I + di, J + dj))
                else:
                    parts.append(polar_rows(ang, radial, I + di, J + dj))
            data = np.concatenate([p[0] for p in parts])
            rr_ = np.concatenate([p[1] for p in parts])
            cc_ = np.concatenate([p[2] for p in parts])
            return sp.csr_matrix((data, (rr_, cc_)), shape=(ncell, self.size))

        self.Div = flux_operator(True)
        self.Curl = flux_operator(False)
        self.cell_area = (rc * dr * dt).ravel()
        Wc = sp.diags(self.cell_area)
        self.Q_div = (self.Div.T @ Wc @ self.Div).tocsr()
        self.Q_curl = (self.Curl.T @ Wc @ self.Curl).tocsr()

        # cell-centred d_r u and d_theta u for the Jacobian determinant
        def avg_diff(kind):
            data, rows_, cols_ = [], [], []
            for comp in range(2):
                if kind == "r":
                    terms = ((1, 0, 1), (1, 1, 1), (0, 0, -1), (0, 1, -1))
                    scale = 1 / (2 * dr)
                else:
                    terms = ((0, 1, 1), (1, 1, 1), (0, 0, -1), (1, 0, -1))
                    scale = 1 / (2 * dt)
                for di, dj, sg in terms:
                    data.append(np.full(ncell, sg * scale))
                    rows_.append(cell.ravel() * 2 + comp)
                    cols_.append(self.index(I + di, J + dj, comp).ravel())
            return sp.csr_matrix(
                (np.concatenate(data), (np.concatenate(rows_), np.concatenate(cols_))),
                shape=(2 * ncell, self.size),
            )

        self.cell_dr = avg_diff("r")
        self.cell_dt = avg_diff("t")

        # nodal control-volume areas
        a = np.empty((Nr + 1, M))
        a[0] = np.pi * (0.5 * dr) ** 2 / M
        a[1:Nr] = (r[1:Nr] * dr * dt)[:, None]
        a[Nr] = 0.5 * dr * (self.R - 0.25 * dr) * dt
        self.node_area = a

    # -- quadratures ---------------------------------------------------------

    def quadratic(self, Q, x) -> float:
        return float(x @ (Q @ x))

    def potential_integral(self, values: np.ndarray) -> float:
        return float(np.sum(self.node_area * potential(values)))

    def det_integral(self, x) -> float:
        """Quadrature of det(grad u) over the disk (cell-centred)."""
        ur = (self.cell_dr @ x).reshape(-1, 2)
        ut = (self.cell_dt @ x).reshape(-1, 2)
        cross = ur[:, 0] * ut[:, 1] - ur[:, 1] * ut[:, 0]
        return float(np.sum(cross) * self.dr * self.dtheta)

    def cell_div(self, x) -> np.ndarray:
        return (self.Div @ x).reshape(self.Nr, self.M)

    def cell_curl(self, x) -> np.ndarray:
        return (self.Curl @ x).reshape(self.Nr, self.M)


@lru_cache(maxsize=16)
def disk_operators(R: float, Nr: int, M: int) -> DiskOperators:
    return DiskOperators(R, Nr, M)


def operators_for(field: PolarField) -> DiskOperators:
    if not field.is_uniform_disk:
        raise ValueError("energies are defined on uniform disk grids only")
    return disk_operators(float(field.R), int(field.Nr), int(field.M))


def energy_E(field, delta: float) -> EnergyBreakdown:
    """E(u, D_R) = int (1-delta)/2 |grad u|^2 + delta (div u)^2 + W(u)."""
    disk = as_disk(field)
    ops = operators_for(disk)
    x = disk.values.ravel()
    dirichlet = 0.5 * (1 - delta) * ops.quadratic(ops.Q_dirichlet, x)
    div_term = delta * ops.quadratic(ops.Q_div, x)
    pot = ops.potential_integral(disk.values)
    return EnergyBreakdown(dirichlet, div_term, pot, dirichlet + div_term + pot, float(delta))


def energy_F(field, delta: float) -> float:
    """F(u, D_R) = int 1/2 |grad u|^2 + delta/2 ((div u)^2 - (curl u)^2) + W(u)."""
    disk = as_disk(field)
    ops = operators_for(disk)
    x = disk.values.ravel()
    return (
        0.5 * ops.quadratic(ops.Q_dirichlet, x)
        + 0.5 * delta * (ops.quadratic(ops.Q_div, x) - ops.quadratic(ops.Q_curl, x))
        + ops.potential_integral(disk.values)
    )


def det_integral(field) -> float:
    disk = as_disk(field)
    return operators_for(disk).det_integral(disk.values.ravel())


def full_gradient(disk: PolarField, delta: float) -> np.ndarray:
    """dE/dx for every entry of ``disk.values`` (origin copies counted separately)."""
    ops = operators_for(disk)
    x = disk.values.ravel()
    g = (1 - delta) * (ops.Q_dirichlet @ x) + 2 * delta * (ops.Q_div @ x)
    g += (ops.node_area[..., None] * potential_gradient(disk.values)).ravel()
    return g


# --- degrees of freedom -------------------------------------------------------


@lru_cache(maxsize=16)
def _sector_map(R: float, Nr: int, Ntheta: int, d: int) -> sp.csr_matrix:
    """Sparse P with x_full = P y for the interior sector unknowns y.

    y is ordered (i = 1..Nr-1, j = 0..Ntheta-1, component); copy k of the
    sector is rotated by k d pi / n.
    """
    n = 1 - d
    M = 2 * n * Ntheta
    ops = disk_operators(R, Nr, M)
    I, J = np.meshgrid(np.arange(1, Nr), np.arange(Ntheta), indexing="ij")
    ydof = ((I - 1) * Ntheta + J) * 2
    rows, cols, data = [], [], []
    for k in range(2 * n):
        a = k * d * np.pi / n
        c, s = np.cos(a), np.sin(a)
        jj = J + k * Ntheta
        for comp_out, coefs in ((0, (c, -s)), (1, (s, c))):
            for comp_in, coef in enumerate(coefs):
                if coef == 0.0:
                    continue
                rows.append(ops.index(I, jj, comp_out).ravel())
                cols.append((ydof + comp_in).ravel())
                data.append(np.full(I.size, coef))
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ops.size, (Nr - 1) * Ntheta * 2),
    )


def dof_map(field) -> sp.csr_matrix:
    """Map from free unknowns to the flattened full-disk values."""
    if isinstance(field, SectorField):
        return _sector_map(float(field.R), int(field.Nr), int(field.Ntheta), int(field.symmetry.d))
    disk = as_disk(field)
    ops = operators_for(disk)
    I, J, C = np.meshgrid(np.arange(1, disk.Nr), np.arange(disk.M), np.arange(2), indexing="ij")
    cols = np.arange(I.size)
    return sp.csr_matrix((np.ones(I.size), (ops.index(I, J, C).ravel(), cols)), shape=(ops.size, I.size))


def free_dofs(field) -> np.ndarray:
    if isinstance(field, SectorField):
        return field.values[1:-1, :-1].reshape(-1).copy()
    return as_disk(field).values[1:-1].reshape(-1).copy()


def with_free_dofs(field, y: np.ndarray):
    vals = field.values.copy()
    if isinstance(field, SectorField):
        vals[1:-1, :-1] = np.asarray(y).reshape(field.Nr - 1, field.Ntheta, 2)
        # keep the closing column consistent with the twisted gluing rule
        z = vals[:, 0, 0] + 1j * vals[:, 0, 1]
        zc = np.exp(1j * field.symmetry.d * np.pi / field.n) * z
        vals[1:-1, -1, 0] = zc.real[1:-1]
        vals[1:-1, -1, 1] = zc.imag[1:-1]
        return field.with_values(vals)
    disk = as_disk(field)
    vals[1:-1] = np.asarray(y).reshape(disk.Nr - 1, disk.M, 2)
    return field.with_values(vals)


def energy_gradient(field, delta: float) -> np.ndarray:
    """Exact gradient of energy_E(...).total with respect to the free unknowns.

    The origin and the outer ring r = R are held fixed.  For sector fields the
    twisted gluing enters through the chain rule.
    """
    disk = as_disk(field)
    return dof_map(field).T @ full_gradient(disk, delta)


def energy_and_gradient(field, delta: float) -> tuple[float, np.ndarray]:
    disk = as_disk(field)
    ops = operators_for(disk)
    x = disk.values.ravel()
    qx = (1 - delta) * (ops.Q_dirichlet @ x) + 2 * delta * (ops.Q_div @ x)
    value = 0.5 * float(x @ qx) + ops.potential_integral(disk.values)
    g = qx + (ops.node_area[..., None] * potential_gradient(disk.values)).ravel()
    return value, dof_map(field).T @ g
