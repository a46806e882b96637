"""Explicit multi-vortex comparison maps and the annulus interpolation.

The comparison map on D_{1/2} has a vortex of degree d at the origin and
2n N satellites of degree +1 at x_{j,k} = e^{i k pi / n} j / (4N).  Its
modulus is the product of the collars min(|z - a| / (rho eps), 1) and its
phase is the product of the unit factors ((z - a) / |z - a|)^{deg a}.  This
phase product is exactly mu_d^+-equivariant (the satellites are placed
symmetrically), so the minus class is obtained by multiplying by i.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PolarField, SectorField
from .symmetry import CircleTrace, SymmetryClass, winding_number


@dataclass(frozen=True)
class ComparisonMapSpec:
    d: int
    N: int = 0
    epsilon: float = 1e-2
    rho: float | None = None
    sign: str = "plus"

    def __post_init__(self):
        if int(self.d) != self.d or self.d > -1:
            raise ValueError(f"degree parameter must be an integer <= -1, got {self.d}")
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a nonnegative integer, got {self.N}")
        if not (0 < self.epsilon < 1):
            raise ValueError(f"epsilon must lie in (0, 1) so the collars fit the rho-disks, got {self.epsilon}")
        if self.rho is None:
            object.__setattr__(self, "rho", 0.5 if self.N == 0 else 1.0 / (16 * self.N * self.n))
        self.check_disjoint()

    @property
    def n(self) -> int:
        return 1 - self.d

    @property
    def D(self) -> int:
        return self.d + 2 * self.n * self.N

    def centers(self) -> np.ndarray:
        """Complex vortex centres, origin first, then (j, k) in lexicographic order."""
        pts = [0.0 + 0.0j]
        for j in range(1, self.N + 1):
            lam = j / (4 * self.N)
            for k in range(2 * self.n):
                pts.append(lam * np.exp(1j * k * np.pi / self.n))
        return np.array(pts)

    def degrees(self) -> np.ndarray:
        return np.array([self.d] + [1] * (2 * self.n * self.N))

    def check_disjoint(self) -> None:
        if self.N == 0:
            return
        c = self.centers()
        gap = np.abs(c[:, None] - c[None, :]) + np.eye(c.size) * 10
        if np.min(gap) <= 4 * self.rho:
            raise ValueError("the disks D_{2 rho} around the vortices overlap")
        if np.max(np.abs(c)) + 2 * self.rho >= 0.5:
            raise ValueError("a vortex disk D_{2 rho} leaves D_{1/2}")


def _collar(dist, core):
    return np.minimum(dist / core, 1.0)


def comparison_jet(spec: ComparisonMapSpec, z: np.ndarray):
    """Values and Cartesian gradients of the comparison map at complex points z.

    Returns (u, ux, uy) as complex arrays (u = u1 + i u2).
    """
    z = np.asarray(z, dtype=complex)
    core = spec.rho * spec.epsilon
    mod = np.ones(z.shape)
    grad_mod = np.zeros(z.shape, dtype=complex)  # d_x + i d_y of the modulus
    phase = np.ones(z.shape, dtype=complex)
    grad_phi = np.zeros(z.shape, dtype=complex)  # d_x Phi + i d_y Phi
    for a, deg in zip(spec.centers(), spec.degrees()):
        w = z - a
        dist = np.abs(w)
        safe = np.where(dist > 0, dist, 1.0)
        unit = np.where(dist > 0, w / safe, 1.0)
        phase = phase * unit**deg
        # grad of arg(w) is (-y, x) / |w|^2, i.e. i w / |w|^2 in complex form
        grad_phi = grad_phi + deg * np.where(dist > 0, 1j * w / safe**2, 0.0)
        m = _collar(dist, core)
        inside = dist < core
        grad_mod = grad_mod * m + mod * np.where(inside, unit / core, 0.0)
        mod = mod * m
    alpha = 1.0 if spec.sign == "plus" else 1j
    u = alpha * mod * phase
    # d_x u = (d_x mod + i mod d_x Phi) e^{i Phi}, same for y
    ux = alpha * (grad_mod.real + 1j * mod * grad_phi.real) * phase
    uy = alpha * (grad_mod.imag + 1j * mod * grad_phi.imag) * phase
    return u, ux, uy


def comparison_values(spec: ComparisonMapSpec, z) -> np.ndarray:
    u = comparison_jet(spec, z)[0]
    return np.stack([u.real, u.imag], axis=-1)


def construct_comparison(spec: ComparisonMapSpec, Nr: int = 128, Ntheta: int = 128) -> SectorField:
    """Sample the comparison map on the sector grid over D_{1/2}."""
    return construct_comparison_on(spec, 0.5, Nr, Ntheta, SymmetryClass(spec.d, spec.sign))


def construct_comparison_on(spec: ComparisonMapSpec, R: float, Nr: int, Ntheta: int,
                            symmetry: SymmetryClass) -> SectorField:
    """The comparison map rescaled from D_{1/2} to D_R, on a sector grid."""
    if symmetry.d != spec.d:
        raise ValueError("class mismatch between the comparison map and the grid")
    spec = ComparisonMapSpec(spec.d, spec.N, spec.epsilon, spec.rho, symmetry.sign)
    r = np.linspace(0.0, R, Nr + 1)
    th = np.arange(Ntheta + 1) * np.pi / (symmetry.n * Ntheta)
    z = (r[:, None] * np.exp(1j * th)[None, :]) * (0.5 / R)
    vals = comparison_values(spec, z)
    vals[0] = 0.0
    return SectorField(symmetry, R, Nr, Ntheta, vals, {"N": spec.N, "epsilon": spec.epsilon})


# --- energies -------------------------------------------------------------------


def _density(u, ux, uy, eps, delta):
    grad2 = np.abs(ux) ** 2 + np.abs(uy) ** 2
    W = 0.25 * (1 - np.abs(u) ** 2) ** 2
    if delta is None:
        return 0.5 * grad2 + W / eps**2
    div = ux.real + uy.imag
    return 0.5 * (1 - delta) * grad2 + delta * div**2 + W / eps**2


def comparison_energy(spec: ComparisonMapSpec, delta: float | None = None, core_nodes: int = 16,
                      n_angles: int = 256, nodes_per_decade: int = 24, outer_nodes: int = 400) -> float:
    """int_{D_{1/2}} e(u) + W(u) / eps^2 with locally refined quadrature.

    ``delta=None`` gives the isotropic density |grad u|^2 / 2; a number gives
    the density (1-delta)/2 |grad u|^2 + delta (div u)^2.  Around every
    vortex: Gauss-Legendre in r on the core [0, rho eps] and in log r on
    [rho eps, rho]; the rest of D_{1/2} uses a fine polar grid with the
    vortex disks masked out (that part does not depend on eps).
    """
    eps = spec.epsilon
    core = spec.rho * eps
    if core_nodes < 8:
        raise ValueError(f"unresolved collar: {core_nodes} radial nodes across rho eps (need >= 8)")
    gx, gw = np.polynomial.legendre.leggauss(core_nodes)
    phi = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    e_phi = np.exp(1j * phi)
    dphi = 2 * np.pi / n_angles
    total = 0.0

    def ring_integral(radii, weights, center):
        z = center + radii[:, None] * e_phi[None, :]
        dens = _density(*comparison_jet(spec, z), eps, delta)
        return float(np.sum(dens * (weights * radii)[:, None]) * dphi)

    for a in spec.centers():
        # core disk
        r = 0.5 * core * (gx + 1)
        total += ring_integral(r, 0.5 * core * gw, a)
        # log-spaced annulus rho eps < r < rho
        decades = np.log10(spec.rho / core)
        panels = max(int(np.ceil(decades * nodes_per_decade / core_nodes)), 1)
        edges = np.linspace(np.log(core), np.log(spec.rho), panels + 1)
        half = 0.5 * np.diff(edges)
        s = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
        w = (half[:, None] * gw[None, :]).ravel()
        r = np.exp(s)
        total += ring_integral(r, w * r, a)

    if spec.N > 0:
        # D_{1/2} minus the rho-disks, midpoint rule on a polar grid
        nr = outer_nodes
        r = (np.arange(nr) + 0.5) * 0.5 / nr
        th = 2 * np.pi * (np.arange(4 * nr) + 0.5) / (4 * nr)
        z = r[:, None] * np.exp(1j * th)[None, :]
        mask = np.ones(z.shape, dtype=bool)
        for a in spec.centers():
            mask &= np.abs(z - a) >= spec.rho
        dens = _density(*comparison_jet(spec, z), eps, delta)
        total += float(np.sum(np.where(mask, dens, 0.0) * r[:, None]) * (0.5 / nr) * (2 * np.pi / (4 * nr)))
    return total


@dataclass
class EnergyCurve:
    epsilons: np.ndarray
    energies: np.ndarray
    slope: float
    intercept: float
    target: float  # pi (d^2 + |D - d|)


def comparison_energy_curve(d: int, N: int, epsilons=(1e-2, 1e-3, 1e-4), delta: float | None = None,
                            **quad) -> EnergyCurve:
    """Energies over an epsilon family and the least-squares slope against ln(1/eps)."""
    eps = np.asarray(sorted(epsilons, reverse=True), dtype=float)
    if eps.size < 2:
        raise ValueError("need at least two epsilon values")
    vals = np.array([comparison_energy(ComparisonMapSpec(d, N, e), delta, **quad) for e in eps])
    slope, intercept = np.polyfit(np.log(1 / eps), vals, 1)
    D = d + 2 * (1 - d) * N
    return EnergyCurve(eps, vals, float(slope), float(intercept), float(np.pi * (d * d + abs(D - d))))


# --- annulus interpolation -----------------------------------------------------


@dataclass
class AnnulusField:
    field: PolarField  # rings from R/2 to R
    energy: float
    D: int
    delta: float


def annulus_interpolation(outer: CircleTrace, D: int | None = None, delta: float = 0.0,
                          alpha: complex = 1.0, Nr: int = 64, quad_nodes: int = 8) -> AnnulusField:
    """Log-linear interpolation between alpha e^{i D theta} on r = R/2 and the trace on r = R.

    With t = ln(2r/R) / ln 2, the modulus is 1 + t (rho_k - 1) and the phase
    D theta + t phi_k, where the trace is alpha rho_k e^{i(D theta + phi_k)}.
    """
    R = float(outer.radius)
    z = outer.complex() / alpha
    wind = winding_number(CircleTrace(outer.samples, R))
    if D is None:
        D = wind
    elif D != wind:
        raise ValueError(f"outer trace winds {wind} times, expected {D}")
    M = outer.M
    th = outer.theta
    rho_k = np.abs(z)
    steps = np.angle(np.roll(z, -1) / z)
    psi = np.angle(z[0]) + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    phi_k = psi - D * th
    # spectral angular derivatives of the periodic data
    k = np.fft.fftfreq(M, 1.0 / M)
    d_rho = np.real(np.fft.ifft(1j * k * np.fft.fft(rho_k)))
    d_phi = np.real(np.fft.ifft(1j * k * np.fft.fft(phi_k)))
    ln2 = np.log(2.0)

    def jet(r):
        t = np.log(2 * r / R) / ln2
        t = t[:, None]
        rr = r[:, None]
        mod = 1 + t * (rho_k - 1)
        Psi = D * th + t * phi_k
        e = alpha * np.exp(1j * Psi)
        u = mod * e
        u_r = ((rho_k - 1) / (rr * ln2) + 1j * mod * phi_k / (rr * ln2)) * e
        u_t = (t * d_rho + 1j * mod * (D + t * d_phi)) * e
        c, s = np.cos(th), np.sin(th)
        ux = c * u_r - s / rr * u_t
        uy = s * u_r + c / rr * u_t
        return u, ux, uy

    r_nodes = np.linspace(0.5 * R, R, Nr + 1)
    u = jet(r_nodes)[0]
    field = PolarField(r_nodes, np.stack([u.real, u.imag], axis=-1))

    gx, gw = np.polynomial.legendre.leggauss(quad_nodes)
    edges = r_nodes
    half = 0.5 * np.diff(edges)
    rq = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1)).ravel()
    wq = (half[:, None] * gw[None, :]).ravel()
    uq, uxq, uyq = jet(rq)
    dens = _density(uq, uxq, uyq, 1.0, float(delta))
    energy = float(np.sum(dens * (wq * rq)[:, None]) * (2 * np.pi / M))
    return AnnulusField(field, energy, int(D), float(delta))
