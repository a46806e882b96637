"""The equivariant circle problem that supplies the Dirichlet datum zeta.

zeta = alpha e^{i psi} with psi = d theta + phi, where phi is pi/n-periodic
and odd (the reflection constraint u(conj z) = +-conj u(z) forces
psi(-theta) = -psi(theta)).  The energy density reduces to

    plus:  psi'^2 / 2 (1 + delta cos(2 theta - 2 psi))
    minus: psi'^2 / 2 (1 - delta cos(2 theta - 2 psi))

and is discretized on the edges (theta_m, theta_{m+1}) with the midpoint rule,
so the discrete Euler-Lagrange equation is the centred scheme for
d/dtheta[a psi'] = s delta sin(2 theta - 2 psi) psi'^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .symmetry import SIGNS, CircleTrace, SymmetryClass


class UndersampledPhase(ValueError):
    pass


class CircleNonConvergence(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class BoundaryPhase:
    psi: np.ndarray
    d: int
    sign: str = "plus"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be 'plus' or 'minus', got {self.sign!r}")
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))

    @classmethod
    def from_phi(cls, phi, d: int, sign: str = "plus", meta=None) -> "BoundaryPhase":
        phi = np.asarray(phi, dtype=float)
        th = 2 * np.pi * np.arange(phi.size) / phi.size
        return cls(d * th + phi, d, sign, dict(meta or {}))

    @property
    def M(self) -> int:
        return self.psi.size

    @property
    def n(self) -> int:
        return 1 - self.d

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def phi(self) -> np.ndarray:
        return self.psi - self.d * self.theta

    @property
    def alpha(self) -> complex:
        return 1.0 if self.sign == "plus" else 1j

    def symmetry_residual(self) -> float:
        """Departure of phi from the odd, pi/n-periodic subspace."""
        return float(np.max(np.abs(self.phi - project_phi(self.phi, self.n))))


@dataclass(frozen=True)
class CircleEnergyValue:
    value: float
    el_residual: float


def _sign_factor(sign: str) -> float:
    return 1.0 if sign == "plus" else -1.0


def _check_samples(M: int, n: int) -> None:
    if M < 8 * n:
        raise UndersampledPhase(f"undersampled phase: M = {M} < 8n = {8 * n}")


def _edges(psi: np.ndarray, d: int):
    """Edge increments and midpoint phases, closing the loop with psi_M = psi_0 + 2 pi d."""
    M = psi.size
    nxt = np.append(psi[1:], psi[0] + 2 * np.pi * d)
    dpsi = nxt - psi
    mid_psi = 0.5 * (nxt + psi)
    mid_theta = 2 * np.pi * (np.arange(M) + 0.5) / M
    return dpsi, mid_psi, mid_theta


def _energy_and_grad(psi: np.ndarray, d: int, s: float, delta: float):
    M = psi.size
    h = 2 * np.pi / M
    dpsi, mpsi, mth = _edges(psi, d)
    arg = 2 * mth - 2 * mpsi
    a = 1 + s * delta * np.cos(arg)
    E = float(np.sum(dpsi**2 * a) / (2 * h))
    # dE/dpsi_m collects the edges m (as left end) and m-1 (as right end)
    flux = dpsi * a / h
    src = s * delta * np.sin(arg) * dpsi**2 / (2 * h)
    g = -flux + np.roll(flux, 1) + src + np.roll(src, 1)
    return E, g


def circle_energy(phase: BoundaryPhase, delta: float) -> float:
    _check_samples(phase.M, phase.n)
    return _energy_and_grad(phase.psi, phase.d, _sign_factor(phase.sign), delta)[0]


def circle_el_residual(phase: BoundaryPhase, delta: float) -> float:
    """sup |d/dtheta[a psi'] - s delta sin(2 theta - 2 psi) psi'^2| in centred differences."""
    _check_samples(phase.M, phase.n)
    h = 2 * np.pi / phase.M
    g = _energy_and_grad(phase.psi, phase.d, _sign_factor(phase.sign), delta)[1]
    return float(np.max(np.abs(g)) / h)


def circle_value(phase: BoundaryPhase, delta: float) -> CircleEnergyValue:
    return CircleEnergyValue(circle_energy(phase, delta), circle_el_residual(phase, delta))


# --- the reduced parameterization ------------------------------------------------


def project_phi(phi: np.ndarray, n: int) -> np.ndarray:
    """Average phi over the pi/n shifts and the reflection theta -> -theta (odd part)."""
    M = phi.size
    if M % (2 * n):
        raise ValueError(f"M = {M} is not a multiple of 2n = {2 * n}")
    step = M // (2 * n)
    acc = np.zeros(M)
    for k in range(2 * n):
        shifted = np.roll(phi, -k * step)
        acc += shifted - np.roll(shifted[::-1], 1)
    return acc / (4 * n)


def _expansion(M: int, n: int) -> np.ndarray:
    """Matrix P (M x K) with phi = P y for the free samples y = phi_1..phi_K.

    Free samples sit strictly inside the quarter sector (0, pi/(2n)); phi
    vanishes at multiples of pi/(2n).
    """
    q = M // (4 * n)
    K = q - 1
    P = np.zeros((M, K))
    m = np.arange(M)
    period = M // (2 * n)
    t = m % period  # position within one period [0, pi/n)
    for k in range(1, q):
        P[t == k, k - 1] = 1.0
        P[t == period - k, k - 1] = -1.0
    return P


def _polish(y, fun_grad, P, h, tol, max_newton=30):
    """Newton iterations with a finite-difference Hessian of the analytic gradient."""
    def reduced_grad(z):
        return P.T @ fun_grad(P @ z)[1]

    for _ in range(max_newton):
        g = reduced_grad(y)
        full_res = np.max(np.abs(fun_grad(P @ y)[1])) / h
        if full_res <= tol:
            break
        eps = 1e-6
        H = np.empty((y.size, y.size))
        for k in range(y.size):
            e = np.zeros_like(y)
            e[k] = eps
            H[:, k] = (reduced_grad(y + e) - reduced_grad(y - e)) / (2 * eps)
        H = 0.5 * (H + H.T)
        step = np.linalg.solve(H, -g)
        E0 = fun_grad(P @ y)[0]
        lam = 1.0
        while lam > 1e-8 and fun_grad(P @ (y + lam * step))[0] > E0 + 1e-14 * abs(E0):
            lam *= 0.5
        y = y + lam * step
    return y


@dataclass
class CircleSolution:
    phase: BoundaryPhase
    value: CircleEnergyValue
    starts: list  # (start amplitude, C, residual) for every start
    disagreement: float  # spread of the multi-start minima

    @property
    def C(self) -> float:
        return self.value.value


def minimize_circle(d: int, sign: str, delta: float, M: int = 256, tol: float = 1e-9,
                    max_iter: int = 2000, starts=(0.0, 0.2, -0.2)) -> CircleSolution:
    """Minimize the circle energy over odd, pi/n-periodic phi.

    Runs quasi-Newton from phi = a sin(2 n theta) for every ``a`` in ``starts``,
    polishes with Newton, and returns the lowest minimum.  Minima from
    different starts that disagree beyond ``tol`` are reported through
    ``disagreement``.
    """
    cls = SymmetryClass(d, sign)
    n = cls.n
    if not (-1 < delta < 1):
        raise ValueError("delta must lie in (-1, 1)")
    if M % (4 * n):
        raise ValueError(f"M = {M} must be a multiple of 4n = {4 * n}")
    _check_samples(M, n)
    s = _sign_factor(sign)
    h = 2 * np.pi / M
    th = h * np.arange(M)
    P = _expansion(M, n)

    def fun_grad(phi):
        return _energy_and_grad(d * th + phi, d, s, delta)

    def fg(y):
        E, g = fun_grad(P @ y)
        return E, P.T @ g

    results = []
    for a in starts:
        y0 = a * np.sin(2 * n * th[1: P.shape[1] + 1])
        if y0.size:
            opt = minimize(fg, y0, jac=True, method="L-BFGS-B",
                           options={"maxiter": max_iter, "gtol": 1e-13, "ftol": 1e-16})
            y = _polish(opt.x, fun_grad, P, h, tol)
        else:
            y = y0
        phase = BoundaryPhase.from_phi(P @ y if y.size else np.zeros(M), d, sign)
        results.append((a, phase, circle_value(phase, delta)))

    results.sort(key=lambda t: (t[2].value, abs(t[0])))
    best_a, best, val = results[0]
    spread = max(r[2].value for r in results) - val.value
    sol = CircleSolution(
        BoundaryPhase(best.psi, d, sign, {"delta": float(delta), "M": M, "C": val.value}),
        val,
        [(a, v.value, v.el_residual) for a, _, v in results],
        float(spread),
    )
    if val.el_residual > tol:
        raise CircleNonConvergence(
            f"circle problem did not converge: EL residual {val.el_residual:.3g} > tol {tol:.3g}", sol
        )
    return sol


def boundary_field(phase: BoundaryPhase, radius: float = 1.0) -> CircleTrace:
    z = phase.alpha * np.exp(1j * phase.psi)
    return CircleTrace(np.stack([z.real, z.imag], axis=-1), radius)


def resample_phase(phase: BoundaryPhase, M: int) -> BoundaryPhase:
    """Periodic linear interpolation of phi onto M nodes (exact when M divides the source)."""
    src = phase.M
    if src % M == 0:
        phi = phase.phi[:: src // M]
    else:
        th = 2 * np.pi * np.arange(M) / M
        ext = np.append(phase.phi, phase.phi[0])
        phi = np.interp(th, 2 * np.pi * np.arange(src + 1) / src, ext)
    return BoundaryPhase.from_phi(phi, phase.d, phase.sign, phase.meta)
