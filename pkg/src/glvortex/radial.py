"""Isotropic radial vortex profiles eta_d and the exact radial solution families.

eta solves  eta'' + eta'/r - d^2 eta / r^2 + (1 - eta^2) eta = 0,
eta(0) = 0, eta(R_max) = 1  (far field truncated at R_max).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .grid import PolarField, SectorField
from .symmetry import SymmetryClass


class NewtonDivergence(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class RadialProfile:
    d: int
    r_nodes: np.ndarray
    eta: np.ndarray
    residual: float = 0.0
    tol: float = 0.0
    iterations: int = 0
    evaluator: object = field(default=None, repr=False, compare=False)
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)

    @property
    def R_max(self) -> float:
        return float(self.r_nodes[-1])

    @property
    def boundary_defect(self) -> float:
        return abs(1.0 - float(self.eta[-1]))

    def far_field_defect(self) -> float:
        """|eta(R_max - 2h) - far-field model 1 - d^2 / (2 r^2)|, a soft diagnostic."""
        k = max(len(self.r_nodes) - 1 - max(len(self.r_nodes) // 20, 2), 1)
        r = self.r_nodes[k]
        return abs(self.eta[k] - (1 - self.d**2 / (2 * r**2)))

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r > self.R_max * (1 + 1e-12)):
            raise ValueError("grid exceeds profile support")
        if self.evaluator is not None:
            return self.evaluator(r)
        if self._spline is None:
            self._spline = CubicSpline(self.r_nodes, self.eta)
        return self._spline(r)


def ode_residual(r: np.ndarray, eta: np.ndarray, d: int) -> np.ndarray:
    """Centered-difference residual of the profile ODE on interior nodes."""
    h = r[1] - r[0]
    ri = r[1:-1]
    e = eta
    return (
        (e[2:] - 2 * e[1:-1] + e[:-2]) / h**2
        + (e[2:] - e[:-2]) / (2 * h * ri)
        - d**2 * e[1:-1] / ri**2
        + (1 - e[1:-1] ** 2) * e[1:-1]
    )


def solve_radial_profile(d: int, R_max: float = 40.0, N: int = 4096, tol: float = 1e-10,
                         max_iter: int = 100) -> RadialProfile:
    """Damped Newton on the centred-difference two-point problem."""
    if d == 0:
        raise ValueError("degree must be nonzero")
    if not (d <= -1 or d == 1):
        raise ValueError("profiles are built for d <= -1 or d = 1")
    if R_max < 20 * abs(d):
        raise ValueError("R_max must be at least 20 |d|")
    if N < 512:
        raise ValueError("N must be at least 512")
    r = np.linspace(0.0, R_max, N + 1)
    h = r[1] - r[0]
    ri = r[1:-1]
    eta = r / np.sqrt(r**2 + d**2)
    eta[0], eta[-1] = 0.0, 1.0
    upper = 1 / h**2 + 1 / (2 * h * ri)
    lower = 1 / h**2 - 1 / (2 * h * ri)
    trace = []
    res = ode_residual(r, eta, d)
    for it in range(1, max_iter + 1):
        nrm = np.max(np.abs(res))
        trace.append(nrm)
        if nrm <= tol:
            return RadialProfile(d, r, eta, float(nrm), tol, it - 1)
        ab = np.zeros((3, ri.size))
        ab[0, 1:] = upper[:-1]
        ab[1] = -2 / h**2 - d**2 / ri**2 + 1 - 3 * eta[1:-1] ** 2
        ab[2, :-1] = lower[1:]
        step = solve_banded((1, 1), ab, -res)
        lam = 1.0
        while lam > 1e-6:
            trial = eta.copy()
            trial[1:-1] += lam * step
            tres = ode_residual(r, trial, d)
            if np.max(np.abs(tres)) < (1 - 1e-4 * lam) * nrm or nrm < 1e3 * tol:
                break
            lam *= 0.5
        else:
            raise NewtonDivergence("Newton iteration stalled in line search", trace)
        eta, res = trial, tres
    raise NewtonDivergence(f"no convergence in {max_iter} Newton steps", trace)


def shoot_profile(d: int, r_end: float = 30.0, r0: float = 1e-3, bisections: int = 80):
    """Shooting oracle: bisect the core slope a in eta ~ a r^|d| (1 - r^2 / (4(|d|+1))).

    Returns (a, sol) where ``sol`` is a dense ODE solution valid on [r0, r_stop].
    A slope just above the true one only overshoots after the growing mode
    exp(sqrt(2) r) has amplified its error, so r_end bounds the resolution of
    a; r_end = 30 resolves it to roundoff.
    """
    m = abs(d)

    def rhs(r, y):
        e, de = y
        return [de, -de / r + d**2 * e / r**2 - (1 - e * e) * e]

    def overshoot(r, y):
        return y[0] - 1.05

    overshoot.terminal = True

    def turn(r, y):
        return y[1]

    turn.terminal = True
    turn.direction = -1

    def run(a):
        c = -1 / (4 * (m + 1))
        y0 = [a * r0**m * (1 + c * r0**2), a * r0 ** (m - 1) * (m + (m + 2) * c * r0**2)]
        return solve_ivp(rhs, (r0, r_end), y0, method="DOP853", rtol=1e-13, atol=1e-15,
                         events=(overshoot, turn), dense_output=True)

    def overshoots(sol):
        if sol.t_events[0].size:
            return True
        if sol.t_events[1].size:
            return False
        return sol.y[0, -1] > 1.0

    lo, hi = 0.01, 2.0
    for _ in range(bisections):
        a = 0.5 * (lo + hi)
        if a in (lo, hi):
            break
        if overshoots(run(a)):
            hi = a
        else:
            lo = a
    return lo, run(lo)


def shooting_profile(d: int, r_max: float = 8.0, samples: int = 2048) -> RadialProfile:
    """High-accuracy profile on [0, r_max] from the shooting solution's dense output.

    Near the origin the core series is used.  With the slope resolved to
    roundoff the shot trajectory stays on the decaying profile to about r = 20.
    """
    m = abs(d)
    r0 = 1e-3
    a, sol = shoot_profile(d, r_end=max(r_max + 1.0, 30.0), r0=r0)
    if sol.t[-1] < r_max:
        raise ValueError(f"shot trajectory left the profile before r = {r_max}")

    def evaluate(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        core = r < r0
        out[core] = a * r[core] ** m * (1 - r[core] ** 2 / (4 * (m + 1)))
        out[~core] = sol.sol(r[~core])[0]
        return out

    nodes = np.linspace(0.0, r_max, samples + 1)
    return RadialProfile(d, nodes, evaluate(nodes), evaluator=evaluate)


def radial_field(profile: RadialProfile, d: int, alpha=(1.0, 0.0), scale: float = 1.0, *,
                 R: float, Nr: int, M: int | None = None, Ntheta: int | None = None,
                 symmetry: SymmetryClass | None = None):
    """u(r e^{i theta}) = alpha * eta(r / scale) * e^{i d theta} on a disk or sector grid.

    alpha = (1, 0) or (0, 1) plays the role of the complex factor 1 or i.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if R > scale * profile.R_max * (1 + 1e-12):
        raise ValueError("grid exceeds profile support")
    a = complex(alpha[0], alpha[1])
    r = np.linspace(0.0, R, Nr + 1)
    eta = profile(r / scale)
    if symmetry is not None:
        Nt = Ntheta if Ntheta is not None else (M // (2 * symmetry.n))
        th = np.arange(Nt + 1) * np.pi / (symmetry.n * Nt)
    else:
        if M is None:
            raise ValueError("M is required for an unconstrained disk field")
        th = 2 * np.pi * np.arange(M) / M
    z = a * eta[:, None] * np.exp(1j * d * th)[None, :]
    z[0] = 0.0
    vals = np.stack([z.real, z.imag], axis=-1)
    if symmetry is not None:
        return SectorField(symmetry, R, Nr, Nt, vals)
    return PolarField(r, vals)


def exact_anisotropic_solution(delta: float, kind: str = "radial", *, R: float, Nr: int, M: int,
                               profile: RadialProfile | None = None) -> PolarField:
    """The degree-one exact solutions v1(x / sqrt(1+delta)) and i v1(x / sqrt(1-delta))."""
    profile = profile or solve_radial_profile(1, R_max=40.0, N=8192)
    if kind == "radial":
        return radial_field(profile, 1, (1.0, 0.0), np.sqrt(1 + delta), R=R, Nr=Nr, M=M)
    if kind == "azimuthal":
        return radial_field(profile, 1, (0.0, 1.0), np.sqrt(1 - delta), R=R, Nr=Nr, M=M)
    raise ValueError("kind must be 'radial' or 'azimuthal'")
