"""Threshold formulas, circle diagnostics, degree at infinity, energy growth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import as_disk, interpolate_array
from .pohozaev import _nodal_data, _sample
from .energy import potential
from .symmetry import (CircleTrace, DegreeUndefined, UndersampledTrace, degree_class_member,
                       winding_number)

GEOMETRIC_CAP = 2 / np.sqrt(3) - 1


# --- thresholds ------------------------------------------------------------------


def f_of_x(d: int, x) -> np.ndarray:
    """(x^2 + 2dx - |x|) / (x^2 + 2dx + 3|x| + 4d^2)."""
    x = np.asarray(x, dtype=float)
    den = x * x + 2 * d * x + 3 * np.abs(x) + 4 * d * d
    if np.any(den <= 0):
        raise ValueError("denominator of f is not positive")
    return (x * x + 2 * d * x - np.abs(x)) / den


def delta_star(d: int) -> float:
    """Closed form (2 - 2d) / (4 d^2 + 10 - 10 d)."""
    return (2 - 2 * d) / (4 * d * d + 10 - 10 * d)


@dataclass(frozen=True)
class ThresholdRecord:
    d: int
    delta0: float
    delta_star: float
    argmin_x: int
    delta_star_bruteforce: float = float("nan")

    def as_dict(self) -> dict:
        return {"d": self.d, "delta_star": self.delta_star, "delta0": self.delta0,
                "argmin_x": self.argmin_x, "delta_star_bruteforce": self.delta_star_bruteforce}


def _check_sign_pattern(d: int, K: int) -> None:
    """f' <= 0 for x <= -2(1-d) and f' >= 0 for x >= 2(1-d), by centred differences."""
    m = 2 * (1 - d)
    right = np.linspace(m, m * (K + 1), 50 * K)
    left = -right
    h = 1e-6
    fr = (f_of_x(d, right + h) - f_of_x(d, right - h)) / (2 * h)
    fl = (f_of_x(d, left + h) - f_of_x(d, left - h)) / (2 * h)
    if np.any(fr < -1e-9) or np.any(fl > 1e-9):
        raise AssertionError(f"derivative sign pattern of f fails for d = {d}")


def delta_star_bruteforce(d: int, K: int = 50) -> tuple[float, int]:
    """min of f over x = 2(1-d) k, 0 < |k| <= K; returns (value, argmin x)."""
    if K < 10:
        raise ValueError("K must be at least 10")
    if d > -1:
        raise ValueError("d must be <= -1")
    k = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
    x = 2 * (1 - d) * k
    vals = f_of_x(d, x)
    i = int(np.argmin(vals))
    _check_sign_pattern(d, K)
    return float(vals[i]), int(x[i])


def delta0(d: int, K: int = 50) -> ThresholdRecord:
    if d > -1:
        raise ValueError("d must be <= -1")
    ds = delta_star(d)
    brute, argmin = delta_star_bruteforce(d, K)
    return ThresholdRecord(d, float(min(ds, GEOMETRIC_CAP)), float(ds), argmin, brute)


# --- circle diagnostics ------------------------------------------------------------


@dataclass(frozen=True)
class CircleDiagnostics:
    r: float
    f: float
    g: float
    sigma: float
    winding: int | None = None

    def as_dict(self) -> dict:
        return {"r": self.r, "f": self.f, "g": self.g, "sigma": self.sigma,
                "winding": "" if self.winding is None else self.winding}


def circle_diagnostics(field, delta: float, radii, n_angles: int | None = None) -> list[CircleDiagnostics]:
    """f(r) = r int e(u), g(r) = r int (1 - |u|^2)^2 over the circle, sigma = sup |1 - |u||."""
    disk = as_disk(field)
    data = _nodal_data(disk)
    K = n_angles or max(disk.M, 64)
    phi = 2 * np.pi * np.arange(K) / K
    c, s = np.cos(phi), np.sin(phi)
    out = []
    for r in radii:
        r = float(r)
        if r <= 0 or r > disk.R * (1 + 1e-12):
            raise ValueError(f"radius out of range: {r} not in (0, {disk.R}]")
        u, ux, uy = _sample(disk, data, r * c, r * s)
        grad2 = np.sum(ux**2 + uy**2, axis=-1)
        div = ux[..., 0] + uy[..., 1]
        dens = 0.5 * (1 - delta) * grad2 + delta * div**2 + potential(u)
        mod2 = np.sum(u**2, axis=-1)
        ds = r * 2 * np.pi / K
        try:
            w = winding_number(CircleTrace(u, r))
        except (DegreeUndefined, UndersampledTrace):
            w = None
        out.append(CircleDiagnostics(
            r, r * float(np.sum(dens)) * ds, r * float(np.sum((1 - mod2) ** 2)) * ds,
            float(np.max(np.abs(1 - np.sqrt(mod2)))), w,
        ))
    return out


class DegreeNotStabilized(ValueError):
    pass


def degree_at_infinity(field, fractions=(0.5, 0.75, 0.95), d: int | None = None) -> int:
    """Common winding on the circles r = fraction R; checks the congruence class."""
    disk = as_disk(field)
    windings = [winding_number(disk.circle_trace(fr * disk.R)) for fr in fractions]
    if len(set(windings)) != 1:
        raise DegreeNotStabilized(f"degree not stabilized - increase R (windings {windings})")
    w = windings[0]
    d = d if d is not None else (disk.symmetry.d if disk.symmetry is not None else None)
    if d is not None and not degree_class_member(w, d):
        raise AssertionError(f"degree {w} is not in d + 2(1-d)Z for d = {d}")
    return w


def nonradiality(field, r: float, n_angles: int | None = None) -> float:
    """max - min of |u| on the circle of radius r (bilinear interpolation of |u|)."""
    disk = as_disk(field)
    K = n_angles or disk.M
    th = 2 * np.pi * np.arange(K) / K
    mod = disk.modulus()[..., None]
    vals = interpolate_array(disk.r, mod, np.full(K, float(r)), th)[:, 0]
    return float(np.max(vals) - np.min(vals))


def modulus_profile(field, r: float, n_angles: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    disk = as_disk(field)
    K = n_angles or disk.M
    th = 2 * np.pi * np.arange(K) / K
    vals = interpolate_array(disk.r, disk.modulus()[..., None], np.full(K, float(r)), th)[:, 0]
    return th, vals


# --- energy growth --------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthReport:
    radii: tuple
    energies: tuple
    slope: float
    lower: float
    upper: float
    within: bool
    note: str = ""


def energy_growth_check(radii, energies, d: int, delta: float, d_infinity: int,
                        tol_lo: float = 0.1, tol_hi: float = 0.1) -> GrowthReport:
    """Least-squares slope of E(u, D_R) against ln R versus the two growth bounds.

    lower = (1 - delta) pi d_inf^2 (1 - tol_lo); upper = (1 + 3 delta) pi (d^2 + |d_inf - d|) (1 + tol_hi).
    """
    R = np.asarray(radii, dtype=float)
    E = np.asarray(energies, dtype=float)
    if R.size < 3:
        raise ValueError("need at least 3 radii")
    if R.size != E.size:
        raise ValueError("radii and energies differ in length")
    slope = float(np.polyfit(np.log(R), E, 1)[0])
    lower = (1 - delta) * np.pi * d_infinity**2 * (1 - tol_lo)
    upper = (1 + 3 * delta) * np.pi * (d * d + abs(d_infinity - d)) * (1 + tol_hi)
    within = bool(lower <= slope <= upper)
    note = "" if within else ("slope below the band: not a vortex field" if slope < lower
                              else "slope above the band")
    return GrowthReport(tuple(R.tolist()), tuple(E.tolist()), slope, float(lower), float(upper), within, note)
