"""Fourth-order finite differences on uniform polar disk grids.

Radial stencils near the origin use the reflection f(-r, theta) = f(r, theta + pi),
so the first rings get centred stencils; the last two rings use one-sided ones.
Angular stencils are periodic.  Results are converted to Cartesian derivatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple, order: int) -> np.ndarray:
    """Finite-difference weights for the derivative of given order at 0 (unit spacing)."""
    k = np.asarray(offsets, dtype=float)
    n = k.size
    A = np.vander(k, n, increasing=True).T
    b = np.zeros(n)
    b[order] = math.factorial(order)
    return np.linalg.solve(A, b)


def _extend(f: np.ndarray) -> np.ndarray:
    """Prepend rings -2, -1 by reflection through the origin."""
    M = f.shape[1]
    if M % 2:
        raise ValueError("reflection through the origin needs an even number of angles")
    back = np.roll(f[1:3][::-1], -M // 2, axis=1)
    return np.concatenate([back, f], axis=0)


CENTRED = (-2, -1, 0, 1, 2)


def radial_derivative(f: np.ndarray, h: float, order: int) -> np.ndarray:
    """d^order f / dr^order on all rings (ray derivative at the origin)."""
    Nr = f.shape[0] - 1
    F = _extend(f)
    out = np.empty_like(f)
    w = fd_weights(CENTRED, order)
    stop = Nr - 1  # rings 0..Nr-2 use the centred stencil
    acc = 0.0
    for k, wk in zip(CENTRED, w):
        acc = acc + wk * F[2 + k: 2 + k + stop]
    out[:stop] = acc
    for i in (Nr - 1, Nr):
        up = Nr - i
        npts = 5 if order == 1 else 6
        offs = tuple(range(up - npts + 1, up + 1))
        wi = fd_weights(offs, order)
        out[i] = sum(wk * f[i + k] for k, wk in zip(offs, wi))
    return out / h**order


def angular_derivative(f: np.ndarray, dtheta: float, order: int) -> np.ndarray:
    w = fd_weights(CENTRED, order)
    out = sum(wk * np.roll(f, -k, axis=1) for k, wk in zip(CENTRED, w))
    return out / dtheta**order


@dataclass
class CartesianDerivatives:
    """First and second Cartesian derivatives of each component, shape (Nr+1, M, ncomp).

    Second derivatives at the origin ring are NaN.
    """

    fx: np.ndarray
    fy: np.ndarray
    fxx: np.ndarray
    fxy: np.ndarray
    fyy: np.ndarray


def cartesian_derivatives(r: np.ndarray, values: np.ndarray, second: bool = True) -> CartesianDerivatives:
    f = values if values.ndim == 3 else values[..., None]
    Nr = r.size - 1
    M = f.shape[1]
    h = r[1] - r[0]
    dt = 2 * np.pi / M
    th = dt * np.arange(M)
    c = np.cos(th)[None, :, None]
    s = np.sin(th)[None, :, None]
    rr = np.where(r > 0, r, np.nan)[:, None, None]

    fr = radial_derivative(f, h, 1)
    ft = angular_derivative(f, dt, 1)
    fx = c * fr - s / rr * ft
    fy = s * fr + c / rr * ft
    # the origin: average the ray derivatives f_r(0, theta) = grad f . e_r
    fx[0] = (2.0 / M) * np.sum(fr[0] * c[0], axis=0)
    fy[0] = (2.0 / M) * np.sum(fr[0] * s[0], axis=0)

    if not second:
        nan = np.full_like(fx, np.nan)
        return CartesianDerivatives(fx, fy, nan, nan, nan)

    frr = radial_derivative(f, h, 2)
    ftt = angular_derivative(f, dt, 2)
    frt = angular_derivative(fr, dt, 1)
    c2, s2, cs = c * c, s * s, c * s
    fxx = c2 * frr - 2 * cs / rr * frt + s2 / rr**2 * ftt + s2 / rr * fr + 2 * cs / rr**2 * ft
    fyy = s2 * frr + 2 * cs / rr * frt + c2 / rr**2 * ftt + c2 / rr * fr - 2 * cs / rr**2 * ft
    fxy = cs * frr + (c2 - s2) / rr * frt - cs / rr**2 * ftt - cs / rr * fr - (c2 - s2) / rr**2 * ft
    return CartesianDerivatives(fx, fy, fxx, fxy, fyy)
