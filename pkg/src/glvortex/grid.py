"""Polar-grid field containers.

``PolarField`` holds samples on rings ``r[0] < ... < r[-1]`` times ``M``
equally spaced angles.  When ``r[0] == 0`` the first ring is the origin and
all of its ``M`` entries carry the same value.

``SectorField`` is the storage form for equivariant fields: only the
fundamental sector ``[0, pi/n]`` is kept, with ``Ntheta + 1`` angular nodes,
and the rest of the disk follows from the rotation rule
``u(e^{i pi/n} z) = e^{i d pi/n} u(z)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .symmetry import CircleTrace, SymmetryClass, equivariance_residual


def disk_radii(R: float, Nr: int) -> np.ndarray:
    return np.linspace(0.0, R, Nr + 1)


@dataclass(frozen=True, eq=False)
class PolarField:
    r: np.ndarray
    values: np.ndarray
    symmetry: SymmetryClass | None = None

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[2] != 2 or v.shape[0] != r.size:
            raise ValueError(f"values must have shape ({r.size}, M, 2), got {v.shape}")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("radii must be nonnegative and increasing")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)

    @classmethod
    def on_disk(cls, R: float, Nr: int, M: int, func, symmetry=None) -> "PolarField":
        """Sample ``func(x, y) -> (u1, u2)`` on a uniform disk grid."""
        r = disk_radii(R, Nr)
        th = 2 * np.pi * np.arange(M) / M
        rr, tt = np.meshgrid(r, th, indexing="ij")
        u1, u2 = func(rr * np.cos(tt), rr * np.sin(tt))
        vals = np.stack(np.broadcast_arrays(u1, u2), axis=-1).astype(float)
        vals[0] = vals[0, 0]
        return cls(r, vals, symmetry)

    @property
    def M(self) -> int:
        return self.values.shape[1]

    @property
    def Nr(self) -> int:
        return self.r.size - 1

    @property
    def R(self) -> float:
        return float(self.r[-1])

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def dtheta(self) -> float:
        return 2 * np.pi / self.M

    @property
    def has_origin(self) -> bool:
        return self.r[0] == 0.0

    @property
    def is_uniform_disk(self) -> bool:
        return self.has_origin and np.allclose(np.diff(self.r), self.dr, rtol=1e-12, atol=0)

    def with_values(self, values: np.ndarray) -> "PolarField":
        return replace(self, values=np.asarray(values, dtype=float))

    def complex(self) -> np.ndarray:
        return self.values[..., 0] + 1j * self.values[..., 1]

    def modulus(self) -> np.ndarray:
        return np.hypot(self.values[..., 0], self.values[..., 1])

    def ring_trace(self, i: int) -> CircleTrace:
        return CircleTrace(self.values[i], float(self.r[i]) or 1.0)

    def circle_trace(self, radius: float, M: int | None = None) -> CircleTrace:
        """Trace on an arbitrary circle by bilinear interpolation in (r, theta)."""
        M = M or self.M
        th = 2 * np.pi * np.arange(M) / M
        vals = interpolate(self, np.full(M, radius), th)
        return CircleTrace(vals, radius)

    def check_origin(self, atol: float = 0.0) -> None:
        if self.has_origin and np.max(np.abs(self.values[0] - self.values[0, 0])) > atol:
            raise ValueError("origin ring must carry a single value")


def _locate(r: np.ndarray, radius: np.ndarray):
    radius = np.asarray(radius, dtype=float)
    if np.any(radius < r[0] - 1e-12) or np.any(radius > r[-1] + 1e-12):
        raise ValueError(
            f"radius out of range: requested [{radius.min():.4g}, {radius.max():.4g}], "
            f"grid covers [{r[0]:.4g}, {r[-1]:.4g}]"
        )
    i = np.clip(np.searchsorted(r, radius, side="right") - 1, 0, r.size - 2)
    t = (radius - r[i]) / (r[i + 1] - r[i])
    return i, np.clip(t, 0.0, 1.0)


def interpolate_array(r: np.ndarray, data: np.ndarray, radius, theta) -> np.ndarray:
    """Bilinear (r, theta) interpolation of ``data`` with shape (nr, M, ...)."""
    M = data.shape[1]
    i, t = _locate(r, radius)
    s = np.mod(np.asarray(theta, dtype=float), 2 * np.pi) * M / (2 * np.pi)
    j = np.floor(s).astype(int) % M
    w = s - np.floor(s)
    j1 = (j + 1) % M
    extra = (slice(None),) + (None,) * (data.ndim - 2)
    t = t[extra]
    w = w[extra]
    lo = (1 - w) * data[i, j] + w * data[i, j1]
    hi = (1 - w) * data[i + 1, j] + w * data[i + 1, j1]
    return (1 - t) * lo + t * hi


def interpolate(field: PolarField, radius, theta) -> np.ndarray:
    return interpolate_array(field.r, field.values, radius, theta)


def interpolate_cartesian(field: PolarField, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return interpolate(field, np.hypot(x, y), np.arctan2(y, x))


@dataclass(frozen=True, eq=False)
class SectorField:
    """Equivariant field stored on the fundamental sector [0, pi/n]."""

    symmetry: SymmetryClass
    R: float
    Nr: int
    Ntheta: int
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.Nr + 1, self.Ntheta + 1, 2):
            raise ValueError(
                f"sector values must have shape ({self.Nr + 1}, {self.Ntheta + 1}, 2), got {v.shape}"
            )
        if self.Nr < 4 or self.Ntheta < 4:
            raise ValueError("degenerate grid: need Nr >= 4 and Ntheta >= 4")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.symmetry.n

    @property
    def M(self) -> int:
        return 2 * self.n * self.Ntheta

    @property
    def r(self) -> np.ndarray:
        return disk_radii(self.R, self.Nr)

    @property
    def theta(self) -> np.ndarray:
        return np.arange(self.Ntheta + 1) * np.pi / (self.n * self.Ntheta)

    def with_values(self, values: np.ndarray) -> "SectorField":
        return replace(self, values=np.asarray(values, dtype=float))

    def rotation_factors(self) -> np.ndarray:
        """exp(i k d pi / n), k = 0..2n-1: the target factor for the k-th sector copy."""
        k = np.arange(2 * self.n)
        return np.exp(1j * k * self.symmetry.d * np.pi / self.n)

    def to_disk(self) -> PolarField:
        z = self.values[..., 0] + 1j * self.values[..., 1]
        base = z[:, : self.Ntheta]
        full = (self.rotation_factors()[None, :, None] * base[:, None, :]).reshape(self.Nr + 1, self.M)
        full[0] = z[0, 0]
        return PolarField(self.r, np.stack([full.real, full.imag], axis=-1), self.symmetry)

    @classmethod
    def from_disk(cls, field: PolarField, symmetry: SymmetryClass | None = None, meta=None) -> "SectorField":
        sym = symmetry or field.symmetry
        if sym is None:
            raise ValueError("a symmetry class is required to build a sector field")
        M = field.M
        if M % (2 * sym.n):
            raise ValueError(f"grid/group mismatch: M = {M} is not a multiple of 2n = {2 * sym.n}")
        if not field.is_uniform_disk:
            raise ValueError("sector fields live on uniform disk grids")
        Nt = M // (2 * sym.n)
        idx = np.arange(Nt + 1) % M
        return cls(sym, field.R, field.Nr, Nt, field.values[:, idx].copy(), dict(meta or {}))

    def gluing_residual(self) -> float:
        """Departure from the twisted gluing and reflection rules (0 for valid fields)."""
        z = self.values[..., 0] + 1j * self.values[..., 1]
        glue = np.max(np.abs(z[:, -1] - np.exp(1j * self.symmetry.d * np.pi / self.n) * z[:, 0]))
        origin = np.max(np.abs(z[0] - z[0, 0]))
        return float(max(glue, origin, equivariance_residual(self.symmetry, self.to_disk())))


def as_disk(field) -> PolarField:
    if isinstance(field, SectorField):
        return field.to_disk()
    if isinstance(field, PolarField):
        return field
    raise TypeError(f"expected a PolarField or SectorField, got {type(field).__name__}")
