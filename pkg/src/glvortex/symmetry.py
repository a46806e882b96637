"""Dihedral symmetry classes for equivariant planar vector fields.

Fields are stored as arrays of shape ``(nr, M, 2)`` sampled at angles
``theta_j = 2 pi j / M``.  Group elements of ``D_{2n}`` are encoded as
``(kind, index)`` pairs so that composition is exact integer arithmetic;
2x2 matrices are only built on demand.

Acting on the target, a rotation ``r^k`` multiplies ``u = u1 + i u2`` by
``exp(i k pi / n)`` and a reflection ``s_k = r^k s_0`` maps ``u`` to
``exp(i k pi / n) * conj(u)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

ROTATION = "rotation"
REFLECTION = "reflection"
SIGNS = ("plus", "minus")


class GridGroupMismatch(ValueError):
    pass


class DegreeUndefined(ValueError):
    pass


class UndersampledTrace(ValueError):
    pass


@dataclass(frozen=True)
class SymmetryClass:
    """The equivariance class mu_d^+ or mu_d^- acting through D_{2n}, n = 1 - d."""

    d: int
    sign: str = "plus"

    def __post_init__(self):
        if int(self.d) != self.d or self.d > -1:
            raise ValueError(f"degree parameter must be an integer <= -1, got {self.d}")
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be 'plus' or 'minus', got {self.sign!r}")

    @property
    def n(self) -> int:
        return 1 - self.d

    @property
    def order(self) -> int:
        return 4 * self.n

    @property
    def alpha(self) -> complex:
        """Target factor: 1 for the plus class, i for the minus class."""
        return 1.0 if self.sign == "plus" else 1j

    def elements(self) -> list["GroupElement"]:
        return list(group_elements(self.n))

    def generators(self) -> tuple["GroupElement", "GroupElement"]:
        return GroupElement(ROTATION, 1, self.n), GroupElement(REFLECTION, 0, self.n)


@dataclass(frozen=True)
class GroupElement:
    kind: str
    index: int
    n: int

    def __post_init__(self):
        if self.kind not in (ROTATION, REFLECTION):
            raise ValueError(f"unknown group element kind {self.kind!r}")
        object.__setattr__(self, "index", self.index % (2 * self.n))

    @property
    def angle(self) -> float:
        return self.index * np.pi / self.n

    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.angle), np.sin(self.angle)
        if self.kind == ROTATION:
            return np.array([[c, -s], [s, c]])
        return np.array([[c, s], [s, -c]])

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def inverse(self) -> "GroupElement":
        if self.kind == ROTATION:
            return GroupElement(ROTATION, -self.index, self.n)
        return self

    def apply_target(self, u: np.ndarray) -> np.ndarray:
        """Apply to complex-encoded vectors."""
        phase = np.exp(1j * self.angle)
        if self.kind == ROTATION:
            return phase * u
        return phase * np.conj(u)

    def angle_permutation(self, M: int) -> np.ndarray:
        """Index map j -> j' with g(theta_j) = theta_j' on an M-point circle."""
        if M % (2 * self.n):
            raise GridGroupMismatch(
                f"grid/group mismatch: {M} angular nodes is not a multiple of 2n = {2 * self.n}"
            )
        shift = self.index * (M // (2 * self.n))
        j = np.arange(M)
        if self.kind == ROTATION:
            return (j + shift) % M
        return (shift - j) % M


def identity(n: int) -> GroupElement:
    return GroupElement(ROTATION, 0, n)


def group_elements(n: int) -> Iterator[GroupElement]:
    for kind in (ROTATION, REFLECTION):
        for k in range(2 * n):
            yield GroupElement(kind, k, n)


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """g o h, using r^a s_b = s_{a+b}, s_a r^b = s_{a-b}, s_a s_b = r^{a-b}."""
    if g.n != h.n:
        raise ValueError("elements belong to different dihedral groups")
    n = g.n
    if g.kind == ROTATION and h.kind == ROTATION:
        return GroupElement(ROTATION, g.index + h.index, n)
    if g.kind == ROTATION:
        return GroupElement(REFLECTION, g.index + h.index, n)
    if h.kind == ROTATION:
        return GroupElement(REFLECTION, g.index - h.index, n)
    return GroupElement(ROTATION, g.index - h.index, n)


def mu_image(cls: SymmetryClass, g: GroupElement) -> GroupElement:
    """Image of g under mu_d^+ or mu_d^-.

    mu(r) = sigma o r = r^d and mu(s_0) = s_0 (plus) or sigma o s_0 = s_n (minus).
    """
    if g.n != cls.n:
        raise ValueError(f"element of D_{2 * g.n} does not belong to D_{2 * cls.n}")
    rot = g.index * cls.d
    if g.kind == ROTATION:
        return GroupElement(ROTATION, rot, cls.n)
    base = 0 if cls.sign == "plus" else cls.n
    return GroupElement(REFLECTION, rot + base, cls.n)


# --- field-level operations -------------------------------------------------


def _as_complex(values: np.ndarray) -> np.ndarray:
    return values[..., 0] + 1j * values[..., 1]


def _as_real(z: np.ndarray) -> np.ndarray:
    return np.stack([z.real, z.imag], axis=-1)


def _values(field) -> np.ndarray:
    return field.values if hasattr(field, "values") else np.asarray(field, dtype=float)


def _rewrap(field, values: np.ndarray):
    if hasattr(field, "with_values"):
        return field.with_values(values)
    return values


def act(cls: SymmetryClass, g: GroupElement, field):
    """Return x -> mu(g)^{-1} u(g x) on the same grid (exact node permutation)."""
    u = _as_complex(_values(field))
    perm = g.angle_permutation(u.shape[1])
    out = mu_image(cls, g).inverse().apply_target(u[:, perm])
    return _rewrap(field, _as_real(out))


def generator_residuals(cls: SymmetryClass, field) -> dict[str, float]:
    """sup |u(gx) - mu(g) u(x)| for the rotation r_{2n} and the reflection s_0."""
    u = _as_complex(_values(field))
    out = {}
    for g in cls.generators():
        perm = g.angle_permutation(u.shape[1])
        diff = u[:, perm] - mu_image(cls, g).apply_target(u)
        out[g.kind] = float(np.max(np.abs(diff))) if diff.size else 0.0
    return out


def equivariance_residual(cls: SymmetryClass, field) -> float:
    return max(generator_residuals(cls, field).values())


def symmetrize(cls: SymmetryClass, field):
    """Orthogonal projection onto mu-equivariant fields (group average)."""
    u = _as_complex(_values(field))
    M = u.shape[1]
    acc = np.zeros_like(u)
    # fixed summation order keeps the result bit-reproducible
    for g in group_elements(cls.n):
        acc += mu_image(cls, g).inverse().apply_target(u[:, g.angle_permutation(M)])
    return _rewrap(field, _as_real(acc / cls.order))


# --- winding numbers ----------------------------------------------------------


@dataclass(frozen=True)
class CircleTrace:
    """Samples of u at M equally spaced angles on a circle of given radius."""

    samples: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if np.iscomplexobj(s):
            s = _as_real(s)
        s = np.asarray(s, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2:
            raise ValueError("trace samples must have shape (M, 2)")
        if s.shape[0] < 8:
            raise ValueError("a circle trace needs at least 8 samples")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "samples", s)

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.M) / self.M

    def complex(self) -> np.ndarray:
        return _as_complex(self.samples)


def winding_number(trace: CircleTrace, min_modulus: float = 0.5) -> int:
    z = trace.complex()
    if np.min(np.abs(z)) < min_modulus:
        raise DegreeUndefined(
            f"degree undefined on this circle: min |u| = {np.min(np.abs(z)):.3g} < {min_modulus}"
        )
    steps = np.angle(np.roll(z, -1) / z)
    if np.max(np.abs(steps)) > np.pi / 2:
        raise UndersampledTrace(
            f"undersampled trace: phase jump {np.max(np.abs(steps)):.3f} exceeds pi/2"
        )
    return int(np.rint(np.sum(steps) / (2 * np.pi)))


def degree_class_member(D: int, d: int) -> bool:
    """True when D lies in d + 2(1 - d) Z."""
    return (D - d) % (2 * (1 - d)) == 0
