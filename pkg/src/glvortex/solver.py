"""Equivariant energy minimization on D_R with Dirichlet datum zeta.

The unknowns are the interior sector nodes (rings 1..Nr-1, angles
0..Ntheta-1).  The origin is pinned at 0 and the outer ring carries
``boundary_field(zeta)``; the rotation constraint is built into the sector
representation and the reflection constraint is restored by projection every
few iterations (the iteration itself preserves it up to roundoff).

The minimizer is limited-memory BFGS with Armijo backtracking, preconditioned
by the sparse factorization of the quadratic part of the energy plus a mass
term.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
from threadpoolctl import threadpool_limits

from .boundary import BoundaryPhase, boundary_field, minimize_circle
from .energy import (EnergyBreakdown, disk_operators, dof_map, energy_E, free_dofs,
                     potential, potential_gradient, with_free_dofs)
from .grid import SectorField
from .radial import radial_field, solve_radial_profile
from .symmetry import SymmetryClass, symmetrize

INIT_KINDS = ("radial", "construction", "file")


class LineSearchFailure(RuntimeError):
    def __init__(self, message, last):
        super().__init__(message)
        self.last = last


class SolveError(RuntimeError):
    def __init__(self, message, delta=None, cause=None):
        super().__init__(message)
        self.delta = delta
        self.cause = cause


@dataclass(frozen=True)
class SolveConfig:
    symmetry: SymmetryClass
    delta: float
    R: float = 20.0
    Nr: int = 128
    Ntheta: int = 128
    init: str = "radial"
    init_N: int = 0
    init_field: SectorField | None = None
    tol: float = 1e-8
    max_iters: int = 5000
    symmetrize_every: int = 25
    memory: int = 12

    def __post_init__(self):
        if not (-1 < self.delta < 1):
            raise ValueError(f"delta must satisfy |delta| < 1, got {self.delta}")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.R < 5:
            raise ValueError(f"R must be at least 5, got {self.R}")
        if self.Nr < 4 or self.Ntheta < 4:
            raise ValueError("degenerate grid: need Nr >= 4 and Ntheta >= 4")
        if self.Ntheta % 2:
            raise ValueError("Ntheta must be even so that zeta is sampled on a multiple of 4n nodes")
        if self.init not in INIT_KINDS:
            raise ValueError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        if self.init == "file" and self.init_field is None:
            raise ValueError("init = file needs an initial field")

    @property
    def M(self) -> int:
        return 2 * self.symmetry.n * self.Ntheta


@dataclass
class SolveResult:
    field: SectorField
    breakdown: EnergyBreakdown
    iterations: int
    final_gradient_norm: float
    boundary_C: float
    converged: bool
    phase: BoundaryPhase | None = None
    energy_trace: list = field(default_factory=list, repr=False)
    seconds: float = 0.0


# --- reduced energy on the free sector unknowns -------------------------------


class ReducedEnergy:
    """E(x_fixed + P y) and its gradient, with the quadratic form assembled once."""

    def __init__(self, template: SectorField, delta: float):
        self.template = template
        self.delta = float(delta)
        M = template.M
        ops = disk_operators(float(template.R), int(template.Nr), int(M))
        self.ops = ops
        self.P = dof_map(template)
        self.Q = ((1 - delta) * ops.Q_dirichlet + 2 * delta * ops.Q_div).tocsr()
        self.area = ops.node_area
        fixed = with_free_dofs(template, np.zeros(self.P.shape[1]))
        self.x_fixed = fixed.to_disk().values.ravel()
        self._shape = (template.Nr + 1, M, 2)

    def full(self, y):
        return self.x_fixed + self.P @ y

    def value_grad(self, y):
        x = self.full(y)
        qx = self.Q @ x
        v = x.reshape(self._shape)
        value = 0.5 * float(x @ qx) + float(np.sum(self.area * potential(v)))
        g = qx + (self.area[..., None] * potential_gradient(v)).ravel()
        return value, self.P.T @ g

    def change(self, y, step):
        """E(y + step) - E(y), evaluated without cancellation between the two totals."""
        x = self.full(y)
        sx = self.P @ step
        q = (x + 0.5 * sx) @ (self.Q @ sx)
        v = x.reshape(self._shape)
        sv = sx.reshape(self._shape)
        base = 1.0 - np.sum(v * v, axis=-1)
        dq = 2 * np.sum(v * sv, axis=-1) + np.sum(sv * sv, axis=-1)
        dW = 0.25 * dq * (dq - 2 * base)
        return float(q) + float(np.sum(self.area * dW))

    def preconditioner(self):
        mass = sp.diags(np.repeat(self.area.ravel(), 2))
        K = (self.P.T @ (self.Q + mass) @ self.P).tocsc()
        return splu(K)

    def field(self, y) -> SectorField:
        return with_free_dofs(self.template, y)


def _lbfgs_direction(g, S, Y, solve):
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        alphas.append((rho, a))
        q -= a * y
    r = solve(q)
    if S:
        s, y = S[-1], Y[-1]
        r *= float(s @ y) / float(y @ solve(y))
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return -r


def _project(problem: ReducedEnergy, y):
    f = problem.field(y)
    sym = symmetrize(f.symmetry, f.to_disk())
    return free_dofs(SectorField.from_disk(sym, f.symmetry, f.meta))


def minimize_lbfgs(problem: ReducedEnergy, y0, tol: float, max_iters: int,
                   symmetrize_every: int = 25, memory: int = 12, log=None):
    """Returns (y, value, grad_norm, iterations, converged, trace)."""
    lu = problem.preconditioner()
    solve = lu.solve
    y = _project(problem, y0)
    f, g = problem.value_grad(y)
    trace = [f]
    S, Y = [], []
    it = 0
    gnorm = float(np.max(np.abs(g)))
    while gnorm > tol and it < max_iters:
        it += 1
        p = _lbfgs_direction(g, S, Y, solve)
        slope = float(g @ p)
        if slope >= 0:  # memory went stale: restart from the preconditioned gradient
            S, Y = [], []
            p = -solve(g)
            slope = float(g @ p)
        t = 1.0
        while True:
            change = problem.change(y, t * p)
            if change <= 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-12:
                raise LineSearchFailure(
                    f"line search failed at iteration {it} (gradient {gnorm:.3g})", problem.field(y)
                )
        y_new = y + t * p
        f_new, g_new = problem.value_grad(y_new)
        f_new = f + change
        s_vec, y_vec = y_new - y, g_new - g
        if float(s_vec @ y_vec) > 1e-16 * float(s_vec @ s_vec) ** 0.5 * float(y_vec @ y_vec) ** 0.5:
            S.append(s_vec)
            Y.append(y_vec)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        assert change <= 0.0, "non-monotone step accepted"
        y, f, g = y_new, f_new, g_new
        if symmetrize_every and it % symmetrize_every == 0:
            y_sym = _project(problem, y)
            # the projection only removes roundoff drift; keep it unless it costs energy
            change = problem.change(y, y_sym - y)
            if change <= 0.0:
                y, f = y_sym, f + change
                g = problem.value_grad(y)[1]
        trace.append(f)
        gnorm = float(np.max(np.abs(g)))
        if log is not None and it % 100 == 0:
            log(f"iter {it}: E = {f:.12g}, |g| = {gnorm:.3g}")
    return y, f, gnorm, it, gnorm <= tol, trace


# --- initial fields -------------------------------------------------------------


def boundary_phase_for(cfg: SolveConfig) -> tuple[BoundaryPhase, float]:
    sol = minimize_circle(cfg.symmetry.d, cfg.symmetry.sign, cfg.delta, M=cfg.M,
                          tol=max(1e-9, min(cfg.tol, 1e-6)))
    return sol.phase, sol.C


def _impose_boundary(field: SectorField, phase: BoundaryPhase) -> SectorField:
    trace = boundary_field(phase).complex()
    vals = field.values.copy()
    Nt = field.Ntheta
    ring = trace[: Nt + 1] if Nt + 1 <= trace.size else np.append(trace, trace[0])
    vals[-1, :, 0] = ring.real
    vals[-1, :, 1] = ring.imag
    vals[0] = 0.0
    return field.with_values(vals)


def initial_field(cfg: SolveConfig, phase: BoundaryPhase) -> SectorField:
    sym = cfg.symmetry
    if cfg.init == "file":
        f = cfg.init_field
        if f.symmetry != sym:
            raise ValueError(
                f"class mismatch: file has (d={f.symmetry.d}, {f.symmetry.sign}), "
                f"config asks for (d={sym.d}, {sym.sign})"
            )
        if (f.Nr, f.Ntheta) != (cfg.Nr, cfg.Ntheta) or abs(f.R - cfg.R) > 1e-12 * cfg.R:
            raise ValueError("grid mismatch between the initial field and the configuration")
        return _impose_boundary(f, phase)
    if cfg.init == "construction":
        from .comparison import ComparisonMapSpec, construct_comparison_on

        spec = ComparisonMapSpec(sym.d, cfg.init_N, epsilon=min(0.5 / cfg.R, 0.01))
        f = construct_comparison_on(spec, cfg.R, cfg.Nr, cfg.Ntheta, sym)
        return _impose_boundary(f, phase)
    profile = solve_radial_profile(sym.d, R_max=max(40.0, cfg.R, 20.0 * abs(sym.d)), N=4096)
    alpha = (1.0, 0.0) if sym.sign == "plus" else (0.0, 1.0)
    f = radial_field(profile, sym.d, alpha, 1.0, R=cfg.R, Nr=cfg.Nr, Ntheta=cfg.Ntheta, symmetry=sym)
    return _impose_boundary(f, phase)


def minimize_2d(cfg: SolveConfig, phase: BoundaryPhase | None = None, log=None) -> SolveResult:
    """Minimize E(., D_R) over mu-equivariant fields with u = zeta on the outer circle."""
    t0 = time.perf_counter()
    if phase is None:
        phase, C = boundary_phase_for(cfg)
    else:
        C = float(phase.meta.get("C", np.nan))
    start = initial_field(cfg, phase)
    with threadpool_limits(limits=1):
        problem = ReducedEnergy(start, cfg.delta)
        y, f, gnorm, it, ok, trace = minimize_lbfgs(
            problem, free_dofs(start), cfg.tol, cfg.max_iters, cfg.symmetrize_every, cfg.memory, log
        )
    out = problem.field(y)
    out = replace(out, meta={"delta": cfg.delta})
    return SolveResult(out, energy_E(out, cfg.delta), it, gnorm, C, ok, phase, trace,
                       time.perf_counter() - t0)


def continuation_delta(d: int, sign: str, deltas, base: SolveConfig, log=None) -> list[SolveResult]:
    """Solve along ascending deltas, warm-starting each solve from the previous one."""
    deltas = [float(x) for x in deltas]
    if not deltas or deltas[0] != 0.0:
        raise ValueError("the delta list must start at 0")
    if any(b <= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("the delta list must be ascending")
    sym = SymmetryClass(d, sign)
    results = []
    prev = None
    for delta in deltas:
        cfg = replace(base, symmetry=sym, delta=delta)
        if prev is not None:
            cfg = replace(cfg, init="file", init_field=prev.field)
        try:
            res = minimize_2d(cfg, log=log)
        except Exception as exc:  # noqa: BLE001 - re-raised with the failing delta
            raise SolveError(f"solve failed at delta = {delta}: {exc}", delta, exc) from exc
        results.append(res)
        prev = res
    return results
