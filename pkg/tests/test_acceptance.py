"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Tolerances and runtime budgets are the stated ones.  Expensive 2D solves are
cached so that criteria sharing a configuration do not repeat them.
"""
from __future__ import annotations

import time
from functools import lru_cache

import numpy as np

from glvortex.analysis import degree_at_infinity, delta0, energy_growth_check, nonradiality
from glvortex.boundary import minimize_circle
from glvortex.cli import main
from glvortex.comparison import comparison_energy_curve
from glvortex.derivatives import cartesian_derivatives
from glvortex.energy import energy_E, energy_gradient, free_dofs, potential, with_free_dofs
from glvortex.grid import PolarField, SectorField
from glvortex.pohozaev import div_T_norm, el_residual_norm, pohozaev, stress_tensor
from glvortex.radial import exact_anisotropic_solution, radial_field, shooting_profile, solve_radial_profile
from glvortex.solver import SolveConfig, minimize_2d
from glvortex.symmetry import SymmetryClass, winding_number


def report(capsys, number: int, ok: bool, detail: str, seconds: float | None = None):
    tail = f" [{seconds:.2f} s]" if seconds is not None else ""
    with capsys.disabled():
        print(f"\nCRITERION {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}{tail}")
    assert ok, detail


@lru_cache(maxsize=None)
def solve(delta: float, N: int = 128, R: float = 20.0):
    t0 = time.perf_counter()
    res = minimize_2d(SolveConfig(SymmetryClass(-1, "plus"), delta, R=R, Nr=N, Ntheta=N))
    return res, time.perf_counter() - t0


@lru_cache(maxsize=None)
def oracle_profile():
    return shooting_profile(1)


def test_c01_circle_exactness(capsys):
    t0 = time.perf_counter()
    Cp = minimize_circle(-1, "plus", 0.0, M=4 * 2 * 64).C
    Cm = minimize_circle(-1, "minus", 0.0, M=4 * 2 * 64).C
    C2 = minimize_circle(-2, "plus", 0.0, M=4 * 3 * 64).C
    dt = time.perf_counter() - t0
    errs = (abs(Cp - np.pi), abs(Cm - np.pi), abs(C2 - 4 * np.pi))
    ok = errs[0] < 1e-6 and errs[1] < 1e-6 and errs[2] < 1e-5 and dt < 1.0
    report(capsys, 1, ok, f"|C-pi| = {errs[0]:.2e}, {errs[1]:.2e}; |C-4pi| = {errs[2]:.2e}", dt)


def test_c02_strict_anisotropic_improvement(capsys):
    t0 = time.perf_counter()
    M = 4 * 2 * 64
    Cp = minimize_circle(-1, "plus", 0.1, M=M).C
    Cm = minimize_circle(-1, "minus", 0.1, M=M).C
    Cp_neg = minimize_circle(-1, "plus", -0.1, M=M).C
    dt = time.perf_counter() - t0
    margin = np.pi - Cp
    gap = abs(Cm - Cp_neg)
    ok = margin > 1e-4 and gap < 1e-8 and dt < 5.0
    report(capsys, 2, ok, f"pi - C+ = {margin:.6f}; |C-(0.1) - C+(-0.1)| = {gap:.1e}", dt)


def test_c03_exact_solution_residuals(capsys):
    t0 = time.perf_counter()
    prof = oracle_profile()
    orders = {}
    for kind in ("radial", "azimuthal"):
        r64, r128 = (el_residual_norm(exact_anisotropic_solution(0.3, kind, R=4.0, Nr=N, M=N, profile=prof), 0.3)
                     for N in (64, 128))
        orders[kind] = np.log2(r64 / r128)
    dt = time.perf_counter() - t0
    ok = min(orders.values()) >= 1.8 and dt < 30.0
    report(capsys, 3, ok, "observed orders " + ", ".join(f"{k} {v:.2f}" for k, v in orders.items()), dt)


def test_c04_gradient_correctness(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    sym = SymmetryClass(-1, "plus")
    worst = 0.0
    h = 1e-6
    for k in range(20):
        delta = (0.0, 0.15, 0.49)[k % 3]
        base = SectorField(sym, 2.0, 8, 8, rng.normal(size=(9, 9, 2)))
        field = with_free_dofs(base, free_dofs(base))
        y = free_dofs(field)
        g = energy_gradient(field, delta)
        fd = np.empty_like(y)
        for i in range(y.size):
            e = np.zeros_like(y)
            e[i] = h
            fd[i] = (energy_E(with_free_dofs(field, y + e), delta).total
                     - energy_E(with_free_dofs(field, y - e), delta).total) / (2 * h)
        worst = max(worst, float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))))
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and dt < 10.0
    report(capsys, 4, ok, f"max relative gradient error {worst:.2e}", dt)


def test_c05_stress_tensor(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_trace = worst_anti = 0.0
    for _ in range(5):
        delta = rng.uniform(-0.9, 0.9)
        f = PolarField(np.linspace(0, 1.5, 17), rng.normal(size=(17, 24, 2)))
        T = stress_tensor(f, delta)
        D = cartesian_derivatives(f.r, f.values, second=False)
        div = D.fx[..., 0] + D.fy[..., 1]
        curl = D.fx[..., 1] - D.fy[..., 0]
        scale = 1 + np.max(np.abs(T.matrix()))
        worst_trace = max(worst_trace, np.max(np.abs(T.T11 + T.T22 + 2 * potential(f.values))) / scale)
        worst_anti = max(worst_anti, np.max(np.abs(T.T12 - T.T21 - 2 * delta * div * curl)) / scale)
    prof = oracle_profile()
    norms = [div_T_norm(exact_anisotropic_solution(0.2, "radial", R=4.0, Nr=N, M=N, profile=prof), 0.2)
             for N in (64, 128)]
    order = np.log2(norms[0] / norms[1])
    dt = time.perf_counter() - t0
    ok = worst_trace < 1e-12 and worst_anti < 1e-12 and order >= 0.9 and dt < 30.0
    report(capsys, 5, ok, f"trace {worst_trace:.1e}, antisymmetry {worst_anti:.1e}; "
                          f"|div T| {norms[0]:.2e} -> {norms[1]:.2e} (order {order:.2f})", dt)


def test_c06_pohozaev(capsys):
    t0 = time.perf_counter()
    prof = oracle_profile()
    reps = [pohozaev(exact_anisotropic_solution(0.2, "radial", R=4.0, Nr=N, M=N, profile=prof), 0.2,
                     (0.5, 0.25), 2.0) for N in (128, 256)]
    rel = [(r.relative1, r.relative2) for r in reps]
    ratios = [rel[1][k] / rel[0][k] for k in range(2)]
    dt = time.perf_counter() - t0
    ok = max(rel[0]) < 5e-2 and max(ratios) <= 0.5 * 1.3 and dt < 60.0
    report(capsys, 6, ok, f"relative residuals 128^2 {rel[0][0]:.2e}/{rel[0][1]:.2e}, "
                          f"256^2 {rel[1][0]:.2e}/{rel[1][1]:.2e}; ratios {ratios[0]:.2f}/{ratios[1]:.2f}", dt)


def test_c07_minimizer_degree(capsys):
    res, dt = solve(0.1)
    disk = res.field.to_disk()
    windings = [winding_number(disk.circle_trace(r)) for r in (10.0, 15.0, 19.0)]
    mass = 2 * res.breakdown.potential
    ok = res.converged and windings == [-1, -1, -1] and mass < np.pi + 1e-3 and 0.1 < delta0(-1).delta0
    ok = ok and dt < 300.0
    report(capsys, 7, ok, f"windings {windings}, 2 int W = {mass:.6f} (pi = {np.pi:.6f}), "
                          f"{res.iterations} iterations", dt)


def _radial_gap(N):
    res, dt = solve(0.0, N)
    prof = solve_radial_profile(-1, R_max=20.0, N=4096)
    ref = radial_field(prof, -1, (1.0, 0.0), 1.0, R=20.0, Nr=N, Ntheta=N, symmetry=SymmetryClass(-1, "plus"))
    return float(np.max(np.abs(ref.values - res.field.values))), dt


def test_c08_isotropic_radial_limit(capsys):
    g128, t128 = _radial_gap(128)
    g256, t256 = _radial_gap(256)
    ok = g128 < 5e-2 and g256 < g128 and t128 + t256 < 300.0
    report(capsys, 8, ok, f"sup |u - radial oracle| {g128:.2e} (128^2) -> {g256:.2e} (256^2)", t128 + t256)


NONRADIALITY_D01 = 3.30e-3  # regression pin at d = -1, R = 20, 128^2


def test_c09_nonradiality_onset(capsys):
    iso, t0 = solve(0.0)
    aniso, t1 = solve(0.1)
    n0 = nonradiality(iso.field, 1.0)
    n1 = nonradiality(aniso.field, 1.0)
    pinned = abs(n1 / NONRADIALITY_D01 - 1) < 0.05
    ok = n0 < 1e-3 and n1 >= 10 * n0 and pinned and t0 + t1 < 600.0
    report(capsys, 9, ok, f"nonradiality(r=1) {n0:.1e} at delta 0, {n1:.3e} at delta 0.1 "
                          f"(pinned {NONRADIALITY_D01:.2e})", t0 + t1)


def test_c10_construction_slopes(capsys):
    t0 = time.perf_counter()
    c0 = comparison_energy_curve(-1, 0)
    c1 = comparison_energy_curve(-1, 1)
    dt = time.perf_counter() - t0
    e0 = abs(c0.slope / np.pi - 1)
    e1 = abs(c1.slope / (5 * np.pi) - 1)
    ok = e0 < 0.05 and e1 < 0.05 and dt < 120.0
    report(capsys, 10, ok, f"slope/pi - 1 = {e0:.1e} (N=0), slope/5pi - 1 = {e1:.1e} (N=1)", dt)


def test_c11_threshold_table(capsys):
    t0 = time.perf_counter()
    exact = {-1: 2 / np.sqrt(3) - 1, -2: 3 / 23, -3: 2 / 19}
    err = max(abs(delta0(d).delta0 - v) for d, v in exact.items())
    brute = max(abs(delta0(d).delta_star - delta0(d).delta_star_bruteforce) for d in range(-1, -7, -1))
    dt = time.perf_counter() - t0
    ok = err < 1e-9 and brute < 1e-12 and dt < 1.0
    report(capsys, 11, ok, f"table error {err:.1e}, brute-force disagreement {brute:.1e}", dt)


def test_c12_energy_growth_band(capsys):
    radii = (5.0, 10.0, 20.0)
    runs = [solve(0.1, 128, R) for R in radii]
    dt = sum(t for _, t in runs)
    energies = [r.breakdown.total for r, _ in runs]
    d_inf = degree_at_infinity(runs[-1][0].field)
    rep = energy_growth_check(radii, energies, -1, 0.1, d_inf)
    ok = all(r.converged for r, _ in runs) and rep.within and dt < 900.0
    report(capsys, 12, ok, f"slope {rep.slope:.4f} in [{rep.lower:.4f}, {rep.upper:.4f}]", dt)


def test_c13_determinism(capsys, tmp_path):
    spec = tmp_path / "sweep.cfg"
    spec.write_text("d_list = -1\nsign_list = plus\ndelta_list = 0.0, 0.1\nR_list = 10\n"
                    "Nr = 48\nNtheta = 48\noutput_dir = unused\n")
    t0 = time.perf_counter()
    outputs = []
    for k, threads in enumerate((1, 2, 1)):
        out = tmp_path / f"run{k}"
        code = main(["sweep", str(spec), "--output-dir", str(out), "--threads", str(threads)])
        assert code == 0
        outputs.append((out / "aggregate.csv").read_bytes())
    dt = time.perf_counter() - t0
    rows = outputs[0].decode().strip().splitlines()
    ok = len(set(outputs)) == 1 and len(rows) == 3 and dt < 60.0
    report(capsys, 13, ok, f"{len(outputs)} sweeps, {len(set(outputs))} distinct aggregate file(s), "
                           f"{len(rows) - 1} rows", dt)
