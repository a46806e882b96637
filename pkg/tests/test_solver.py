from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from glvortex.analysis import degree_at_infinity, modulus_profile
from glvortex.boundary import boundary_field
from glvortex.solver import (ReducedEnergy, SolveConfig, SolveError, continuation_delta, initial_field,
                             minimize_2d, boundary_phase_for)
from glvortex.energy import free_dofs
from glvortex.symmetry import SymmetryClass, degree_class_member, equivariance_residual, winding_number

PLUS = SymmetryClass(-1, "plus")


@pytest.fixture(scope="module")
def small_solve():
    cfg = SolveConfig(PLUS, 0.1, R=10.0, Nr=48, Ntheta=48)
    return cfg, minimize_2d(cfg)


def test_config_validation():
    for kwargs in ({"delta": 1.0}, {"delta": 0.1, "tol": 0.0}, {"delta": 0.1, "R": 4.0},
                   {"delta": 0.1, "Ntheta": 33}, {"delta": 0.1, "init": "random"},
                   {"delta": 0.1, "init": "file"}, {"delta": 0.1, "Nr": 2}):
        with pytest.raises(ValueError):
            SolveConfig(PLUS, **kwargs)
    assert SolveConfig(SymmetryClass(-2), 0.0, Ntheta=16).M == 96


def test_converged_solution_properties(small_solve):
    cfg, res = small_solve
    assert res.converged and res.final_gradient_norm <= cfg.tol
    # descent: the logged energies never increase
    assert np.all(np.diff(res.energy_trace) <= 0.0)
    # the outer ring is the circle minimizer, bit for bit
    ring = boundary_field(res.phase).complex()[: cfg.Ntheta + 1]
    z = res.field.values[-1, :, 0] + 1j * res.field.values[-1, :, 1]
    assert np.array_equal(z, ring)
    disk = res.field.to_disk()
    assert equivariance_residual(PLUS, disk) < 1e-10
    assert np.all(res.field.values[0] == 0.0)
    # finite-R energy bound chain
    assert 2 * res.breakdown.potential <= res.boundary_C + 1e-3
    assert degree_at_infinity(res.field) == -1


def test_iterates_stay_in_the_degree_class(small_solve):
    cfg, res = small_solve
    disk = res.field.to_disk()
    for r in np.linspace(2.0, 9.5, 6):
        w = winding_number(disk.circle_trace(r))
        assert degree_class_member(w, -1)


def test_warm_start_converges_immediately(small_solve):
    cfg, res = small_solve
    again = minimize_2d(replace(cfg, init="file", init_field=res.field))
    assert again.converged and again.iterations <= 5
    assert again.breakdown.total == pytest.approx(res.breakdown.total, rel=1e-10)


def test_file_init_checks():
    cfg = SolveConfig(PLUS, 0.1, R=10.0, Nr=16, Ntheta=16)
    phase, _ = boundary_phase_for(cfg)
    f = initial_field(cfg, phase)
    other = SolveConfig(SymmetryClass(-1, "minus"), 0.1, R=10.0, Nr=16, Ntheta=16, init="file", init_field=f)
    with pytest.raises(ValueError, match="class mismatch"):
        minimize_2d(other)
    coarse = SolveConfig(PLUS, 0.1, R=10.0, Nr=24, Ntheta=16, init="file", init_field=f)
    with pytest.raises(ValueError, match="grid mismatch"):
        minimize_2d(coarse)


@pytest.mark.parametrize("d,sign", [(-1, "minus"), (-2, "plus"), (-2, "minus")])
def test_other_classes(d, sign):
    sym = SymmetryClass(d, sign)
    res = minimize_2d(SolveConfig(sym, 0.05, R=10.0, Nr=48, Ntheta=32))
    assert res.converged
    assert degree_at_infinity(res.field) == d
    assert 2 * res.breakdown.potential <= res.boundary_C + 1e-3


def test_construction_initialisation():
    res = minimize_2d(SolveConfig(PLUS, 0.1, R=10.0, Nr=48, Ntheta=48, init="construction"))
    assert res.converged
    ref = minimize_2d(SolveConfig(PLUS, 0.1, R=10.0, Nr=48, Ntheta=48))
    assert res.breakdown.total == pytest.approx(ref.breakdown.total, rel=1e-6)


def test_continuation_and_errors():
    base = SolveConfig(PLUS, 0.0, R=8.0, Nr=32, Ntheta=32)
    out = continuation_delta(-1, "plus", [0.0, 0.05, 0.1], base)
    assert [r.converged for r in out] == [True] * 3
    assert out[0].breakdown.total > out[1].breakdown.total > out[2].breakdown.total
    with pytest.raises(ValueError):
        continuation_delta(-1, "plus", [0.05, 0.1], base)
    with pytest.raises(ValueError):
        continuation_delta(-1, "plus", [0.0, 0.1, 0.05], base)
    with pytest.raises(SolveError) as err:
        continuation_delta(-1, "plus", [0.0, 0.1], replace(base, tol=1e-30, max_iters=10 ** 6))
    assert err.value.delta in (0.0, 0.1)


def test_reduced_energy_change_is_consistent():
    cfg = SolveConfig(PLUS, 0.2, R=8.0, Nr=16, Ntheta=16)
    phase, _ = boundary_phase_for(cfg)
    start = initial_field(cfg, phase)
    prob = ReducedEnergy(start, 0.2)
    y = free_dofs(start)
    step = 1e-3 * np.random.default_rng(0).normal(size=y.size)
    direct = prob.value_grad(y + step)[0] - prob.value_grad(y)[0]
    assert prob.change(y, step) == pytest.approx(direct, rel=1e-8, abs=1e-13)


def test_two_class_probe_is_recorded():
    """Angular |u| maxima of the two classes on r = 1 (diagnostic only)."""
    peaks = []
    for sign in ("plus", "minus"):
        res = minimize_2d(SolveConfig(SymmetryClass(-1, sign), 0.1, R=10.0, Nr=48, Ntheta=48))
        th, mod = modulus_profile(res.field, 1.0)
        peaks.append(th[np.argmax(mod)])
    offset = abs(peaks[0] - peaks[1]) % (np.pi / 2)
    assert offset == pytest.approx(np.pi / 4, abs=0.05)
