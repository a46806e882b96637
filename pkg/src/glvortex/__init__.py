"""Equivariant vortex minimizers of anisotropic Ginzburg-Landau energies in the plane."""
from __future__ import annotations

from .analysis import degree_at_infinity, delta0, energy_growth_check, nonradiality
from .boundary import BoundaryPhase, boundary_field, minimize_circle
from .comparison import ComparisonMapSpec, comparison_energy_curve, construct_comparison
from .energy import energy_E, energy_F, energy_gradient
from .grid import PolarField, SectorField
from .pohozaev import el_residual, pohozaev, stress_tensor
from .radial import radial_field, solve_radial_profile
from .solver import SolveConfig, continuation_delta, minimize_2d
from .symmetry import SymmetryClass, symmetrize, winding_number

__version__ = "0.1.0"
