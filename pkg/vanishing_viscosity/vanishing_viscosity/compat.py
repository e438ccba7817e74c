# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Compatibility Module

Inflow compatibility conditions of orders −1 and 0 for Euler initial data ū₀:

	cond₋₁: ū₀^τ = U₀^τ on Γ+
	cond₀:  ∂ₜU^τ|ₜ₌₀ = [−ū₀·∇ū₀ − ∇p⁰ + f̄(0)]^τ on Γ+

with the initial pressure p⁰ solving Δp⁰ = −div(ū₀·∇ū₀) and
∇p⁰·n = −∂ₜU^n(0) − (ū₀·∇ū₀)·n on both walls. Higher orders are not evaluated.
"""

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from vanishing_viscosity.vanishing_viscosity.corrector import CutoffSpec
from vanishing_viscosity.vanishing_viscosity.fields import SteadyForcing, divergence
from vanishing_viscosity.vanishing_viscosity.grid import (
	PoissonBC,
	ScalarField,
	VectorField,
	apply_poisson_operator,
	laplacian_bands,
	l2_norm,
	poisson_solve,
)

logger = logging.getLogger(__name__)

UNCHECKED_ORDERS = ("cond_1", "cond_2", "cond_N for N >= 1")


class TangentConvention(enum.Enum):
	"""
	Orientation of τ on Γ+. APPENDIX keeps (n, τ) in the orientation of (e₁, e₂), so
	τ = (−1, 0) and u^τ = −u¹ on the inflow wall; E1 takes τ = (1, 0).
	"""

	APPENDIX = -1
	E1 = 1


@dataclass(frozen=True, eq=False)
class CompatReport:
	p0: ScalarField
	cond_minus1_residual: float
	cond_0_residual: float
	poisson_residual: float
	outflow_residual: float
	cond_0_trace: np.ndarray
	tangent_convention: TangentConvention = TangentConvention.APPENDIX
	unchecked: tuple = field(default=UNCHECKED_ORDERS)

	def to_dict(self):
		return {
			"cond_minus1_residual": self.cond_minus1_residual,
			"cond_0_residual": self.cond_0_residual,
			"poisson_residual": self.poisson_residual,
			"outflow_residual": self.outflow_residual,
			"p0_max": float(np.max(np.abs(self.p0.values))),
			"tangent_convention": self.tangent_convention.name.lower(),
			"unchecked": list(self.unchecked),
		}


# =============================================================================
# Initial Pressure
# =============================================================================

def _advection(u0, background):
	"""ū₀·∇ū₀ as (ū₀·∇)v₀ with v₀ = ū₀ − U, exact zero where v₀ vanishes."""
	grid = u0.grid
	v0 = u0.values - background.as_field(grid).values
	u = u0.values
	return u[0] * grid.d1(v0) + u[1] * grid.d2(v0)


def _p0_problem(u0, background):
	grid = u0.grid
	advection = _advection(u0, background)
	# chord x₂ derivative: its trapezoidal integral is exactly the wall difference
	source = -(grid.d1(advection[0]) + grid.d2_sbp(advection[1]))
	wall = -advection[1]
	# constant U: ∂ₜU^n(0) = 0
	bc = PoissonBC.neumann(wall[:, 0], wall[:, -1])
	return ScalarField(grid, source), bc, advection


def _check_divergence(u0, tol=1e-6):
	div = l2_norm(divergence(u0))
	scale = max(l2_norm(u0), 1e-300)
	if div > tol * scale:
		logger.warning("initial data divergence %.3e exceeds %.1e of its norm", div, tol)


def solve_p0(u0, f0, background):
	"""
	Initial pressure p⁰ as a zero-mean Neumann–Poisson solve.

	f0 does not enter the problem; it is accepted so the call matches check_compat.

	Returns:
		ScalarField
	"""
	_check_divergence(u0)
	source, bc, _ = _p0_problem(u0, background)
	return poisson_solve(source, bc)


def solve_p0_dense(u0, f0, background):
	"""
	p⁰ from one dense least-squares solve of the full 2D operator with a zero-mean row.

	Independent of the per-wavenumber path in poisson_solve; meant for coarse grids.
	"""
	grid = u0.grid
	source, bc, _ = _p0_problem(u0, background)
	n1, m = grid.shape

	d11 = grid.d1(np.eye(n1)[:, :, None], order=2)[:, :, 0].T
	lower, diag, upper = laplacian_bands(grid)
	b22 = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
	operator = np.kron(d11, np.eye(m)) + np.kron(np.eye(n1), b22)

	rhs = source.values.copy()
	h = grid.spacing
	rhs[:, 0] += 2 * bc.outflow / h[0]
	rhs[:, -1] -= 2 * bc.inflow / h[-1]

	weights = grid.dx1 * np.tile(grid.trapezoid_weights, n1)
	system = np.vstack([operator, weights[None, :]])
	target = np.concatenate([rhs.ravel(), [0.0]])
	solution, *_ = np.linalg.lstsq(system, target, rcond=None)
	return ScalarField(grid, solution.reshape(n1, m))


# =============================================================================
# Compatibility Report
# =============================================================================

def check_compat(u0, f0, background, tangent_convention=TangentConvention.APPENDIX):
	"""
	Evaluate cond₋₁ and cond₀ on the inflow wall for initial data ū₀ and forcing f̄(0).

	A report, not a gate: nothing is raised for incompatible data.

	Args:
		u0: VectorField, full initial velocity ū₀
		f0: VectorField or None
		background: BackgroundFlow
		tangent_convention: TangentConvention

	Returns:
		CompatReport
	"""
	grid = u0.grid
	sign = TangentConvention(tangent_convention).value
	_check_divergence(u0)

	source, bc, advection = _p0_problem(u0, background)
	p0 = poisson_solve(source, bc)
	residual = apply_poisson_operator(p0, bc).values - source.values
	scale = max(np.max(np.abs(source.values)), np.max(np.abs(bc.outflow)), np.max(np.abs(bc.inflow)))
	poisson_residual = float(np.max(np.abs(residual)) / scale) if scale > 0 else 0.0

	inflow_u1 = u0.values[0, :, -1]
	cond_minus1 = float(np.max(np.abs(sign * inflow_u1 - sign * background.a)))

	forcing = np.zeros((2, *grid.shape)) if f0 is None else f0.values
	grad_p0 = np.stack([grid.d1(p0.values), grid.d2(p0.values)])
	bracket = -advection - grad_p0 + forcing
	# ∂ₜU^τ = 0 for a constant background
	cond_0_trace = sign * bracket[0, :, -1]
	cond_0 = float(np.max(np.abs(cond_0_trace)))

	outflow = u0.values[:, :, 0] - background.vector[:, None]
	outflow_residual = float(np.max(np.abs(outflow)))

	logger.info(
		"compat: cond_-1=%.3e cond_0=%.3e poisson=%.3e outflow=%.3e",
		cond_minus1,
		cond_0,
		poisson_residual,
		outflow_residual,
	)
	return CompatReport(
		p0=p0,
		cond_minus1_residual=cond_minus1,
		cond_0_residual=cond_0,
		poisson_residual=poisson_residual,
		outflow_residual=outflow_residual,
		cond_0_trace=cond_0_trace,
		tangent_convention=TangentConvention(tangent_convention),
	)


def repaired_forcing(p0):
	"""
	f̄(0) = ∇p⁰ near Γ+, smoothly cut off below, so the tangential bracket of cond₀
	vanishes on Γ+ for data that equal U there.

	Returns:
		SteadyForcing
	"""
	grid = p0.grid
	h = grid.geometry.height_h
	weight = CutoffSpec(h).phi(h - grid.x2)
	gradient = np.stack([grid.d1(p0.values), grid.d2(p0.values)]) * weight[None, None, :]
	return SteadyForcing(VectorField(grid, gradient))
