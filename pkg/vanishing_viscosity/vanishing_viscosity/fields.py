# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Fields Module

Vector calculus on ChannelGrid fields, the discrete Leray projection, boundary
traces, forcing providers and the collar initial data.
"""

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from vanishing_viscosity.vanishing_viscosity.exceptions import ConfigError, GridError
from vanishing_viscosity.vanishing_viscosity.grid import (
	Boundary,
	ScalarField,
	VectorField,
)

logger = logging.getLogger(__name__)

# below this the e^{-1/s} transition underflows to exactly zero
_TRANSITION_FLOOR = 1e-3


# =============================================================================
# Smooth Transitions
# =============================================================================

def _flat(s):
	"""e^{-1/s} for s > 0, zero otherwise, with its first two derivatives."""
	s = np.asarray(s, dtype=float)
	live = s > _TRANSITION_FLOOR
	safe = np.where(live, s, 1.0)
	g = np.where(live, np.exp(-1.0 / safe), 0.0)
	g1 = np.where(live, g / safe**2, 0.0)
	g2 = np.where(live, g * (1 - 2 * safe) / safe**4, 0.0)
	return g, g1, g2


def smooth_step(s):
	"""
	C∞ step S(s): 0 for s <= 0, 1 for s >= 1, monotone in between.

	Returns:
		(S, S', S'') evaluated at s
	"""
	a, a1, a2 = _flat(s)
	b, b1, b2 = _flat(1 - np.asarray(s, dtype=float))
	b1 = -b1
	total = a + b
	numerator = a1 * b - a * b1
	step = a / total
	step1 = numerator / total**2
	step2 = (a2 * b - a * b2) / total**2 - 2 * numerator * (a1 + b1) / total**3
	return step, step1, step2


def polynomial_step(s):
	"""C² quintic smoothstep 6s⁵ − 15s⁴ + 10s³, with derivatives."""
	s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
	inside = (s > 0) & (s < 1)
	step = s**3 * (10 - 15 * s + 6 * s**2)
	step1 = np.where(inside, 30 * s**2 * (1 - s) ** 2, 0.0)
	step2 = np.where(inside, 60 * s * (1 - s) * (1 - 2 * s), 0.0)
	return step, step1, step2


def plateau_bump(x2, height, collar):
	"""
	Smooth bump in x₂, identically zero on [0, collar] ∪ [h − collar, h], peak 1.

	Built from the product of two e^{-1/s} transitions.
	"""
	s = (np.asarray(x2, dtype=float) - collar) / (height - 2 * collar)
	left, _, _ = _flat(s)
	right, _, _ = _flat(1 - s)
	return np.e**4 * left * right


# =============================================================================
# Vector Calculus
# =============================================================================

@dataclass(frozen=True, eq=False)
class TensorField:
	"""2×2 field of gradients: values[i, j] = ∂ⱼvⁱ."""

	grid: object
	values: np.ndarray

	def entry(self, i, j):
		return ScalarField(self.grid, self.values[i, j])


def perp_gradient(psi):
	"""∇⊥ψ = (−∂₂ψ, ∂₁ψ)."""
	grid = psi.grid
	values = np.stack([-grid.d2(psi.values), grid.d1(psi.values)])
	return VectorField(grid, values, solenoidal=True)


def gradient(f):
	grid = f.grid
	return VectorField(grid, np.stack([grid.d1(f.values), grid.d2(f.values)]))


def divergence(v):
	grid = v.grid
	return ScalarField(grid, grid.d1(v.values[0]) + grid.d2(v.values[1]))


def vector_gradient(v):
	grid = v.grid
	values = np.stack([
		np.stack([grid.d1(v.values[0]), grid.d2(v.values[0])]),
		np.stack([grid.d1(v.values[1]), grid.d2(v.values[1])]),
	])
	return TensorField(grid, values)


def transport(carrier, v):
	"""(carrier·∇)v as a plain pointwise product of centered derivatives."""
	gradients = vector_gradient(v).values
	c = carrier.values
	return VectorField(v.grid, c[0] * gradients[:, 0] + c[1] * gradients[:, 1])


def advective_derivative(grid, carrier, v, dealiased=True):
	"""
	(carrier·∇)v for the solvers, on raw arrays.

	x₁ derivatives are spectral, x₂ derivatives upwind-biased by the sign of the
	carrier's vertical component; with `dealiased` the 2/3 rule is applied to the
	factors and to the product.

	Args:
		grid: ChannelGrid
		carrier: (2, n1, n2 + 1) transporting velocity
		v: (2, n1, n2 + 1) transported field

	Returns:
		(2, n1, n2 + 1) array
	"""
	if dealiased:
		carrier = grid.dealias(carrier)
		v = grid.dealias(v)
	along = carrier[0] * grid.d1(v)
	across = carrier[1] * grid.d2_upwind(v, carrier[1])
	result = along + across
	return grid.dealias(result) if dealiased else result


# =============================================================================
# Leray Projection
# =============================================================================

class WallCondition(enum.Enum):
	"""
	Which tangential wall values the projection may change.

	NO_SLIP pins both walls, NO_PENETRATION frees both, INFLOW_OUTFLOW pins the
	inflow wall only. The normal component is always set to zero on both walls.
	"""

	NO_SLIP = "no-slip"
	NO_PENETRATION = "no-penetration"
	INFLOW_OUTFLOW = "inflow-outflow"


def _projection_operator(grid, condition):
	key = ("projection", condition)
	cached = grid._cache.get(key)
	if cached is not None:
		return cached

	D = grid.first_derivative_matrix.toarray()
	D_interior = D.copy()
	D_interior[:, [0, -1]] = 0.0

	free = np.ones(len(grid.x2))
	if condition is WallCondition.NO_SLIP:
		free[[0, -1]] = 0.0
	elif condition is WallCondition.INFLOW_OUTFLOW:
		free[-1] = 0.0

	base = D_interior @ D
	inverses = np.stack([
		linalg.pinv(base - k**2 * np.diag(free)) for k in grid.derivative_wavenumbers
	])
	interior = np.ones(len(grid.x2))
	interior[[0, -1]] = 0.0

	operator = (D, D_interior, free, interior, inverses)
	grid._cache[key] = operator
	return operator


def leray_project(v, bc=WallCondition.NO_PENETRATION, return_potential=False):
	"""
	Project v onto discretely solenoidal fields with zero normal wall component.

	Returns v − ∇q where q solves div(v − ∇q) = 0 at every node for the same
	divergence() used as the solenoidality monitor, so the result is divergence-free
	to round-off. Tangential wall values named by `bc` are left untouched.

	Args:
		v: VectorField
		bc: WallCondition
		return_potential: Also return the zero-mean potential q

	Returns:
		VectorField (and ScalarField q)
	"""
	grid = v.grid
	D, D_interior, free, interior, inverses = _projection_operator(grid, WallCondition(bc))

	spectrum = np.fft.rfft(v.values, axis=-2)
	ik = 1j * grid.derivative_wavenumbers[:, None]
	source = ik * spectrum[0] + spectrum[1] @ D_interior.T
	potential = np.einsum("kij,kj->ki", inverses, source)

	first = spectrum[0] - ik * free * potential
	second = (spectrum[1] - potential @ D.T) * interior
	values = np.fft.irfft(np.stack([first, second]), n=grid.n1, axis=-2)
	projected = VectorField(grid, values, solenoidal=True)

	if not return_potential:
		return projected
	q = np.fft.irfft(potential, n=grid.n1, axis=0)
	q -= grid.mean_array(q)
	return projected, ScalarField(grid, q)


# =============================================================================
# Boundary Traces
# =============================================================================

@dataclass(frozen=True, eq=False)
class BoundaryTrace:
	grid: object
	which: Boundary
	values: np.ndarray

	def __post_init__(self):
		values = np.asarray(self.values, dtype=float)
		if values.shape != (self.grid.n1,):
			raise GridError(f"trace needs {self.grid.n1} values, got {values.shape}")
		object.__setattr__(self, "values", values)

	def derivative(self, order=1):
		"""Spectral x₁ derivative of the trace."""
		return BoundaryTrace(self.grid, self.which, self.grid.d1(self.values[:, None], order)[:, 0])

	def scaled(self, factor):
		return BoundaryTrace(self.grid, self.which, self.values * factor)

	@property
	def sup(self):
		return float(np.max(np.abs(self.values)))


def boundary_trace(v, which=Boundary.OUTFLOW, component=0):
	"""Sample the stored wall row of one component of v."""
	if which not in (Boundary.OUTFLOW, Boundary.INFLOW):
		raise GridError(f"trace needs a single wall, got {which}")
	row = 0 if which is Boundary.OUTFLOW else -1
	values = v.values[component] if isinstance(v, VectorField) else v.values
	return BoundaryTrace(v.grid, which, values[:, row].copy())


def trace_from_function(grid, func, which=Boundary.OUTFLOW):
	return BoundaryTrace(grid, which, np.asarray(func(grid.x1), dtype=float))


# =============================================================================
# Forcing Providers
# =============================================================================

class Forcing:
	"""Time-dependent forcing; __call__ returns a (2, n1, n2 + 1) array or None for zero."""

	is_zero = False

	def __call__(self, grid, t):
		raise NotImplementedError


class ZeroForcing(Forcing):
	is_zero = True

	def __call__(self, grid, t):
		return None


@dataclass(frozen=True, eq=False)
class SteadyForcing(Forcing):
	vector: VectorField

	def __call__(self, grid, t):
		return self.vector.values


@dataclass(frozen=True, eq=False)
class FunctionForcing(Forcing):
	"""Forcing from an analytic func(X1, X2, t) -> (f1, f2)."""

	func: object

	def __call__(self, grid, t):
		X1, X2 = grid.mesh
		f1, f2 = self.func(X1, X2, t)
		return np.stack([np.broadcast_to(f1, grid.shape), np.broadcast_to(f2, grid.shape)]).astype(float)


# =============================================================================
# Initial Data
# =============================================================================

def stream_function(grid, amplitude, mode, collar):
	"""χ = amplitude·sin(2π·mode·x₁/L)·bump(x₂)."""
	geometry = grid.geometry
	if not 0 < collar < geometry.height_h / 2:
		raise ConfigError(f"collar must lie in (0, h/2) = (0, {geometry.height_h / 2}), got {collar}")
	if int(mode) != mode or mode < 0:
		raise ConfigError(f"mode must be a non-negative integer, got {mode}")
	X1, X2 = grid.mesh
	chi = (
		amplitude
		* np.sin(2 * np.pi * mode * X1 / geometry.length_L)
		* plateau_bump(X2, geometry.height_h, collar)
	)
	return ScalarField(grid, chi)


def make_initial_data(grid, amplitude, mode, collar):
	"""
	Homogenized initial velocity v₀ = ∇⊥χ for a stream function with a wall collar.

	v₀ vanishes in the collars next to both walls, so u₀ = U on Γ and the inflow
	compatibility condition of order −1 holds exactly.
	"""
	return perp_gradient(stream_function(grid, amplitude, mode, collar))
