# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Corrector Module

Closed-form boundary-layer corrector for the outflow wall. With the outflow trace
T(x₁) = v̄¹(t, x₁, 0) and the layer profile E = e^{−Ux₂/ν}:

	ψ  = T·(ν/U)(1 − E)
	z̃ = ∇⊥ψ = (−T·E, (ν/U)(1 − E)·∂₁T)
	z  = (φz̃¹ − φ′ψ, φz̃²)

with a cutoff φ equal to 1 on [0, h/4] and 0 on [h/2, h]. Every derivative is
evaluated from its formula; the layer has slope U/ν and grid differencing would
spoil the cancellation ν∂₂z̃¹ + U·z̃¹ = 0.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from vanishing_viscosity.vanishing_viscosity.exceptions import (
	CorrectorError,
	InconsistentBoundError,
)
from vanishing_viscosity.vanishing_viscosity.fields import (
	TensorField,
	polynomial_step,
	smooth_step,
)
from vanishing_viscosity.vanishing_viscosity.grid import (
	ScalarField,
	VectorField,
	l2_norm,
	require_layer_resolution,
)

logger = logging.getLogger(__name__)

NORM_EXPONENTS = {
	"z1": 0.5,
	"z2": 1.0,
	"z": 0.5,
	"dz_dt": 0.5,
	"d1_z1": 0.5,
	"d2_z1": -0.5,
	"d1_z2": 1.0,
	"d2_z2": 0.5,
	"z_grad_z": 0.5,
}

# sup_x x²·c·e^{−cx} = 4e^{−2}/c
LAYER_SUP_CONSTANT = 4 * math.exp(-2)


# =============================================================================
# Cutoff
# =============================================================================

@dataclass(frozen=True)
class CutoffSpec:
	"""
	Cutoff φ(x₂): 1 on [0, h/4], 0 on [h/2, h], monotone in between.

	`kind` is "smooth" (C∞, e^{−1/s} transition) or "polynomial" (C² quintic).
	"""

	height: float
	kind: str = "smooth"

	def __post_init__(self):
		if self.kind not in ("smooth", "polynomial"):
			raise CorrectorError(f"cutoff kind must be 'smooth' or 'polynomial', got {self.kind!r}")

	@property
	def width(self):
		return self.height / 4

	def evaluate(self, x2):
		"""Return (φ, φ′, φ″) at x2."""
		s = (np.asarray(x2, dtype=float) - self.width) / self.width
		step = smooth_step if self.kind == "smooth" else polynomial_step
		S, S1, S2 = step(s)
		return 1.0 - S, -S1 / self.width, -S2 / self.width**2

	def phi(self, x2):
		return self.evaluate(x2)[0]

	def phi_prime(self, x2):
		return self.evaluate(x2)[1]

	def phi_double_prime(self, x2):
		return self.evaluate(x2)[2]


# =============================================================================
# Corrector Fields
# =============================================================================

@dataclass(frozen=True, eq=False)
class CorrectorFields:
	grid: object
	nu: float
	background: object
	cutoff: CutoffSpec
	trace: object
	psi: ScalarField
	z_tilde: VectorField
	grad_z_tilde: TensorField
	z: VectorField
	grad_z: TensorField
	dz_dt: VectorField

	@property
	def layer_profile(self):
		return np.exp(-self.background.U * self.grid.x2 / self.nu)


def _corrector_components(T, T1, T2, E, one_minus_E, phi, phi1, phi2, nu, U):
	"""z̃, ∇z̃, ψ, z and ∇z on the (n1, n2 + 1) mesh for trace arrays T, T1, T2."""
	ratio = nu / U
	psi = T * ratio * one_minus_E
	zt1 = -T * E
	zt2 = ratio * one_minus_E * T1

	grad_zt = np.stack([
		np.stack([-T1 * E, T * (U / nu) * E]),
		np.stack([ratio * one_minus_E * T2, E * T1]),
	])

	z1 = phi * zt1 - phi1 * psi
	z2 = phi * zt2
	grad_z = np.stack([
		np.stack([phi * grad_zt[0, 0] - phi1 * zt2, phi * grad_zt[0, 1] + 2 * phi1 * zt1 - phi2 * psi]),
		np.stack([phi * grad_zt[1, 0], phi * grad_zt[1, 1] + phi1 * zt2]),
	])
	return psi, np.stack([zt1, zt2]), grad_zt, np.stack([z1, z2]), grad_z


def eval_corrector(
	trace_v1,
	trace_v1_x1,
	trace_v1_x1x1,
	trace_dv1_dt,
	nu,
	background,
	cutoff,
	grid,
):
	"""
	Evaluate the corrector and its derivatives at one time instant.

	Args:
		trace_v1: Outflow trace v̄¹(x₁, 0)
		trace_v1_x1: ∂₁ of the trace
		trace_v1_x1x1: ∂₁² of the trace
		trace_dv1_dt: ∂ₜ of the trace
		nu: Viscosity (> 0)
		background: BackgroundFlow (U > 0)
		cutoff: CutoffSpec
		grid: ChannelGrid

	Returns:
		CorrectorFields
	"""
	if not nu > 0:
		raise CorrectorError(f"nu must be > 0, got {nu}")
	U = background.U
	if not U > 0:
		raise CorrectorError(f"background U must be > 0, got {U}")

	x2 = grid.x2[None, :]
	E = np.exp(-U * x2 / nu)
	one_minus_E = -np.expm1(-U * x2 / nu)
	phi, phi1, phi2 = (part[None, :] for part in cutoff.evaluate(grid.x2))

	T = trace_v1.values[:, None]
	T1 = trace_v1_x1.values[:, None]
	T2 = trace_v1_x1x1.values[:, None]
	psi, z_tilde, grad_zt, z, grad_z = _corrector_components(
		T, T1, T2, E, one_minus_E, phi, phi1, phi2, nu, U
	)

	Tt = trace_dv1_dt.values[:, None]
	Tt1 = trace_dv1_dt.derivative().values[:, None]
	_, _, _, dz_dt, _ = _corrector_components(
		Tt, Tt1, np.zeros_like(Tt1), E, one_minus_E, phi, phi1, phi2, nu, U
	)

	shape = grid.shape
	return CorrectorFields(
		grid=grid,
		nu=nu,
		background=background,
		cutoff=cutoff,
		trace=trace_v1,
		psi=ScalarField(grid, np.broadcast_to(psi, shape)),
		z_tilde=VectorField(grid, np.broadcast_to(z_tilde, (2, *shape)), solenoidal=True),
		grad_z_tilde=TensorField(grid, np.broadcast_to(grad_zt, (2, 2, *shape)).copy()),
		z=VectorField(grid, np.broadcast_to(z, (2, *shape)), solenoidal=True),
		grad_z=TensorField(grid, np.broadcast_to(grad_z, (2, 2, *shape)).copy()),
		dz_dt=VectorField(grid, np.broadcast_to(dz_dt, (2, *shape)), solenoidal=True),
	)


def corrector_from_trace(trace_v1, trace_dv1_dt, nu, background, grid, cutoff=None):
	"""
	eval_corrector with the x₁ derivatives of the trace taken spectrally.

	The second derivative is the first applied twice, so ∇z matches spectral
	differencing of z along x₁ to round-off.
	"""
	cutoff = cutoff or CutoffSpec(grid.geometry.height_h)
	return eval_corrector(
		trace_v1,
		trace_v1.derivative(1),
		trace_v1.derivative(1).derivative(1),
		trace_dv1_dt,
		nu,
		background,
		cutoff,
		grid,
	)


# =============================================================================
# Checks
# =============================================================================

def key_cancellation_residual(c, differenced=False):
	"""
	max |ν∂₂z̃¹ + U·z̃¹| over the nodes.

	With `differenced` the wall-normal derivative is taken by grid differencing
	instead of the closed form, which leaves an O(mesh²/ν²) residual.
	"""
	zt1 = c.z_tilde.values[0]
	if differenced:
		d2_zt1 = c.grid.d2(zt1)
	else:
		d2_zt1 = c.grad_z_tilde.values[0, 1]
	return float(np.max(np.abs(c.nu * d2_zt1 + c.background.U * zt1)))


def key_cancellation_scale(c):
	"""Natural size of either term of the cancellation, U·max|z̃¹|."""
	return float(c.background.U * np.max(np.abs(c.z_tilde.values[0])))


def corrector_norm_table(c, check_resolution=True):
	"""
	L² norms of the corrector and its derivatives.

	Returns:
		dict keyed like NORM_EXPONENTS
	"""
	if check_resolution:
		require_layer_resolution(c.grid, c.nu, c.background.U)
	grid = c.grid
	z = c.z.values
	G = c.grad_z.values

	def norm(values):
		return l2_norm(ScalarField(grid, values))

	z_grad_z = z[0] * G[:, 0] + z[1] * G[:, 1]
	return {
		"z1": norm(z[0]),
		"z2": norm(z[1]),
		"z": l2_norm(c.z),
		"dz_dt": l2_norm(c.dz_dt),
		"d1_z1": norm(G[0, 0]),
		"d2_z1": norm(G[0, 1]),
		"d1_z2": norm(G[1, 0]),
		"d2_z2": norm(G[1, 1]),
		"z_grad_z": l2_norm(VectorField(grid, z_grad_z)),
	}


@dataclass(frozen=True)
class WeightedBounds:
	winf: float
	w2: float
	winf_ratio: float
	w2_ratio: float


def weighted_bound_check(c, trace_sup):
	"""
	Weighted norms ‖x₂²∂₂z¹‖∞ and ‖x₂∂₂z¹‖₂, with the ratios winf/(ν·sup T) and
	w2/(ν^{1/2}·sup T) that stay bounded as ν shrinks.
	"""
	grid = c.grid
	d2_z1 = c.grad_z.values[0, 1]
	x2 = grid.x2[None, :]
	winf = float(np.max(np.abs(x2**2 * d2_z1)))
	w2 = l2_norm(ScalarField(grid, x2 * d2_z1))

	if trace_sup == 0:
		if winf > 0 or w2 > 0:
			raise InconsistentBoundError("trace sup is zero but the weighted norms are not")
		return WeightedBounds(0.0, 0.0, 0.0, 0.0)
	return WeightedBounds(
		winf=winf,
		w2=w2,
		winf_ratio=winf / (c.nu * trace_sup),
		w2_ratio=w2 / (math.sqrt(c.nu) * trace_sup),
	)


def pure_layer_sup(grid, nu, U):
	"""Nodal max of x₂²(U/ν)e^{−Ux₂/ν}; tends to 4e^{−2}ν/U on resolved meshes."""
	x2 = grid.x2
	return float(np.max(x2**2 * (U / nu) * np.exp(-U * x2 / nu)))


def pure_layer_moment(grid, nu, U):
	"""Trapezoidal ∫₀ʰ x₂²e^{−2Ux₂/ν}dx₂; tends to ν³/(4U³) when h ≫ ν/U."""
	x2 = grid.x2
	return float(trapezoid(x2**2 * np.exp(-2 * U * x2 / nu), x=x2))


def gradient_consistency(c, layer_widths=10.0):
	"""
	Max difference between closed-form ∇z and grid-differenced z above x₂ = layer_widths·ν/U.
	"""
	grid = c.grid
	z = c.z.values
	numeric = np.stack([
		np.stack([grid.d1(z[0]), grid.d2(z[0])]),
		np.stack([grid.d1(z[1]), grid.d2(z[1])]),
	])
	above = grid.x2 >= layer_widths * c.nu / c.background.U
	if not np.any(above):
		return 0.0
	return float(np.max(np.abs(numeric - c.grad_z.values)[..., above]))
