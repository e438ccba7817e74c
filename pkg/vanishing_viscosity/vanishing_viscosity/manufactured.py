# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Exact solutions used by the selftest and the solver tests.
"""

import math
from dataclasses import dataclass

import numpy as np

from vanishing_viscosity.vanishing_viscosity.fields import FunctionForcing
from vanishing_viscosity.vanishing_viscosity.grid import (
	BackgroundFlow,
	ChannelGeometry,
	VectorField,
	build_grid,
	l2_norm,
)
from vanishing_viscosity.vanishing_viscosity.solver_euler import Advection, SolverParams, run_euler
from vanishing_viscosity.vanishing_viscosity.solver_ns import run_ns


@dataclass(frozen=True)
class ManufacturedFlow:
	"""
	v = cos t · ∇⊥(A sin(kx₁)·x₂²(h − x₂)²), zero on both walls and divergence-free.

	The forcing f = ∂ₜv + (v + U)·∇v − νΔv makes v an exact solution with constant
	pressure; ν = 0 gives the Euler forcing.
	"""

	length_L: float = 1.0
	height_h: float = 1.0
	amplitude: float = 1.0
	mode: int = 1

	@property
	def k(self):
		return 2 * math.pi * self.mode / self.length_L

	def _profile(self, x2):
		h = self.height_h
		b = x2**2 * (h - x2) ** 2
		b1 = 2 * x2 * (h - x2) * (h - 2 * x2)
		b2 = 2 * (h**2 - 6 * h * x2 + 6 * x2**2)
		b3 = 12 * (2 * x2 - h)
		return b, b1, b2, b3

	def _parts(self, X1, X2):
		k = self.k
		A = self.amplitude
		b, b1, b2, b3 = self._profile(X2)
		s, c = np.sin(k * X1), np.cos(k * X1)
		v = np.stack([-A * s * b1, A * k * c * b])
		grad = np.stack([
			np.stack([-A * k * c * b1, -A * s * b2]),
			np.stack([-A * k**2 * s * b, A * k * c * b1]),
		])
		lap = np.stack([-A * s * (b3 - k**2 * b1), A * k * c * (b2 - k**2 * b)])
		return v, grad, lap

	def velocity(self, grid, t):
		X1, X2 = grid.mesh
		v, _, _ = self._parts(X1, X2)
		return VectorField(grid, math.cos(t) * v, solenoidal=True)

	def forcing(self, nu=0.0, background=None):
		background = background or BackgroundFlow()

		def func(X1, X2, t):
			v, grad, lap = self._parts(X1, X2)
			ct, st = math.cos(t), math.sin(t)
			carrier = np.stack([ct * v[0] + background.a, ct * v[1] - background.U])
			advection = ct * (carrier[0] * grad[:, 0] + carrier[1] * grad[:, 1])
			f = -st * v + advection - nu * ct * lap
			return f[0], f[1]

		return FunctionForcing(func)


def stokes_mode(grid, nu, t=0.0):
	"""v¹ = sin(πx₂/h)e^{−νπ²t/h²}, v² = 0: the slowest heat-equation mode of the channel."""
	h = grid.geometry.height_h
	X1, X2 = grid.mesh
	values = np.zeros((2, *grid.shape))
	values[0] = np.sin(np.pi * X2 / h) * math.exp(-nu * math.pi**2 * t / h**2)
	values[0][:, [0, -1]] = 0.0
	return VectorField(grid, values, solenoidal=True)


def translating_blob(grid, t=0.0, background=None, amplitude=0.1, center=0.6, width=0.12):
	"""
	∇⊥ of A sin(2πx₁/L)e^{−((x₂ − c)/σ)²}, carried rigidly by U = (a, −U).

	The exact solution of the linear transport problem at time t.
	"""
	background = background or BackgroundFlow()
	L = grid.geometry.length_L
	X1, X2 = grid.mesh
	x1 = X1 - background.a * t
	x2 = X2 + background.U * t
	k = 2 * math.pi / L
	gauss = np.exp(-(((x2 - center) / width) ** 2))
	d_gauss = -2 * (x2 - center) / width**2 * gauss
	values = np.stack([-amplitude * np.sin(k * x1) * d_gauss, amplitude * k * np.cos(k * x1) * gauss])
	return VectorField(grid, values, solenoidal=True)


# =============================================================================
# Convergence Runs
# =============================================================================

def _final_only(t_final, dt, advection=Advection.FULL):
	"""Parameters whose runs keep only the t = 0 and t_final snapshots."""
	return SolverParams(t_final=t_final, dt=dt, snapshot_interval=t_final, advection=advection)


def manufactured_error(n2, nu=0.0, n1=8, t_final=0.05, dt=1e-3, background=None):
	"""
	L² error at t_final of the Euler (nu = 0) or Navier-Stokes solver against
	ManufacturedFlow on a uniform n1 × n2 grid.
	"""
	background = background or BackgroundFlow()
	grid = build_grid(ChannelGeometry(), n1, n2)
	flow = ManufacturedFlow()
	params = _final_only(t_final, dt)
	initial = flow.velocity(grid, 0.0)
	forcing = flow.forcing(nu, background)
	if nu == 0:
		final = run_euler(initial, params, background, forcing).snapshots[-1].v_bar
	else:
		final = run_ns(initial, params, nu, background, forcing).snapshots[-1].v
	return l2_norm(final - flow.velocity(grid, t_final))


def blob_error(n2, n1=8, t_final=0.2, dt=2.5e-3, amplitude=0.01):
	"""L² error of linear transport of translating_blob by the background flow."""
	grid = build_grid(ChannelGeometry(), n1, n2)
	background = BackgroundFlow()
	params = _final_only(t_final, dt, Advection.LINEAR)
	initial = translating_blob(grid, 0.0, background, amplitude)
	final = run_euler(initial, params, background).snapshots[-1].v_bar
	return l2_norm(final - translating_blob(grid, t_final, background, amplitude))


def stokes_decay_error(nu=0.01, n2=32, n1=4, dt=0.01):
	"""
	Relative error of the measured decay rate of stokes_mode over one decay time
	h²/(νπ²), advection off.
	"""
	grid = build_grid(ChannelGeometry(), n1, n2)
	# slow background: only the CFL check sees it
	background = BackgroundFlow(U=0.01)
	h = grid.geometry.height_h
	exact_rate = nu * math.pi**2 / h**2
	t_final = 1.0 / exact_rate
	params = _final_only(t_final, dt, Advection.NONE)
	initial = stokes_mode(grid, nu)
	final = run_ns(initial, params, nu, background).snapshots[-1].v
	measured_rate = -math.log(l2_norm(final) / l2_norm(initial)) / t_final
	return abs(measured_rate / exact_rate - 1)
