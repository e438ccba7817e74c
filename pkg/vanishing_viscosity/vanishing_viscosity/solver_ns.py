# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Navier-Stokes Solver

Homogenized Navier-Stokes system for v = u − U:

	∂ₜv + (v + U)·∇v + v·∇U + ∇p = νΔv + νΔU + f − ∂ₜU − U·∇U

with v = 0 on both walls. Each SSP-RK3 stage is an IMEX substep: explicit transport,
implicit wall-normal diffusion (one tridiagonal solve for all columns), exact x₁
diffusion in Fourier space, then the no-slip projection.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from vanishing_viscosity.vanishing_viscosity.exceptions import ConfigError
from vanishing_viscosity.vanishing_viscosity.fields import (
	WallCondition,
	ZeroForcing,
	leray_project,
	vector_gradient,
)
from vanishing_viscosity.vanishing_viscosity.grid import (
	BackgroundFlow,
	ScalarField,
	VectorField,
	dirichlet_diffusion_bands,
	inner,
	l2_norm,
)
from vanishing_viscosity.vanishing_viscosity.solver_euler import (
	Advection,
	check_cfl,
	explicit_terms,
	fixed_time_step,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NSState:
	v: VectorField
	p: ScalarField
	t: float
	nu: float
	background: BackgroundFlow = field(default_factory=BackgroundFlow)
	forcing: object = field(default_factory=ZeroForcing)

	def __post_init__(self):
		if not self.nu > 0:
			raise ConfigError(f"nu must be > 0, got {self.nu}")

	@property
	def grid(self):
		return self.v.grid

	@classmethod
	def initial(cls, v, nu, background=None, forcing=None, t=0.0):
		return cls(
			v=v,
			p=ScalarField.zeros(v.grid),
			t=t,
			nu=nu,
			background=background or BackgroundFlow(),
			forcing=forcing or ZeroForcing(),
		)


def _explicit(grid, v, state, t, advection, dealiased):
	return explicit_terms(grid, v, state.background, state.forcing, t, advection, dealiased)


def _diffuse(grid, values, nu, dt):
	"""(I − dtν∂₂²)⁻¹ with zero wall rows, then e^{−νk²dt} along x₁."""
	ab = dirichlet_diffusion_bands(grid, nu * dt)
	values = values.copy()
	values[:, :, 0] = 0.0
	values[:, :, -1] = 0.0
	columns = values.reshape(-1, values.shape[-1]).T
	solved = linalg.solve_banded((1, 1), ab, columns).T.reshape(values.shape)

	spectrum = np.fft.rfft(solved, axis=-2)
	spectrum *= np.exp(-nu * grid.wavenumbers**2 * dt)[:, None]
	return np.fft.irfft(spectrum, n=grid.n1, axis=-2)


def _pin_walls(values):
	values[:, :, 0] = 0.0
	values[:, :, -1] = 0.0
	return values


def ns_step(state, dt, advection=Advection.FULL, cfl=0.5, dealiased=True, check=True):
	"""
	One IMEX SSP-RK3 step of the homogenized Navier-Stokes system.

	Args:
		state: NSState
		dt: Time step; only the advective CFL limits it
		advection: Advection mode
		cfl: Courant number the step must respect
		check: Raise CFLViolationError when dt is above the advective limit

	Returns:
		NSState at t + dt
	"""
	grid = state.grid
	v = state.v.values
	if check:
		check_cfl(grid, v, state.background, dt, cfl)

	def substep(values, t):
		explicit = values + dt * _explicit(grid, values, state, t, advection, dealiased)
		diffused = _diffuse(grid, explicit, state.nu, dt)
		projected, potential = leray_project(
			VectorField(grid, diffused), WallCondition.NO_SLIP, return_potential=True
		)
		return _pin_walls(projected.values), potential

	v1, _ = substep(v, state.t)
	s2, _ = substep(v1, state.t + dt)
	v2 = 0.75 * v + 0.25 * s2
	s3, potential = substep(v2, state.t + 0.5 * dt)
	v3 = _pin_walls(v / 3 + 2 / 3 * s3)

	return replace(
		state,
		v=VectorField(grid, v3, solenoidal=True),
		p=ScalarField(grid, potential.values / dt),
		t=state.t + dt,
	)


# =============================================================================
# Runs
# =============================================================================

@dataclass(frozen=True, eq=False)
class NSSnapshot:
	t: float
	v: VectorField
	p: ScalarField

	@property
	def grid(self):
		return self.v.grid


@dataclass(frozen=True, eq=False)
class NSRun:
	"""
	Snapshots plus per-step energy monitoring: `energy[n]` is ½‖v(tₙ)‖², `dissipation[n]`
	is ν‖∇v(tₙ)‖² and `energy_defect[n]` the defect of d/dt ½‖v‖² + ν‖∇v‖² − (f, v).
	"""

	grid: object
	params: object
	nu: float
	background: BackgroundFlow
	dt: float
	snapshots: list
	step_times: np.ndarray
	energy: np.ndarray
	dissipation: np.ndarray
	energy_defect: np.ndarray

	@property
	def times(self):
		return np.array([s.t for s in self.snapshots])


def _dissipation(state):
	return state.nu * l2_norm(vector_gradient(state.v)) ** 2


def _forcing_power(state):
	f = state.forcing(state.grid, state.t)
	if f is None:
		return 0.0
	return inner(VectorField(state.grid, f), state.v)


def run_ns(initial, params, nu, background=None, forcing=None):
	"""
	Fixed-dt run from `initial` to params.t_final.

	Snapshot times are n·dt for the same n as run_euler with the same params and dt,
	so Euler and Navier-Stokes snapshots can be differenced directly.

	Returns:
		NSRun
	"""
	state = NSState.initial(initial, nu, background, forcing)
	grid = state.grid
	dt, steps = fixed_time_step(params, grid, initial.values, state.background)
	logger.info("ns run nu=%g: %d steps of dt=%.3e on %s", nu, steps, dt, grid.describe())
	stride = params.snapshot_every(steps)

	snapshots = [NSSnapshot(state.t, state.v, state.p)]
	energy = [0.5 * l2_norm(state.v) ** 2]
	dissipation = [_dissipation(state)]
	power = [_forcing_power(state)]

	for n in range(1, steps + 1):
		state = ns_step(state, dt, params.advection, params.cfl, params.dealiased)
		state = replace(state, t=n * dt)
		energy.append(0.5 * l2_norm(state.v) ** 2)
		dissipation.append(_dissipation(state))
		power.append(_forcing_power(state))
		if n % stride == 0 or n == steps:
			snapshots.append(NSSnapshot(state.t, state.v, state.p))
			logger.debug("ns nu=%g t=%.4f energy=%.6e", nu, state.t, energy[-1])

	energy = np.array(energy)
	dissipation = np.array(dissipation)
	power = np.array(power)
	defect = (
		np.diff(energy) / dt
		+ 0.5 * (dissipation[1:] + dissipation[:-1])
		- 0.5 * (power[1:] + power[:-1])
	)

	return NSRun(
		grid=grid,
		params=params,
		nu=nu,
		background=state.background,
		dt=dt,
		snapshots=snapshots,
		step_times=dt * np.arange(steps + 1),
		energy=energy,
		dissipation=dissipation,
		energy_defect=defect,
	)
