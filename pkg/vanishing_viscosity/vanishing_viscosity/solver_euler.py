# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Euler Solver

Homogenized Euler system for v̄ = ū − U:

	∂ₜv̄ + (v̄ + U)·∇v̄ + v̄·∇U + ∇p̄ = f̄ − ∂ₜU − U·∇U

with v̄·n = 0 on both walls and v̄ = 0 on the inflow wall Γ+. Integrated with SSP-RK3;
the pressure comes out of the Leray projection of each stage tendency.
"""

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from vanishing_viscosity.vanishing_viscosity.exceptions import CFLViolationError, ConfigError
from vanishing_viscosity.vanishing_viscosity.fields import (
	BoundaryTrace,
	WallCondition,
	ZeroForcing,
	advective_derivative,
	boundary_trace,
	leray_project,
)
from vanishing_viscosity.vanishing_viscosity.grid import (
	BackgroundFlow,
	Boundary,
	ScalarField,
	VectorField,
	inner,
	l2_norm,
)

logger = logging.getLogger(__name__)

# automatic dt: fraction of the advective limit, and allowed velocity growth over the run
STEP_SAFETY = 0.8
VELOCITY_HEADROOM = 2.0


class Advection(enum.Enum):
	"""FULL: (v + U)·∇v; LINEAR: U·∇v only; NONE: no transport."""

	FULL = "full"
	LINEAR = "linear"
	NONE = "none"


@dataclass(frozen=True)
class SolverParams:
	"""
	Time-stepping parameters shared by both solvers.

	dt=None picks stable_time_step for the initial data, shrunk so an integer number of
	steps lands on t_final. With `snapshot_interval` set, snapshots are taken every
	interval (shrunk to divide t_final) instead of every `snapshot_stride` steps.
	"""

	t_final: float = 0.5
	dt: float | None = None
	cfl: float = 0.5
	snapshot_stride: int = 1
	snapshot_interval: float | None = None
	advection: Advection = Advection.FULL
	dealiased: bool = True
	trace_threshold: float = math.inf

	def __post_init__(self):
		if not self.t_final > 0:
			raise ConfigError(f"t_final must be > 0, got {self.t_final}")
		if self.dt is not None and not 0 < self.dt <= self.t_final:
			raise ConfigError(f"dt must lie in (0, t_final], got {self.dt}")
		if not 0 < self.cfl <= 1:
			raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
		if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
			raise ConfigError(f"snapshot_stride must be a positive integer, got {self.snapshot_stride}")
		if self.snapshot_interval is not None and not 0 < self.snapshot_interval <= self.t_final:
			raise ConfigError(f"snapshot_interval must lie in (0, t_final], got {self.snapshot_interval}")
		object.__setattr__(self, "advection", Advection(self.advection))

	@property
	def snapshot_count(self):
		"""Number of snapshot intervals after t = 0, or None when snapshots follow the stride."""
		if self.snapshot_interval is None:
			return None
		return max(1, math.ceil(self.t_final / self.snapshot_interval - 1e-9))

	def snapshot_every(self, steps):
		"""Steps between snapshots for a run of `steps` steps."""
		if self.snapshot_count is None:
			return self.snapshot_stride
		return steps // self.snapshot_count


# =============================================================================
# Shared Explicit Terms
# =============================================================================

def _carrier(v, background, advection):
	carrier = np.empty_like(v)
	carrier[0] = background.a
	carrier[1] = -background.U
	if advection is Advection.FULL:
		carrier += v
	return carrier


def explicit_terms(grid, v, background, forcing, t, advection=Advection.FULL, dealiased=True):
	"""−(v + U)·∇v + f on raw arrays; the U-only terms vanish for a constant background."""
	advection = Advection(advection)
	if advection is Advection.NONE:
		result = np.zeros_like(v)
	else:
		result = -advective_derivative(grid, _carrier(v, background, advection), v, dealiased=dealiased)

	f = forcing(grid, t)
	if f is not None:
		result += f
	return result


def advective_limit(grid, v, background, cfl):
	"""
	Largest dt with dt ≤ cfl·min(Δx₁/max|v¹ + a|, Δx₂/|v² − U|) using the local x₂ cell.
	"""
	horizontal = np.max(np.abs(v[0] + background.a))
	vertical = np.abs(v[1] - background.U)
	h = grid.spacing
	local_cell = np.minimum(np.concatenate([[h[0]], h]), np.concatenate([h, [h[-1]]]))
	limits = [math.inf]
	if horizontal > 0:
		limits.append(grid.dx1 / horizontal)
	vertical_rate = np.max(vertical / local_cell[None, :])
	if vertical_rate > 0:
		limits.append(1.0 / vertical_rate)
	return cfl * min(limits)


def check_cfl(grid, v, background, dt, cfl):
	limit = advective_limit(grid, v, background, cfl)
	if dt > limit * (1 + 1e-12):
		raise CFLViolationError(
			f"dt={dt:.3e} exceeds the advective limit {limit:.3e} at cfl={cfl}", suggested_dt=limit
		)


def stable_time_step(grid, v, background, cfl):
	"""
	Automatic dt: STEP_SAFETY times the advective limit for velocities up to
	VELOCITY_HEADROOM times the given ones, on the smallest x₂ cell.

	Always below STEP_SAFETY·advective_limit(grid, v, background, cfl).
	"""
	horizontal = abs(background.a) + VELOCITY_HEADROOM * np.max(np.abs(v[0]))
	vertical = background.U + VELOCITY_HEADROOM * np.max(np.abs(v[1]))
	limits = [math.inf, np.min(grid.spacing) / vertical]
	if horizontal > 0:
		limits.append(grid.dx1 / horizontal)
	return STEP_SAFETY * cfl * min(limits)


def fixed_time_step(params, grid, v, background):
	"""
	The run's constant dt and step count, with steps·dt = t_final.

	With a snapshot_interval the step count is a multiple of params.snapshot_count, so
	every snapshot lands on a multiple of the (shrunk) interval.
	"""
	dt = params.dt if params.dt is not None else stable_time_step(grid, v, background, params.cfl)
	spans = params.snapshot_count or 1
	per_span = max(1, math.ceil(params.t_final / spans / dt - 1e-9))
	steps = spans * per_span
	return params.t_final / steps, steps


# =============================================================================
# State and Stepping
# =============================================================================

@dataclass(frozen=True, eq=False)
class EulerState:
	v_bar: VectorField
	p_bar: ScalarField
	t: float
	background: BackgroundFlow = field(default_factory=BackgroundFlow)
	forcing: object = field(default_factory=ZeroForcing)

	@property
	def grid(self):
		return self.v_bar.grid

	@classmethod
	def initial(cls, v_bar, background=None, forcing=None, t=0.0):
		return cls(
			v_bar=v_bar,
			p_bar=ScalarField.zeros(v_bar.grid),
			t=t,
			background=background or BackgroundFlow(),
			forcing=forcing or ZeroForcing(),
		)


def _enforce_walls(values):
	"""Inflow: v̄ = 0 on Γ+. Both walls: v̄² = 0."""
	values[:, :, -1] = 0.0
	values[1, :, 0] = 0.0
	return values


def _tendency_arrays(grid, v, background, forcing, t, advection, dealiased):
	rhs = explicit_terms(grid, v, background, forcing, t, advection, dealiased)
	rhs = _enforce_walls(rhs)
	projected, pressure = leray_project(
		VectorField(grid, rhs), WallCondition.INFLOW_OUTFLOW, return_potential=True
	)
	return projected.values, pressure


def euler_rhs(state, advection=Advection.FULL, dealiased=True):
	"""Unprojected right-hand side −(v̄ + U)·∇v̄ − v̄·∇U + f̄ − ∂ₜU − U·∇U."""
	values = explicit_terms(
		state.grid, state.v_bar.values, state.background, state.forcing, state.t, advection, dealiased
	)
	return VectorField(state.grid, values)


def euler_tendency(state, advection=Advection.FULL, dealiased=True):
	"""
	Projected ∂ₜv̄ and the pressure p̄ at the state's time.

	Returns:
		(VectorField, ScalarField)
	"""
	values, pressure = _tendency_arrays(
		state.grid, state.v_bar.values, state.background, state.forcing, state.t, advection, dealiased
	)
	return VectorField(state.grid, values, solenoidal=True), pressure


def euler_step(state, dt, advection=Advection.FULL, cfl=0.5, dealiased=True, check=True):
	"""
	One SSP-RK3 step of the homogenized Euler system.

	Args:
		state: EulerState
		dt: Time step
		advection: Advection mode
		cfl: Courant number the step must respect
		check: Raise CFLViolationError when dt is above the advective limit

	Returns:
		EulerState at t + dt
	"""
	grid = state.grid
	v = state.v_bar.values
	if check:
		check_cfl(grid, v, state.background, dt, cfl)

	def stage(values, t):
		return _tendency_arrays(grid, values, state.background, state.forcing, t, advection, dealiased)

	k, _ = stage(v, state.t)
	v1 = _enforce_walls(v + dt * k)
	k, _ = stage(v1, state.t + dt)
	v2 = _enforce_walls(0.75 * v + 0.25 * (v1 + dt * k))
	k, pressure = stage(v2, state.t + 0.5 * dt)
	v3 = _enforce_walls(v / 3 + 2 / 3 * (v2 + dt * k))

	return replace(state, v_bar=VectorField(grid, v3, solenoidal=True), p_bar=pressure, t=state.t + dt)


# =============================================================================
# Runs
# =============================================================================

@dataclass(frozen=True, eq=False)
class EulerSnapshot:
	t: float
	v_bar: VectorField
	p_bar: ScalarField
	trace: BoundaryTrace
	trace_dt: BoundaryTrace

	@property
	def grid(self):
		return self.v_bar.grid


@dataclass(frozen=True, eq=False)
class EulerRun:
	"""
	Snapshots plus per-step energy monitoring.

	`energy[n]` is ½‖v̄(tₙ)‖², `outflow_flux[n]` is ½∫_{Γ−}U|v̄|² at tₙ and
	`energy_defect[n]` the discrete defect of d/dt ½‖v̄‖² + flux − (f̄, v̄) over [tₙ, tₙ₊₁].
	"""

	grid: object
	params: SolverParams
	background: BackgroundFlow
	dt: float
	snapshots: list
	step_times: np.ndarray
	energy: np.ndarray
	outflow_flux: np.ndarray
	energy_defect: np.ndarray
	t0_empirical: float

	@property
	def times(self):
		return np.array([s.t for s in self.snapshots])

	@property
	def trace_sups(self):
		return np.array([s.trace.sup for s in self.snapshots])

	@property
	def trace_below_threshold(self):
		return bool(np.all(self.trace_sups <= self.params.trace_threshold))


def outflow_flux(v, background):
	"""½∫_{Γ−}U·n|v̄|² with U·n = U on the outflow wall."""
	grid = v.grid
	wall = v.values[:, :, 0]
	return 0.5 * background.U * grid.integrate_wall(np.sum(wall * wall, axis=0))


def _snapshot(state, params):
	tendency, pressure = euler_tendency(state, params.advection, params.dealiased)
	return EulerSnapshot(
		t=state.t,
		v_bar=state.v_bar,
		p_bar=pressure,
		trace=boundary_trace(state.v_bar, Boundary.OUTFLOW),
		trace_dt=boundary_trace(tendency, Boundary.OUTFLOW),
	)


def _forcing_power(state):
	f = state.forcing(state.grid, state.t)
	if f is None:
		return 0.0
	return inner(VectorField(state.grid, f), state.v_bar)


def run_euler(initial, params, background=None, forcing=None):
	"""
	Fixed-dt run from `initial` to params.t_final.

	Records a snapshot at t = 0 and every params.snapshot_every(steps) steps (the final
	time is always included), each carrying the outflow trace v̄¹(t, x₁, 0) and its time
	derivative from the projected tendency.

	Returns:
		EulerRun
	"""
	state = EulerState.initial(initial, background, forcing)
	grid = state.grid
	dt, steps = fixed_time_step(params, grid, initial.values, state.background)
	logger.info("euler run: %d steps of dt=%.3e on %s", steps, dt, grid.describe())
	stride = params.snapshot_every(steps)

	snapshots = [_snapshot(state, params)]
	energy = [0.5 * l2_norm(state.v_bar) ** 2]
	flux = [outflow_flux(state.v_bar, state.background)]
	power = [_forcing_power(state)]

	for n in range(1, steps + 1):
		state = euler_step(state, dt, params.advection, params.cfl, params.dealiased)
		state = replace(state, t=n * dt)
		energy.append(0.5 * l2_norm(state.v_bar) ** 2)
		flux.append(outflow_flux(state.v_bar, state.background))
		power.append(_forcing_power(state))
		if n % stride == 0 or n == steps:
			snapshots.append(_snapshot(state, params))
			logger.debug("euler t=%.4f energy=%.6e flux=%.6e", state.t, energy[-1], flux[-1])

	energy = np.array(energy)
	flux = np.array(flux)
	power = np.array(power)
	defect = np.diff(energy) / dt + 0.5 * (flux[1:] + flux[:-1]) - 0.5 * (power[1:] + power[:-1])

	t0 = params.t_final
	for snapshot in snapshots:
		if snapshot.trace.sup > params.trace_threshold:
			t0 = snapshot.t
			break

	return EulerRun(
		grid=grid,
		params=params,
		background=state.background,
		dt=dt,
		snapshots=snapshots,
		step_times=dt * np.arange(steps + 1),
		energy=energy,
		outflow_flux=flux,
		energy_defect=defect,
		t0_empirical=t0,
	)
