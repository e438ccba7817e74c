# Copyright (c) 2026, Vanishing Viscosity and Contributors
# See license.txt

"""
Tests for the homogenized Euler solver.
"""

import math
import unittest

import numpy as np

from vanishing_viscosity.vanishing_viscosity.exceptions import CFLViolationError, ConfigError
from vanishing_viscosity.vanishing_viscosity.fields import (
	WallCondition,
	divergence,
	leray_project,
	make_initial_data,
)
from vanishing_viscosity.vanishing_viscosity.grid import (
	BackgroundFlow,
	ChannelGeometry,
	VectorField,
	build_grid,
	l2_norm,
)
from vanishing_viscosity.vanishing_viscosity.manufactured import blob_error, manufactured_error
from vanishing_viscosity.vanishing_viscosity.solver_euler import (
	Advection,
	EulerState,
	STEP_SAFETY,
	SolverParams,
	advective_limit,
	check_cfl,
	euler_rhs,
	euler_step,
	euler_tendency,
	fixed_time_step,
	stable_time_step,
	outflow_flux,
	run_euler,
)


class TestSolverParams(unittest.TestCase):
	"""Test cases for time-stepping parameters."""

	def test_invalid_params(self):
		"""Test that impossible parameters raise ConfigError."""
		self.assertRaises(ConfigError, SolverParams, t_final=0.0)
		self.assertRaises(ConfigError, SolverParams, t_final=0.1, dt=0.2)
		self.assertRaises(ConfigError, SolverParams, cfl=1.5)
		self.assertRaises(ConfigError, SolverParams, snapshot_stride=0)
		self.assertRaises(ConfigError, SolverParams, t_final=0.1, snapshot_interval=0.2)
		self.assertRaises(ConfigError, SolverParams, snapshot_interval=0.0)
		self.assertRaises(ValueError, SolverParams, advection="quadratic")

	def test_fixed_time_step_lands_on_final_time(self):
		"""Test that dt is shrunk so an integer number of steps reaches t_final."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		v = np.zeros((2, *grid.shape))
		dt, steps = fixed_time_step(SolverParams(t_final=0.1, dt=0.03), grid, v, BackgroundFlow())

		self.assertEqual(steps, 4)
		self.assertAlmostEqual(dt, 0.025)

	def test_snapshot_interval_divides_steps(self):
		"""Test that with an interval the steps split evenly between snapshots."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		v = np.zeros((2, *grid.shape))
		params = SolverParams(t_final=0.1, dt=0.003, snapshot_interval=0.025)
		dt, steps = fixed_time_step(params, grid, v, BackgroundFlow())

		self.assertEqual(params.snapshot_count, 4)
		self.assertEqual(steps, 36)
		self.assertEqual(params.snapshot_every(steps), 9)
		self.assertAlmostEqual(dt, 0.1 / 36)

	def test_stride_without_interval(self):
		"""Test that without an interval snapshots follow the stride."""
		params = SolverParams(snapshot_stride=3)
		self.assertIsNone(params.snapshot_count)
		self.assertEqual(params.snapshot_every(100), 3)


class TestCFL(unittest.TestCase):
	"""Test cases for the advective time-step limit."""

	def test_advective_limit(self):
		"""Test the limit set by the background speed on a uniform grid."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		v = np.zeros((2, *grid.shape))

		self.assertAlmostEqual(advective_limit(grid, v, BackgroundFlow(), 0.5), 0.5 / 16)
		self.assertAlmostEqual(advective_limit(grid, v, BackgroundFlow(a=4.0), 0.5), 0.5 / 32)

	def test_automatic_step_has_headroom(self):
		"""Test that the automatic dt stays admissible when the velocity doubles."""
		grid = build_grid(ChannelGeometry(), 16, 32, 1.1)
		v = make_initial_data(grid, 0.1, 1, 0.2).values
		background = BackgroundFlow(a=1.0)

		dt = stable_time_step(grid, v, background, 0.5)
		self.assertLessEqual(dt, STEP_SAFETY * advective_limit(grid, v, background, 0.5) * (1 + 1e-12))
		check_cfl(grid, 2 * v, background, dt, 0.5)

		auto_dt, _ = fixed_time_step(SolverParams(t_final=0.1), grid, v, background)
		self.assertLessEqual(auto_dt, dt)

	def test_cfl_violation_suggests_step(self):
		"""Test that an oversized step is refused with the largest admissible one."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		v = np.zeros((2, *grid.shape))

		with self.assertRaises(CFLViolationError) as context:
			check_cfl(grid, v, BackgroundFlow(), 0.1, 0.5)
		self.assertAlmostEqual(context.exception.suggested_dt, 0.5 / 16)


class TestEulerRun(unittest.TestCase):
	"""Test cases for Euler runs."""

	@classmethod
	def setUpClass(cls):
		cls.grid = build_grid(ChannelGeometry(), 16, 32)
		cls.v0 = make_initial_data(cls.grid, 0.1, 1, 0.2)
		cls.params = SolverParams(t_final=0.1, dt=0.005, snapshot_stride=4)
		cls.euler_run = run_euler(cls.v0, cls.params, BackgroundFlow(a=0.5))

	def test_snapshot_times(self):
		"""Test snapshots at t = 0, every stride and at the final time."""
		np.testing.assert_allclose(self.euler_run.times, [0.0, 0.02, 0.04, 0.06, 0.08, 0.1])
		self.assertEqual(len(self.euler_run.energy), 21)
		self.assertEqual(len(self.euler_run.energy_defect), 20)

	def test_wall_conditions(self):
		"""Test v̄ = 0 on the inflow wall and v̄² = 0 on the outflow wall."""
		for snapshot in self.euler_run.snapshots:
			np.testing.assert_array_equal(snapshot.v_bar.values[:, :, -1], 0.0)
			np.testing.assert_array_equal(snapshot.v_bar.values[1, :, 0], 0.0)

	def test_divergence_free(self):
		"""Test that every snapshot stays discretely solenoidal."""
		for snapshot in self.euler_run.snapshots:
			div = np.max(np.abs(divergence(snapshot.v_bar).values))
			self.assertLess(div, 1e-9)

	def test_trace_matches_wall_row(self):
		"""Test that the recorded trace is the outflow row of v̄¹."""
		final = self.euler_run.snapshots[-1]
		np.testing.assert_array_equal(final.trace.values, final.v_bar.values[0, :, 0])

	def test_threshold_time(self):
		"""Test that without a threshold T₀ is the final time."""
		self.assertEqual(self.euler_run.t0_empirical, 0.1)
		self.assertTrue(self.euler_run.trace_below_threshold)

	def test_no_advection_keeps_state(self):
		"""Test that with transport off and no forcing the state does not move."""
		params = SolverParams(t_final=0.05, dt=0.005, advection=Advection.NONE)
		run = run_euler(self.v0, params)
		np.testing.assert_allclose(run.snapshots[-1].v_bar.values, self.v0.values, atol=1e-13)

	def test_zero_data_stays_zero(self):
		"""Test that zero data and zero forcing give zero energy."""
		run = run_euler(VectorField.zeros(self.grid), SolverParams(t_final=0.02, dt=0.01))
		np.testing.assert_array_equal(run.energy, 0.0)

	def test_automatic_step_run(self):
		"""Test that a run with automatic dt passes every per-step CFL check."""
		background = BackgroundFlow(a=0.5)
		run = run_euler(self.v0, SolverParams(t_final=0.05, snapshot_interval=0.01), background)

		np.testing.assert_allclose(run.times, [0.0, 0.01, 0.02, 0.03, 0.04, 0.05])
		limit = advective_limit(self.grid, self.v0.values, background, 0.5)
		self.assertLessEqual(run.dt, STEP_SAFETY * limit)

	def test_step_refuses_large_dt(self):
		"""Test that a single step checks the CFL limit."""
		state = EulerState.initial(self.v0)
		with self.assertRaises(CFLViolationError):
			euler_step(state, 1.0)


class TestEulerRhs(unittest.TestCase):
	"""Test cases for the unprojected right-hand side."""

	@classmethod
	def setUpClass(cls):
		cls.grid = build_grid(ChannelGeometry(), 16, 32, 1.05)
		cls.v0 = make_initial_data(cls.grid, 0.1, 1, 0.2)

	def test_projection_of_rhs_is_tendency(self):
		"""Test that projecting the wall-constrained right-hand side gives ∂ₜv̄."""
		state = EulerState.initial(self.v0, BackgroundFlow(a=0.5))
		rhs = euler_rhs(state).values.copy()
		rhs[:, :, -1] = 0.0
		rhs[1, :, 0] = 0.0

		projected = leray_project(VectorField(self.grid, rhs), WallCondition.INFLOW_OUTFLOW)
		tendency, _ = euler_tendency(state)
		np.testing.assert_allclose(projected.values, tendency.values, atol=1e-12)

	def test_rhs_without_transport_is_forcing(self):
		"""Test that with transport off only the forcing remains."""

		def forcing(grid, t):
			return np.full((2, *grid.shape), 0.25)

		state = EulerState.initial(self.v0, BackgroundFlow(), forcing)

		np.testing.assert_array_equal(euler_rhs(state, Advection.NONE).values, 0.25)

	def test_rhs_of_rest_is_zero(self):
		"""Test that v̄ = 0 under a constant background has no right-hand side."""
		state = EulerState.initial(VectorField.zeros(self.grid), BackgroundFlow(a=2.0))
		np.testing.assert_array_equal(euler_rhs(state).values, 0.0)

	def test_linear_rhs_is_background_transport(self):
		"""Test that linear advection gives −U·∇v̄ for a field depending on x₁ only."""
		X1, _ = self.grid.mesh
		values = np.stack([np.sin(2 * np.pi * X1), np.zeros(self.grid.shape)])
		state = EulerState.initial(VectorField(self.grid, values), BackgroundFlow(a=0.5, U=1.0))

		rhs = euler_rhs(state, Advection.LINEAR, dealiased=False).values
		np.testing.assert_allclose(rhs[0], -0.5 * 2 * np.pi * np.cos(2 * np.pi * X1), atol=1e-10)
		np.testing.assert_allclose(rhs[1], 0.0, atol=1e-12)


class TestEulerAccuracy(unittest.TestCase):
	"""Test cases for convergence against exact solutions."""

	def test_outflow_flux(self):
		"""Test ½∫U|v̄|² over the outflow wall for a unit tangential wall value."""
		grid = build_grid(ChannelGeometry(2.0, 1.0), 8, 16)
		values = np.zeros((2, *grid.shape))
		values[0, :, 0] = 1.0

		self.assertAlmostEqual(outflow_flux(VectorField(grid, values), BackgroundFlow(U=3.0)), 3.0)

	def test_manufactured_second_order(self):
		"""Test that halving the wall-normal cells divides the error by about four."""
		ratio = manufactured_error(16) / manufactured_error(32)
		self.assertGreater(ratio, 3.0)
		self.assertLess(ratio, 5.0)

	def test_linear_transport_converges(self):
		"""Test that the translated blob error falls when the grid is refined."""
		coarse = blob_error(64)
		fine = blob_error(128)
		self.assertLess(fine, coarse / 3)
		self.assertTrue(math.isfinite(coarse))
