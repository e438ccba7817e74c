# Copyright (c) 2026, Vanishing Viscosity and Contributors
# See license.txt

"""
Tests for paired-snapshot diagnostics: energy budget, Hardy ratio, rate fits and
growth envelopes.
"""

import math
import unittest

import numpy as np

from vanishing_viscosity.vanishing_viscosity.diagnostics import (
	BUDGET_TERMS,
	corrected_difference,
	energy_budget,
	fit_main_envelope,
	fit_rate,
	gronwall_envelope,
	hardy_ratio,
	pair_snapshots,
)
from vanishing_viscosity.vanishing_viscosity.exceptions import DiagnosticError, SnapshotAlignmentError
from vanishing_viscosity.vanishing_viscosity.grid import (
	BackgroundFlow,
	ChannelGeometry,
	ScalarField,
	VectorField,
	build_grid,
)
from vanishing_viscosity.vanishing_viscosity.harness import RunConfig, execute_run
from vanishing_viscosity.vanishing_viscosity.solver_euler import SolverParams, run_euler
from vanishing_viscosity.vanishing_viscosity.solver_ns import run_ns


class TestRateFit(unittest.TestCase):
	"""Test cases for the log-log rate fit."""

	def test_exact_power_law(self):
		"""Test that an exact power law is recovered with r² = 1."""
		pairs = [(nu, 3.0 * nu**0.5) for nu in (1e-4, 1e-2, 1e-3, 1e-1)]
		fit = fit_rate(pairs)

		self.assertAlmostEqual(fit.slope, 0.5, places=10)
		self.assertAlmostEqual(math.exp(fit.intercept), 3.0, places=8)
		self.assertAlmostEqual(fit.r_squared, 1.0, places=10)
		self.assertEqual(fit.nus, (1e-1, 1e-2, 1e-3, 1e-4))
		np.testing.assert_allclose(fit.pairwise_slopes, 0.5)
		self.assertAlmostEqual(fit.predict(1e-6), 3e-3, places=10)

	def test_needs_three_positive_points(self):
		"""Test that short or non-positive data are refused."""
		self.assertRaises(DiagnosticError, fit_rate, [(0.1, 1.0), (0.01, 0.3)])
		self.assertRaises(DiagnosticError, fit_rate, [(0.1, 1.0), (0.01, 0.0), (0.001, 0.1)])


class TestEnvelopes(unittest.TestCase):
	"""Test cases for the fitted growth envelopes."""

	def test_gronwall_envelope_recovers_constant(self):
		"""Test that norms on an exact envelope give back its constant."""
		nu = 1e-3
		times = np.linspace(0.0, 1.0, 11)
		norms = 2.0 * np.sqrt(nu * times) * np.exp(times)

		fit = gronwall_envelope(times, norms, nu)
		self.assertAlmostEqual(fit.C, 2.0, places=10)
		self.assertAlmostEqual(fit.max_ratio, 1.0, places=10)

	def test_gronwall_envelope_degenerate(self):
		"""Test zero norms and a nonzero norm at t = 0."""
		self.assertEqual(gronwall_envelope([0.0, 0.5], [0.0, 0.0], 1e-2).C, 0.0)
		self.assertEqual(gronwall_envelope([0.0, 0.5], [0.1, 0.2], 1e-2).C, math.inf)

	def test_main_envelope_recovers_constant(self):
		"""Test the main envelope fit on errors built from a known constant."""
		nu = 1e-2
		C = 1.5
		times = np.linspace(0.0, 0.8, 9)
		errors = C * np.sqrt(nu * times) * np.exp(C * times / 2) + C * math.sqrt(nu) * times

		fit = fit_main_envelope(times, errors, nu)
		self.assertAlmostEqual(fit.C, C, places=8)
		self.assertAlmostEqual(fit.max_ratio, 1.0, places=8)


class TestHardyRatio(unittest.TestCase):
	"""Test cases for the Hardy ratio."""

	def test_linear_profile(self):
		"""Test that f = x₂ gives ratio one."""
		grid = build_grid(ChannelGeometry(), 8, 16, 1.1)
		_, X2 = grid.mesh
		self.assertAlmostEqual(hardy_ratio(ScalarField(grid, X2)), 1.0, places=10)

	def test_bounded_by_two(self):
		"""Test the Hardy constant on a profile vanishing at the outflow wall."""
		grid = build_grid(ChannelGeometry(), 8, 64)
		X1, X2 = grid.mesh
		f = ScalarField(grid, np.sin(2 * np.pi * X1) * np.sin(np.pi * X2) * (1 + X2))
		self.assertLess(hardy_ratio(f), 2.0)

	def test_wall_value_refused(self):
		"""Test that f ≠ 0 on the outflow wall is refused and f ≡ 0 gives zero."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		self.assertRaises(DiagnosticError, hardy_ratio, ScalarField(grid, np.ones(grid.shape)))
		self.assertEqual(hardy_ratio(ScalarField.zeros(grid)), 0.0)


class TestPairing(unittest.TestCase):
	"""Test cases for snapshot pairing."""

	def test_corrected_difference(self):
		"""Test w = (v − v̄) − z componentwise."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		v = VectorField(grid, np.full((2, *grid.shape), 3.0))
		v_bar = VectorField(grid, np.full((2, *grid.shape), 1.0))
		z = VectorField(grid, np.full((2, *grid.shape), 0.5))

		difference = corrected_difference(v, v_bar, z)
		np.testing.assert_array_equal(difference.w_tilde.values, 2.0)
		np.testing.assert_array_equal(difference.w.values, 1.5)
		self.assertEqual(difference.wall_residual, 1.5)

	def test_misaligned_runs(self):
		"""Test that runs with different steps cannot be paired."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		zero = VectorField.zeros(grid)
		euler = run_euler(zero, SolverParams(t_final=0.02, dt=0.01))
		ns = run_ns(zero, SolverParams(t_final=0.02, dt=0.005), 0.1)

		with self.assertRaises(SnapshotAlignmentError):
			pair_snapshots(ns, euler)


class TestEnergyBudget(unittest.TestCase):
	"""Test cases for the energy budget of w on a short run with tangential background flow."""

	@classmethod
	def setUpClass(cls):
		cls.result = execute_run(RunConfig(n1=16, nu=0.05, a=1.0, t_final=0.2, amplitude=0.1))
		cls.budgets = cls.result.budgets

	def test_budgets_at_interior_snapshots(self):
		"""Test one budget per snapshot with two neighbours."""
		self.assertEqual(len(self.budgets), len(self.result.pairs) - 2)
		self.assertEqual(set(self.budgets[0].terms), set(BUDGET_TERMS))

	def test_w_vanishes_on_walls(self):
		"""Test that the corrector removes the outflow mismatch exactly."""
		for pair in self.result.pairs:
			np.testing.assert_allclose(pair.w.values[..., [0, -1]], 0.0, atol=1e-14)

	def test_nonlinear_split(self):
		"""Test that the six nonlinear pieces add up to the nonlinear term."""
		for budget in self.budgets:
			scale = sum(abs(piece) for piece in budget.nonlinear_split.values()) + 1e-300
			self.assertLess(abs(budget.terms["nonlinear"] - budget.nonlinear_split_total), 1e-10 * scale)

	def test_transport_term_vanishes(self):
		"""Test that transport of w by U carries no energy across the walls."""
		for budget in self.budgets:
			self.assertLess(abs(budget.terms["transport"]), 1e-8 * max(budget.closure_scale, 1e-300))

	def test_integration_by_parts_along_walls(self):
		"""Test the x₁ integrations by parts used for a ≠ 0."""
		for budget in self.budgets:
			for name, (before, after) in budget.parts_checks.items():
				scale = max(abs(before), abs(after), budget.closure_scale)
				self.assertLess(abs(before - after), 1e-8 * scale, name)

	def test_triangle_inequality(self):
		"""Test ‖w̃‖ ≤ ‖w‖ + ‖z‖ at every budget time."""
		self.assertTrue(all(budget.triangle_holds for budget in self.budgets))

	def test_sign_flip_breaks_closure(self):
		"""Test that flipping the largest term is detected."""
		pairs = self.result.pairs
		index = len(pairs) // 2
		budget = energy_budget(pairs[index - 1], pairs[index], pairs[index + 1], BackgroundFlow(a=1.0), 0.05)
		term = max(BUDGET_TERMS, key=lambda name: abs(budget.terms[name]))
		mutated = energy_budget(
			pairs[index - 1], pairs[index], pairs[index + 1], BackgroundFlow(a=1.0), 0.05, {term: -1.0}
		)

		def signed_residual(b):
			return b.lhs_dwdt + b.lhs_visc - sum(b.terms.values())

		self.assertAlmostEqual(mutated.terms[term], -budget.terms[term])
		self.assertAlmostEqual(
			signed_residual(mutated) - signed_residual(budget), 2 * budget.terms[term], delta=1e-12 * budget.closure_scale
		)

	def test_uneven_spacing_refused(self):
		"""Test that a budget needs uniformly spaced snapshots."""
		pairs = self.result.pairs
		with self.assertRaises(SnapshotAlignmentError):
			energy_budget(pairs[0], pairs[1], pairs[3], BackgroundFlow(a=1.0), 0.05)

	def test_budget_closes(self):
		"""Test that every budget closes within five percent."""
		for budget in self.budgets:
			self.assertTrue(budget.closes(), f"t={budget.t}: relative residual {budget.relative_residual:.3e}")

	def test_combined_term_matches_direct_form(self):
		"""Test that I from the corrector terms equals −(ν∇z − z⊗U, ∇w) to round-off."""
		for budget in self.budgets:
			self.assertLessEqual(budget.I_mismatch, 1e-10, f"t={budget.t}")


class TestBudgetAtDefaults(unittest.TestCase):
	"""Test cases for the energy budget of a default run: a = 0, ν = 1e-2, automatic dt and grid."""

	@classmethod
	def setUpClass(cls):
		cls.result = execute_run(RunConfig(nu=1e-2, a=0.0))
		cls.budgets = cls.result.budgets

	def test_run_completes(self):
		"""Test that the automatic step reaches t_final without a CFL failure."""
		self.assertAlmostEqual(self.result.euler.step_times[-1], 0.5, places=12)
		self.assertAlmostEqual(self.result.pairs[-1].t, 0.5, places=12)
		self.assertEqual(len(self.result.pairs), 101)
		self.assertEqual(len(self.budgets), len(self.result.pairs) - 2)

	def test_grid_resolves_layer(self):
		"""Test that the automatic grid passes the layer-resolution rule."""
		self.assertTrue(self.result.resolution.resolved)
		self.assertLessEqual(self.result.grid.spacing[0], 1e-2 / 6 * (1 + 1e-9))

	def test_budget_closes(self):
		"""Test that the budget closes within five percent at every diagnostic time."""
		for budget in self.budgets:
			self.assertTrue(budget.closes(), f"t={budget.t}: relative residual {budget.relative_residual:.3e}")

	def test_transport_term_vanishes(self):
		"""Test that transport of w by U carries no energy across the walls."""
		for budget in self.budgets:
			self.assertLess(abs(budget.terms["transport"]), 1e-8 * max(budget.closure_scale, 1e-300))

	def test_combined_term_matches_direct_form(self):
		"""Test that the two assemblies of I agree to round-off."""
		for budget in self.budgets:
			self.assertLessEqual(budget.I_mismatch, 1e-10, f"t={budget.t}")
