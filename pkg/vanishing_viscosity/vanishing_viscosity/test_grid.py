# Copyright (c) 2026, Vanishing Viscosity and Contributors
# See license.txt

"""
Tests for the channel grid, its operators and the Poisson solver.
"""

import math
import unittest

import numpy as np

from vanishing_viscosity.vanishing_viscosity.exceptions import (
	GridError,
	PoissonCompatibilityError,
	ResolutionError,
)
from vanishing_viscosity.vanishing_viscosity.grid import (
	Boundary,
	ChannelGeometry,
	PoissonBC,
	ScalarField,
	VectorField,
	apply_poisson_operator,
	build_grid,
	ddx1,
	ddx2,
	grid_for_viscosity,
	inner,
	integrate,
	l2_norm,
	layer_resolution,
	linf_norm,
	poisson_solve,
	require_layer_resolution,
)


class TestBuildGrid(unittest.TestCase):
	"""Test cases for grid construction."""

	def test_uniform_grid(self):
		"""Test node layout of a uniform grid."""
		grid = build_grid(ChannelGeometry(2.0, 1.0), 8, 16)

		self.assertEqual(grid.shape, (8, 17))
		self.assertEqual(grid.n2, 16)
		self.assertEqual(grid.x2[0], 0.0)
		self.assertEqual(grid.x2[-1], 1.0)
		self.assertAlmostEqual(grid.dx1, 0.25)
		np.testing.assert_allclose(grid.spacing, 1 / 16)

	def test_graded_grid(self):
		"""Test that cells grow geometrically away from the outflow wall."""
		grid = build_grid(ChannelGeometry(), 8, 32, 1.1)
		ratios = grid.spacing[1:] / grid.spacing[:-1]

		np.testing.assert_allclose(ratios[:-1], 1.1, rtol=1e-10)
		self.assertAlmostEqual(grid.spacing[0], 0.1 / (1.1**32 - 1), places=14)
		self.assertEqual(grid.x2[-1], 1.0)

	def test_refined_grid_nests_nodes(self):
		"""Test that refinement keeps every coarse node."""
		coarse = build_grid(ChannelGeometry(), 8, 16, 1.1)
		fine = coarse.refined()

		self.assertEqual(fine.n2, 32)
		self.assertAlmostEqual(fine.grading_ratio, math.sqrt(1.1))
		np.testing.assert_allclose(fine.x2[::2], coarse.x2, atol=1e-13)

	def test_invalid_sizes(self):
		"""Test that odd n1, too few cells and shrinking cells are rejected."""
		geometry = ChannelGeometry()
		self.assertRaises(GridError, build_grid, geometry, 7, 16)
		self.assertRaises(GridError, build_grid, geometry, 8, 4)
		self.assertRaises(GridError, build_grid, geometry, 8, 16, 0.9)

	def test_invalid_geometry(self):
		"""Test that a non-positive channel size is rejected."""
		self.assertRaises(GridError, ChannelGeometry, 0.0, 1.0)
		self.assertRaises(GridError, ChannelGeometry, 1.0, -1.0)


class TestOperators(unittest.TestCase):
	"""Test cases for derivatives and quadrature."""

	def test_spectral_derivative_exact(self):
		"""Test that ∂₁ is exact for a resolved Fourier mode."""
		grid = build_grid(ChannelGeometry(), 16, 8)
		X1, _ = grid.mesh
		k = 2 * np.pi * 3

		np.testing.assert_allclose(grid.d1(np.sin(k * X1)), k * np.cos(k * X1), atol=1e-10)
		np.testing.assert_allclose(grid.d1(np.sin(k * X1), order=2), -(k**2) * np.sin(k * X1), atol=1e-8)

	def test_spectral_derivative_order(self):
		"""Test that only first and second spectral derivatives exist."""
		grid = build_grid(ChannelGeometry(), 8, 8)
		self.assertRaises(GridError, grid.d1, np.zeros(grid.shape), 3)

	def test_wall_normal_second_order(self):
		"""Test that halving the cells divides the ∂₂ error by about four."""

		def error(n2):
			grid = build_grid(ChannelGeometry(), 4, n2)
			x2 = grid.x2
			return np.max(np.abs(grid.d2(np.sin(3 * x2)) - 3 * np.cos(3 * x2)))

		ratio = error(32) / error(64)
		self.assertGreater(ratio, 3.5)
		self.assertLess(ratio, 4.5)

	def test_quadratic_exact(self):
		"""Test that three-point stencils differentiate quadratics exactly on graded meshes."""
		grid = build_grid(ChannelGeometry(), 4, 16, 1.15)
		x2 = grid.x2

		np.testing.assert_allclose(grid.d2(x2**2), 2 * x2, atol=1e-10)
		np.testing.assert_allclose(grid.d22(x2**2), 2.0, atol=1e-8)
		np.testing.assert_allclose(grid.d2_upwind(x2**2, -np.ones_like(x2)), 2 * x2, atol=1e-10)
		np.testing.assert_allclose(grid.d2_upwind(x2**2, np.ones_like(x2)), 2 * x2, atol=1e-10)

	def test_chord_derivative_summation_by_parts(self):
		"""Test that the chord derivative integrates exactly to the wall difference."""
		grid = build_grid(ChannelGeometry(), 4, 20, 1.2)
		a = np.cos(5 * grid.x2) + grid.x2**3

		total = grid.trapezoid_weights @ (a * grid.d2_sbp(a))
		self.assertAlmostEqual(total, 0.5 * (a[-1] ** 2 - a[0] ** 2), places=12)

	def test_integrate(self):
		"""Test that the quadrature is exact for functions linear in x₂."""
		grid = build_grid(ChannelGeometry(2.0, 3.0), 8, 16, 1.1)
		_, X2 = grid.mesh

		self.assertAlmostEqual(integrate(ScalarField(grid, np.ones(grid.shape))), 6.0, places=12)
		self.assertAlmostEqual(integrate(ScalarField(grid, X2)), 9.0, places=12)
		self.assertAlmostEqual(l2_norm(ScalarField(grid, np.ones(grid.shape))), math.sqrt(6.0), places=12)

	def test_ddx1_integration_by_parts(self):
		"""Test (∂₁f, g) = −(f, ∂₁g) with no boundary term, Nyquist content included."""
		grid = build_grid(ChannelGeometry(2.0, 1.0), 16, 24, 1.1)
		X1, X2 = grid.mesh
		f = ScalarField(grid, np.exp(np.sin(np.pi * X1)) * (1 + X2**2))
		g = ScalarField(grid, np.cos(3 * np.pi * X1 + X2) + (-1.0) ** np.arange(16)[:, None])

		left = inner(ddx1(f), g)
		right = -inner(f, ddx1(g))
		self.assertLessEqual(abs(left - right), 1e-10 * (l2_norm(f) * l2_norm(g)))
		np.testing.assert_allclose(ddx1(ScalarField(grid, np.full(grid.shape, 4.0))).values, 0.0, atol=1e-13)

	def test_ddx2_wall_selector(self):
		"""Test that wall rows outside the selector come back as zero."""
		grid = build_grid(ChannelGeometry(), 4, 16, 1.1)
		_, X2 = grid.mesh
		f = ScalarField(grid, X2**2 + 1)

		both = ddx2(f).values
		np.testing.assert_allclose(both, 2 * X2, atol=1e-10)
		outflow_only = ddx2(f, Boundary.OUTFLOW).values
		np.testing.assert_array_equal(outflow_only[:, -1], 0.0)
		np.testing.assert_array_equal(outflow_only[:, :-1], both[:, :-1])
		inflow_only = ddx2(f, Boundary.INFLOW).values
		np.testing.assert_array_equal(inflow_only[:, 0], 0.0)
		np.testing.assert_array_equal(inflow_only[:, 1:], both[:, 1:])

	def test_norms(self):
		"""Test the sup norm and the absolute homogeneity of the L² norm."""
		grid = build_grid(ChannelGeometry(), 8, 16, 1.05)
		X1, X2 = grid.mesh
		f = ScalarField(grid, np.sin(2 * np.pi * X1) * X2 - 3 * X2**3)
		v = VectorField(grid, np.stack([f.values, np.cos(X2)]))

		self.assertEqual(linf_norm(f), float(np.max(np.abs(f.values))))
		self.assertEqual(linf_norm(ScalarField(grid, -np.ones(grid.shape))), 1.0)
		for c in (-2.5, 0.0, 1e-3, 7.0):
			self.assertAlmostEqual(l2_norm(ScalarField(grid, c * f.values)), abs(c) * l2_norm(f), places=12)
			self.assertAlmostEqual(l2_norm(VectorField(grid, c * v.values)), abs(c) * l2_norm(v), places=12)

	def test_fields_on_different_grids(self):
		"""Test that arithmetic across grids is refused."""
		first = ScalarField.zeros(build_grid(ChannelGeometry(), 8, 16))
		second = ScalarField.zeros(build_grid(ChannelGeometry(), 8, 32))

		with self.assertRaises(GridError):
			first + second
		with self.assertRaises(GridError):
			VectorField(first.grid, np.zeros((2, 8, 33)))


class TestLayerResolution(unittest.TestCase):
	"""Test cases for viscosity-dependent grid selection."""

	def test_grid_for_viscosity_resolves_layer(self):
		"""Test that the selected grid passes the layer-resolution rule."""
		nu = 1e-3
		grid = grid_for_viscosity(ChannelGeometry(), 8, nu, 1.0)

		self.assertTrue(layer_resolution(grid, nu, 1.0).resolved)
		self.assertLessEqual(grid.grading_ratio, 1.08)
		self.assertLessEqual(grid.spacing.max(), 1 / 16 + 1e-12)
		self.assertAlmostEqual(grid.spacing[0], nu / 3, places=10)

	def test_large_viscosity_uses_uniform_grid(self):
		"""Test that a wide layer needs no grading."""
		grid = grid_for_viscosity(ChannelGeometry(), 8, 0.5, 1.0)

		self.assertEqual(grid.grading_ratio, 1.0)
		self.assertEqual(grid.n2, 16)

	def test_wide_layer_with_small_cells(self):
		"""Test that a layer wider than the largest allowed cell gets a uniform grid."""
		grid = grid_for_viscosity(ChannelGeometry(), 8, 0.2, 1.0, cells_per_layer=6.0, max_cell_fraction=1 / 32)

		self.assertEqual(grid.grading_ratio, 1.0)
		self.assertEqual(grid.n2, 32)

	def test_unreachable_viscosity(self):
		"""Test that no grid within the size limit is offered for a vanishing layer."""
		self.assertRaises(ResolutionError, grid_for_viscosity, ChannelGeometry(), 8, 1e-80, 1.0)

	def test_under_resolved_grid_rejected(self):
		"""Test that a coarse uniform grid fails the gate with a readable message."""
		grid = build_grid(ChannelGeometry(), 8, 16)

		self.assertFalse(layer_resolution(grid, 1e-3, 1.0).resolved)
		with self.assertRaises(ResolutionError) as context:
			require_layer_resolution(grid, 1e-3, 1.0)
		self.assertIn("under-resolved", str(context.exception))


class TestPoissonSolve(unittest.TestCase):
	"""Test cases for the per-wavenumber Poisson solver."""

	def test_neumann_manufactured(self):
		"""Test the Neumann solve against cos(2πx₁)cos(πx₂)."""
		grid = build_grid(ChannelGeometry(), 8, 64)
		X1, X2 = grid.mesh
		exact = np.cos(2 * np.pi * X1) * np.cos(np.pi * X2)
		rhs = ScalarField(grid, -5 * np.pi**2 * exact)
		bc = PoissonBC.homogeneous_neumann(grid)

		q = poisson_solve(rhs, bc)
		self.assertLess(np.max(np.abs(q.values - exact)), 1e-3)
		self.assertAlmostEqual(grid.mean_array(q.values), 0.0, places=12)

		residual = apply_poisson_operator(q, bc).values - rhs.values
		self.assertLess(np.max(np.abs(residual)), 1e-8 * np.max(np.abs(rhs.values)))

	def test_dirichlet_manufactured(self):
		"""Test the Dirichlet solve against sin(2πx₁)sin(πx₂) on a graded mesh."""
		grid = build_grid(ChannelGeometry(), 8, 64, 1.02)
		X1, X2 = grid.mesh
		exact = np.sin(2 * np.pi * X1) * np.sin(np.pi * X2)
		rhs = ScalarField(grid, -5 * np.pi**2 * exact)
		bc = PoissonBC.dirichlet(np.zeros(8), np.zeros(8))

		q = poisson_solve(rhs, bc)
		self.assertLess(np.max(np.abs(q.values - exact)), 2e-3)
		np.testing.assert_allclose(q.values[:, [0, -1]], 0.0, atol=1e-12)

	def test_incompatible_neumann_data(self):
		"""Test that a source with nonzero mean and no wall flux is refused."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		rhs = ScalarField(grid, np.ones(grid.shape))

		with self.assertRaises(PoissonCompatibilityError):
			poisson_solve(rhs, PoissonBC.homogeneous_neumann(grid))

	def test_compatible_wall_flux(self):
		"""Test that a unit source balanced by the inflow flux is solvable."""
		grid = build_grid(ChannelGeometry(), 8, 16)
		rhs = ScalarField(grid, np.ones(grid.shape))
		bc = PoissonBC.neumann(np.zeros(8), np.ones(8))

		q, defect = poisson_solve(rhs, bc, return_defect=True)
		self.assertAlmostEqual(defect, 0.0, places=12)
		# q = x₂²/2 up to a constant
		_, X2 = grid.mesh
		expected = X2**2 / 2 - grid.mean_array(X2**2 / 2)
		np.testing.assert_allclose(q.values, expected, atol=1e-10)
