# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Grid Module

Discrete periodic channel Ω = [0, L] × (0, h): Fourier collocation in x₁ and a
geometrically graded finite-difference mesh in x₂. The outflow wall Γ− is x₂ = 0 and
the inflow wall Γ+ is x₂ = h, so the boundary layer sits at the bottom of the mesh
where the cells are smallest.

Array layout everywhere: scalar values have shape (n1, n2 + 1), vector values
(2, n1, n2 + 1); axis -2 is x₁, axis -1 is x₂.
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate as sp_integrate
from scipy import linalg, optimize, sparse

from vanishing_viscosity.vanishing_viscosity.exceptions import (
	GridError,
	PoissonCompatibilityError,
	ResolutionError,
)

logger = logging.getLogger(__name__)

# 2/3 rule: x₁ modes above n1 // 3 are dropped from nonlinear products.
DEALIAS_FRACTION = 3


class Boundary(enum.Flag):
	"""Wall selector. OUTFLOW is Γ− (x₂ = 0), INFLOW is Γ+ (x₂ = h)."""

	NONE = 0
	OUTFLOW = enum.auto()
	INFLOW = enum.auto()
	BOTH = OUTFLOW | INFLOW


# =============================================================================
# Geometry and Background Flow
# =============================================================================

@dataclass(frozen=True)
class ChannelGeometry:
	length_L: float = 1.0
	height_h: float = 1.0

	def __post_init__(self):
		if not self.length_L > 0:
			raise GridError(f"length_L must be > 0, got {self.length_L}")
		if not self.height_h > 0:
			raise GridError(f"height_h must be > 0, got {self.height_h}")

	@property
	def area(self):
		return self.length_L * self.height_h


@dataclass(frozen=True)
class BackgroundFlow:
	"""
	Constant background flow U = (a, -U).

	U·n = -U < 0 on the inflow wall and U·n = U > 0 on the outflow wall. The solvers
	drop every term involving only U. ΔU and v·∇U below are zero and feed the
	background terms of the energy budget.
	"""

	a: float = 0.0
	U: float = 1.0

	def __post_init__(self):
		if not self.U > 0:
			raise GridError(f"background U must be > 0, got {self.U}")

	@property
	def vector(self):
		return np.array([self.a, -self.U])

	def as_field(self, grid):
		values = np.empty((2, *grid.shape))
		values[0] = self.a
		values[1] = -self.U
		return VectorField(grid, values, solenoidal=True)

	def laplacian(self, grid):
		"""ΔU."""
		return VectorField.zeros(grid)

	def stretching(self, v):
		"""v·∇U for a field v."""
		return VectorField.zeros(v.grid)


# =============================================================================
# Grid
# =============================================================================

def _fd_weights(nodes, x0, order):
	"""Finite-difference weights of the Lagrange interpolant through `nodes` at x0."""
	nodes = np.asarray(nodes, dtype=float)
	scale = np.max(np.abs(nodes - x0))
	offsets = (nodes - x0) / scale
	m = len(nodes)
	vander = np.array([offsets**p / math.factorial(p) for p in range(m)])
	target = np.zeros(m)
	target[order] = 1.0
	return np.linalg.solve(vander, target) / scale**order


def _stencil_matrix(x2, order, choose):
	"""
	Sparse differentiation matrix on nodes x2.

	Args:
		x2: Node coordinates
		order: Derivative order
		choose: Callable (j, n_nodes) -> list of node indices for row j

	Returns:
		CSR matrix of shape (n_nodes, n_nodes)
	"""
	n = len(x2)
	rows, cols, vals = [], [], []
	for j in range(n):
		idx = choose(j, n)
		weights = _fd_weights(x2[idx], x2[j], order)
		rows.extend([j] * len(idx))
		cols.extend(idx)
		vals.extend(weights)
	return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _centered(j, n):
	if j == 0:
		return [0, 1, 2]
	if j == n - 1:
		return [n - 3, n - 2, n - 1]
	return [j - 1, j, j + 1]


def _centered_second(j, n):
	if j == 0:
		return [0, 1, 2, 3]
	if j == n - 1:
		return [n - 4, n - 3, n - 2, n - 1]
	return [j - 1, j, j + 1]


def _from_above(j, n):
	# information arriving from larger x₂
	if j <= n - 3:
		return [j, j + 1, j + 2]
	return _centered(j, n)


def _from_below(j, n):
	if j >= 2:
		return [j - 2, j - 1, j]
	return _centered(j, n)


@dataclass(frozen=True, eq=False)
class ChannelGrid:
	geometry: ChannelGeometry
	n1: int
	x2: np.ndarray
	grading_ratio: float = 1.0
	_cache: dict = field(default_factory=dict, init=False, repr=False)

	def __post_init__(self):
		if self.n1 < 4 or self.n1 % 2:
			raise GridError(f"n1 must be even and >= 4, got {self.n1}")
		x2 = np.asarray(self.x2, dtype=float)
		if x2.ndim != 1 or len(x2) < 4:
			raise GridError(f"x2 needs at least 4 nodes, got {len(np.atleast_1d(x2))}")
		if x2[0] != 0.0 or x2[-1] != self.geometry.height_h:
			raise GridError("x2 must start at 0 and end at height_h exactly")
		if np.any(np.diff(x2) <= 0):
			raise GridError("x2 nodes must be strictly increasing")
		x2.setflags(write=False)
		object.__setattr__(self, "x2", x2)

	# -- layout ----------------------------------------------------------------

	@property
	def n2(self):
		return len(self.x2) - 1

	@property
	def shape(self):
		return (self.n1, len(self.x2))

	@cached_property
	def x1(self):
		return self.geometry.length_L * np.arange(self.n1) / self.n1

	@property
	def dx1(self):
		return self.geometry.length_L / self.n1

	@cached_property
	def spacing(self):
		return np.diff(self.x2)

	@property
	def smallest_cell(self):
		return float(self.spacing.min())

	@cached_property
	def mesh(self):
		"""(X1, X2) node coordinates, each of shape (n1, n2 + 1)."""
		return np.meshgrid(self.x1, self.x2, indexing="ij")

	@cached_property
	def wavenumbers(self):
		"""Angular wavenumbers of the real FFT along x₁."""
		return 2 * np.pi / self.geometry.length_L * np.arange(self.n1 // 2 + 1)

	@cached_property
	def derivative_wavenumbers(self):
		# Nyquist mode carries no derivative for real output
		k = self.wavenumbers.copy()
		k[-1] = 0.0
		return k

	@cached_property
	def trapezoid_weights(self):
		h = self.spacing
		w = np.zeros(len(self.x2))
		w[:-1] += h / 2
		w[1:] += h / 2
		return w

	def matches(self, other):
		return other is self or (
			other.n1 == self.n1
			and other.geometry == self.geometry
			and np.array_equal(other.x2, self.x2)
		)

	def refined(self):
		"""Node-nested refinement: twice the cells, grading ratio √r."""
		return build_grid(self.geometry, self.n1, 2 * self.n2, math.sqrt(self.grading_ratio))

	def describe(self):
		return {
			"n1": self.n1,
			"n2": self.n2,
			"grading_ratio": self.grading_ratio,
			"smallest_cell": self.smallest_cell,
		}

	# -- x₁ operators (spectral) -----------------------------------------------

	def d1(self, a, order=1):
		if order == 1:
			factor = 1j * self.derivative_wavenumbers
		elif order == 2:
			factor = -(self.wavenumbers**2)
		else:
			raise GridError(f"spectral derivative order must be 1 or 2, got {order}")
		spectrum = np.fft.rfft(a, axis=-2) * factor[:, None]
		return np.fft.irfft(spectrum, n=self.n1, axis=-2)

	def dealias(self, a):
		spectrum = np.fft.rfft(a, axis=-2)
		spectrum[self.n1 // DEALIAS_FRACTION + 1 :] = 0.0
		return np.fft.irfft(spectrum, n=self.n1, axis=-2)

	# -- x₂ operators (finite differences) -------------------------------------

	@cached_property
	def first_derivative_matrix(self):
		return _stencil_matrix(self.x2, 1, _centered)

	@cached_property
	def second_derivative_matrix(self):
		return _stencil_matrix(self.x2, 2, _centered_second)

	@cached_property
	def _upwind_matrices(self):
		return (
			_stencil_matrix(self.x2, 1, _from_above),
			_stencil_matrix(self.x2, 1, _from_below),
		)

	def apply_x2(self, matrix, a):
		lead = a.shape[:-1]
		flat = a.reshape(-1, a.shape[-1])
		return np.asarray(matrix @ flat.T).T.reshape(*lead, a.shape[-1])

	def d2(self, a):
		return self.apply_x2(self.first_derivative_matrix, a)

	def d22(self, a):
		return self.apply_x2(self.second_derivative_matrix, a)

	def d2_upwind(self, a, carrier):
		"""
		Second-order upwind-biased ∂₂a for transport with vertical velocity `carrier`.

		Where carrier < 0 the stencil reaches up (information from x₂ larger),
		elsewhere it reaches down.
		"""
		from_above, from_below = self._upwind_matrices
		up = self.apply_x2(from_above, a)
		down = self.apply_x2(from_below, a)
		return np.where(carrier < 0, up, down)

	def d2_sbp(self, a):
		"""
		Chord derivative (a[j+1] − a[j−1])/(x[j+1] − x[j−1]) with one-sided wall rows.

		Summation-by-parts partner of the trapezoidal weights: Σ w·a·d2_sbp(a) equals
		½(a[-1]² − a[0]²) exactly, second order on geometric meshes.
		"""
		x2 = self.x2
		result = np.empty_like(a)
		result[..., 1:-1] = (a[..., 2:] - a[..., :-2]) / (x2[2:] - x2[:-2])
		result[..., 0] = (a[..., 1] - a[..., 0]) / (x2[1] - x2[0])
		result[..., -1] = (a[..., -1] - a[..., -2]) / (x2[-1] - x2[-2])
		return result

	def laplacian_array(self, a):
		return self.d1(a, order=2) + self.d22(a)

	# -- quadrature ------------------------------------------------------------

	def integrate_array(self, a):
		column_sums = np.sum(a, axis=-2)
		return float(self.dx1 * sp_integrate.trapezoid(column_sums, x=self.x2))

	def mean_array(self, a):
		return self.integrate_array(a) / self.geometry.area

	def integrate_wall(self, trace_values):
		"""∫ over one wall (a line of length L) of nodal values along x₁."""
		return float(self.dx1 * np.sum(trace_values))


# =============================================================================
# Fields
# =============================================================================

def _check_same_grid(a, b):
	if not a.grid.matches(b.grid):
		raise GridError("fields live on different grids")


@dataclass(frozen=True, eq=False)
class ScalarField:
	grid: ChannelGrid
	values: np.ndarray

	def __post_init__(self):
		values = np.asarray(self.values, dtype=float)
		if values.shape != self.grid.shape:
			raise GridError(f"scalar field shape {values.shape} does not match grid {self.grid.shape}")
		object.__setattr__(self, "values", values)

	@classmethod
	def zeros(cls, grid):
		return cls(grid, np.zeros(grid.shape))

	@classmethod
	def from_function(cls, grid, func):
		X1, X2 = grid.mesh
		return cls(grid, np.broadcast_to(func(X1, X2), grid.shape).astype(float))

	def __add__(self, other):
		_check_same_grid(self, other)
		return ScalarField(self.grid, self.values + other.values)

	def __sub__(self, other):
		_check_same_grid(self, other)
		return ScalarField(self.grid, self.values - other.values)

	def __neg__(self):
		return ScalarField(self.grid, -self.values)

	def __mul__(self, other):
		if isinstance(other, ScalarField):
			_check_same_grid(self, other)
			return ScalarField(self.grid, self.values * other.values)
		return ScalarField(self.grid, self.values * other)

	__rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
	grid: ChannelGrid
	values: np.ndarray
	solenoidal: bool = False

	def __post_init__(self):
		values = np.asarray(self.values, dtype=float)
		if values.shape != (2, *self.grid.shape):
			raise GridError(
				f"vector field shape {values.shape} does not match grid {(2, *self.grid.shape)}"
			)
		object.__setattr__(self, "values", values)

	@classmethod
	def zeros(cls, grid):
		return cls(grid, np.zeros((2, *grid.shape)), solenoidal=True)

	@classmethod
	def from_components(cls, first, second, solenoidal=False):
		_check_same_grid(first, second)
		return cls(first.grid, np.stack([first.values, second.values]), solenoidal=solenoidal)

	def component(self, index):
		return ScalarField(self.grid, self.values[index])

	@property
	def first(self):
		return self.component(0)

	@property
	def second(self):
		return self.component(1)

	def __add__(self, other):
		_check_same_grid(self, other)
		return VectorField(self.grid, self.values + other.values)

	def __sub__(self, other):
		_check_same_grid(self, other)
		return VectorField(self.grid, self.values - other.values)

	def __neg__(self):
		return VectorField(self.grid, -self.values, solenoidal=self.solenoidal)

	def __mul__(self, scalar):
		return VectorField(self.grid, self.values * scalar, solenoidal=self.solenoidal)

	__rmul__ = __mul__


# =============================================================================
# Construction
# =============================================================================

def build_grid(geometry, n1, n2, grading_ratio=1.0):
	"""
	Build a channel grid with n2 + 1 wall-normal nodes.

	Cells grow geometrically by `grading_ratio` away from the outflow wall, so the
	first gap is h·(r − 1)/(r^{n2} − 1); r = 1 gives a uniform mesh.

	Args:
		geometry: ChannelGeometry
		n1: Number of x₁ points (even, >= 4)
		n2: Number of x₂ cells (>= 8)
		grading_ratio: Cell growth factor (>= 1)

	Returns:
		ChannelGrid
	"""
	if not isinstance(n1, (int, np.integer)) or n1 < 4 or n1 % 2:
		raise GridError(f"n1 must be even and >= 4, got {n1}")
	if not isinstance(n2, (int, np.integer)) or n2 < 8:
		raise GridError(f"n2 must be >= 8, got {n2}")
	if not grading_ratio >= 1:
		raise GridError(f"grading_ratio must be >= 1, got {grading_ratio}")

	h = geometry.height_h
	if grading_ratio == 1:
		x2 = h * np.arange(n2 + 1) / n2
	else:
		r = float(grading_ratio)
		first_gap = h * (r - 1) / (r**n2 - 1)
		x2 = np.concatenate([[0.0], np.cumsum(first_gap * r ** np.arange(n2))])
	x2[-1] = h
	return ChannelGrid(geometry, int(n1), x2, float(grading_ratio))


@dataclass(frozen=True)
class LayerResolution:
	resolved: bool
	smallest_cell: float
	required_cell: float
	nodes_in_layer: int
	required_nodes: int

	def message(self):
		return (
			f"smallest x2 cell {self.smallest_cell:.3e} (need <= {self.required_cell:.3e}) and "
			f"{self.nodes_in_layer} nodes within 3*nu/U (need >= {self.required_nodes})"
		)


def layer_resolution(grid, nu, U):
	"""Check the layer-resolution rule: smallest cell <= ν/(2U), >= 6 nodes in x₂ <= 3ν/U."""
	required_cell = nu / (2 * U)
	nodes = int(np.count_nonzero(grid.x2 <= 3 * nu / U))
	smallest = float(grid.spacing.min())
	return LayerResolution(
		resolved=smallest <= required_cell and nodes >= 6,
		smallest_cell=smallest,
		required_cell=required_cell,
		nodes_in_layer=nodes,
		required_nodes=6,
	)


def require_layer_resolution(grid, nu, U):
	check = layer_resolution(grid, nu, U)
	if not check.resolved:
		raise ResolutionError(f"boundary layer under-resolved for nu={nu}: {check.message()}")
	return check


def _ratio_for_first_gap(h, n2, first_gap, upper):
	def gap_error(r):
		return h * (r - 1) / (r**n2 - 1) - first_gap

	lower = 1 + 1e-9
	if gap_error(lower) <= 0 or gap_error(upper) >= 0:
		return None
	return optimize.brentq(gap_error, lower, upper, xtol=1e-14, rtol=1e-14)


def grid_for_viscosity(
	geometry,
	n1,
	nu,
	U,
	cells_per_layer=3.0,
	max_growth=1.08,
	max_cell_fraction=1 / 16,
	min_n2=16,
	max_n2=2048,
):
	"""
	Pick (n2, grading_ratio) so the grid resolves a layer of width ν/U.

	The first gap is ν/(cells_per_layer·U); n2 grows until the geometric ratio stays
	below `max_growth` and the largest cell below `max_cell_fraction`·h. The first n2
	whose uniform cells already meet both limits gives an ungraded grid.
	"""
	h = geometry.height_h
	first_gap = nu / (cells_per_layer * U)
	max_cell = max_cell_fraction * h

	for n2 in range(min_n2, max_n2 + 1):
		if h / n2 <= min(first_gap, max_cell) * (1 + 1e-12):
			return build_grid(geometry, n1, n2, 1.0)
		r = _ratio_for_first_gap(h, n2, first_gap, max_growth)
		if r is not None and first_gap * r ** (n2 - 1) <= max_cell:
			grid = build_grid(geometry, n1, n2, r)
			logger.debug("grid for nu=%g: n2=%d ratio=%.6f first gap=%.3e", nu, n2, r, grid.spacing[0])
			return grid

	raise ResolutionError(
		f"no graded grid with n2 <= {max_n2} resolves nu={nu} (first gap {first_gap:.3e})"
	)


# =============================================================================
# Differential and Integral Operators
# =============================================================================

def ddx1(f):
	"""Spectral ∂₁; exact for band-limited f, Nyquist mode dropped."""
	return ScalarField(f.grid, f.grid.d1(f.values))


def ddx2(f, one_sided_at=Boundary.BOTH):
	"""
	Wall-normal ∂₂: second-order centered on the nonuniform mesh inside,
	second-order one-sided at the walls named in `one_sided_at`.

	Wall rows outside the selector are returned as zero, for callers that overwrite
	them with boundary data.
	"""
	values = f.grid.d2(f.values)
	if not one_sided_at & Boundary.OUTFLOW:
		values[:, 0] = 0.0
	if not one_sided_at & Boundary.INFLOW:
		values[:, -1] = 0.0
	return ScalarField(f.grid, values)


def integrate(f):
	"""Trapezoidal in x₂ × uniform in x₁."""
	return f.grid.integrate_array(f.values)


def l2_norm(f):
	"""‖f‖₂ of a scalar, vector or tensor field (components summed pointwise)."""
	squares = f.values * f.values
	while squares.ndim > 2:
		squares = squares.sum(axis=0)
	return math.sqrt(max(f.grid.integrate_array(squares), 0.0))


def linf_norm(f):
	return float(np.max(np.abs(f.values))) if f.values.size else 0.0


def inner(f, g):
	"""L² inner product of two scalar, vector or 2×2 tensor fields (componentwise sum)."""
	product = np.asarray(f.values) * np.asarray(g.values)
	while product.ndim > 2:
		product = product.sum(axis=0)
	return f.grid.integrate_array(product)


# =============================================================================
# Poisson Solver
# =============================================================================

class BCKind(enum.Enum):
	NEUMANN = "neumann"
	DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class PoissonBC:
	"""
	Wall data for poisson_solve, sampled over x₁ nodes.

	Neumann values are ∂q/∂x₂ (not the outward normal derivative) at x₂ = 0 and x₂ = h;
	Dirichlet values are q itself.
	"""

	kind: BCKind
	outflow: np.ndarray
	inflow: np.ndarray

	@classmethod
	def homogeneous_neumann(cls, grid):
		return cls(BCKind.NEUMANN, np.zeros(grid.n1), np.zeros(grid.n1))

	@classmethod
	def neumann(cls, outflow, inflow):
		return cls(BCKind.NEUMANN, np.asarray(outflow, dtype=float), np.asarray(inflow, dtype=float))

	@classmethod
	def dirichlet(cls, outflow, inflow):
		return cls(BCKind.DIRICHLET, np.asarray(outflow, dtype=float), np.asarray(inflow, dtype=float))


def laplacian_bands(grid):
	"""
	Tridiagonal x₂ part of the Laplacian: interior 3-point rows and, for Neumann data,
	the half-cell flux rows 2/h₀·((q₁ − q₀)/h₀ − g₀) at the walls.

	Returns (lower, diag, upper) with lower[j] multiplying q_{j-1} in row j.
	"""
	cached = grid._cache.get("laplacian_bands")
	if cached is not None:
		return cached
	h = grid.spacing
	n = len(grid.x2)
	lower = np.zeros(n)
	diag = np.zeros(n)
	upper = np.zeros(n)
	h1, h2 = h[:-1], h[1:]
	lower[1:-1] = 2 / (h1 * (h1 + h2))
	diag[1:-1] = -2 / (h1 * h2)
	upper[1:-1] = 2 / (h2 * (h1 + h2))
	diag[0] = -2 / h[0] ** 2
	upper[0] = 2 / h[0] ** 2
	lower[-1] = 2 / h[-1] ** 2
	diag[-1] = -2 / h[-1] ** 2
	grid._cache["laplacian_bands"] = (lower, diag, upper)
	return lower, diag, upper


def _banded(lower, diag, upper):
	ab = np.zeros((3, len(diag)))
	ab[0, 1:] = upper[:-1]
	ab[1] = diag
	ab[2, :-1] = lower[1:]
	return ab


def dirichlet_diffusion_bands(grid, coefficient):
	"""
	Banded (1, 1) form of I − coefficient·∂₂² with identity rows at both walls,
	for scipy.linalg.solve_banded.
	"""
	key = ("dirichlet_diffusion", coefficient)
	cached = grid._cache.get(key)
	if cached is not None:
		return cached
	lower, diag, upper = laplacian_bands(grid)
	lower = -coefficient * lower
	diag = 1.0 - coefficient * diag
	upper = -coefficient * upper
	diag[[0, -1]] = 1.0
	upper[0] = 0.0
	lower[-1] = 0.0
	ab = _banded(lower, diag, upper)
	grid._cache[key] = ab
	return ab


def _boundary_rhs(grid, rhs_hat, bc_hat_out, bc_hat_in, kind):
	h = grid.spacing
	rhs_hat = rhs_hat.copy()
	if kind is BCKind.NEUMANN:
		rhs_hat[:, 0] += 2 * bc_hat_out / h[0]
		rhs_hat[:, -1] -= 2 * bc_hat_in / h[-1]
	else:
		rhs_hat[:, 0] = bc_hat_out
		rhs_hat[:, -1] = bc_hat_in
	return rhs_hat


def neumann_compatibility_defect(grid, rhs_values, bc):
	"""
	Solvability defect of the zero-wavenumber Neumann problem.

	Returns (defect, scale) where defect = ∫rhs − ∫_Γ(∂₂q|_{x₂=h} − ∂₂q|_{x₂=0}) on the
	discrete operator (trapezoidal weights are its left null vector).
	"""
	w = grid.trapezoid_weights
	mean_rhs = rhs_values.mean(axis=0)
	flux = float(np.mean(bc.inflow) - np.mean(bc.outflow))
	defect = float(w @ mean_rhs) - flux
	scale = float(w @ np.abs(mean_rhs)) + abs(float(np.mean(bc.inflow))) + abs(float(np.mean(bc.outflow)))
	return defect, scale


def poisson_solve(rhs, bc, compat_tol=1e-8, return_defect=False):
	"""
	Solve Δq = rhs with wall data `bc`, one tridiagonal system per x₁ wavenumber.

	Neumann solutions are returned with zero mean. The zero-wavenumber Neumann system
	is singular; data within `compat_tol` (relative) of solvability are made exactly
	solvable by removing the defect as a constant from the source.

	Args:
		rhs: ScalarField source
		bc: PoissonBC
		compat_tol: Relative solvability tolerance for Neumann data
		return_defect: Also return the removed solvability defect

	Returns:
		ScalarField q (and the defect when requested)
	"""
	grid = rhs.grid
	rhs_values = np.array(rhs.values, dtype=float)
	defect = 0.0

	if bc.kind is BCKind.NEUMANN:
		defect, scale = neumann_compatibility_defect(grid, rhs_values, bc)
		if abs(defect) > compat_tol * max(scale, 1e-300) and abs(defect) > 1e-14:
			raise PoissonCompatibilityError(
				f"Neumann data incompatible: defect {defect:.3e} exceeds tolerance "
				f"{compat_tol:.1e} x scale {scale:.3e}"
			)
		rhs_values -= defect / grid.geometry.height_h

	rhs_hat = np.fft.rfft(rhs_values, axis=0)
	out_hat = np.fft.rfft(bc.outflow)
	in_hat = np.fft.rfft(bc.inflow)
	system_rhs = _boundary_rhs(grid, rhs_hat, out_hat, in_hat, bc.kind)

	lower, diag, upper = laplacian_bands(grid)
	if bc.kind is BCKind.DIRICHLET:
		lower, upper = lower.copy(), upper.copy()
		upper[0] = 0.0
		lower[-1] = 0.0

	solution = np.empty_like(system_rhs)
	for index, k in enumerate(grid.wavenumbers):
		d = diag - k**2
		lo = lower
		b = system_rhs[index]
		if bc.kind is BCKind.DIRICHLET:
			d[0] = 1.0
			d[-1] = 1.0
		elif index == 0:
			# gauge: the last equation is redundant, pin q_N instead
			lo = lower.copy()
			lo[-1] = 0.0
			d[-1] = 1.0
			b = b.copy()
			b[-1] = 0.0
		solution[index] = linalg.solve_banded((1, 1), _banded(lo, d, upper), b)

	q = np.fft.irfft(solution, n=grid.n1, axis=0)
	if bc.kind is BCKind.NEUMANN:
		q -= grid.mean_array(q)
	result = ScalarField(grid, q)
	return (result, defect) if return_defect else result


def apply_poisson_operator(q, bc):
	"""
	Discrete operator solved by poisson_solve, applied to q.

	Neumann wall rows carry the flux terms of `bc`, so
	apply_poisson_operator(poisson_solve(rhs, bc), bc) reproduces rhs; Dirichlet wall
	rows return q itself.
	"""
	grid = q.grid
	lower, diag, upper = laplacian_bands(grid)
	values = q.values
	x2_part = diag * values
	x2_part[:, 1:] += lower[1:] * values[:, :-1]
	x2_part[:, :-1] += upper[:-1] * values[:, 1:]
	result = grid.d1(values, order=2) + x2_part
	if bc.kind is BCKind.NEUMANN:
		h = grid.spacing
		result[:, 0] -= 2 * bc.outflow / h[0]
		result[:, -1] += 2 * bc.inflow / h[-1]
	else:
		result[:, 0] = values[:, 0]
		result[:, -1] = values[:, -1]
	return ScalarField(grid, result)
