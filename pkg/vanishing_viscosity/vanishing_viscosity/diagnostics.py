# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Diagnostics Module

Post-processing of paired Navier-Stokes / Euler snapshots: the corrected difference
w = (v − v̄) − z, the energy budget of w term by term, Hardy ratios, the L² error
series of u − ū, log-log rate fits and the fitted growth envelopes.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from vanishing_viscosity.vanishing_viscosity.corrector import corrector_from_trace
from vanishing_viscosity.vanishing_viscosity.exceptions import (
	DiagnosticError,
	SnapshotAlignmentError,
)
from vanishing_viscosity.vanishing_viscosity.fields import TensorField, transport, vector_gradient
from vanishing_viscosity.vanishing_viscosity.grid import (
	ScalarField,
	VectorField,
	inner,
	l2_norm,
)

logger = logging.getLogger(__name__)

BUDGET_TERMS = (
	"visc_cross",
	"visc_euler",
	"visc_bg",
	"transport",
	"stretch",
	"nonlinear",
	"corrector_dt",
	"corrector_adv",
	"corrector_stretch",
)

NONLINEAR_PIECES = ("v_grad_w", "w_grad_vbar", "z_grad_vbar", "w_grad_z", "vbar_grad_z", "z_grad_z")

HARDY_CONSTANT = 2.0

# relative tolerance on snapshot-time alignment and spacing
TIME_TOLERANCE = 1e-9


# =============================================================================
# Corrected Difference
# =============================================================================

@dataclass(frozen=True, eq=False)
class CorrectedDifference:
	w_tilde: VectorField
	w: VectorField

	@property
	def wall_residual(self):
		"""max |w| over the nodes of both walls."""
		wall = self.w.values[..., [0, -1]]
		return float(np.max(np.abs(wall)))


def corrected_difference(v, v_bar, z):
	"""w̃ = v − v̄ and w = w̃ − z."""
	w_tilde = v - v_bar
	return CorrectedDifference(w_tilde=w_tilde, w=w_tilde - z)


@dataclass(frozen=True, eq=False)
class PairedSnapshot:
	t: float
	v: VectorField
	v_bar: VectorField
	corrector: object
	w_tilde: VectorField
	w: VectorField
	pressure_difference: np.ndarray | None = None

	@property
	def grid(self):
		return self.v.grid


def _check_alignment(ns_run, euler_run):
	ns_times = ns_run.times
	euler_times = euler_run.times
	if len(ns_times) != len(euler_times):
		raise SnapshotAlignmentError(
			f"runs have {len(ns_times)} and {len(euler_times)} snapshots"
		)
	scale = max(float(np.max(np.abs(ns_times))), 1.0)
	if np.any(np.abs(ns_times - euler_times) > TIME_TOLERANCE * scale):
		raise SnapshotAlignmentError("snapshot times of the two runs differ")
	if not ns_run.grid.matches(euler_run.grid):
		raise SnapshotAlignmentError("runs live on different grids")


def pair_snapshots(ns_run, euler_run, cutoff=None):
	"""
	Pair aligned snapshots and build the corrector from each Euler outflow trace.

	Returns:
		list of PairedSnapshot
	"""
	_check_alignment(ns_run, euler_run)
	pairs = []
	for ns, euler in zip(ns_run.snapshots, euler_run.snapshots, strict=True):
		corrector = corrector_from_trace(
			euler.trace, euler.trace_dt, ns_run.nu, euler_run.background, ns.grid, cutoff
		)
		difference = corrected_difference(ns.v, euler.v_bar, corrector.z)
		pairs.append(
			PairedSnapshot(
				t=ns.t,
				v=ns.v,
				v_bar=euler.v_bar,
				corrector=corrector,
				w_tilde=difference.w_tilde,
				w=difference.w,
				pressure_difference=ns.p.values - euler.p_bar.values,
			)
		)
	return pairs


# =============================================================================
# Hardy Ratio
# =============================================================================

def hardy_ratio(f, wall_tol=1e-12):
	"""
	‖f/x₂‖₂ / ‖∇f‖₂ for f vanishing on the outflow wall.

	The x₂ = 0 row of f/x₂ is the one-sided limit f(x₁, x₂₁)/x₂₁. Returns 0 for f ≡ 0.
	"""
	values = f.values
	scale = float(np.max(np.abs(values))) if values.size else 0.0
	if scale == 0:
		return 0.0
	if np.max(np.abs(values[:, 0])) > wall_tol * scale:
		raise DiagnosticError("hardy_ratio needs f = 0 on the outflow wall")

	grid = f.grid
	x2 = grid.x2
	quotient = np.empty_like(values)
	quotient[:, 1:] = values[:, 1:] / x2[1:]
	quotient[:, 0] = values[:, 1] / x2[1]

	gradient = l2_norm(VectorField(grid, np.stack([grid.d1(values), grid.d2(values)])))
	if gradient == 0:
		return 0.0
	return l2_norm(ScalarField(grid, quotient)) / gradient


# =============================================================================
# Energy Budget
# =============================================================================

@dataclass(frozen=True)
class EnergyBudget:
	"""
	Both sides of the energy identity for w at one snapshot time:

		½ d/dt‖w‖² + ν‖∇w‖² = Σ terms

	plus the combined term I, cross-checks of the nonlinear split and of the
	x₁ integrations by parts, and the Hardy-weighted term that limits T₀.
	"""

	t: float
	nu: float
	lhs_dwdt: float
	lhs_visc: float
	terms: dict
	I_combined: float
	I_direct: float
	nonlinear_split: dict
	nl1: float
	pressure_work: float
	problematic: float
	problematic_bound: float
	hardy_w1: float
	hardy_w2: float
	grad_w_sq: float
	w_norm: float
	w_tilde_norm: float
	z_norm: float
	parts_checks: dict = field(default_factory=dict)

	@property
	def residual(self):
		return abs(self.lhs_dwdt + self.lhs_visc - sum(self.terms.values()))

	@property
	def closure_scale(self):
		return max(abs(self.lhs_dwdt) + self.lhs_visc, sum(abs(t) for t in self.terms.values()))

	@property
	def relative_residual(self):
		scale = self.closure_scale
		return self.residual / scale if scale > 0 else 0.0

	def closes(self, tol=0.05):
		return self.residual <= tol * self.closure_scale

	@property
	def I_mismatch(self):
		"""|I_direct − I_combined| relative to the size of the pieces of I."""
		scale = abs(self.terms["visc_cross"]) + abs(self.terms["corrector_adv"]) + abs(self.I_direct)
		return abs(self.I_direct - self.I_combined) / scale if scale > 0 else 0.0

	@property
	def nonlinear_split_total(self):
		return -sum(self.nonlinear_split.values())

	@property
	def I_ratio(self):
		"""|I|/(ν(1 + ‖∇w‖²)) is bounded in ν when I ≤ Cν + (ν/6)‖∇w‖²."""
		return abs(self.I_combined) / (self.nu * (1 + self.grad_w_sq))

	@property
	def triangle_holds(self):
		return self.w_tilde_norm <= (self.w_norm + self.z_norm) * (1 + 1e-12)

	def as_row(self):
		row = {"t": self.t, "lhs_dwdt": self.lhs_dwdt, "lhs_visc": self.lhs_visc}
		row.update(self.terms)
		row.update({"I": self.I_combined, "residual": self.residual})
		return row


def _check_spacing(previous, current, following):
	back = current.t - previous.t
	ahead = following.t - current.t
	if back <= 0 or abs(ahead - back) > TIME_TOLERANCE * max(back, ahead):
		raise SnapshotAlignmentError(
			f"budget needs uniform spacing, got {back:.6e} and {ahead:.6e} around t={current.t:.6e}"
		)
	return back


def _half_energy(pair):
	return 0.5 * l2_norm(pair.w) ** 2


def _parts_checks(c, w, grid, a):
	"""x₁ integrations by parts used for a ≠ 0, each as (before, after)."""
	T = c.trace.values[:, None]
	E = c.layer_profile[None, :]
	d1_w = grid.d1(w.values)

	layer_before = grid.integrate_array(-a * T * E * d1_w[0])
	layer_after = grid.integrate_array(-a * c.grad_z_tilde.values[0, 0] * w.values[0])

	z = c.z.values
	G = c.grad_z.values
	advection_before = inner(VectorField(grid, -a * G[:, 0]), w)
	advection_after = grid.integrate_array(np.sum(z * a * d1_w, axis=0))
	return {
		"layer_x1": (layer_before, layer_after),
		"corrector_adv_x1": (advection_before, advection_after),
	}


def energy_budget(previous, current, following, background, nu, sign_overrides=None):
	"""
	Energy budget of w at current.t from three uniformly spaced paired snapshots.

	Every ∂₂ paired against w through U is the chord derivative d2_sbp, so the corrector
	transport and the direct form of I are discrete adjoints: with w = 0 on both walls
	I_direct and I_combined agree to round-off.

	Args:
		previous, current, following: PairedSnapshot at tⁿ⁻¹, tⁿ, tⁿ⁺¹
		background: BackgroundFlow
		nu: Viscosity
		sign_overrides: {term: factor} multiplying individual terms (fault injection)

	Returns:
		EnergyBudget
	"""
	spacing = _check_spacing(previous, current, following)
	grid = current.grid
	c = current.corrector
	w = current.w
	v = current.v
	v_bar = current.v_bar
	z = c.z
	a, U = background.a, background.U

	grad_w = vector_gradient(w)
	grad_z = c.grad_z.values
	z_values = z.values

	U_grad_z = a * grad_z[:, 0] - U * grid.d2_sbp(z_values)
	transport_w = a * grid.d1(w.values) - U * grid.d2_sbp(w.values)

	terms = {
		"visc_cross": -nu * inner(c.grad_z, grad_w),
		"visc_euler": nu * inner(VectorField(grid, grid.laplacian_array(v_bar.values)), w),
		"visc_bg": nu * inner(background.laplacian(grid), w),
		"transport": -inner(VectorField(grid, transport_w), w),
		"stretch": -inner(background.stretching(w), w),
		"nonlinear": -inner(transport(v, v) - transport(v_bar, v_bar), w),
		"corrector_dt": -inner(c.dz_dt, w),
		"corrector_adv": -inner(VectorField(grid, U_grad_z), w),
		"corrector_stretch": -inner(background.stretching(z), w),
	}
	for name, factor in (sign_overrides or {}).items():
		terms[name] *= factor

	split = {
		"v_grad_w": inner(transport(v, w), w),
		"w_grad_vbar": inner(transport(w, v_bar), w),
		"z_grad_vbar": inner(transport(z, v_bar), w),
		"w_grad_z": inner(transport(w, z), w),
		"vbar_grad_z": inner(transport(v_bar, z), w),
		"z_grad_z": inner(transport(z, z), w),
	}

	I_combined = terms["visc_cross"] + terms["corrector_adv"]
	z_flux = TensorField(grid, z_values[:, None] * background.vector[None, :, None, None])
	I_direct = -nu * inner(c.grad_z, grad_w) + inner(z_flux, _sbp_gradient(grid, w.values))

	pressure = _pressure_work(current, grid)
	d2_z1 = grad_z[0, 1]
	problematic = grid.integrate_array(w.values[1] * d2_z1 * w.values[0])
	winf = float(np.max(np.abs(grid.x2[None, :] ** 2 * d2_z1)))
	grad_w_sq = l2_norm(grad_w) ** 2
	problematic_bound = HARDY_CONSTANT**2 * winf * grad_w_sq
	logger.debug(
		"t=%.4f problematic term %.3e, Hardy-weighted bound %.3e", current.t, problematic, problematic_bound
	)

	return EnergyBudget(
		t=current.t,
		nu=nu,
		lhs_dwdt=(_half_energy(following) - _half_energy(previous)) / (2 * spacing),
		lhs_visc=nu * grad_w_sq,
		terms=terms,
		I_combined=I_combined,
		I_direct=I_direct,
		nonlinear_split=split,
		nl1=split["v_grad_w"],
		pressure_work=pressure,
		problematic=problematic,
		problematic_bound=problematic_bound,
		hardy_w1=hardy_ratio(w.first, wall_tol=1e-8),
		hardy_w2=hardy_ratio(w.second, wall_tol=1e-8),
		grad_w_sq=grad_w_sq,
		w_norm=l2_norm(w),
		w_tilde_norm=l2_norm(current.w_tilde),
		z_norm=l2_norm(z),
		parts_checks=_parts_checks(c, w, grid, a),
	)


def _sbp_gradient(grid, values):
	"""∂ⱼvⁱ with the spectral ∂₁ and the chord ∂₂."""
	return TensorField(grid, np.stack([np.stack([grid.d1(vi), grid.d2_sbp(vi)]) for vi in values]))


def _pressure_work(pair, grid):
	"""(∇(p − p̄), w); zero in the continuum, reported next to the residual."""
	pressure = pair.pressure_difference
	if pressure is None:
		return 0.0
	gradient = np.stack([grid.d1(pressure), grid.d2(pressure)])
	return inner(VectorField(grid, gradient), pair.w)


def budget_series(pairs, background, nu, sign_overrides=None):
	"""Budgets at every interior snapshot with uniformly spaced neighbours."""
	budgets = []
	for previous, current, following in zip(pairs, pairs[1:], pairs[2:]):
		try:
			budgets.append(energy_budget(previous, current, following, background, nu, sign_overrides))
		except SnapshotAlignmentError:
			logger.debug("skipping budget at t=%.6e: nonuniform snapshot spacing", current.t)
	return budgets


def max_relative_residual(budgets):
	return max((b.relative_residual for b in budgets), default=0.0)


# =============================================================================
# Error Series and Rates
# =============================================================================

@dataclass(frozen=True)
class ErrorSeries:
	times: np.ndarray
	errors: np.ndarray

	@property
	def sup(self):
		return float(np.max(self.errors)) if len(self.errors) else 0.0

	def up_to(self, t_max):
		keep = self.times <= t_max * (1 + TIME_TOLERANCE)
		return ErrorSeries(self.times[keep], self.errors[keep])


def vv_error_series(ns_run, euler_run):
	"""‖u − ū‖₂ = ‖v − v̄‖₂ at every aligned snapshot."""
	_check_alignment(ns_run, euler_run)
	errors = [
		l2_norm(ns.v - euler.v_bar)
		for ns, euler in zip(ns_run.snapshots, euler_run.snapshots, strict=True)
	]
	return ErrorSeries(ns_run.times, np.array(errors))


@dataclass(frozen=True)
class RateFit:
	nus: tuple
	errors: tuple
	slope: float
	intercept: float
	r_squared: float
	pairwise_slopes: tuple

	def predict(self, nu):
		return math.exp(self.intercept) * nu**self.slope


def fit_rate(pairs):
	"""
	Least-squares fit of log(error) against log(ν).

	Args:
		pairs: iterable of (nu, error)

	Returns:
		RateFit with points ordered by ν descending
	"""
	pairs = sorted(pairs, key=lambda pair: pair[0], reverse=True)
	if len(pairs) < 3:
		raise DiagnosticError(f"fit_rate needs at least 3 points, got {len(pairs)}")
	nus = np.array([p[0] for p in pairs], dtype=float)
	errors = np.array([p[1] for p in pairs], dtype=float)
	if np.any(nus <= 0) or np.any(errors <= 0):
		raise DiagnosticError("fit_rate needs positive viscosities and errors")

	x = np.log(nus)
	y = np.log(errors)
	fit = stats.linregress(x, y)
	pairwise = np.diff(y) / np.diff(x)
	return RateFit(
		nus=tuple(nus),
		errors=tuple(errors),
		slope=float(fit.slope),
		intercept=float(fit.intercept),
		r_squared=float(min(fit.rvalue**2, 1.0)),
		pairwise_slopes=tuple(float(s) for s in pairwise),
	)


# =============================================================================
# Envelopes
# =============================================================================

@dataclass(frozen=True)
class EnvelopeFit:
	C: float
	max_ratio: float


def gronwall_envelope(times, norms, nu):
	"""
	Smallest C with ‖w(t)‖ ≤ C(νt)^{1/2}e^{Ct/2} at every snapshot.

	For each t > 0, C·e^{Ct/2} = y has the root C = 2W(yt/2)/t (W the principal
	Lambert function), and the envelope needs the largest of these roots.
	"""
	times = np.asarray(times, dtype=float)
	norms = np.asarray(norms, dtype=float)
	C = 0.0
	for t, norm in zip(times, norms, strict=True):
		if norm == 0:
			continue
		if t <= 0:
			return EnvelopeFit(math.inf, math.inf)
		y = norm / math.sqrt(nu * t)
		C = max(C, 2 * float(special.lambertw(y * t / 2).real) / t)

	if C == 0:
		return EnvelopeFit(0.0, 0.0)
	positive = times > 0
	envelope = C * np.sqrt(nu * times[positive]) * np.exp(C * times[positive] / 2)
	return EnvelopeFit(C, float(np.max(norms[positive] / envelope)))


def _main_envelope(C, t, nu):
	return C * math.sqrt(nu * t) * math.exp(C * t / 2) + C * math.sqrt(nu) * t


def fit_main_envelope(times, errors, nu):
	"""Smallest C with ‖u − ū‖ ≤ C(νt)^{1/2}e^{Ct/2} + Cν^{1/2}t at every snapshot."""
	C = 0.0
	for t, error in zip(times, errors, strict=True):
		if error == 0:
			continue
		if t <= 0:
			return EnvelopeFit(math.inf, math.inf)
		upper = 1.0
		while _main_envelope(upper, t, nu) < error:
			upper *= 2
		root = optimize.brentq(lambda c, t=t, e=error: _main_envelope(c, t, nu) - e, 0.0, upper)
		C = max(C, root)
	if C == 0:
		return EnvelopeFit(0.0, 0.0)
	ratios = [
		error / _main_envelope(C, t, nu) for t, error in zip(times, errors, strict=True) if t > 0
	]
	return EnvelopeFit(C, max(ratios))
