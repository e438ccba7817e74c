# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Harness Module

Run configuration, experiment orchestration and artifact emission: single runs,
ν sweeps behind a resolution gate, the corrector scaling study, the compatibility
check and the selftest. Every artifact file is named by the config hash and written
deterministically, so an identical config reproduces identical bytes.
"""

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from vanishing_viscosity.vanishing_viscosity.compat import (
	TangentConvention,
	check_compat,
	repaired_forcing,
	solve_p0,
	solve_p0_dense,
)
from vanishing_viscosity.vanishing_viscosity.corrector import (
	LAYER_SUP_CONSTANT,
	NORM_EXPONENTS,
	CutoffSpec,
	corrector_from_trace,
	corrector_norm_table,
	gradient_consistency,
	key_cancellation_residual,
	key_cancellation_scale,
	pure_layer_sup,
	weighted_bound_check,
)
from vanishing_viscosity.vanishing_viscosity.diagnostics import (
	BUDGET_TERMS,
	budget_series,
	energy_budget,
	fit_main_envelope,
	fit_rate,
	gronwall_envelope,
	max_relative_residual,
	pair_snapshots,
	vv_error_series,
)
from vanishing_viscosity.vanishing_viscosity.exceptions import (
	CFLViolationError,
	ConfigError,
	NumericalGateError,
	ResolutionError,
	VanishingViscosityError,
)
from vanishing_viscosity.vanishing_viscosity.fields import (
	WallCondition,
	ZeroForcing,
	divergence,
	leray_project,
	make_initial_data,
	trace_from_function,
)
from vanishing_viscosity.vanishing_viscosity.grid import (
	BackgroundFlow,
	ChannelGeometry,
	VectorField,
	build_grid,
	grid_for_viscosity,
	l2_norm,
	layer_resolution,
	require_layer_resolution,
)
from vanishing_viscosity.vanishing_viscosity.manufactured import (
	blob_error,
	manufactured_error,
	stokes_decay_error,
)
from vanishing_viscosity.vanishing_viscosity.solver_euler import SolverParams, run_euler
from vanishing_viscosity.vanishing_viscosity.solver_ns import run_ns
from vanishing_viscosity.vanishing_viscosity.version import SCHEMA_VERSION, provenance

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "VV_OUTPUT_DIR"
FORCING_CHOICES = ("zero", "repaired")
CUTOFF_CHOICES = ("smooth", "polynomial")

# keys that never change a computed number; left out of the config hash
NON_RESULT_KEYS = ("output_dir", "workers")

# automatic grids: first gap ν/(6U), growth <= 1.04, cells <= h/32
RUN_GRID = {"cells_per_layer": 6.0, "max_growth": 1.04, "max_cell_fraction": 1 / 32}

# a refined-grid rerun may move the sup error by less than this fraction
REFINEMENT_TOLERANCE = 0.10
MIN_SWEEP_VISCOSITIES = 3
CORRECTOR_SLOPE_TOLERANCE = 0.05
DEFAULT_STUDY_VISCOSITIES = (1e-1, 1e-2, 1e-3, 1e-4)

# dense p⁰ oracle only below this many unknowns
DENSE_ORACLE_LIMIT = 4096

SERIES_COLUMNS = ("t", "err_l2", "w_l2", "z_l2", *BUDGET_TERMS, "I", "residual")
SERIES_UNITS = (
	"units: t in L/U; err_l2, w_l2, z_l2 in U*L; budget terms, I, residual in U^2*L^2/(L/U); "
	"all nondimensional; empty cells have no centered time difference"
)
SWEEP_COLUMNS = (
	"nu",
	"n1",
	"n2",
	"grading_ratio",
	"smallest_cell",
	"dt",
	"sup_error",
	"sup_error_refined",
	"refinement_change",
	"gronwall_C",
	"main_envelope_C",
	"budget_max_residual",
	"t0_empirical",
	"trace_below_threshold",
	"accepted",
	"reason",
)
CORRECTOR_COLUMNS = (
	"nu",
	"n2",
	"grading_ratio",
	*NORM_EXPONENTS,
	"key_cancellation",
	"key_scale",
	"winf_ratio",
	"w2_ratio",
	"pure_layer_sup_error",
	"gradient_consistency",
)


# =============================================================================
# Run Configuration
# =============================================================================

def _as_float(name, value):
	if isinstance(value, bool):
		raise ConfigError(f"{name} must be a number, got {value!r}")
	try:
		number = float(value)
	except (TypeError, ValueError):
		raise ConfigError(f"{name} must be a number, got {value!r}")
	if not math.isfinite(number):
		raise ConfigError(f"{name} must be finite, got {value!r}")
	return number


def _as_int(name, value):
	if isinstance(value, bool):
		raise ConfigError(f"{name} must be an integer, got {value!r}")
	if isinstance(value, float):
		if not value.is_integer():
			raise ConfigError(f"{name} must be an integer, got {value!r}")
		return int(value)
	try:
		return int(value)
	except (TypeError, ValueError):
		raise ConfigError(f"{name} must be an integer, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
	"""
	Complete, deterministic description of a study.

	n2=None selects the wall-normal grid from ν (grid_for_viscosity); sweeps always
	select per ν and use n2 only as the smallest allowed cell count.
	Snapshots are taken every `snapshot_interval` of time; with snapshot_interval=None
	they fall back to every `snapshot_stride` steps.
	"""

	length_L: float = 1.0
	height_h: float = 1.0
	n1: int = 16
	n2: int | None = None
	grading_ratio: float = 1.0
	a: float = 0.0
	U: float = 1.0
	nu: float = 0.01
	nu_list: tuple = ()
	t_final: float = 0.5
	dt: float | None = None
	cfl: float = 0.5
	amplitude: float = 0.1
	mode: int = 1
	collar: float = 0.2
	forcing: str = "zero"
	cutoff: str = "smooth"
	snapshot_stride: int = 1
	snapshot_interval: float | None = 0.005
	trace_threshold: float | None = None
	resolution_check: bool = True
	workers: int = 1
	output_dir: str = "vv_output"

	def __post_init__(self):
		for name in ("length_L", "height_h", "grading_ratio", "a", "U", "nu", "t_final", "cfl", "amplitude", "collar"):
			object.__setattr__(self, name, _as_float(name, getattr(self, name)))
		for name in ("n1", "mode", "snapshot_stride", "workers"):
			object.__setattr__(self, name, _as_int(name, getattr(self, name)))
		if self.n2 is not None:
			object.__setattr__(self, "n2", _as_int("n2", self.n2))
		for name in ("dt", "snapshot_interval", "trace_threshold"):
			if getattr(self, name) is not None:
				object.__setattr__(self, name, _as_float(name, getattr(self, name)))
		if isinstance(self.nu_list, (str, bytes)) or not hasattr(self.nu_list, "__iter__"):
			raise ConfigError(f"nu_list must be a list of numbers, got {self.nu_list!r}")
		object.__setattr__(self, "nu_list", tuple(_as_float("nu_list", nu) for nu in self.nu_list))
		self.validate()

	def validate(self):
		"""Raise ConfigError for the first invalid field."""
		if not self.length_L > 0:
			raise ConfigError(f"length_L must be > 0, got {self.length_L}")
		if not self.height_h > 0:
			raise ConfigError(f"height_h must be > 0, got {self.height_h}")
		if self.n1 < 4 or self.n1 % 2:
			raise ConfigError(f"n1 must be even and >= 4, got {self.n1}")
		if self.n2 is not None and self.n2 < 8:
			raise ConfigError(f"n2 must be >= 8, got {self.n2}")
		if not self.grading_ratio >= 1:
			raise ConfigError(f"grading_ratio must be >= 1, got {self.grading_ratio}")
		if not self.U > 0:
			raise ConfigError(f"U must be > 0, got {self.U}")
		if not self.nu > 0:
			raise ConfigError(f"nu must be > 0, got {self.nu}")
		if any(nu <= 0 for nu in self.nu_list):
			raise ConfigError(f"every nu in nu_list must be > 0, got {list(self.nu_list)}")
		if len(set(self.nu_list)) != len(self.nu_list):
			raise ConfigError(f"nu_list has repeated values: {list(self.nu_list)}")
		if not self.t_final > 0:
			raise ConfigError(f"t_final must be > 0, got {self.t_final}")
		if self.dt is not None and not 0 < self.dt <= self.t_final:
			raise ConfigError(f"dt must lie in (0, t_final], got {self.dt}")
		if not 0 < self.cfl <= 1:
			raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
		if self.mode < 0:
			raise ConfigError(f"mode must be >= 0, got {self.mode}")
		if not 0 < self.collar < self.height_h / 2:
			raise ConfigError(f"collar must lie in (0, h/2) = (0, {self.height_h / 2}), got {self.collar}")
		if self.forcing not in FORCING_CHOICES:
			raise ConfigError(f"forcing must be one of {FORCING_CHOICES}, got {self.forcing!r}")
		if self.cutoff not in CUTOFF_CHOICES:
			raise ConfigError(f"cutoff must be one of {CUTOFF_CHOICES}, got {self.cutoff!r}")
		if self.snapshot_stride < 1:
			raise ConfigError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
		if self.snapshot_interval is not None and not self.snapshot_interval > 0:
			raise ConfigError(f"snapshot_interval must be > 0, got {self.snapshot_interval}")
		if self.trace_threshold is not None and not self.trace_threshold > 0:
			raise ConfigError(f"trace_threshold must be > 0, got {self.trace_threshold}")
		if not isinstance(self.resolution_check, bool):
			raise ConfigError(f"resolution_check must be true or false, got {self.resolution_check!r}")
		if self.workers < 1:
			raise ConfigError(f"workers must be >= 1, got {self.workers}")
		if not isinstance(self.output_dir, str) or not self.output_dir:
			raise ConfigError(f"output_dir must be a non-empty path, got {self.output_dir!r}")

	@classmethod
	def from_dict(cls, data):
		if not isinstance(data, dict):
			raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
		unknown = sorted(set(data) - {f.name for f in fields(cls)})
		if unknown:
			raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
		return cls(**data)

	def to_dict(self):
		data = {f.name: getattr(self, f.name) for f in fields(self)}
		data["nu_list"] = list(self.nu_list)
		return data

	def with_overrides(self, **changes):
		"""New config with every non-None change applied and validated."""
		data = self.to_dict()
		data.update({key: value for key, value in changes.items() if value is not None})
		return RunConfig.from_dict(data)

	@property
	def geometry(self):
		return ChannelGeometry(self.length_L, self.height_h)

	@property
	def background(self):
		return BackgroundFlow(self.a, self.U)

	@property
	def viscosities(self):
		return self.nu_list or (self.nu,)

	def solver_params(self):
		interval = self.snapshot_interval
		if interval is not None:
			interval = min(interval, self.t_final)
		return SolverParams(
			t_final=self.t_final,
			dt=self.dt,
			cfl=self.cfl,
			snapshot_stride=self.snapshot_stride,
			snapshot_interval=interval,
			trace_threshold=math.inf if self.trace_threshold is None else self.trace_threshold,
		)

	def cutoff_spec(self):
		return CutoffSpec(self.height_h, self.cutoff)

	def grid_for(self, nu):
		if self.n2 is not None:
			return build_grid(self.geometry, self.n1, self.n2, self.grading_ratio)
		return grid_for_viscosity(self.geometry, self.n1, nu, self.U, **RUN_GRID)


def config_hash(config):
	"""First 12 hex digits of SHA-256 over the canonical JSON of the result-bearing keys."""
	data = {key: value for key, value in config.to_dict().items() if key not in NON_RESULT_KEYS}
	canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
	return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def load_config(path=None, overrides=None, environ=None):
	"""
	Defaults, then the JSON file at `path`, then VV_OUTPUT_DIR (output_dir only),
	then `overrides` (CLI flags; None values are skipped).
	"""
	data = {}
	if path:
		try:
			data = json.loads(Path(path).read_text())
		except OSError as exc:
			raise ConfigError(f"cannot read config file {path}: {exc}")
		except json.JSONDecodeError as exc:
			raise ConfigError(f"config file {path} is not valid JSON: {exc}")
		if not isinstance(data, dict):
			raise ConfigError(f"config file {path} must hold a JSON object")
	environ = os.environ if environ is None else environ
	if environ.get(OUTPUT_DIR_ENV):
		data["output_dir"] = environ[OUTPUT_DIR_ENV]
	data.update({key: value for key, value in (overrides or {}).items() if value is not None})
	return RunConfig.from_dict(data)


# =============================================================================
# Artifact Writers
# =============================================================================

def json_default(value):
	if isinstance(value, np.generic):
		return value.item()
	if isinstance(value, np.ndarray):
		return value.tolist()
	if isinstance(value, tuple):
		return list(value)
	raise TypeError(f"cannot serialize {type(value).__name__}")


def _finite(value):
	return float(value) if value is not None and math.isfinite(value) else None


def write_json(path, payload):
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False, default=json_default)
	path.write_text(text + "\n")
	return path


def _cell(value):
	if value is None:
		return ""
	if isinstance(value, (bool, np.bool_)):
		return "true" if value else "false"
	if isinstance(value, (int, np.integer)):
		return str(int(value))
	if isinstance(value, (float, np.floating)):
		return repr(float(value)) if math.isfinite(value) else ""
	return str(value)


def write_csv(path, columns, rows, comments=()):
	"""CSV with a `# schema=N` first line, further `#` comment lines and a header row."""
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	with path.open("w", newline="") as handle:
		handle.write(f"# schema={SCHEMA_VERSION}\n")
		for comment in comments:
			handle.write(f"# {comment}\n")
		writer = csv.writer(handle, lineterminator="\n")
		writer.writerow(columns)
		for row in rows:
			writer.writerow([_cell(row.get(column)) for column in columns])
	return path


@dataclass(frozen=True)
class CommandOutcome:
	summary: dict
	paths: tuple = ()
	passed: bool = True


# =============================================================================
# Single Run
# =============================================================================

def initial_forcing(config, u0, background):
	"""Zero forcing, or ∇p⁰ cut off near Γ+ so the order-0 condition holds."""
	if config.forcing == "repaired":
		return repaired_forcing(solve_p0(u0, None, background))
	return ZeroForcing()


@dataclass(frozen=True, eq=False)
class RunResult:
	config: RunConfig
	nu: float
	grid: object
	resolution: object
	euler: object
	ns: object
	pairs: list
	budgets: list
	series: object
	w_norms: np.ndarray
	z_norms: np.ndarray
	envelope: object
	main_envelope: object
	compat: object

	@property
	def budget_max_residual(self):
		return max_relative_residual(self.budgets)

	@property
	def final_corrector(self):
		return self.pairs[-1].corrector

	def series_rows(self):
		budgets = {budget.t: budget for budget in self.budgets}
		rows = []
		for pair, error, w, z in zip(self.pairs, self.series.errors, self.w_norms, self.z_norms, strict=True):
			row = {"t": pair.t, "err_l2": error, "w_l2": w, "z_l2": z}
			budget = budgets.get(pair.t)
			if budget is not None:
				row.update(budget.terms)
				row["I"] = budget.I_combined
				row["residual"] = budget.residual
			rows.append(row)
		return rows

	def summary(self, digest):
		budgets = self.budgets
		return {
			"provenance": provenance(digest),
			"config": self.config.to_dict(),
			"nu": self.nu,
			"grid": self.grid.describe(),
			"layer_resolved": self.resolution.resolved,
			"dt": self.euler.dt,
			"steps": len(self.euler.step_times) - 1,
			"sup_error": self.series.sup,
			"final_error": float(self.series.errors[-1]),
			"gronwall_C": _finite(self.envelope.C),
			"main_envelope_C": _finite(self.main_envelope.C),
			"budget_max_residual": self.budget_max_residual,
			"budget_closes": all(budget.closes() for budget in budgets),
			"triangle_holds": all(budget.triangle_holds for budget in budgets),
			"max_I_ratio": max((budget.I_ratio for budget in budgets), default=0.0),
			"max_I_mismatch": max((budget.I_mismatch for budget in budgets), default=0.0),
			"max_hardy_ratio": max((max(b.hardy_w1, b.hardy_w2) for b in budgets), default=0.0),
			"t0_empirical": self.euler.t0_empirical,
			"trace_below_threshold": self.euler.trace_below_threshold,
			"euler_energy_defect": float(np.max(np.abs(self.euler.energy_defect), initial=0.0)),
			"ns_energy_defect": float(np.max(np.abs(self.ns.energy_defect), initial=0.0)),
			"compat": self.compat.to_dict(),
		}


def execute_run(config, nu=None, grid=None, sign_overrides=None):
	"""
	Euler run, Navier-Stokes run and the paired diagnostics for one viscosity.

	Args:
		config: RunConfig
		nu: Viscosity (defaults to config.nu)
		grid: ChannelGrid (defaults to config.grid_for(nu))
		sign_overrides: Passed to the energy budget for fault injection

	Returns:
		RunResult
	"""
	nu = config.nu if nu is None else nu
	background = config.background
	grid = grid or config.grid_for(nu)
	resolution = layer_resolution(grid, nu, background.U)
	if not resolution.resolved:
		logger.warning("nu=%g: %s", nu, resolution.message())

	v0 = make_initial_data(grid, config.amplitude, config.mode, config.collar)
	u0 = v0 + background.as_field(grid)
	forcing = initial_forcing(config, u0, background)
	f0 = forcing(grid, 0.0)
	compat = check_compat(u0, None if f0 is None else VectorField(grid, f0), background)

	params = config.solver_params()
	euler = run_euler(v0, params, background, forcing)
	ns = run_ns(v0, params, nu, background, forcing)

	pairs = pair_snapshots(ns, euler, config.cutoff_spec())
	budgets = budget_series(pairs, background, nu, sign_overrides)
	series = vv_error_series(ns, euler)
	w_norms = np.array([l2_norm(pair.w) for pair in pairs])
	z_norms = np.array([l2_norm(pair.corrector.z) for pair in pairs])

	result = RunResult(
		config=config,
		nu=nu,
		grid=grid,
		resolution=resolution,
		euler=euler,
		ns=ns,
		pairs=pairs,
		budgets=budgets,
		series=series,
		w_norms=w_norms,
		z_norms=z_norms,
		envelope=gronwall_envelope(series.times, w_norms, nu),
		main_envelope=fit_main_envelope(series.times, series.errors, nu),
		compat=compat,
	)
	logger.info(
		"run nu=%g n2=%d: sup error %.4e, budget residual %.2e",
		nu,
		grid.n2,
		series.sup,
		result.budget_max_residual,
	)
	return result


def cmd_run(config):
	"""Single run at config.nu; writes series_<hash>.csv and summary_<hash>.json."""
	digest = config_hash(config)
	result = execute_run(config)
	out = Path(config.output_dir)
	series_path = write_csv(
		out / f"series_{digest}.csv",
		SERIES_COLUMNS,
		result.series_rows(),
		comments=(f"config_hash={digest}", SERIES_UNITS),
	)
	summary = result.summary(digest)
	summary_path = write_json(out / f"summary_{digest}.json", summary)
	return CommandOutcome(summary=summary, paths=(series_path, summary_path))


# =============================================================================
# Viscosity Sweep
# =============================================================================

def _rejected_row(nu, reason):
	return {"nu": nu, "accepted": False, "reason": reason}


def sweep_row(config, nu):
	"""
	One independent sweep row on the grid selected for ν.

	The row is accepted when the grid resolves the layer and, with
	`resolution_check`, a rerun on the node-nested refinement moves the sup error by
	less than REFINEMENT_TOLERANCE.
	"""
	background = config.background
	try:
		grid = grid_for_viscosity(
			config.geometry, config.n1, nu, background.U, min_n2=config.n2 or 16, **RUN_GRID
		)
		result = execute_run(config, nu, grid)
	except (ResolutionError, CFLViolationError) as exc:
		logger.warning("nu=%g rejected: %s", nu, exc)
		return _rejected_row(nu, f"{type(exc).__name__}: {exc}")

	row = {
		"nu": nu,
		"n1": grid.n1,
		"n2": grid.n2,
		"grading_ratio": grid.grading_ratio,
		"smallest_cell": grid.smallest_cell,
		"dt": result.euler.dt,
		"sup_error": result.series.sup,
		"gronwall_C": _finite(result.envelope.C),
		"main_envelope_C": _finite(result.main_envelope.C),
		"budget_max_residual": result.budget_max_residual,
		"t0_empirical": result.euler.t0_empirical,
		"trace_below_threshold": result.euler.trace_below_threshold,
		"corrector_norms": corrector_norm_table(result.final_corrector, check_resolution=False),
	}
	reasons = []
	if not result.resolution.resolved:
		reasons.append(result.resolution.message())

	if config.resolution_check:
		try:
			refined = execute_run(config, nu, grid.refined())
		except (ResolutionError, CFLViolationError) as exc:
			reasons.append(f"refined run failed: {exc}")
		else:
			sup = result.series.sup
			change = abs(refined.series.sup - sup) / sup if sup > 0 else 0.0
			row["sup_error_refined"] = refined.series.sup
			row["refinement_change"] = change
			if change >= REFINEMENT_TOLERANCE:
				reasons.append(
					f"refining n2 {grid.n2} -> {2 * grid.n2} moves the sup error by {change:.1%}"
				)

	row["accepted"] = not reasons
	row["reason"] = "; ".join(reasons)
	logger.info("sweep nu=%g: sup error %.4e, accepted=%s", nu, row["sup_error"], row["accepted"])
	return row


def _sweep_worker(job):
	config_data, nu = job
	return sweep_row(RunConfig.from_dict(config_data), nu)


@dataclass(frozen=True)
class SweepSummary:
	"""Rows sorted by ν descending; the rate fit uses accepted rows only."""

	rows: tuple
	rate: object
	provenance: dict

	@property
	def accepted_rows(self):
		return tuple(row for row in self.rows if row["accepted"])

	@property
	def rejected_rows(self):
		return tuple(row for row in self.rows if not row["accepted"])

	@property
	def gronwall_spread(self):
		"""max C / min C over accepted rows with a finite, positive C."""
		values = [row["gronwall_C"] for row in self.accepted_rows if row.get("gronwall_C")]
		if not values:
			return None
		return max(values) / min(values)

	@classmethod
	def from_rows(cls, rows, digest):
		rows = tuple(sorted(rows, key=lambda row: row["nu"], reverse=True))
		accepted = [(row["nu"], row["sup_error"]) for row in rows if row["accepted"]]
		rate = None
		if len(accepted) >= MIN_SWEEP_VISCOSITIES and all(error > 0 for _, error in accepted):
			rate = fit_rate(accepted)
		return cls(rows=rows, rate=rate, provenance=provenance(digest))

	def to_dict(self):
		rate = None
		if self.rate is not None:
			rate = {
				"slope": self.rate.slope,
				"intercept": self.rate.intercept,
				"r_squared": self.rate.r_squared,
				"pairwise_slopes": list(self.rate.pairwise_slopes),
				"nus": list(self.rate.nus),
			}
		return {
			"provenance": self.provenance,
			"rows": list(self.rows),
			"rate": rate,
			"gronwall_spread": self.gronwall_spread,
			"excluded": [{"nu": row["nu"], "reason": row["reason"]} for row in self.rejected_rows],
		}


def run_sweep(config):
	"""
	Independent per-ν rows, serially or on a process pool, reduced in ν order.

	Returns:
		SweepSummary
	"""
	if len(config.nu_list) < MIN_SWEEP_VISCOSITIES:
		raise ConfigError(
			f"sweep needs at least {MIN_SWEEP_VISCOSITIES} viscosities in nu_list, got {len(config.nu_list)}"
		)
	ordered = sorted(config.nu_list, reverse=True)
	if config.workers > 1:
		jobs = [(config.to_dict(), nu) for nu in ordered]
		with ProcessPoolExecutor(max_workers=config.workers) as pool:
			rows = list(pool.map(_sweep_worker, jobs))
	else:
		rows = [sweep_row(config, nu) for nu in ordered]
	return SweepSummary.from_rows(rows, config_hash(config))


def cmd_sweep(config):
	"""Sweep over config.nu_list; writes sweep_<hash>.csv and sweep_<hash>.json."""
	digest = config_hash(config)
	summary = run_sweep(config)
	out = Path(config.output_dir)
	csv_path = write_csv(
		out / f"sweep_{digest}.csv",
		SWEEP_COLUMNS,
		summary.rows,
		comments=(f"config_hash={digest}", "units: nu, dt, t0 nondimensional; errors in U*L"),
	)
	payload = summary.to_dict()
	json_path = write_json(out / f"sweep_{digest}.json", payload)

	if summary.rate is None:
		raise NumericalGateError(
			f"only {len(summary.accepted_rows)} of {len(summary.rows)} viscosities passed the "
			f"resolution gate; a rate fit needs {MIN_SWEEP_VISCOSITIES}"
		)
	logger.info("sweep slope %.4f (r^2 %.4f)", summary.rate.slope, summary.rate.r_squared)
	return CommandOutcome(summary=payload, paths=(csv_path, json_path))


# =============================================================================
# Corrector Study
# =============================================================================

def study_grid(config, nu):
	"""High-resolution graded quadrature grid for the corrector at ν."""
	grid = grid_for_viscosity(
		config.geometry, config.n1, nu, config.U, cells_per_layer=8.0, max_growth=1.03
	)
	require_layer_resolution(grid, nu, config.U)
	return grid


def corrector_study_row(config, nu):
	"""Corrector norms and checks for the analytic outflow trace sin(2π·mode·x₁/L)."""
	background = config.background
	grid = study_grid(config, nu)
	mode = max(config.mode, 1)
	length = config.length_L
	trace = trace_from_function(grid, lambda x1: np.sin(2 * np.pi * mode * x1 / length))
	# T(t) = eᵗ·sin(...) at t = 0: the time derivative equals the trace
	corrector = corrector_from_trace(trace, trace, nu, background, grid, config.cutoff_spec())
	norms = corrector_norm_table(corrector)
	bounds = weighted_bound_check(corrector, trace.sup)
	expected_sup = LAYER_SUP_CONSTANT * nu / background.U
	return {
		"nu": nu,
		"n2": grid.n2,
		"grading_ratio": grid.grading_ratio,
		**norms,
		"key_cancellation": key_cancellation_residual(corrector),
		"key_scale": key_cancellation_scale(corrector),
		"winf_ratio": bounds.winf_ratio,
		"w2_ratio": bounds.w2_ratio,
		"pure_layer_sup_error": abs(pure_layer_sup(grid, nu, background.U) / expected_sup - 1),
		"gradient_consistency": gradient_consistency(corrector),
	}


def _spread(values):
	values = [value for value in values if value > 0]
	return max(values) / min(values) if values else None


def run_corrector_study(config):
	"""
	Corrector scaling table over config.nu_list (or 1e-1 ... 1e-4).

	Returns:
		(rows, report) with rows ordered by ν descending
	"""
	viscosities = sorted(config.nu_list or DEFAULT_STUDY_VISCOSITIES, reverse=True)
	if len(viscosities) < MIN_SWEEP_VISCOSITIES:
		raise ConfigError(
			f"corrector study needs at least {MIN_SWEEP_VISCOSITIES} viscosities, got {len(viscosities)}"
		)
	rows = [corrector_study_row(config, nu) for nu in viscosities]

	slopes = {}
	for name, expected in NORM_EXPONENTS.items():
		fit = fit_rate([(row["nu"], row[name]) for row in rows])
		slopes[name] = {
			"slope": fit.slope,
			"expected": expected,
			"within_tolerance": abs(fit.slope - expected) <= CORRECTOR_SLOPE_TOLERANCE,
		}
	report = {
		"slopes": slopes,
		"slope_tolerance": CORRECTOR_SLOPE_TOLERANCE,
		"max_key_cancellation_ratio": max(
			row["key_cancellation"] / row["key_scale"] if row["key_scale"] > 0 else 0.0 for row in rows
		),
		"winf_ratio_spread": _spread([row["winf_ratio"] for row in rows]),
		"w2_ratio_spread": _spread([row["w2_ratio"] for row in rows]),
		"max_pure_layer_sup_error": max(row["pure_layer_sup_error"] for row in rows),
		"max_gradient_consistency": max(row["gradient_consistency"] for row in rows),
	}
	return rows, report


def cmd_corrector_study(config):
	"""Writes corrector_<hash>.csv and corrector_<hash>.json."""
	digest = config_hash(config)
	rows, report = run_corrector_study(config)
	out = Path(config.output_dir)
	csv_path = write_csv(
		out / f"corrector_{digest}.csv",
		CORRECTOR_COLUMNS,
		rows,
		comments=(f"config_hash={digest}", "units: L2 norms of the corrector for a unit outflow trace"),
	)
	payload = {"provenance": provenance(digest), "rows": rows, **report}
	json_path = write_json(out / f"corrector_{digest}.json", payload)
	return CommandOutcome(summary=payload, paths=(csv_path, json_path))


# =============================================================================
# Compatibility Check
# =============================================================================

def run_compat_check(config, tangent_convention=TangentConvention.APPENDIX):
	"""
	Compatibility report for the configured collar data and forcing, with the dense
	oracle difference on small grids.
	"""
	grid = config.grid_for(config.nu)
	background = config.background
	v0 = make_initial_data(grid, config.amplitude, config.mode, config.collar)
	u0 = v0 + background.as_field(grid)
	forcing = initial_forcing(config, u0, background)
	f0 = forcing(grid, 0.0)
	report = check_compat(
		u0, None if f0 is None else VectorField(grid, f0), background, tangent_convention
	)
	payload = {"grid": grid.describe(), "forcing": config.forcing, **report.to_dict()}
	if grid.n1 * (grid.n2 + 1) <= DENSE_ORACLE_LIMIT:
		dense = solve_p0_dense(u0, None, background)
		scale = float(np.max(np.abs(report.p0.values)))
		difference = float(np.max(np.abs(dense.values - report.p0.values)))
		payload["dense_oracle_difference"] = difference / scale if scale > 0 else difference
	return report, payload


def cmd_compat_check(config):
	"""Writes compat_<hash>.json."""
	digest = config_hash(config)
	_, payload = run_compat_check(config)
	payload["provenance"] = provenance(digest)
	path = write_json(Path(config.output_dir) / f"compat_{digest}.json", payload)
	return CommandOutcome(summary=payload, paths=(path,))


# =============================================================================
# Selftest
# =============================================================================

@dataclass(frozen=True)
class CheckResult:
	name: str
	passed: bool
	detail: str
	seconds: float = 0.0


def _ratio_band(coarse, fine, low=3.2, high=4.8):
	ratio = coarse / fine if fine > 0 else math.inf
	return low <= ratio <= high, f"error ratio {ratio:.3f} (coarse {coarse:.3e}, fine {fine:.3e})"


def _check_spectral_derivative():
	grid = build_grid(ChannelGeometry(), 16, 16, 1.1)
	X1, _ = grid.mesh
	k = 2 * np.pi * 3
	error = float(np.max(np.abs(grid.d1(np.sin(k * X1)) - k * np.cos(k * X1))))
	return error <= 1e-10 * k, f"max error {error:.2e}"


def _check_wall_normal_order():
	coarse = build_grid(ChannelGeometry(), 4, 16, 1.05)
	fine = coarse.refined()

	def error(grid):
		x2 = grid.x2
		return float(np.max(np.abs(grid.d2(np.sin(3 * x2)[None, :]) - 3 * np.cos(3 * x2))))

	return _ratio_band(error(coarse), error(fine))


def _check_projection():
	grid = build_grid(ChannelGeometry(), 16, 24, 1.05)
	X1, X2 = grid.mesh
	values = np.stack([np.cos(2 * np.pi * X1) * X2**2, np.sin(4 * np.pi * X1) * np.sin(np.pi * X2) + X2])
	once = leray_project(VectorField(grid, values), WallCondition.NO_PENETRATION)
	twice = leray_project(once, WallCondition.NO_PENETRATION)
	scale = float(np.max(np.abs(values)))
	idempotence = float(np.max(np.abs(twice.values - once.values)))
	div = float(np.max(np.abs(divergence(once).values)))
	passed = idempotence <= 1e-10 * scale and div <= 1e-9 * scale
	return passed, f"|PPv - Pv| {idempotence:.2e}, max div {div:.2e}"


def _check_poisson_oracle():
	config = RunConfig(n1=8, n2=16, amplitude=0.1)
	report, payload = run_compat_check(config)
	difference = payload["dense_oracle_difference"]
	passed = report.poisson_residual <= 1e-10 and difference <= 1e-8
	return passed, f"residual {report.poisson_residual:.2e}, dense difference {difference:.2e}"


def _check_compat_collar():
	config = RunConfig(n1=8, n2=32, forcing="repaired")
	report, _ = run_compat_check(config)
	passed = report.cond_minus1_residual == 0.0 and report.cond_0_residual <= 1e-8
	return passed, f"cond_-1 {report.cond_minus1_residual:.2e}, cond_0 {report.cond_0_residual:.2e}"


def _check_euler_manufactured():
	return _ratio_band(manufactured_error(16), manufactured_error(32))


def _check_ns_manufactured():
	return _ratio_band(manufactured_error(16, nu=0.02), manufactured_error(32, nu=0.02))


def _check_linear_transport():
	return _ratio_band(blob_error(64), blob_error(128))


def _check_stokes_decay():
	error = stokes_decay_error()
	return error <= 0.01, f"decay rate error {error:.3%}"


def _check_key_cancellation():
	config = RunConfig()
	nu = 1e-3
	grid = study_grid(config, nu)
	trace = trace_from_function(grid, lambda x1: np.sin(2 * np.pi * x1))
	corrector = corrector_from_trace(trace, trace, nu, config.background, grid)
	residual = key_cancellation_residual(corrector)
	scale = key_cancellation_scale(corrector)
	return residual <= 1e-12 * scale, f"residual {residual:.2e} at scale {scale:.2e}"


def _selftest_budgets():
	config = RunConfig(n1=16, nu=0.05, a=1.0, t_final=0.2, amplitude=0.1)
	result = execute_run(config)
	if not result.budgets:
		raise NumericalGateError("selftest run produced no energy budgets")
	return result


def _check_budget_algebra(result):
	worst_split = worst_transport = worst_parts = worst_I = 0.0
	for budget in result.budgets:
		scale = max(budget.closure_scale, 1e-300)
		split_scale = max(sum(abs(piece) for piece in budget.nonlinear_split.values()), 1e-300)
		worst_split = max(worst_split, abs(budget.terms["nonlinear"] - budget.nonlinear_split_total) / split_scale)
		worst_transport = max(worst_transport, abs(budget.terms["transport"]) / scale)
		worst_I = max(worst_I, budget.I_mismatch)
		for before, after in budget.parts_checks.values():
			worst_parts = max(worst_parts, abs(before - after) / max(abs(before), abs(after), scale))
	passed = worst_split <= 1e-10 and worst_transport <= 1e-8 and worst_parts <= 1e-8 and worst_I <= 1e-8
	return passed, (
		f"split {worst_split:.1e}, transport {worst_transport:.1e}, parts {worst_parts:.1e}, I {worst_I:.1e}"
	)


def _check_budget_mutation(result):
	"""Flipping the sign of the largest term must break closure somewhere."""
	pairs = result.pairs
	largest = max(result.budgets, key=lambda budget: budget.closure_scale)
	term = max(BUDGET_TERMS, key=lambda name: abs(largest.terms[name]))
	index = next(i for i, pair in enumerate(pairs) if pair.t == largest.t)
	background = result.config.background
	mutated = energy_budget(
		pairs[index - 1], pairs[index], pairs[index + 1], background, result.nu, {term: -1.0}
	)
	return not mutated.closes(), (
		f"{term} flipped: relative residual {largest.relative_residual:.2e} -> {mutated.relative_residual:.2e}"
	)


def _check_resolution_gate():
	nu = 1e-3
	grid = build_grid(ChannelGeometry(), 16, 8)
	try:
		require_layer_resolution(grid, nu, 1.0)
	except ResolutionError as exc:
		return True, f"gate reported: {exc}"
	return False, "under-resolved grid passed the gate"


SELFTEST_CHECKS = (
	("spectral_derivative", _check_spectral_derivative),
	("wall_normal_order", _check_wall_normal_order),
	("projection", _check_projection),
	("poisson_dense_oracle", _check_poisson_oracle),
	("compat_collar", _check_compat_collar),
	("euler_manufactured", _check_euler_manufactured),
	("ns_manufactured", _check_ns_manufactured),
	("linear_transport", _check_linear_transport),
	("stokes_decay", _check_stokes_decay),
	("key_cancellation", _check_key_cancellation),
	("resolution_gate", _check_resolution_gate),
)

BUDGET_CHECKS = (
	("budget_algebra", _check_budget_algebra),
	("budget_mutation", _check_budget_mutation),
)


def _timed(name, check, *args):
	started = time.perf_counter()
	try:
		passed, detail = check(*args)
	except VanishingViscosityError as exc:
		passed, detail = False, f"{type(exc).__name__}: {exc}"
	return CheckResult(name, bool(passed), detail, time.perf_counter() - started)


def run_selftest():
	"""Every selftest check, in order; a failing check never stops the rest."""
	results = [_timed(name, check) for name, check in SELFTEST_CHECKS]
	try:
		budget_run = _selftest_budgets()
	except VanishingViscosityError as exc:
		results.extend(CheckResult(name, False, f"{type(exc).__name__}: {exc}") for name, _ in BUDGET_CHECKS)
	else:
		results.extend(_timed(name, check, budget_run) for name, check in BUDGET_CHECKS)
	for result in results:
		logger.info("selftest %s: %s (%s)", result.name, "pass" if result.passed else "FAIL", result.detail)
	return results


def cmd_selftest():
	results = run_selftest()
	summary = {
		"checks": [
			{"name": r.name, "passed": r.passed, "detail": r.detail, "seconds": r.seconds} for r in results
		],
	}
	return CommandOutcome(summary=summary, passed=all(r.passed for r in results))
