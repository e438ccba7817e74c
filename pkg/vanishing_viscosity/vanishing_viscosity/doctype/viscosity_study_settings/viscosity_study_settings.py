# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

import frappe
from frappe import _
from frappe.model.document import Document
from frappe.utils import cint, cstr, flt

from vanishing_viscosity.vanishing_viscosity.exceptions import ConfigError
from vanishing_viscosity.vanishing_viscosity.harness import RunConfig


class ViscosityStudySettings(Document):
	# begin: auto-generated types
	# This code is auto-generated. Do not modify anything in this block.

	from typing import TYPE_CHECKING

	if TYPE_CHECKING:
		from frappe.types import DF

		amplitude: DF.Float
		background_a: DF.Float
		background_u: DF.Float
		cfl: DF.Float
		collar: DF.Float
		cutoff: DF.Literal["smooth", "polynomial"]
		dt: DF.Float
		forcing: DF.Literal["zero", "repaired"]
		grading_ratio: DF.Float
		height_h: DF.Float
		length_l: DF.Float
		mode: DF.Int
		n1: DF.Int
		n2: DF.Int
		nu: DF.Float
		nu_list: DF.SmallText | None
		output_dir: DF.Data
		resolution_check: DF.Check
		snapshot_interval: DF.Float
		snapshot_stride: DF.Int
		t_final: DF.Float
		trace_threshold: DF.Float
		workers: DF.Int
	# end: auto-generated types

	def validate(self):
		try:
			self.to_run_config()
		except ConfigError as exc:
			frappe.throw(_("Invalid study settings: {0}").format(str(exc)))

	def get_nu_list(self):
		"""Viscosities from the comma- or newline-separated field."""
		parts = cstr(self.nu_list).replace("\n", ",").split(",")
		values = []
		for part in parts:
			if not part.strip():
				continue
			try:
				values.append(float(part))
			except ValueError:
				raise ConfigError(f"sweep viscosities must be numbers, got {part.strip()!r}")
		return values

	def to_run_config(self):
		"""
		Convert the settings into a validated RunConfig.

		Zero n2, dt, snapshot interval and trace threshold mean "select from ν",
		"pick from the CFL number", "every snapshot_stride steps" and "no threshold".
		"""
		return RunConfig.from_dict({
			"length_L": flt(self.length_l),
			"height_h": flt(self.height_h),
			"n1": cint(self.n1),
			"n2": cint(self.n2) or None,
			"grading_ratio": flt(self.grading_ratio) or 1.0,
			"a": flt(self.background_a),
			"U": flt(self.background_u),
			"nu": flt(self.nu),
			"nu_list": self.get_nu_list(),
			"t_final": flt(self.t_final),
			"dt": flt(self.dt) or None,
			"cfl": flt(self.cfl),
			"amplitude": flt(self.amplitude),
			"mode": cint(self.mode),
			"collar": flt(self.collar),
			"forcing": self.forcing or "zero",
			"cutoff": self.cutoff or "smooth",
			"snapshot_interval": flt(self.snapshot_interval) or None,
			"snapshot_stride": cint(self.snapshot_stride) or 1,
			"trace_threshold": flt(self.trace_threshold) or None,
			"resolution_check": bool(cint(self.resolution_check)),
			"workers": cint(self.workers) or 1,
			"output_dir": self.output_dir or "vv_output",
		})
