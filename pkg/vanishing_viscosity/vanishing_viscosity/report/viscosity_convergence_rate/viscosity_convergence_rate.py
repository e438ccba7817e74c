# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Viscosity Convergence Rate Report

Lists the logged rows of one sweep and fits log(sup error) against log(ν) over
the accepted rows. The fitted slope is the observed convergence rate.
"""

import math

import frappe
from frappe import _
from frappe.utils import flt

from vanishing_viscosity.vanishing_viscosity.diagnostics import fit_rate
from vanishing_viscosity.vanishing_viscosity.harness import MIN_SWEEP_VISCOSITIES


def execute(filters=None):
	"""Main entry point for the report."""
	filters = frappe._dict(filters or {})
	columns = get_columns()
	data = get_data(filters)
	message = get_rate_message(data)
	return columns, data, message


def get_columns():
	"""Define report columns."""
	return [
		{"fieldname": "nu", "label": _("Viscosity"), "fieldtype": "Float", "precision": 9, "width": 110},
		{"fieldname": "status", "label": _("Status"), "fieldtype": "Data", "width": 90},
		{"fieldname": "n1", "label": _("N1"), "fieldtype": "Int", "width": 60},
		{"fieldname": "n2", "label": _("N2"), "fieldtype": "Int", "width": 70},
		{"fieldname": "grading_ratio", "label": _("Grading"), "fieldtype": "Float", "width": 80},
		{"fieldname": "sup_error", "label": _("Sup Error"), "fieldtype": "Float", "precision": 9, "width": 120},
		{"fieldname": "fitted_error", "label": _("Fitted Error"), "fieldtype": "Float", "precision": 9, "width": 120},
		{"fieldname": "gronwall_c", "label": _("Gronwall C"), "fieldtype": "Float", "precision": 4, "width": 100},
		{
			"fieldname": "budget_max_residual",
			"label": _("Budget Residual"),
			"fieldtype": "Float",
			"precision": 6,
			"width": 120,
		},
		{"fieldname": "reason", "label": _("Reason"), "fieldtype": "Data", "width": 300},
	]


def get_data(filters):
	"""Logged rows of the selected sweep, or of the most recent one."""
	digest = filters.get("config_hash") or latest_config_hash()
	if not digest:
		return []

	rows = frappe.get_all(
		"Sweep Result Log",
		filters={"config_hash": digest},
		fields=[
			"nu",
			"status",
			"n1",
			"n2",
			"grading_ratio",
			"sup_error",
			"gronwall_c",
			"budget_max_residual",
			"reason",
		],
		order_by="nu desc",
	)

	rate = fit_accepted(rows)
	for row in rows:
		row["fitted_error"] = rate.predict(flt(row["nu"])) if rate and row["status"] == "Accepted" else None
	return rows


def latest_config_hash():
	latest = frappe.get_all("Sweep Result Log", fields=["config_hash"], order_by="creation desc", limit=1)
	return latest[0].config_hash if latest else None


def fit_accepted(rows):
	"""Rate fit over accepted rows with a positive error, None below three points."""
	pairs = [
		(flt(row["nu"]), flt(row["sup_error"]))
		for row in rows
		if row["status"] == "Accepted" and flt(row["sup_error"]) > 0
	]
	if len(pairs) < MIN_SWEEP_VISCOSITIES:
		return None
	return fit_rate(pairs)


def get_rate_message(data):
	rate = fit_accepted(data)
	if rate is None:
		return _("Fewer than {0} accepted viscosities, no rate fitted").format(MIN_SWEEP_VISCOSITIES)
	return _("Slope {0}, prefactor {1}, r² {2}").format(
		f"{rate.slope:.4f}", f"{math.exp(rate.intercept):.4g}", f"{rate.r_squared:.4f}"
	)
