# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Vanishing Viscosity - Desk API

Queues sweeps from the Viscosity Study Settings on the long worker and records
every row as a Sweep Result Log, so a bench site can browse sweeps and the
convergence rate report without touching the CSV artifacts.
"""

import json
from pathlib import Path

import frappe
from frappe import _

from vanishing_viscosity.vanishing_viscosity.exceptions import VanishingViscosityError
from vanishing_viscosity.vanishing_viscosity.harness import (
	RunConfig,
	cmd_sweep,
	config_hash,
	json_default,
)


def get_logger():
	return frappe.logger("vanishing_viscosity")


def log_sweep_row(digest, config, row):
	"""
	Insert one sweep row as a Sweep Result Log.

	Args:
		digest: config hash of the sweep
		config: RunConfig the sweep ran with
		row: sweep row dict

	Returns:
		name of the new document
	"""
	doc = frappe.get_doc({
		"doctype": "Sweep Result Log",
		"config_hash": digest,
		"nu": row["nu"],
		"background_a": config.a,
		"status": "Accepted" if row["accepted"] else "Rejected",
		"n1": row.get("n1"),
		"n2": row.get("n2"),
		"grading_ratio": row.get("grading_ratio"),
		"sup_error": row.get("sup_error"),
		"gronwall_c": row.get("gronwall_C"),
		"budget_max_residual": row.get("budget_max_residual"),
		"reason": row.get("reason"),
		"row_json": json.dumps(row, sort_keys=True, default=json_default),
	})
	doc.insert(ignore_permissions=True)
	return doc.name


def run_logged_sweep(config_data):
	"""
	Background job: run the sweep and log its rows.

	Rows are logged even when too few pass the resolution gate for a rate fit.
	"""
	logger = get_logger()
	config = RunConfig.from_dict(config_data)
	digest = config_hash(config)
	try:
		outcome = cmd_sweep(config)
		rows = outcome.summary["rows"]
	except VanishingViscosityError as exc:
		logger.error(f"Sweep {digest} failed: {exc}")
		rows = _rows_from_artifact(config, digest)
		if rows is None:
			raise

	for row in rows:
		log_sweep_row(digest, config, row)
	frappe.db.commit()
	logger.info(f"Sweep {digest}: logged {len(rows)} rows")
	return digest


def _rows_from_artifact(config, digest):
	path = Path(config.output_dir) / f"sweep_{digest}.json"
	if not path.exists():
		return None
	return json.loads(path.read_text())["rows"]


@frappe.whitelist()
def enqueue_sweep():
	"""
	Queue a sweep over the viscosities in Viscosity Study Settings.

	Returns:
		dict with config_hash and the number of viscosities queued
	"""
	frappe.only_for("System Manager")
	settings = frappe.get_single("Viscosity Study Settings")
	try:
		config = settings.to_run_config()
	except VanishingViscosityError as exc:
		frappe.throw(_("Invalid study settings: {0}").format(str(exc)))

	if len(config.nu_list) < 3:
		frappe.throw(_("A sweep needs at least 3 viscosities, got {0}").format(len(config.nu_list)))

	digest = config_hash(config)
	frappe.enqueue(
		"vanishing_viscosity.vanishing_viscosity.api.run_logged_sweep",
		queue="long",
		timeout=6 * 3600,
		job_id=f"vv-sweep-{digest}",
		deduplicate=True,
		config_data=config.to_dict(),
	)
	get_logger().info(f"Queued sweep {digest} over {len(config.nu_list)} viscosities")
	return {"config_hash": digest, "viscosities": len(config.nu_list)}


@frappe.whitelist()
def get_sweep_rows(config_hash):
	"""
	Logged rows of one sweep, ν descending.

	Returns:
		list of dicts
	"""
	return frappe.get_all(
		"Sweep Result Log",
		filters={"config_hash": config_hash},
		fields=["name", "nu", "status", "n2", "sup_error", "gronwall_c", "budget_max_residual", "reason"],
		order_by="nu desc",
	)
