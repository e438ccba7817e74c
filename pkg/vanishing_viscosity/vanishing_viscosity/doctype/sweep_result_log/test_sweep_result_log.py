# Copyright (c) 2026, Vanishing Viscosity and Contributors
# See license.txt

import frappe
from frappe.tests.utils import FrappeTestCase

from vanishing_viscosity.vanishing_viscosity.api import log_sweep_row
from vanishing_viscosity.vanishing_viscosity.harness import RunConfig

TEST_HASH = "feedfacecafe"


class TestSweepResultLog(FrappeTestCase):
	"""Test cases for Sweep Result Log."""

	def tearDown(self):
		frappe.db.delete("Sweep Result Log", {"config_hash": TEST_HASH})

	def test_log_accepted_row(self):
		"""Test that an accepted sweep row is stored with its raw JSON."""
		row = {
			"nu": 0.01,
			"n1": 16,
			"n2": 64,
			"grading_ratio": 1.0,
			"sup_error": 0.0123,
			"gronwall_C": 1.5,
			"budget_max_residual": 0.01,
			"accepted": True,
			"reason": "",
		}
		name = log_sweep_row(TEST_HASH, RunConfig(), row)
		doc = frappe.get_doc("Sweep Result Log", name)

		self.assertEqual(doc.status, "Accepted")
		self.assertEqual(doc.n2, 64)
		self.assertAlmostEqual(doc.sup_error, 0.0123)
		self.assertEqual(doc.get_row()["nu"], 0.01)

	def test_log_rejected_row(self):
		"""Test that a rejected row keeps its reason and leaves the numbers empty."""
		row = {"nu": 1e-5, "accepted": False, "reason": "ResolutionError: layer unresolved"}
		name = log_sweep_row(TEST_HASH, RunConfig(a=0.5), row)
		doc = frappe.get_doc("Sweep Result Log", name)

		self.assertEqual(doc.status, "Rejected")
		self.assertIn("ResolutionError", doc.reason)
		self.assertEqual(doc.background_a, 0.5)
		self.assertFalse(doc.sup_error)
