# Copyright (c) 2026, Vanishing Viscosity and Contributors
# See license.txt

import frappe
from frappe.tests.utils import FrappeTestCase


class TestViscosityStudySettings(FrappeTestCase):
	"""Test cases for Viscosity Study Settings."""

	def _settings(self, **values):
		settings = frappe.get_single("Viscosity Study Settings")
		defaults = {
			"length_l": 1,
			"height_h": 1,
			"background_a": 0,
			"background_u": 1,
			"n1": 16,
			"n2": 0,
			"grading_ratio": 1,
			"nu": 0.01,
			"nu_list": "0.02, 0.01, 0.005",
			"t_final": 0.5,
			"dt": 0,
			"cfl": 0.5,
			"snapshot_interval": 0.005,
			"snapshot_stride": 1,
			"amplitude": 0.1,
			"mode": 1,
			"collar": 0.2,
			"forcing": "zero",
			"cutoff": "smooth",
			"trace_threshold": 0,
			"resolution_check": 1,
			"workers": 1,
			"output_dir": "vv_output",
		}
		defaults.update(values)
		settings.update(defaults)
		return settings

	def test_settings_doctype_exists(self):
		"""Test that Viscosity Study Settings doctype exists."""
		self.assertTrue(frappe.db.exists("DocType", "Viscosity Study Settings"))

	def test_to_run_config(self):
		"""Test that zero n2 and zero threshold map to automatic grid and no threshold."""
		config = self._settings().to_run_config()
		self.assertIsNone(config.n2)
		self.assertIsNone(config.trace_threshold)
		self.assertEqual(config.nu_list, (0.02, 0.01, 0.005))
		self.assertEqual(config.n1, 16)
		self.assertIsNone(config.dt)
		self.assertEqual(config.snapshot_interval, 0.005)

	def test_fixed_time_step_setting(self):
		"""Test that a time step entered in the settings reaches the run configuration."""
		config = self._settings(dt=0.001, snapshot_interval=0).to_run_config()
		self.assertEqual(config.dt, 0.001)
		self.assertIsNone(config.snapshot_interval)
		self.assertEqual(config.solver_params().dt, 0.001)

	def test_validate_rejects_step_beyond_final_time(self):
		"""Test that a time step longer than the run is rejected on save."""
		settings = self._settings(dt=1.0)
		self.assertRaises(frappe.ValidationError, settings.validate)

	def test_nu_list_accepts_newlines(self):
		"""Test that sweep viscosities may be given one per line."""
		settings = self._settings(nu_list="0.02\n0.01\n0.005")
		self.assertEqual(settings.get_nu_list(), [0.02, 0.01, 0.005])

	def test_validate_rejects_odd_n1(self):
		"""Test that an invalid grid is rejected on save."""
		settings = self._settings(n1=7)
		self.assertRaises(frappe.ValidationError, settings.validate)

	def test_validate_rejects_bad_collar(self):
		"""Test that a collar wider than half the channel is rejected."""
		settings = self._settings(collar=0.6)
		self.assertRaises(frappe.ValidationError, settings.validate)

	def test_validate_rejects_text_viscosity(self):
		"""Test that a non-numeric sweep viscosity is rejected."""
		settings = self._settings(nu_list="0.02, abc")
		self.assertRaises(frappe.ValidationError, settings.validate)

	def test_version_module(self):
		"""Test version and provenance module loads correctly."""
		from vanishing_viscosity.vanishing_viscosity.version import get_version_info, provenance

		info = get_version_info()
		self.assertIsNotNone(info["frappe_version"])
		self.assertIn("numpy", info)

		block = provenance("0123456789ab")
		self.assertEqual(block["config_hash"], "0123456789ab")
		self.assertEqual(block["schema"], 1)
