# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Exceptions raised by the numerical core.

The core runs without a Frappe site, so these are plain exceptions; doctype
controllers and whitelisted APIs turn them into frappe.throw messages.
"""


class VanishingViscosityError(Exception):
	"""Base class for every error raised by the numerical core."""

	exit_code = 3


class ConfigError(VanishingViscosityError, ValueError):
	"""Invalid RunConfig value or CLI flag."""

	exit_code = 2


class GridError(VanishingViscosityError, ValueError):
	"""Bad grid arguments or fields living on different grids."""


class PoissonCompatibilityError(VanishingViscosityError):
	"""Neumann data violates the solvability condition beyond tolerance."""


class CFLViolationError(VanishingViscosityError):
	"""Time step exceeds the advective CFL limit."""

	def __init__(self, message, suggested_dt=None):
		super().__init__(message)
		self.suggested_dt = suggested_dt


class ResolutionError(VanishingViscosityError):
	"""Boundary layer is not resolved by the wall-normal mesh."""


class NumericalGateError(VanishingViscosityError):
	"""A numerical acceptance gate failed."""


class SnapshotAlignmentError(VanishingViscosityError):
	"""Snapshot times are misaligned between runs or not uniformly spaced."""


class InconsistentBoundError(VanishingViscosityError):
	"""A bound was requested against a zero reference with nonzero data."""


class CorrectorError(VanishingViscosityError, ValueError):
	"""Corrector requested with a non-positive viscosity or background speed."""


class DiagnosticError(VanishingViscosityError, ValueError):
	"""Diagnostic called on data outside its contract."""
