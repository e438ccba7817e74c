# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Version and provenance information stamped into every artifact.

The numerical core runs outside a bench, so the Frappe version is reported only
when frappe is importable.
"""

import platform

import numpy
import scipy

from vanishing_viscosity import __version__

# bump when a CSV column or JSON key changes meaning
SCHEMA_VERSION = 1


# =============================================================================
# Version Detection
# =============================================================================

def get_frappe_version():
	"""Frappe version string inside a bench, None elsewhere."""
	try:
		from frappe import __version__ as frappe_version
	except ImportError:
		return None
	return frappe_version


# =============================================================================
# Provenance
# =============================================================================

def provenance(config_hash):
	"""
	Provenance block for summaries and sweep files.

	Args:
		config_hash: 12-hex-digit hash of the run configuration

	Returns:
		dict with config_hash, tool_version, schema and library versions
	"""
	return {
		"config_hash": config_hash,
		"tool_version": __version__,
		"schema": SCHEMA_VERSION,
		"numpy": numpy.__version__,
		"scipy": scipy.__version__,
	}


def get_version_info():
	"""
	Get version information for debugging.

	Returns:
		dict with tool, frappe, python, numpy and scipy versions
	"""
	return {
		"tool_version": __version__,
		"frappe_version": get_frappe_version(),
		"python": platform.python_version(),
		"numpy": numpy.__version__,
		"scipy": scipy.__version__,
	}
