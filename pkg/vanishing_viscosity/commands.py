# Copyright (c) 2026, Vanishing Viscosity and Contributors
# License: MIT

"""
Command line for the study harness.

Exposed as the `vv-study` console script and, inside a bench, as the
`bench vanishing-viscosity ...` command group. Errors from the numerical core are
printed as one JSON object and mapped to exit codes: 2 for configuration errors,
3 for numerical failures.
"""

import functools
import json
import logging
import sys

import click

from vanishing_viscosity.vanishing_viscosity.exceptions import (
	ConfigError,
	NumericalGateError,
	VanishingViscosityError,
)
from vanishing_viscosity.vanishing_viscosity.harness import (
	cmd_compat_check,
	cmd_corrector_study,
	cmd_run,
	cmd_selftest,
	cmd_sweep,
	load_config,
)

logger = logging.getLogger(__name__)


def _configure_logging(verbose):
	logging.basicConfig(
		level=logging.DEBUG if verbose else logging.WARNING,
		format="%(asctime)s %(levelname)s %(name)s: %(message)s",
		force=True,
	)


def _error_payload(exc):
	return {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}


def handle_errors(func):
	"""Turn VanishingViscosityError into the error JSON on stdout and its exit code."""

	@functools.wraps(func)
	def wrapper(*args, **kwargs):
		try:
			return func(*args, **kwargs)
		except VanishingViscosityError as exc:
			click.echo(json.dumps(_error_payload(exc), sort_keys=True))
			sys.exit(exc.exit_code)

	return wrapper


def _parse_nu_list(value):
	if value is None:
		return None
	try:
		return [float(part) for part in value.split(",") if part.strip()]
	except ValueError:
		raise ConfigError(f"--nu-list must be comma-separated numbers, got {value!r}")


def config_options(func):
	"""--config plus the flags that override its keys."""
	options = (
		click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON RunConfig file."),
		click.option("--nu", type=float, help="Viscosity for a single run."),
		click.option("--a", "a", type=float, help="Tangential background speed a."),
		click.option("--out", "output_dir", type=click.Path(file_okay=False), help="Output directory."),
		click.option("--nu-list", "nu_list", help="Comma-separated viscosities, e.g. 2e-2,1e-2,5e-3."),
		click.option("--t-final", "t_final", type=float, help="Final time."),
		click.option("--dt", type=float, help="Fixed time step; default picks one from the CFL number."),
		click.option("--workers", type=int, help="Worker processes for sweeps."),
	)
	for option in reversed(options):
		func = option(func)
	return func


def _load(config_path, nu, a, output_dir, nu_list, t_final, dt, workers):
	overrides = {
		"nu": nu,
		"a": a,
		"output_dir": output_dir,
		"nu_list": _parse_nu_list(nu_list),
		"t_final": t_final,
		"dt": dt,
		"workers": workers,
	}
	return load_config(config_path, overrides)


def _echo_outcome(outcome, keys=()):
	payload = {"status": "ok", "artifacts": [str(path) for path in outcome.paths]}
	payload.update({key: outcome.summary.get(key) for key in keys})
	click.echo(json.dumps(payload, sort_keys=True, default=str))


# =============================================================================
# Commands
# =============================================================================

@click.group("vanishing-viscosity")
@click.option("--verbose", is_flag=True, help="Log at DEBUG level.")
def cli(verbose):
	"""Numerical verification of the vanishing viscosity limit with inflow and outflow."""
	_configure_logging(verbose)


@cli.command("run")
@config_options
@handle_errors
def run(**options):
	"""Euler and Navier-Stokes runs at one viscosity with full diagnostics."""
	outcome = cmd_run(_load(**options))
	_echo_outcome(outcome, ("sup_error", "gronwall_C", "budget_max_residual"))


@cli.command("sweep")
@config_options
@handle_errors
def sweep(**options):
	"""Runs over --nu-list and the log-log rate fit of the sup error."""
	outcome = cmd_sweep(_load(**options))
	_echo_outcome(outcome, ("rate", "gronwall_spread"))


@cli.command("corrector-study")
@config_options
@handle_errors
def corrector_study(**options):
	"""Scaling of the corrector norms with ν for an analytic outflow trace."""
	outcome = cmd_corrector_study(_load(**options))
	_echo_outcome(outcome, ("max_key_cancellation_ratio", "max_pure_layer_sup_error"))


@cli.command("compat-check")
@config_options
@handle_errors
def compat_check(**options):
	"""Inflow compatibility residuals of the configured initial data."""
	outcome = cmd_compat_check(_load(**options))
	_echo_outcome(outcome, ("cond_minus1_residual", "cond_0_residual", "poisson_residual"))


@cli.command("selftest")
@handle_errors
def selftest():
	"""Manufactured solutions, projection, budget algebra and compatibility oracles."""
	outcome = cmd_selftest()
	for check in outcome.summary["checks"]:
		status = "PASS" if check["passed"] else "FAIL"
		click.echo(f"{check['name']:<22} {status:<5} {check['seconds']:8.2f}s  {check['detail']}")
	if not outcome.passed:
		failed = [check["name"] for check in outcome.summary["checks"] if not check["passed"]]
		raise NumericalGateError(f"selftest failed: {', '.join(failed)}")


def main():
	cli(prog_name="vv-study")


# bench picks up click commands from here
commands = [cli]
