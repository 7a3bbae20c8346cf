"""Data-driven density-function controller synthesis.

Configurations, controllers and reports are plain dicts with the same JSON schema the
``densyn`` command-line tool reads and writes.
"""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    GuardViolation,
    Snapshots,
    StageError,
    basis_exponents,
    basis_size,
    divergence_estimate,
    drift_generator,
    eval_basis,
    preset_names,
)

__all__ = [
    "ConfigError",
    "GuardViolation",
    "Snapshots",
    "StageError",
    "basis_exponents",
    "basis_size",
    "collect",
    "divergence_estimate",
    "drift_generator",
    "eval_basis",
    "eval_control",
    "preset",
    "preset_names",
    "simulate",
    "solve_sdp",
    "synthesize",
    "validate",
]


def _dump(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def preset(name):
    """Shipped configuration for one of ``preset_names()``."""
    return _json.loads(_core.preset_json(name))


def normalize_config(config):
    """Validates a configuration and fills derived fields."""
    return _json.loads(_core.normalize_config_json(_dump(config)))


def collect(config):
    """Simulates the configured benchmark once per input label; returns a list of Snapshots."""
    return _core.collect(_dump(config))


def synthesize(config, snapshots=None):
    """Runs fit, SOS and SDP stages. Returns controller, SDP summary and certificate check."""
    if snapshots is None:
        snapshots = collect(config)
    return _json.loads(_core.synthesize_json(_dump(config), snapshots))


def eval_control(controller, x):
    return _core.eval_control(_dump(controller), x)


def validate(config, controller=None, open_loop=False):
    """Monte-Carlo closed-loop validation (or u = 0 when open_loop is set)."""
    if controller is None and not open_loop:
        raise ValueError("validate needs a controller unless open_loop=True")
    return _json.loads(_core.validate_json(_dump(config), _dump(controller or {}), open_loop))


def simulate(system, x0, controller=None, dt=0.01, t_final=30.0):
    """One rollout. Returns (times, states, status) with states of shape (steps, n)."""
    return _core.simulate(system, "" if controller is None else _dump(controller), x0, dt, t_final)


def solve_sdp(problem):
    """Solves a standard-form SDP given in the library's JSON schema."""
    return _json.loads(_core.solve_sdp_json(_dump(problem)))
