"""Python bindings for the fiq functional inequality toolkit."""

import json

from . import _core
from ._core import ConfigError, Error

__all__ = ["ConfigError", "Error", "version", "run", "resolve_config", "canonical_measure",
           "spectral_constant", "cauchy_weighted_constant"]


def version():
    return _core.version()


def run(command, **config):
    """Runs a tool command; returns (exit code, printed report). Option names use underscores."""
    return _core.run(command, json.dumps(config))


def resolve_config(command, **config):
    return json.loads(_core.resolve_config(command, json.dumps(config)))


def canonical_measure(spec):
    return _core.canonical_measure(spec)


def spectral_constant(measure, weight="unit", cells=4096):
    return json.loads(_core.spectral_constant(measure, weight, cells))


def cauchy_weighted_constant(alpha, d=1):
    return json.loads(_core.cauchy_weighted_constant(alpha, d))
