"""Warped structured kernel interpolation (warpSKI) for Gaussian processes."""

import json

from ._core import (
    ConfigError,
    DimensionError,
    DomainError,
    Error,
    IoError,
    Kernel,
    Model,
    Warp1D,
    approx_nlml,
    cg_solve,
    exact_nlml,
    fit,
    interpolation_matrix,
    kron_matvec,
    phase_from_events,
    sample_prior,
    separate,
    slq_logdet,
    toeplitz_matvec,
    validate,
)
from . import _core

__all__ = [
    "ConfigError", "DimensionError", "DomainError", "Error", "IoError", "Kernel", "Model", "Warp1D",
    "approx_nlml", "cg_solve", "exact_nlml", "fit", "interpolation_matrix", "kron_matvec", "model",
    "phase_from_events", "run_experiment", "sample_prior", "separate", "slq_logdet", "toeplitz_matvec",
    "two_source_config", "validate",
]


def model(spec):
    """Build a Model from a dict (or JSON text) in the config-file format."""
    if not isinstance(spec, str):
        spec = json.dumps(spec)
    return Model.from_json(spec)


def run_experiment(kind, config, out=""):
    """Run numeric2d, separation1d or sweep; returns {"metrics", "labels", "fit"}."""
    if not isinstance(config, str):
        config = json.dumps(config)
    report = _core.run_experiment(kind, config, out)
    report["fit"] = json.loads(report["fit"]) if report["fit"] else None
    return report


def two_source_config(n=20000, sample_rate=1000.0):
    return json.loads(_core.two_source_config(n, sample_rate))
