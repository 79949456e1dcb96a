"""Robust factor profiled screening (Python bindings)."""

from ._core import (
    RfpsError,
    bisquare_psi,
    bisquare_rho,
    fit_factor_model,
    generate,
    median,
    minimal_model_size,
    mm_estimator,
    mscale,
    qn_scale,
    screen,
    select,
)

__all__ = [
    "RfpsError",
    "bisquare_psi",
    "bisquare_rho",
    "fit_factor_model",
    "generate",
    "median",
    "minimal_model_size",
    "mm_estimator",
    "mscale",
    "qn_scale",
    "screen",
    "select",
]
