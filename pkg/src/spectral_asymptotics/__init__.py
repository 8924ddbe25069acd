"""Heat-trace asymptotics, Tauberian checks and ideal diagnostics for model spectra."""

from ._backend import backend_name
from .errors import (
    BudgetError,
    ConfigError,
    DivergenceError,
    DomainError,
    FitError,
    SpectralError,
    UnsupportedOrderError,
    UsageError,
)
from .heattrace import TraceValue, heat_trace, power_sum, trace_norm_power, trace_power
from .rvfun import LogMode, RVSpec, gamma, lambert_w0, rv_eval
from .spectrum import Spectrum, build_spectrum, parse_descriptor

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "ConfigError",
    "DivergenceError",
    "DomainError",
    "FitError",
    "LogMode",
    "RVSpec",
    "SpectralError",
    "Spectrum",
    "TraceValue",
    "UnsupportedOrderError",
    "UsageError",
    "backend_name",
    "build_spectrum",
    "gamma",
    "heat_trace",
    "lambert_w0",
    "parse_descriptor",
    "power_sum",
    "rv_eval",
    "trace_norm_power",
    "trace_power",
]
