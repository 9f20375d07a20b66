"""Finite-dimensional W*-dynamical systems: GNS representations, conditional
expectations, relatively independent joinings, the basic construction, and
machine-checked relative mixing/ergodicity predicates."""

__version__ = "0.1.0"

from .errors import ConfigError, ConsistencyError, InputError, TraceRequiredError

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "InputError",
    "TraceRequiredError",
    "__version__",
]
