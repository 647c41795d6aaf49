"""Typed errors shared across the library.

The CLI maps ConfigError to exit code 2 and NumericalError to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid configuration, input file, or argument combination."""


class NumericalError(RuntimeError):
    """Numerical breakdown: failed factorization, non-finite state, or collapse."""


class DegenerateWeightsError(NumericalError):
    """Mixture weights lost all mass (all -inf) or became NaN."""
