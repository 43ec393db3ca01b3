"""Exception hierarchy.

The CLI maps these to exit codes: HypothesisError -> 2 (a theorem's hypothesis
is not met by the scenario), PrecisionError -> 3 (an estimator could not reach
its precision target within budget; the partial estimate rides along), and
ConfigError -> 4 (bad scenario document / flags).  Everything else is a bug.
"""

from __future__ import annotations


class LevyformError(Exception):
    """Base class for all package errors."""


class ConfigError(LevyformError):
    """Malformed or inconsistent scenario configuration."""


class HypothesisError(LevyformError):
    """A theorem hypothesis is violated (wrong kernel range, divergent moment, ...)."""


class PrecisionError(LevyformError):
    """An estimate failed to reach its precision target.

    Estimator paths attach the partial estimate and its error bar so callers
    can inspect how far off the run was; pure data-sufficiency failures (too
    few points for a fit, failed residual checks) carry none.
    """

    def __init__(self, message: str, value: float = float("nan"),
                 stderr: float = float("nan")):
        if value == value or stderr == stderr:  # either is non-NaN
            message = f"{message} (partial estimate {value:.6g} +- {stderr:.2g})"
        super().__init__(message)
        self.value = value
        self.stderr = stderr


class DivergenceError(LevyformError):
    """A defining integral diverges (non-normalizable measure, infinite lambda)."""


class RegimeError(LevyformError):
    """A quantity was requested outside the regime the model can evaluate.

    Raised e.g. when growth quantities are needed at radii beyond float range
    but the model carries no asymptotic log-tail form.
    """
