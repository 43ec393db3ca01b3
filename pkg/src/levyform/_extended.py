"""Extended-real scalar arithmetic.

Every derived quantity in the package (growth quantities, rate values,
synthesized constants) lives in [0, +inf] and +inf is a legal value that must
propagate through sums, products and comparisons without turning into NaN.
The only convention beyond IEEE is the measure-theoretic product 0 * inf = 0,
which is what the synthesizer formulas require (a vanishing region integral
kills its term even when the rate factor is infinite).
"""

from __future__ import annotations

import math

INF = math.inf


def ext_mul(*factors: float) -> float:
    """Product over [0, inf] with the convention 0 * inf = 0.

    Raises ValueError on negative factors or NaN: quantities fed to this helper
    are nonnegative by construction, so either indicates an upstream bug.
    """
    out = 1.0
    for a in factors:
        if math.isnan(a) or a < 0.0:
            raise ValueError(f"ext_mul expects values in [0, inf], got {a!r}")
        if a == 0.0:
            return 0.0
    for a in factors:
        out *= a
        if math.isinf(out):
            return INF
    return out


def ext_add(*terms: float) -> float:
    """Sum over [0, inf]."""
    out = 0.0
    for a in terms:
        if math.isnan(a) or a < 0.0:
            raise ValueError(f"ext_add expects values in [0, inf], got {a!r}")
        out += a
    return out


def log_ext(x: float) -> float:
    """log on [0, inf] with log(0) = -inf, log(inf) = inf."""
    if math.isnan(x) or x < 0.0:
        raise ValueError(f"log_ext expects a value in [0, inf], got {x!r}")
    if x == 0.0:
        return -INF
    if math.isinf(x):
        return INF
    return math.log(x)


def exp_ext(a: float) -> float:
    """exp on [-inf, inf] mapping overflow to +inf and -inf to 0."""
    if math.isnan(a):
        raise ValueError("exp_ext got NaN")
    if a == -INF:
        return 0.0
    if a >= 709.0:
        return INF
    return math.exp(a)
