"""Test-function families, inequality residuals, and falsification probes.

This module turns the quadrature engine and the growth-quantity tables into
numerical *evidence*: it builds the standard families of test functions
(ramps, smooth cutoffs, exponential-weight ramps, band truncations), checks
super- and weak-Poincare residuals for explicit rate candidates, verifies the
two splitting inequalities and the truncation energy bounds behind the
synthesis theorems, and runs falsification sweeps (Rayleigh-quotient decay,
sharpness probes) that try to disprove an inequality rather than certify one.

Every check returns a :class:`ResidualReport` whose verdict accounts for the
propagated quadrature error bars; sweeps that fail to find a violation report
``"inconclusive"`` rather than claiming the candidate is sharp.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from ._extended import exp_ext
from .errors import ConfigError, HypothesisError, PrecisionError
from .measure_kernel import sawtooth_potential
from .perturbation_calculus import Context, RateFunction
from .quadrature_engine import (
    TestFunction,
    _far_values,
    _hull,
    _muV_signed_mean,
    energy_V,
    log_energy_V,
    log_muV_moment,
    log_var_muV,
    muV_moment,
    piecewise_linear,
    var_muV,
)

__all__ = [
    "DisproofSweep",
    "FamilySpec",
    "ProbeResult",
    "ResidualReport",
    "lemma_split_check",
    "log_rayleigh",
    "make_family",
    "poincare_disproof_sweep",
    "rayleigh",
    "sharpness_probe",
    "super_residual",
    "truncate",
    "truncation_slack",
    "truncation_sum_check",
    "weak_residual",
]

# Below this log-density floor the direct quadrature paths lose the integrand
# to underflow, so the engine's log-domain paths are used instead.
_DIRECT_LOG_FLOOR = -80.0

# Relative error-bar budgets of the two engine paths, estimated from the
# pinned convergence studies of the quadrature engine's own test suite.
_DIRECT_BAR = 1e-5
_LOG_BAR = 5e-3


# ---------------------------------------------------------------------------
# test-function families
# ---------------------------------------------------------------------------


@dataclass
class FamilySpec:
    """Parameters selecting one member of a named test-function family.

    ``family`` is one of ``"ramp"``, ``"cutoff-l"``, ``"cutoff-g"``,
    ``"sawtooth-exp"``, ``"truncation"``.  Only the fields relevant to the
    chosen family are read; :func:`make_family` stores the constructed
    function back into ``realized``.
    """

    family: str
    n: int = 1
    H: float = math.nan
    kappa: float = math.nan
    L: float = math.nan
    delta: float = math.nan
    i: int = 0
    base: Optional[TestFunction] = None
    realized: Optional[TestFunction] = None


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """Cubic smoothstep 3t^2 - 2t^3 clipped to [0, 1]; max slope 3/2."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _require_n(spec: FamilySpec) -> int:
    n = int(spec.n)
    if n < 1:
        raise ConfigError(f"family {spec.family!r} needs n >= 1, got {spec.n}")
    return n


def _build_ramp(spec: FamilySpec) -> TestFunction:
    n = float(_require_n(spec))
    f = piecewise_linear([-2.0 * n, -n, n, 2.0 * n], [1.0, 0.0, 0.0, 1.0])
    return TestFunction(
        fn=f.fn, support_radius=math.inf, lipschitz=1.0 / n, sup_norm=1.0,
        breakpoints=f.breakpoints, settle_radius=2.0 * n,
        label=f"ramp-{int(n)}",
    )


def _build_cutoff_l(spec: FamilySpec) -> TestFunction:
    n = float(_require_n(spec))

    def fn(x):
        r = np.abs(np.asarray(x, dtype=float))
        return _smoothstep(r - (n - 1.0)) * (1.0 - _smoothstep(r - (n + 1.0)))

    bps = (-(n + 2.0), -(n + 1.0), -n, -(n - 1.0),
           n - 1.0, n, n + 1.0, n + 2.0)
    return TestFunction(fn=fn, support_radius=n + 2.0, lipschitz=1.5,
                        sup_norm=1.0, breakpoints=bps,
                        label=f"cutoff-l-{int(n)}")


def _build_cutoff_g(spec: FamilySpec) -> TestFunction:
    n = float(_require_n(spec))

    def fn(x):
        r = np.abs(np.asarray(x, dtype=float))
        return 1.0 - _smoothstep(r - n)

    bps = (-(n + 1.0), -n, n, n + 1.0)
    return TestFunction(fn=fn, support_radius=n + 1.0, lipschitz=1.5,
                        sup_norm=1.0, breakpoints=bps,
                        label=f"cutoff-g-{int(n)}")


def _check_sawtooth_params(H: float, kappa: float, L: float) -> None:
    if not H > 4.0:
        raise ConfigError(f"sawtooth-exp needs H > 4, got H = {H}")
    if not kappa > 1.0:
        raise ConfigError(f"sawtooth-exp needs kappa > 1, got kappa = {kappa}")
    bound = kappa * H ** kappa / (H - 2.0)
    if not L > bound:
        raise ConfigError(
            f"sawtooth-exp needs L > kappa*H^kappa/(H-2) = {bound:.6g}, "
            f"got L = {L}"
        )


def _build_sawtooth_exp(spec: FamilySpec) -> TestFunction:
    n = _require_n(spec)
    H, kappa, L = float(spec.H), float(spec.kappa), float(spec.L)
    _check_sawtooth_params(H, kappa, L)
    pot = sawtooth_potential(H, kappa, L)
    a = H * n + 1.0
    b = H * (n + 1.0) - 1.0
    ys = np.linspace(a, b, 40001)
    log_w = ys ** kappa - np.asarray(pot(ys), dtype=float)
    w = np.exp(log_w - float(np.max(log_w)))
    cdf = np.concatenate(
        ([0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(ys)))
    )
    cdf /= cdf[-1]

    def fn(x):
        return np.interp(np.asarray(x, dtype=float), ys, cdf)

    return TestFunction(
        fn=fn, support_radius=math.inf, sup_norm=1.0, breakpoints=(a, b),
        settle_radius=b,
        label=f"sawtooth-exp-{n}-H{H:g}-k{kappa:g}-L{L:g}",
    )


def _level_crossings(base: TestFunction,
                     levels: Sequence[float]) -> Tuple[float, ...]:
    """Linearly interpolated x where ``base`` crosses each level."""
    xs = np.asarray(base.breakpoints, dtype=float)
    if xs.size < 2:
        return ()
    vals = np.asarray(base(xs), dtype=float)
    out = []
    for lev in levels:
        d0 = vals[:-1] - lev
        d1 = vals[1:] - lev
        for j in np.nonzero(d0 * d1 < 0.0)[0]:
            t = d0[j] / (d0[j] - d1[j])
            out.append(float(xs[j] + t * (xs[j + 1] - xs[j])))
    return tuple(out)


def _band_truncation(base: TestFunction, delta: float, i: int,
                     label: Optional[str] = None) -> TestFunction:
    lo = delta ** (i / 2.0)
    hi = delta ** ((i + 1) / 2.0)

    def fn(x, _b=base, _lo=lo, _cap=hi - lo):
        return np.minimum(
            np.maximum(np.asarray(_b(x), dtype=float) - _lo, 0.0), _cap
        )

    sup = None
    if base.sup_norm is not None:
        sup = float(min(hi - lo, max(base.sup_norm - lo, 0.0)))
    bps = tuple(base.breakpoints) + _level_crossings(base, (lo, hi))
    return TestFunction(
        fn=fn, support_radius=base.support_radius, lipschitz=base.lipschitz,
        sup_norm=sup, breakpoints=bps, settle_radius=base.settle_radius,
        label=label or f"trunc[{base.label}]-d{delta:g}-i{i}",
    )


def _build_truncation(spec: FamilySpec) -> TestFunction:
    if spec.base is None:
        raise ConfigError("truncation family needs a base test function")
    delta = float(spec.delta)
    if not delta > 1.0:
        raise ConfigError(f"truncation family needs delta > 1, got {spec.delta}")
    i = int(spec.i)
    if i < 0:
        raise ConfigError(f"truncation family needs i >= 0, got {spec.i}")
    return _band_truncation(spec.base, delta, i)


_FAMILIES: Dict[str, Callable[[FamilySpec], TestFunction]] = {
    "ramp": _build_ramp,
    "cutoff-l": _build_cutoff_l,
    "cutoff-g": _build_cutoff_g,
    "sawtooth-exp": _build_sawtooth_exp,
    "truncation": _build_truncation,
}


def make_family(spec: FamilySpec) -> TestFunction:
    """Construct the test function selected by ``spec`` and record it.

    Families: ``ramp`` (0 on |x| <= n, 1 on |x| >= 2n, slope 1/n),
    ``cutoff-l`` (smooth bump equal to 1 on n <= |x| <= n+1, supported in
    n-1 < |x| < n+2), ``cutoff-g`` (smooth plateau equal to 1 on |x| <= n,
    supported in |x| < n+1), ``sawtooth-exp`` (normalized exponential-weight
    ramp rising on [Hn+1, H(n+1)-1]), and ``truncation`` (band truncation of
    ``spec.base`` between delta^{i/2} and delta^{(i+1)/2}).
    """
    builder = _FAMILIES.get(spec.family)
    if builder is None:
        raise ConfigError(
            f"unknown family {spec.family!r}; expected one of "
            f"{sorted(_FAMILIES)}"
        )
    f = builder(spec)
    spec.realized = f
    return f


# ---------------------------------------------------------------------------
# band-truncation arithmetic and the layer-cake lower bound
# ---------------------------------------------------------------------------


def truncate(value, delta: float, i: int):
    """Band truncation (value - delta^{i/2})^+ wedge (delta^{(i+1)/2} - delta^{i/2}).

    Accepts scalars or arrays; ``delta`` must exceed 1 and ``i`` be a
    nonnegative integer.
    """
    if not delta > 1.0:
        raise ConfigError(f"delta must exceed 1, got {delta}")
    if int(i) < 0:
        raise ConfigError(f"band index must be nonnegative, got {i}")
    lo = delta ** (i / 2.0)
    cap = delta ** ((i + 1) / 2.0) - lo
    out = np.minimum(np.maximum(np.asarray(value, dtype=float) - lo, 0.0), cap)
    if np.ndim(value) == 0:
        return float(out)
    return out


def truncation_slack(values, delta: float, k: int):
    """Elementwise slack of the layer-cake lower bound at level ``k``.

    Returns ``sum_{i >= k} truncate(values, delta, i)^2
    - c(delta) * ((values - delta^{k/2})^+)^2`` with
    ``c(delta) = ((sqrt(delta) - 1)/delta)^2``; nonnegative for every
    nonnegative input.  The sum is finite because bands above the maximum
    value vanish identically.
    """
    if not delta > 1.0:
        raise ConfigError(f"delta must exceed 1, got {delta}")
    if int(k) < 0:
        raise ConfigError(f"level index must be nonnegative, got {k}")
    vals = np.asarray(values, dtype=float)
    c = ((math.sqrt(delta) - 1.0) / delta) ** 2
    head = np.maximum(vals - delta ** (k / 2.0), 0.0)
    total = np.zeros_like(vals)
    vmax = float(np.max(vals)) if vals.size else 0.0
    i = int(k)
    while delta ** (i / 2.0) < vmax:
        band = truncate(vals, delta, i)
        total += band * band
        i += 1
    return total - c * head * head


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResidualReport:
    """Outcome of one inequality check ``left <= right``.

    ``residual = right - left``; the verdict is ``"pass"`` iff the residual
    is at least ``-tolerance``, where the tolerance combines a relative
    allowance with the propagated quadrature error bars.  ``vacuous`` marks
    checks whose right-hand side is infinite (trivially true).
    """

    tag: str
    r: float
    rate_value: float
    left: float
    right: float
    residual: float
    tolerance: float
    verdict: str
    label: str = ""
    vacuous: bool = False


def _report(tag: str, r: float, rate_value: float, left: float, right: float,
            bar: float, *, label: str = "", vacuous: bool = False,
            rel_tol: float = 1e-3) -> ResidualReport:
    if vacuous or math.isinf(right):
        return ResidualReport(tag, float(r), float(rate_value), float(left),
                              math.inf, math.inf, math.inf, "pass", label,
                              True)
    residual = right - left
    tol = rel_tol * max(abs(left), abs(right)) + bar + 1e-12
    verdict = "pass" if residual >= -tol else "fail"
    return ResidualReport(tag, float(r), float(rate_value), float(left),
                          float(right), float(residual), float(tol), verdict,
                          label, False)


# ---------------------------------------------------------------------------
# engine plumbing: integral bundles with per-context caching
# ---------------------------------------------------------------------------

_ONE = TestFunction(fn=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                    sup_norm=1.0, lipschitz=0.0, settle_radius=0.0,
                    label="one")


def _lab_cache(ctx: Context) -> dict:
    return ctx.__dict__.setdefault("_lab_cache", {})


def _prefers_log(ctx: Context, f: TestFunction) -> bool:
    """True when the weighted density underflows on the function's hull."""
    model = ctx.model
    if model.log_u is None:
        raise HypothesisError(
            "residual checks need a density model (abstract models carry "
            "no quadrature data)"
        )
    lo, hi = _hull(f)
    reach = max(abs(lo), abs(hi), 1.0)
    probes = np.array([0.0, 0.5 * reach, reach])
    lw = (model.log_normalizer
          + np.asarray(model.log_u(probes), dtype=float)
          + np.asarray(ctx.potential(probes), dtype=float))
    return bool(np.min(lw) < _DIRECT_LOG_FLOOR)


def _energy_only(ctx: Context, f: TestFunction) -> float:
    if f.sup_norm == 0.0:
        return 0.0
    key = ("energy", id(f), f.label, f.sup_norm, f.breakpoints)
    cache = _lab_cache(ctx)
    if key not in cache:
        if _prefers_log(ctx, f):
            val = exp_ext(log_energy_V(ctx.kernel, ctx.model, ctx.potential, f))
        else:
            val = energy_V(ctx.kernel, ctx.model, ctx.potential, f)
        cache[key] = float(val)
    return cache[key]


def _moment(ctx: Context, f: TestFunction, p: int) -> float:
    if f.sup_norm == 0.0:
        return 0.0
    key = ("moment", p, id(f), f.label, f.sup_norm, f.breakpoints)
    cache = _lab_cache(ctx)
    if key not in cache:
        if _prefers_log(ctx, f):
            val = exp_ext(log_muV_moment(ctx.model, ctx.potential, f, p))
        else:
            val = muV_moment(ctx.model, ctx.potential, f, p)
        cache[key] = float(val)
    return cache[key]


def _bar_rel(ctx: Context, f: TestFunction) -> float:
    return _LOG_BAR if _prefers_log(ctx, f) else _DIRECT_BAR


def _super_parts(ctx: Context,
                 f: TestFunction) -> Tuple[float, float, float, float]:
    """(E_V(f), mu_V(f^2), mu_V(|f|), relative error bar)."""
    return (_energy_only(ctx, f), _moment(ctx, f, 2), _moment(ctx, f, 1),
            _bar_rel(ctx, f))


def _sign_definite(f: TestFunction) -> Tuple[bool, float]:
    """(sign-definite?, sign) sampled over the hull and the settled values."""
    lo, hi = _hull(f)
    xs = np.linspace(lo - 1.0, hi + 1.0, 2049)
    vals = np.asarray(f(xs), dtype=float)
    far = _far_values(f)
    if far is not None:
        vals = np.concatenate([vals, np.asarray(far, dtype=float)])
    pos = bool(np.any(vals > 1e-12))
    neg = bool(np.any(vals < -1e-12))
    return (not (pos and neg), -1.0 if neg else 1.0)


def _recentred_sup(f: TestFunction, mean: float) -> float:
    """sup |f - mean| over the hull grid and the settled far values."""
    lo, hi = _hull(f)
    xs = np.linspace(lo - 1.0, hi + 1.0, 4097)
    cand = float(np.max(np.abs(np.asarray(f(xs), dtype=float) - mean)))
    far = _far_values(f)
    if far is not None:
        cand = max(cand, abs(far[0] - mean), abs(far[1] - mean))
    return cand


def _weak_parts(ctx: Context,
                f: TestFunction) -> Tuple[float, float, float, float]:
    """(E_V(f), var_muV(f), sup|f - mean|, relative error bar)."""
    key = ("weak-parts", id(f), f.label)
    cache = _lab_cache(ctx)
    if key not in cache:
        e = _energy_only(ctx, f)
        if _prefers_log(ctx, f):
            definite, sign = _sign_definite(f)
            if not definite:
                raise HypothesisError(
                    "weak residuals on underflowing scenarios need a "
                    "sign-definite test function"
                )
            var = exp_ext(log_var_muV(ctx.model, ctx.potential, f))
            log_z = log_muV_moment(ctx.model, ctx.potential, _ONE, 2)
            mean = sign * exp_ext(
                log_muV_moment(ctx.model, ctx.potential, f, 1) - log_z
            )
            bar = _LOG_BAR
        else:
            var = var_muV(ctx.model, ctx.potential, f)
            z = muV_moment(ctx.model, ctx.potential, _ONE, 2)
            mean = _muV_signed_mean(ctx.model, ctx.potential, f) / z
            bar = _DIRECT_BAR
        cache[key] = (float(e), float(var), _recentred_sup(f, mean), bar)
    return cache[key]


# ---------------------------------------------------------------------------
# residual checks
# ---------------------------------------------------------------------------


def super_residual(ctx: Context, f: TestFunction, r: float,
                   rate_value: float, *, rel_tol: float = 1e-3
                   ) -> ResidualReport:
    """Check ``mu_V(f^2) <= r E_V(f) + rate_value * mu_V(|f|)^2``.

    ``rate_value`` is the candidate rate evaluated at ``r``; a negative
    residual beyond tolerance falsifies the candidate at this ``(r, f)``.
    """
    if not r > 0.0:
        raise ConfigError(f"r must be positive, got {r}")
    if rate_value < 0.0:
        raise ConfigError(f"rate value must be nonnegative, got {rate_value}")
    e, m2, m1, rel_bar = _super_parts(ctx, f)
    left = m2
    right = r * e + rate_value * m1 * m1
    bar = rel_bar * (abs(left) + abs(right))
    return _report("super", r, rate_value, left, right, bar, label=f.label,
                   rel_tol=rel_tol)


def weak_residual(ctx: Context, f: TestFunction, r: float,
                  rate_value: float, *, rel_tol: float = 1e-3
                  ) -> ResidualReport:
    """Check ``var_muV(f) <= rate_value * E_V(f) + r * sup|f - mean|^2``.

    The recentred sup-norm bounds the oscillation of ``f`` around its
    weighted mean, so constants are checked exactly as trivial cases.
    """
    if not r > 0.0:
        raise ConfigError(f"r must be positive, got {r}")
    if rate_value < 0.0:
        raise ConfigError(f"rate value must be nonnegative, got {rate_value}")
    e, var, sup_t, rel_bar = _weak_parts(ctx, f)
    left = var
    right = rate_value * e + r * sup_t * sup_t
    bar = rel_bar * (abs(left) + abs(right))
    return _report("weak", r, rate_value, left, right, bar, label=f.label,
                   rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# Rayleigh quotients and the counterexample sweep
# ---------------------------------------------------------------------------


def log_rayleigh(ctx: Context, f: TestFunction) -> float:
    """log of ``E_V(f) / var_muV(f)``, stable on underflowing scenarios.

    Sign-definite functions go through the fully log-domain path; mixed-sign
    functions fall back to the direct ratio.  A vanishing variance (constant
    ``f``) is rejected.
    """
    lo, hi = _hull(f)
    xs = np.linspace(lo - 1.0, hi + 1.0, 2049)
    vals = np.asarray(f(xs), dtype=float)
    far = _far_values(f)
    if far is not None:
        vals = np.concatenate([vals, np.asarray(far, dtype=float)])
    osc = float(np.max(vals) - np.min(vals))
    if osc <= 1e-12 * max(1.0, float(np.max(np.abs(vals)))):
        raise HypothesisError(
            "variance vanishes; the Rayleigh quotient is undefined for "
            "constant-like functions"
        )
    definite, _ = _sign_definite(f)
    if definite:
        log_var = log_var_muV(ctx.model, ctx.potential, f)
        if log_var == -math.inf:
            raise HypothesisError(
                "variance vanishes; the Rayleigh quotient is undefined for "
                "constant-like functions"
            )
        log_e = log_energy_V(ctx.kernel, ctx.model, ctx.potential, f)
        return float(log_e - log_var)
    var = var_muV(ctx.model, ctx.potential, f)
    if var <= 0.0:
        raise HypothesisError(
            "variance vanishes; the Rayleigh quotient is undefined for "
            "constant-like functions"
        )
    e = energy_V(ctx.kernel, ctx.model, ctx.potential, f)
    if e <= 0.0:
        raise PrecisionError(
            f"energy quadrature returned {e!r} for {f.label!r}"
        )
    return math.log(e) - math.log(var)


def rayleigh(ctx: Context, f: TestFunction) -> float:
    """Rayleigh quotient ``E_V(f) / var_muV(f)``; affine invariant."""
    return exp_ext(log_rayleigh(ctx, f))


@dataclass(frozen=True)
class DisproofSweep:
    """Log-Rayleigh quotients along the exponential-weight ramp family."""

    points: Tuple[Tuple[int, float], ...]
    strictly_decreasing: bool
    slope: Optional[float]


def poincare_disproof_sweep(ctx: Context, H: float, kappa: float, L: float,
                            n_range: Iterable[int], *,
                            max_workers: Optional[int] = None
                            ) -> DisproofSweep:
    """Sweep ``log rayleigh`` over exponential-weight ramps indexed by n.

    A strictly decreasing sequence (negative slope) witnesses Rayleigh
    quotients tending to zero, which is incompatible with any Poincare
    inequality for the scenario.  Requires a one-dimensional reduced kernel
    with stability index in (0, 1) and the sawtooth parameter constraints.
    """
    _check_sawtooth_params(H, kappa, L)
    red = ctx.kernel.reduced
    if red is None or red.m != 1 or not 0.0 < red.alpha < 1.0:
        raise HypothesisError(
            "the disproof sweep needs a one-dimensional reduced kernel with "
            "stability index in (0, 1)"
        )
    ns = [int(v) for v in n_range]

    def one(n: int) -> float:
        f = make_family(FamilySpec(family="sawtooth-exp", n=n, H=H,
                                   kappa=kappa, L=L))
        return log_rayleigh(ctx, f)

    if max_workers is not None and max_workers > 1 and len(ns) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            vals = list(pool.map(one, ns))
    else:
        vals = [one(n) for n in ns]
    points = tuple((n, float(v)) for n, v in zip(ns, vals))
    decreasing = all(q[1] < p[1] for p, q in zip(points, points[1:]))
    slope = float(np.polyfit(ns, vals, 1)[0]) if len(ns) >= 2 else None
    return DisproofSweep(points=points, strictly_decreasing=decreasing,
                         slope=slope)


# ---------------------------------------------------------------------------
# sharpness probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of a sharpness probe sweep.

    ``status`` is ``"violation"`` when some n produced a residual below
    tolerance (the candidate rate is too small for the scenario) and
    ``"inconclusive"`` otherwise -- never "sharpness confirmed", since a
    finite sweep cannot certify an inequality.  ``indeterminate`` lists n
    skipped for precision or schedule reasons.
    """

    status: str
    violation_n: Optional[int]
    reports: Tuple[Tuple[int, ResidualReport], ...]
    indeterminate: Tuple[int, ...] = ()


def sharpness_probe(ctx: Context, candidate_rate: RateFunction,
                    n_range: Iterable[int], *, mode: str = "super",
                    template: Optional[FamilySpec] = None,
                    rel_tol: float = 1e-3) -> ProbeResult:
    """Sweep ramps against a candidate rate, looking for a residual violation.

    For each n the radius is matched to the scenario: in ``super`` mode
    ``r_n = candidate^{-1}(1 / (2 mu_V(rho > n)))``, which caps the
    mean-squared term at half the left side (by Cauchy-Schwarz), so a
    violation isolates a failure of the energy term; in ``weak`` mode
    ``r_n = var / (2 sup|f - mean|^2)`` plays the same role for the
    oscillation term.  Returns the first violating n, or "inconclusive".
    """
    if mode not in ("super", "weak"):
        raise ConfigError(f"mode must be 'super' or 'weak', got {mode!r}")
    reports = []
    indeterminate = []
    for n in (int(v) for v in n_range):
        if template is not None:
            spec = FamilySpec(**{**template.__dict__, "n": n,
                                 "realized": None})
        else:
            spec = FamilySpec(family="ramp", n=n)
        f = make_family(spec)
        try:
            if mode == "super":
                log_level = -math.log(2.0) - ctx.weighted_tail(float(n))
                r_n = candidate_rate.inverse_of_log(log_level)
                if math.isinf(r_n):
                    indeterminate.append(n)
                    continue
                r_n = max(r_n, 1e-300)
                rep = super_residual(ctx, f, r_n,
                                     candidate_rate.value(r_n),
                                     rel_tol=rel_tol)
            else:
                _, var, sup_t, _ = _weak_parts(ctx, f)
                if not var > 0.0 or not sup_t > 0.0:
                    indeterminate.append(n)
                    continue
                r_n = var / (2.0 * sup_t * sup_t)
                rep = weak_residual(ctx, f, r_n,
                                    candidate_rate.value(r_n),
                                    rel_tol=rel_tol)
        except PrecisionError:
            indeterminate.append(n)
            continue
        reports.append((n, rep))
        if rep.verdict == "fail":
            return ProbeResult("violation", n, tuple(reports),
                               tuple(indeterminate))
    return ProbeResult("inconclusive", None, tuple(reports),
                       tuple(indeterminate))


# ---------------------------------------------------------------------------
# splitting-inequality and truncation-energy checks
# ---------------------------------------------------------------------------


def _masked(f: TestFunction, n: float, *, far: bool) -> TestFunction:
    """f restricted to {|x| >= n} (far) or {|x| <= n} (near)."""
    rad = float(n)
    if far:
        def fn(x, _f=f, _r=rad):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) >= _r, np.asarray(_f(x), dtype=float),
                            0.0)
        support = f.support_radius
        settle = max(f.settle_radius if f.settle_radius is not None else 0.0,
                     rad)
    else:
        def fn(x, _f=f, _r=rad):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) <= _r, np.asarray(_f(x), dtype=float),
                            0.0)
        support = min(f.support_radius, rad)
        settle = None
    bps = tuple(sorted(set(tuple(f.breakpoints) + (-rad, rad))))
    return TestFunction(fn=fn, support_radius=support, sup_norm=f.sup_norm,
                        breakpoints=bps, settle_radius=settle,
                        label=f"{f.label}|{'far' if far else 'near'}-{rad:g}")


def lemma_split_check(ctx: Context, f: TestFunction, n: int, k: int,
                      s: float, *, rel_tol: float = 1e-3
                      ) -> Tuple[ResidualReport, ResidualReport]:
    """Verify the far/near splitting bounds behind the synthesis theorems.

    Far side: ``mu_V(f^2 1_{rho >= n}) <= 12 eps E_V(f)
    + 128 lam eps mu_V(f^2) + 96 zeta gamma sup^2``.
    Near side: ``mu_V(f^2 1_{rho <= n}) <= 2 s e^K E_V(f)
    + 16 lam s e^K mu_V(f^2) + 16 s e^Z eta sup^2 + beta(s) e^J mu_V(|f|)^2``.
    Returns ``(far_report, near_report)``; an infinite eps or zeta makes the
    far side vacuous (flagged, trivially passing).
    """
    if not s > 0.0:
        raise ConfigError(f"s must be positive, got {s}")
    if f.sup_norm is None:
        raise HypothesisError("the splitting check needs a declared sup-norm")
    if f.settle_radius is None and not math.isfinite(f.support_radius):
        raise HypothesisError("the splitting check needs a settling function")
    sup2 = f.sup_norm * f.sup_norm
    e, m2, m1, rel_bar = _super_parts(ctx, f)
    far_left = _moment(ctx, _masked(f, n, far=True), 2)
    near_left = _moment(ctx, _masked(f, n, far=False), 2)
    row = ctx.row(n, k, "super")
    lam = row.lam
    if math.isinf(row.eps) or math.isinf(row.zeta):
        far = _report("split-far", s, 0.0, far_left, math.inf, 0.0,
                      label=f.label, vacuous=True, rel_tol=rel_tol)
    else:
        far_right = (12.0 * row.eps * e + 128.0 * lam * row.eps * m2
                     + 96.0 * row.zeta * row.gamma * sup2)
        far_bar = (rel_bar * (abs(far_left) + abs(far_right))
                   + 96.0 * row.zeta * row.gamma_stderr * sup2)
        far = _report("split-far", s, 0.0, far_left, far_right, far_bar,
                      label=f.label, rel_tol=rel_tol)
    e_K = math.exp(row.K)
    e_J = math.exp(row.J)
    e_Z = math.exp(row.Z)
    beta_s = ctx.rate.value(s)
    near_right = (2.0 * s * e_K * e + 16.0 * lam * s * e_K * m2
                  + 16.0 * s * e_Z * row.eta * sup2 + beta_s * e_J * m1 * m1)
    near_bar = (rel_bar * (abs(near_left) + abs(near_right))
                + 16.0 * s * e_Z * row.eta_stderr * sup2)
    near = _report("split-near", s, beta_s, near_left, near_right, near_bar,
                   label=f.label, rel_tol=rel_tol)
    return far, near


def _shift_positive_part(f: TestFunction, c: float) -> TestFunction:
    """(f - c)^+ with breakpoints refined at the crossing level."""
    def fn(x, _f=f, _c=c):
        return np.maximum(np.asarray(_f(x), dtype=float) - _c, 0.0)

    sup = None if f.sup_norm is None else float(max(f.sup_norm - c, 0.0))
    bps = tuple(f.breakpoints) + _level_crossings(f, (c,))
    return TestFunction(fn=fn, support_radius=f.support_radius,
                        lipschitz=f.lipschitz, sup_norm=sup, breakpoints=bps,
                        settle_radius=f.settle_radius,
                        label=f"({f.label}-{c:g})+")


def _capped(f: TestFunction, c: float) -> TestFunction:
    """f wedge c with breakpoints refined at the crossing level."""
    def fn(x, _f=f, _c=c):
        return np.minimum(np.asarray(_f(x), dtype=float), _c)

    sup = None if f.sup_norm is None else float(min(f.sup_norm, c))
    bps = tuple(f.breakpoints) + _level_crossings(f, (c,))
    return TestFunction(fn=fn, support_radius=f.support_radius,
                        lipschitz=f.lipschitz, sup_norm=sup, breakpoints=bps,
                        settle_radius=f.settle_radius,
                        label=f"({f.label}^{c:g})")


def truncation_sum_check(ctx: Context, f: TestFunction, delta: float,
                         j: int, *, rel_tol: float = 1e-3) -> ResidualReport:
    """Verify the truncation energy bounds for a nonnegative function.

    Checks both ``sum_{i >= j} E_V(f_{delta,i}) <= E_V((f - delta^{j/2})^+)``
    and ``E_V((f - delta^{j/2})^+) + E_V(f wedge delta^{j/2}) <= E_V(f)``;
    the report's residual is the smaller of the two slacks.  Bands above the
    sup-norm vanish identically, so the sum is finite.
    """
    if not delta > 1.0:
        raise ConfigError(f"delta must exceed 1, got {delta}")
    if int(j) < 0:
        raise ConfigError(f"level index must be nonnegative, got {j}")
    if f.sup_norm is None:
        raise HypothesisError("the truncation check needs a declared sup-norm")
    lo, hi = _hull(f)
    xs = np.linspace(lo - 1.0, hi + 1.0, 2049)
    if float(np.min(np.asarray(f(xs), dtype=float))) < -1e-9:
        raise HypothesisError("the truncation check needs f >= 0")
    level = delta ** (j / 2.0)
    total = 0.0
    i = int(j)
    while delta ** (i / 2.0) < f.sup_norm:
        total += _energy_only(ctx, _band_truncation(f, delta, i))
        i += 1
    head = _shift_positive_part(f, level)
    e_head = _energy_only(ctx, head)
    e_tail = _energy_only(ctx, _capped(f, level))
    e_full = _energy_only(ctx, f)
    res_sum = e_head - total
    res_split = e_full - (e_head + e_tail)
    rel_bar = _bar_rel(ctx, f)
    bar = rel_bar * (total + e_head + e_tail + e_full)
    scale = max(total, e_head, e_full)
    tol = rel_tol * scale + bar + 1e-12
    residual = min(res_sum, res_split)
    verdict = "pass" if residual >= -tol else "fail"
    return ResidualReport("truncation-sum", float(delta), float(j),
                          float(total), float(e_head), float(residual),
                          float(tol), verdict, f.label, False)
