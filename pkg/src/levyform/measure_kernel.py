"""Reference measures, jump kernels, potentials, and region integrals.

This module owns the measure-theoretic ingredients of a jump-form model:

* :class:`RadialModel` — a probability measure ``mu(dx) = c * u(|x|) dx`` on
  ``R^m`` with a rotationally invariant density, plus exact/asymptotic tail
  evaluation ``mu(rho > t)`` in log domain (``rho`` = distance to the origin).
  Purely atomic toy measures are supported through an exact tail override.
* :class:`JumpKernel` — the symmetric jump density ``q(x, y)``.  When the jump
  measure reduces to a translation-invariant radial power law
  ``q(x,y) mu(dy) = A |x-y|^{-(m+alpha)} 1{|x-y| <= k0} dz`` the closed-form
  :class:`ReducedJump` drives every downstream integral deterministically.
* :class:`Potential` — the perturbation exponent ``V`` with exact ball extrema
  for monotone and sawtooth shapes (grid fallback with declared Lipschitz
  margin otherwise), including evaluation at log-radius scale for balls far
  beyond float range.
* Region integrals ``gamma``/``eta`` (and their tilde variants) measuring how
  much jump mass crosses between an inner ball and a far annulus.  For reduced
  kernels these are semi-analytic one-dimensional quadratures; finite-range
  kernels short-circuit to exact zero; custom kernels fall back to seeded
  Monte Carlo with explicit error bars.

Everything that can underflow is computed in log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ._extended import exp_ext
from ._integrate import (
    QUAD_RADIUS_CAP,
    log_tail_integral_exp,
    quad_pieces,
    substream,
)
from .errors import DivergenceError, HypothesisError, PrecisionError, RegimeError
from .settings import DEFAULT_SETTINGS, QuadratureSettings

__all__ = [
    "RadialModel",
    "ReducedJump",
    "JumpKernel",
    "Potential",
    "RegionEstimate",
    "surface_area",
    "normalize_measure",
    "abstract_model",
    "tail_mass",
    "stable_model",
    "log_weighted_stable_model",
    "exp_power_model",
    "dyadic_model",
    "stable_pair",
    "finite_range_pair",
    "abstract_kernel",
    "lambda_bound",
    "zero_potential",
    "loglog_potential",
    "log1p_potential",
    "power_potential",
    "sawtooth_potential",
    "custom_potential",
    "normalize_potential",
    "log_exp_moment",
    "weighted_tail_log",
    "region_gamma",
    "region_eta",
    "region_tilde_gamma",
    "region_tilde_eta",
]

_LOG_RADIUS_CAP = math.log(QUAD_RADIUS_CAP)


def surface_area(m: int) -> float:
    """Surface measure of the unit sphere in R^m (2 for m=1)."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi ** (m / 2.0) / math.gamma(m / 2.0)


# ---------------------------------------------------------------------------
# Radial reference measures
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class RadialModel:
    """Rotationally invariant probability measure on R^m.

    The measure is ``mu(dx) = c * u(|x|) dx`` where ``u = exp(log_u)`` and the
    normalizer ``c`` is derived once from the full radial integral, so that
    ``tail(0) == 1`` holds exactly.  ``log_tail_exact`` bypasses quadrature
    with a closed form; ``log_tail_asym`` is an asymptotic shape in the
    log-radius variable ``ell = log t`` used (after automatic splicing against
    quadrature at ``asym_switch_radius``) for radii beyond float range.

    Abstract models (``log_u is None``) carry only an exact tail; they cannot
    be sampled or integrated against, which is enough for closed-form toys.
    """

    m: int
    log_u: Optional[Callable[[np.ndarray], np.ndarray]]
    label: str = "mu"
    breakpoints: tuple = ()
    log_tail_exact: Optional[Callable[[float], float]] = None
    log_tail_asym: Optional[Callable[[float], float]] = None
    settings: QuadratureSettings = field(default_factory=lambda: DEFAULT_SETTINGS)
    _log_J0: Optional[float] = field(default=None, repr=False)
    _tail_cache: dict = field(default_factory=dict, repr=False)
    _asym_offset: Optional[float] = field(default=None, repr=False)
    _sampler_cache: Optional[tuple] = field(default=None, repr=False)

    # -- radial integrand helpers ------------------------------------------

    def _log_radial(self, extra: Optional[Callable] = None) -> Callable:
        """Log of the radial line density u(r) r^{m-1} [* exp(extra(r))]."""
        if self.log_u is None:
            raise HypothesisError(
                f"model {self.label!r} is abstract (tail-only); it has no density"
            )
        log_u, m = self.log_u, self.m

        def log_f(r: np.ndarray) -> np.ndarray:
            r = np.asarray(r, dtype=float)
            out = np.asarray(log_u(r), dtype=float)
            if m > 1:
                with np.errstate(divide="ignore"):
                    out = out + (m - 1) * np.log(r)
            if extra is not None:
                out = out + np.asarray(extra(r), dtype=float)
            return out

        return log_f

    def log_radial_integral(self, extra: Optional[Callable] = None, t: float = 0.0,
                            extra_breakpoints: tuple = ()) -> float:
        """log of integral_t^inf u(r) r^{m-1} exp(extra(r)) dr."""
        s = self.settings
        try:
            return log_tail_integral_exp(
                self._log_radial(extra),
                t,
                breakpoints=tuple(self.breakpoints) + tuple(extra_breakpoints),
                refine=max(16, s.refine // 2),
                order=s.order,
                stop_nats=s.tail_stop_nats,
                consecutive=s.tail_consecutive,
            )
        except RuntimeError as exc:
            raise DivergenceError(
                f"radial integral for {self.label!r} did not converge over an "
                f"astronomically large range; treating as divergent ({exc})"
            ) from None

    @property
    def log_J0(self) -> float:
        """Log of the unnormalized radial mass integral."""
        if self._log_J0 is None:
            val = self.log_radial_integral()
            if not math.isfinite(val):
                raise DivergenceError(
                    f"model {self.label!r} is not normalizable (radial integral = "
                    f"{math.exp(val) if val < 0 else math.inf})"
                )
            self._log_J0 = val
        return self._log_J0

    @property
    def log_normalizer(self) -> float:
        """log c with density c * u(|x|)."""
        return -self.log_J0 - math.log(surface_area(self.m))

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Log density of mu at positions x (shape (..., m) or scalar radii for m=1)."""
        r = _radii(x, self.m)
        return self.log_normalizer + np.asarray(self.log_u(r), dtype=float)

    # -- tails --------------------------------------------------------------

    def log_tail(self, t: float) -> float:
        """log mu(rho > t), exact at t <= 0 (= 0.0)."""
        t = float(t)
        if t <= 0.0:
            return 0.0
        if self.log_tail_exact is not None:
            return float(self.log_tail_exact(t))
        if t >= self.settings.asym_switch_radius:
            return self._asym_log_tail(math.log(t))
        hit = self._tail_cache.get(t)
        if hit is None:
            hit = self.log_radial_integral(t=t) - self.log_J0
            self._tail_cache[t] = hit
        return hit

    def log_tail_ell(self, ell: float) -> float:
        """log mu(rho > e^ell); works for ell far beyond log(float max)."""
        ell = float(ell)
        if ell <= math.log(self.settings.asym_switch_radius):
            return self.log_tail(math.exp(ell))
        return self._asym_log_tail(ell)

    def log_tail_fast(self, t: float) -> float:
        """log mu(rho > t) from the tabulated cumulative tail.

        Exact-form, asymptotic, and out-of-table radii delegate to log_tail;
        in between, interpolate the dense radial table linearly in
        (log t, log tail).  Interpolation error is a few 1e-5 nats, suitable
        wherever a result is reported as "certified" rather than "exact".
        """
        t = float(t)
        if (t <= 0.0 or self.log_tail_exact is not None or self.log_u is None
                or t >= self.settings.asym_switch_radius):
            return self.log_tail(t)
        if self._sampler_cache is None:
            self._sampler_cache = self._build_radial_table()
        grid, log_tail_grid = self._sampler_cache
        if t <= grid[1]:
            # essentially full mass; linear in t toward log-tail 0 at t = 0
            return float(log_tail_grid[1]) * (t / grid[1])
        if t >= grid[-1]:
            return self.log_tail(t)
        idx = int(np.searchsorted(grid, t))
        lo, hi = grid[idx - 1], grid[idx]
        frac = (math.log(t) - math.log(lo)) / (math.log(hi) - math.log(lo))
        return float((1.0 - frac) * log_tail_grid[idx - 1] + frac * log_tail_grid[idx])

    def log_tail_ell_fast(self, ell: float) -> float:
        """log mu(rho > e^ell), table-backed below the asymptotic switch."""
        ell = float(ell)
        if ell <= math.log(self.settings.asym_switch_radius):
            return self.log_tail_fast(math.exp(ell))
        return self._asym_log_tail(ell)

    def _asym_log_tail(self, ell: float) -> float:
        if self.log_tail_exact is not None:
            # Exact forms are assumed valid at all radii; evaluate via exp when
            # representable, else the exact form must itself accept huge input.
            if ell < _LOG_RADIUS_CAP:
                return float(self.log_tail_exact(math.exp(ell)))
            raise RegimeError(
                f"model {self.label!r}: exact tail not evaluable at log-radius {ell:.3g}"
            )
        if self.log_tail_asym is None:
            raise RegimeError(
                f"model {self.label!r} needs tail mass at log-radius {ell:.3g}, "
                "beyond quadrature range; attach log_tail_asym"
            )
        if self._asym_offset is None:
            r_switch = self.settings.asym_switch_radius
            ell_switch = math.log(r_switch)
            quad_val = self.log_radial_integral(t=r_switch) - self.log_J0
            self._asym_offset = quad_val - float(self.log_tail_asym(ell_switch))
        return float(self.log_tail_asym(ell)) + self._asym_offset

    # -- sampling -----------------------------------------------------------

    def sampler(self) -> Callable:
        """Return rng -> size -> positions drawn from mu (inverse-CDF on a
        precomputed radial table; deterministic given the rng substream)."""
        if self.log_u is None:
            raise HypothesisError(
                f"model {self.label!r} is abstract and cannot be sampled"
            )
        if self._sampler_cache is None:
            self._sampler_cache = self._build_radial_table()
        radii_grid, log_tail_grid = self._sampler_cache
        m = self.m

        def draw(rng: np.random.Generator, size: int) -> np.ndarray:
            u = rng.uniform(size=size)
            log_u_draw = np.log(u)
            # log_tail_grid is decreasing; invert by interpolation.
            idx = np.searchsorted(-log_tail_grid, -log_u_draw)
            idx = np.clip(idx, 1, len(radii_grid) - 1)
            lo, hi = log_tail_grid[idx - 1], log_tail_grid[idx]
            frac = np.where(hi < lo, (log_u_draw - lo) / np.where(hi < lo, hi - lo, 1.0), 0.0)
            r = radii_grid[idx - 1] + frac * (radii_grid[idx] - radii_grid[idx - 1])
            if m == 1:
                return r * rng.choice([-1.0, 1.0], size=size)
            vec = rng.normal(size=(size, m))
            vec /= np.linalg.norm(vec, axis=1, keepdims=True)
            return r[:, None] * vec

        return draw

    def _build_radial_table(self) -> tuple:
        # Find a radius capturing all but ~1e-14 of the mass, then tabulate
        # log tail on a dense grid by cumulative panel integration.
        hi = 1.0
        while self.log_tail(hi) > math.log(1e-14) and hi < 1e200:
            hi *= 4.0
        grid = np.concatenate([[0.0], np.geomspace(1e-9, hi, 4095)])
        log_f = self._log_radial()
        from ._integrate import _panel_log  # shared Gauss-Legendre panel

        panel_logs = np.array(
            [_panel_log(log_f, grid[i], grid[i + 1], 16) for i in range(len(grid) - 1)]
        )
        # log of suffix sums => log tail at each grid point (unnormalized).
        suffix = np.full(len(grid), -np.inf)
        acc = -np.inf
        for i in range(len(panel_logs) - 1, -1, -1):
            acc = np.logaddexp(acc, panel_logs[i])
            suffix[i] = acc
        log_tail_grid = suffix - suffix[0]
        # Enforce strict decrease for searchsorted.
        log_tail_grid = np.minimum.accumulate(log_tail_grid)
        return grid, log_tail_grid


def _radii(x: np.ndarray, m: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if m == 1:
        return np.abs(x)
    if x.shape[-1] != m:
        raise ValueError(f"positions must have trailing dimension {m}")
    return np.linalg.norm(x, axis=-1)


def normalize_measure(
    log_u: Callable,
    m: int = 1,
    *,
    label: str = "mu",
    breakpoints: tuple = (),
    log_tail_exact: Optional[Callable] = None,
    log_tail_asym: Optional[Callable] = None,
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> RadialModel:
    """Build a normalized RadialModel from a log radial profile.

    Raises DivergenceError if the profile is not integrable.
    """
    model = RadialModel(
        m=m,
        log_u=log_u,
        label=label,
        breakpoints=tuple(breakpoints),
        log_tail_exact=log_tail_exact,
        log_tail_asym=log_tail_asym,
        settings=settings,
    )
    model.log_J0  # force normalization now; raises if divergent
    return model


def abstract_model(
    log_tail_exact: Callable,
    m: int = 1,
    *,
    label: str = "abstract",
    settings: QuadratureSettings = DEFAULT_SETTINGS,
) -> RadialModel:
    """Tail-only measure for closed-form toys (no density, no sampling)."""
    return RadialModel(
        m=m, log_u=None, label=label, log_tail_exact=log_tail_exact, settings=settings
    )


def tail_mass(model: RadialModel, t: float) -> float:
    """mu(rho > t) as a plain float in [0, 1]."""
    return min(1.0, exp_ext(model.log_tail(t)))


# -- concrete measure factories ---------------------------------------------


def stable_model(alpha: float, m: int = 1, *, label: Optional[str] = None,
                 settings: QuadratureSettings = DEFAULT_SETTINGS) -> RadialModel:
    """Polynomial-tail measure with profile (1+r)^-(m+alpha).

    For m=1 the tail is exactly (1+t)^-alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise HypothesisError(f"alpha must lie in (0, 2), got {alpha}")
    p = m + alpha

    def log_u(r):
        return -p * np.log1p(r)

    exact = (lambda t: -alpha * math.log1p(t)) if m == 1 else None
    asym = None
    if m != 1:
        # integral_t^inf (1+r)^-(m+a) r^{m-1} dr ~ t^-alpha / alpha for large t
        asym = lambda ell: -alpha * ell
    return normalize_measure(
        log_u, m,
        label=label or f"stable(alpha={alpha}, m={m})",
        log_tail_exact=exact, log_tail_asym=asym, settings=settings,
    )


def log_weighted_stable_model(alpha: float, m: int = 1, *, label: Optional[str] = None,
                              settings: QuadratureSettings = DEFAULT_SETTINGS) -> RadialModel:
    """Profile (1+r)^-(m+alpha) / log(e+r); tail ~ t^-alpha/(alpha log t)."""
    if not 0.0 < alpha < 2.0:
        raise HypothesisError(f"alpha must lie in (0, 2), got {alpha}")
    p = m + alpha

    def log_u(r):
        r = np.asarray(r, dtype=float)
        return -p * np.log1p(r) - np.log(np.log(np.e + r))

    def log_tail_asym(ell):
        # Two-term expansion of integral_t^inf r^-(1+alpha)/log(r) dr in
        # log-radius: tail ~ t^-alpha/(alpha*log t) * (1 - 1/(alpha*log t)).
        return -alpha * ell - math.log(ell) + math.log1p(-1.0 / (alpha * ell))

    return normalize_measure(
        log_u, m,
        label=label or f"log-weighted-stable(alpha={alpha}, m={m})",
        log_tail_asym=log_tail_asym if m == 1 else None, settings=settings,
    )


def exp_power_model(kappa: float, m: int = 1, *, label: Optional[str] = None,
                    settings: QuadratureSettings = DEFAULT_SETTINGS) -> RadialModel:
    """Light-tail measure with profile exp(-r^kappa), kappa > 1."""
    if kappa <= 0:
        raise HypothesisError(f"kappa must be positive, got {kappa}")

    def log_u(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return -np.power(r, kappa)

    return normalize_measure(
        log_u, m, label=label or f"exp-power(kappa={kappa}, m={m})", settings=settings
    )


def dyadic_model(*, label: str = "dyadic-toy",
                 settings: QuadratureSettings = DEFAULT_SETTINGS) -> RadialModel:
    """Atomic toy measure with mass 2^-n at radius n; tail(t) = 2^-ceil(t)."""

    def log_tail_exact(t):
        return -max(math.ceil(t), 0) * math.log(2.0)

    return abstract_model(log_tail_exact, m=1, label=label, settings=settings)


# ---------------------------------------------------------------------------
# Jump kernels
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ReducedJump:
    """Translation-invariant radial jump measure A |z|^-(m+alpha) 1{|z|<=k0} dz.

    All interval masses and the square-displacement bound are closed form.
    ``side_mass`` is the one-sided line mass for m=1 geometry; ``total_tail``
    aggregates over the sphere in any dimension.
    """

    amplitude: float
    alpha: float
    m: int = 1
    finite_range: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise HypothesisError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.amplitude <= 0 or self.finite_range <= 0:
            raise HypothesisError("amplitude and finite_range must be positive")

    def side_mass(self, a: float, b: float = math.inf) -> float:
        """Mass of {z : a <= z <= b, z > 0} on one side of the line (m=1)."""
        if self.m != 1:
            raise HypothesisError("side_mass is one-dimensional geometry")
        b = min(b, self.finite_range)
        if a >= b:
            return 0.0
        if a <= 0.0:
            raise DivergenceError("one-sided jump mass diverges at 0")
        al = self.alpha
        upper = 0.0 if math.isinf(b) else b ** (-al)
        return self.amplitude * (a ** (-al) - upper) / al

    def total_tail(self, k: float) -> float:
        """nu({|z| > k}), all directions; +inf at k <= 0 (infinite activity)."""
        k = max(k, 0.0)
        k0 = self.finite_range
        if k >= k0:
            return 0.0
        if k == 0.0:
            return math.inf
        al = self.alpha
        upper = 0.0 if math.isinf(k0) else k0 ** (-al)
        return surface_area(self.m) * self.amplitude * (k ** (-al) - upper) / al

    def lambda_value(self) -> float:
        """integral of (1 ∧ |z|^2) against the jump measure (exact)."""
        al, k0 = self.alpha, self.finite_range
        c1 = min(1.0, k0)
        near = c1 ** (2.0 - al) / (2.0 - al)
        far = 0.0
        if k0 > 1.0:
            upper = 0.0 if math.isinf(k0) else k0 ** (-al)
            far = (1.0 - upper) / al
        return surface_area(self.m) * self.amplitude * (near + far)


@dataclass(eq=False)
class JumpKernel:
    """Symmetric jump density q(x, y) paired with a reference measure.

    ``reduced`` unlocks the closed-form/deterministic paths; ``q`` alone
    falls back to Monte Carlo.  ``lambda_cache`` lets abstract toys declare
    their square-displacement bound directly.
    """

    q: Optional[Callable] = None
    reduced: Optional[ReducedJump] = None
    finite_range: float = math.inf
    lambda_cache: Optional[float] = None
    label: str = "kernel"

    def __post_init__(self):
        if self.reduced is not None:
            self.finite_range = self.reduced.finite_range


def stable_pair(model: RadialModel, alpha: float, *,
                finite_range: float = math.inf,
                amplitude: Optional[float] = None,
                label: Optional[str] = None) -> JumpKernel:
    """Kernel with q(x,y) mu(dy) = A |x-y|^-(m+alpha) dz (truncated at range).

    The default amplitude equals the measure normalizer, which corresponds to
    q(x,y) = |x-y|^-(m+alpha) / u(|y|).
    """
    A = math.exp(model.log_normalizer) if amplitude is None else amplitude
    reduced = ReducedJump(amplitude=A, alpha=alpha, m=model.m, finite_range=finite_range)
    p = model.m + alpha
    log_u, m = model.log_u, model.m
    log_c = model.log_normalizer if log_u is not None else None

    q = None
    if log_u is not None:
        log_A = math.log(A)

        def q(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            d = _radii(x - y, m)
            ry = _radii(y, m)
            with np.errstate(divide="ignore", over="ignore"):
                log_q = log_A - p * np.log(d) - (log_c + np.asarray(log_u(ry)))
            val = np.exp(log_q)
            if math.isfinite(finite_range):
                val = np.where(d <= finite_range, val, 0.0)
            return val

    return JumpKernel(
        q=q, reduced=reduced, finite_range=finite_range,
        label=label or f"stable-pair(alpha={alpha}, k0={finite_range})",
    )


def finite_range_pair(model: RadialModel, alpha: float, k0: float = 1.0,
                      **kw) -> JumpKernel:
    """Convenience wrapper: stable pair truncated at range k0."""
    return stable_pair(model, alpha, finite_range=k0, **kw)


def abstract_kernel(*, lambda_cache: float, finite_range: float = math.inf,
                    label: str = "abstract-kernel") -> JumpKernel:
    """Kernel for closed-form toys: no density, declared lambda bound."""
    return JumpKernel(q=None, reduced=None, finite_range=finite_range,
                      lambda_cache=lambda_cache, label=label)


# ---------------------------------------------------------------------------
# lambda bound
# ---------------------------------------------------------------------------


def lambda_bound(kernel: JumpKernel, model: RadialModel,
                 settings: QuadratureSettings = DEFAULT_SETTINGS,
                 *, sup_grid: Optional[np.ndarray] = None) -> float:
    """sup_x integral (1 ∧ d(x,y)^2) q(x,y) mu(dy).

    Exact for reduced kernels (the integrand is translation invariant).
    Custom kernels are maximized over a radius grid (reported value is a
    grid supremum, not a certified bound).
    """
    if kernel.lambda_cache is not None:
        return kernel.lambda_cache
    if kernel.reduced is not None:
        return kernel.reduced.lambda_value()
    if kernel.q is None:
        raise HypothesisError(
            f"kernel {kernel.label!r} has neither density nor lambda_cache"
        )
    if model.m != 1:
        raise HypothesisError("custom-kernel lambda bound implemented for m=1 only")

    if sup_grid is None:
        sup_grid = np.concatenate([[0.0], np.geomspace(1e-2, 1e3, 26)])
    log_c = model.log_normalizer
    log_u = model.log_u

    def lam_at(x: float) -> float:
        def f(y):
            d = abs(y - x)
            w = min(1.0, d * d)
            dens = math.exp(log_c + float(log_u(np.abs(np.asarray(y, dtype=float)))))
            return w * float(kernel.q(np.asarray(x), np.asarray(y))) * dens

        pts = sorted({x - 1.0, x, x + 1.0} | {b for b in model.breakpoints} |
                     {-b for b in model.breakpoints})
        val, _ = quad_pieces(f, -math.inf, math.inf, points=pts,
                             epsabs=settings.epsabs, epsrel=settings.epsrel)
        return val

    return max(lam_at(float(x)) for x in sup_grid)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


class Potential:
    """Perturbation exponent V(x) = V0(|x|) + offset with ball-extrema support.

    ``extrema_fn(R) -> (inf V0, sup V0)`` over the closed ball of radius R
    must be exact for the shapes used in certified computations; grid-based
    potentials round outward by a declared Lipschitz margin and report
    ``exact_extrema = False``.  ``ell_extrema_fn`` provides the same at
    log-radius scale for balls beyond float range.
    """

    def __init__(
        self,
        radial_fn: Callable,
        extrema_fn: Callable,
        *,
        offset: float = 0.0,
        monotone: Optional[int] = None,
        bounded: bool = False,
        lipschitz: Optional[float] = None,
        ell_extrema_fn: Optional[Callable] = None,
        exact_extrema: bool = True,
        breakpoints: tuple = (),
        label: str = "V",
        m: int = 1,
        half_line: bool = False,
    ):
        if half_line and m != 1:
            raise HypothesisError("half-line potentials are one-dimensional")
        self.radial_fn = radial_fn
        self.extrema_fn = extrema_fn
        self.offset = float(offset)
        self.monotone = monotone
        self.bounded = bounded
        self.lipschitz = lipschitz
        self.ell_extrema_fn = ell_extrema_fn
        self.exact_extrema = exact_extrema
        self.breakpoints = tuple(breakpoints)
        self.label = label
        self.m = m
        self.half_line = half_line

    # evaluation ------------------------------------------------------------

    def v0_at_radius(self, r):
        return np.asarray(self.radial_fn(np.asarray(r, dtype=float)), dtype=float)

    def value_at_radius(self, r):
        return self.v0_at_radius(r) + self.offset

    def __call__(self, x):
        if self.half_line:
            x = np.asarray(x, dtype=float)
            return np.where(x >= 0, self.v0_at_radius(np.abs(x)), 0.0) + self.offset
        return self.value_at_radius(_radii(x, self.m))

    # ball extrema ----------------------------------------------------------

    def ball_sup(self, R: float) -> float:
        """sup of V over the closed ball of radius R."""
        return float(self.extrema_fn(float(R))[1]) + self.offset

    def ball_inf(self, R: float) -> float:
        """inf of V over the closed ball of radius R."""
        return float(self.extrema_fn(float(R))[0]) + self.offset

    def _ell_extrema(self, ell: float):
        if ell <= _LOG_RADIUS_CAP:
            return self.extrema_fn(math.exp(ell))
        if self.ell_extrema_fn is None:
            raise RegimeError(
                f"potential {self.label!r}: ball extrema requested at log-radius "
                f"{ell:.3g} but no log-scale form is attached"
            )
        return self.ell_extrema_fn(ell)

    def ball_sup_ell(self, ell: float) -> float:
        """sup of V over the ball of radius e^ell (huge radii allowed)."""
        return float(self._ell_extrema(float(ell))[1]) + self.offset

    def ball_inf_ell(self, ell: float) -> float:
        """inf of V over the ball of radius e^ell (huge radii allowed)."""
        return float(self._ell_extrema(float(ell))[0]) + self.offset

    def with_offset(self, offset: float) -> "Potential":
        clone = Potential.__new__(Potential)
        clone.__dict__.update(self.__dict__)
        clone.offset = float(offset)
        return clone


def _monotone_extrema(radial_fn: Callable, direction: int) -> Callable:
    def extrema(R: float):
        lo, hi = float(radial_fn(np.float64(0.0))), float(radial_fn(np.float64(R)))
        if direction < 0:
            lo, hi = hi, lo
        return (min(lo, hi), max(lo, hi))

    return extrema


def zero_potential(m: int = 1) -> Potential:
    """The unperturbed case V = 0."""
    return Potential(
        radial_fn=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        extrema_fn=lambda R: (0.0, 0.0),
        ell_extrema_fn=lambda ell: (0.0, 0.0),
        monotone=0, bounded=True, lipschitz=0.0, label="V=0", m=m,
    )


def loglog_potential(eps: float, m: int = 1) -> Potential:
    """V0(r) = eps * log(log(e + r)); V0(0) = 0; doubly-log growth."""

    def radial_fn(r):
        r = np.asarray(r, dtype=float)
        return eps * np.log(np.log(np.e + r))

    def ell_extrema(ell):
        # log(e + e^ell) = ell + log1p(e^(1-ell)) exactly
        top = eps * math.log(ell + math.log1p(math.exp(min(1.0 - ell, 0.0))))
        return (0.0, top) if eps >= 0 else (top, 0.0)

    direction = 1 if eps >= 0 else -1
    return Potential(
        radial_fn=radial_fn,
        extrema_fn=_monotone_extrema(radial_fn, direction),
        ell_extrema_fn=ell_extrema,
        monotone=direction, bounded=False, lipschitz=abs(eps) / math.e,
        label=f"eps*loglog(e+|x|), eps={eps}", m=m,
    )


def log1p_potential(coef: float, m: int = 1) -> Potential:
    """V0(r) = coef * log(1 + r)."""

    def radial_fn(r):
        return coef * np.log1p(np.asarray(r, dtype=float))

    def ell_extrema(ell):
        top = coef * (ell + math.log1p(math.exp(-ell)))
        return (0.0, top) if coef >= 0 else (top, 0.0)

    direction = 1 if coef >= 0 else -1
    return Potential(
        radial_fn=radial_fn,
        extrema_fn=_monotone_extrema(radial_fn, direction),
        ell_extrema_fn=ell_extrema,
        monotone=direction, bounded=False, lipschitz=abs(coef),
        label=f"coef*log(1+|x|), coef={coef}", m=m,
    )


def power_potential(coef: float, p: float, m: int = 1) -> Potential:
    """V0(r) = coef * r^p, p > 0."""
    if p <= 0:
        raise HypothesisError(f"power exponent must be positive, got {p}")

    def radial_fn(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return coef * np.power(r, p)

    def ell_extrema(ell):
        with np.errstate(over="ignore"):
            top = coef * math.exp(min(p * ell, 710.0))
        return (0.0, top) if coef >= 0 else (top, 0.0)

    direction = 1 if coef >= 0 else -1
    return Potential(
        radial_fn=radial_fn,
        extrema_fn=_monotone_extrema(radial_fn, direction),
        ell_extrema_fn=ell_extrema,
        monotone=direction, bounded=False,
        lipschitz=abs(coef) * p if p >= 1 else None,
        label=f"coef*|x|^p, coef={coef}, p={p}", m=m,
    )


def sawtooth_potential(H: float, kappa: float, L: float, *, half_line: bool = True,
                       n_breaks: int = 400) -> Potential:
    """One-sided piecewise-linear sawtooth: zero on (-inf, H) and, on each
    segment [nH, (n+1)H) with n >= 1,

        V0(x) = L (n+1)^(kappa-1) * (2n + 1 - 2x/H),

    jumping from trough -L(n+1)^(kappa-1) up to peak L(n+2)^(kappa-1) at each
    multiple of H.  Ball extrema are exact: peaks sit at the left segment
    endpoints, troughs are left limits at the right endpoints, and the flat
    initial stretch contributes 0 to both.
    """
    if H <= 0 or L <= 0:
        raise HypothesisError("sawtooth needs H > 0 and L > 0")

    def amp(n):
        return L * np.power(n + 1.0, kappa - 1.0)

    def radial_fn(r):
        r = np.asarray(r, dtype=float)
        n = np.floor(np.maximum(r, 0.0) / H)
        saw = amp(n) * (2.0 * n + 1.0 - 2.0 * r / H)
        return np.where(n >= 1.0, saw, 0.0)

    def extrema_fn(R):
        if R < 0:
            raise ValueError("radius must be nonnegative")
        n_R = math.floor(R / H)
        if n_R < 1:
            return (0.0, 0.0)
        sup0 = float(amp(n_R))  # peak at n_R * H <= R; amplitudes increase
        candidates = [0.0, float(radial_fn(np.float64(R)))]
        if n_R >= 2:
            candidates.append(-float(amp(n_R - 1)))  # deepest full trough
        return (min(candidates), sup0)

    return Potential(
        radial_fn=radial_fn,
        extrema_fn=extrema_fn,
        monotone=None, bounded=False, lipschitz=None,
        breakpoints=tuple(H * np.arange(1, n_breaks + 1)),
        label=f"sawtooth(H={H}, kappa={kappa}, L={L})", m=1,
        half_line=half_line,
    )


def custom_potential(fn: Callable, *, lipschitz: Optional[float] = None,
                     monotone: Optional[int] = None, bounded: bool = False,
                     grid_points: int = 4096, breakpoints: tuple = (),
                     label: str = "custom-V", m: int = 1) -> Potential:
    """Wrap an arbitrary radial function.

    Without a monotonicity declaration, ball extrema come from a uniform grid
    rounded outward by lipschitz * h / 2 (conservative, flagged non-exact).
    """

    def radial_fn(r):
        return np.asarray(fn(np.asarray(r, dtype=float)), dtype=float)

    if monotone in (1, -1):
        extrema = _monotone_extrema(radial_fn, monotone)
        exact = True
    elif monotone == 0:
        v = float(radial_fn(np.float64(0.0)))
        extrema = lambda R: (v, v)
        exact = True
    else:
        margin_rate = 0.5 * (lipschitz if lipschitz is not None else 0.0)

        def extrema(R):
            grid = np.linspace(0.0, max(R, 1e-12), grid_points)
            vals = radial_fn(grid)
            h = grid[1] - grid[0] if len(grid) > 1 else 0.0
            margin = margin_rate * h
            return (float(vals.min()) - margin, float(vals.max()) + margin)

        exact = False

    return Potential(
        radial_fn=radial_fn, extrema_fn=extrema, monotone=monotone,
        bounded=bounded, lipschitz=lipschitz, exact_extrema=exact,
        breakpoints=breakpoints, label=label, m=m,
    )


def log_exp_moment(model: RadialModel, potential: Potential,
                   coef: float = 1.0) -> float:
    """log mu(exp(coef * V)), computed fully in log domain.

    Half-line potentials weight only the positive axis; the negative half
    contributes the bare exp(coef * offset) mass.
    """
    extra = lambda r: coef * potential.value_at_radius(r)
    val = model.log_radial_integral(extra=extra,
                                    extra_breakpoints=potential.breakpoints)
    if potential.half_line:
        neg = model.log_J0 + coef * potential.offset
        val = float(np.logaddexp(val, neg)) - math.log(2.0)
    return val - model.log_J0


def weighted_tail_log(model: RadialModel, potential: Potential, t: float) -> float:
    """log integral_{rho > t} exp(V) dmu (the mu_V tail when V is normalized)."""
    t = max(t, 0.0)
    extra = lambda r: potential.value_at_radius(r)
    val = model.log_radial_integral(extra=extra, t=t,
                                    extra_breakpoints=potential.breakpoints)
    if potential.half_line:
        neg = model.log_radial_integral(t=t) + potential.offset
        val = float(np.logaddexp(val, neg)) - math.log(2.0)
    return val - model.log_J0


def normalize_potential(potential: Potential, model: RadialModel, *,
                        validate: bool = True) -> Potential:
    """Return a copy of the potential with offset chosen so mu(e^V) = 1.

    With validate=True the normalizing integral is recomputed at higher
    refinement and must agree to 5e-7 in log scale.
    """
    log_I = log_exp_moment(model, potential, 1.0)
    if not math.isfinite(log_I):
        raise DivergenceError(
            f"mu(e^V) diverges for potential {potential.label!r}; cannot normalize"
        )
    new = potential.with_offset(potential.offset - log_I)
    if validate:
        fine = replace(model.settings, refine=model.settings.refine + 12, order=24)
        fine_model = RadialModel(
            m=model.m, log_u=model.log_u, label=model.label,
            breakpoints=model.breakpoints, log_tail_exact=model.log_tail_exact,
            log_tail_asym=model.log_tail_asym, settings=fine,
        )
        check = log_exp_moment(fine_model, new, 1.0)
        if abs(check) > 5e-7:
            raise PrecisionError(
                f"normalization of {potential.label!r} unstable under refinement",
                value=check, stderr=abs(check),
            )
    return new


# ---------------------------------------------------------------------------
# Region integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionEstimate:
    """A region integral value with its numeric provenance."""

    value: float
    stderr: float
    method: str

    def __float__(self):
        return self.value


def _require_regions_possible(kernel: JumpKernel) -> None:
    if kernel.reduced is None and kernel.q is None:
        raise HypothesisError(
            f"kernel {kernel.label!r} supports no region integrals: it has "
            "neither a reduced form nor a density (and no finite range applies)"
        )


def _mc_region(kernel: JumpKernel, model: RadialModel, indicator: Callable,
               settings: QuadratureSettings, key: tuple) -> RegionEstimate:
    """Monte Carlo fallback: E_{x,y ~ mu x mu}[q(x,y) 1_region(x,y)]."""
    if kernel.q is None:
        raise HypothesisError(
            f"kernel {kernel.label!r} has no density; Monte Carlo region "
            "integration is unavailable"
        )
    draw = model.sampler()
    rng = substream(settings.seed, "region", *key)
    total = 0.0
    total_sq = 0.0
    n_done = 0
    while n_done < settings.max_samples:
        batch = min(settings.mc_batch, settings.max_samples - n_done)
        x = draw(rng, batch)
        y = draw(rng, batch)
        w = np.asarray(kernel.q(x, y), dtype=float) * indicator(x, y)
        total += float(w.sum())
        total_sq += float((w * w).sum())
        n_done += batch
        mean = total / n_done
        var = max(total_sq / n_done - mean * mean, 0.0)
        stderr = math.sqrt(var / n_done)
        if mean > 0 and stderr <= settings.rel_err_cap * mean and n_done >= 4 * settings.mc_batch:
            return RegionEstimate(mean, stderr, "monte-carlo")
    mean = total / n_done
    var = max(total_sq / n_done - mean * mean, 0.0)
    stderr = math.sqrt(var / n_done)
    if mean == 0.0 or stderr <= settings.rel_err_cap * max(mean, 1e-300):
        return RegionEstimate(mean, stderr, "monte-carlo")
    raise PrecisionError(
        f"region integral {key} did not reach relative error "
        f"{settings.rel_err_cap} within {settings.max_samples} samples",
        value=mean, stderr=stderr,
    )


def region_gamma(kernel: JumpKernel, model: RadialModel, n: float, k: float,
                 settings: QuadratureSettings = DEFAULT_SETTINGS) -> RegionEstimate:
    """Jump mass with displacement beyond k landing at radius >= n-1:

        gamma(n, k) = ∬ 1{d(x,y) > k, rho(y) >= n-1} q(x,y) mu(dx) mu(dy).

    Exactly zero when k >= the kernel's finite range.  Reduced kernels in
    m=1 use a semi-analytic outer quadrature; otherwise Monte Carlo.
    """
    if k >= kernel.finite_range:
        return RegionEstimate(0.0, 0.0, "finite-range")
    if k <= 0:
        raise HypothesisError("gamma region needs k > 0 (infinite jump activity at 0)")
    _require_regions_possible(kernel)
    red = kernel.reduced
    if red is not None and model.m == 1 and model.log_u is not None:
        inner_barrier = n - 1.0

        def w(x: float) -> float:
            # Region in z = y - x: {z >= L} u {z <= U}, intersected with |z| > k.
            L = inner_barrier - x
            U = -inner_barrier - x
            total = 0.0
            # upper half-line piece
            if L > k:
                total += red.side_mass(L)
            else:
                total += red.side_mass(k)
                if L < -k:
                    total += red.side_mass(k, -L)  # z in [L, -k)
            # lower half-line piece (U <= 0 for x >= 0, n >= 1)
            if U < -k:
                total += red.side_mass(-U)
            else:
                total += red.side_mass(k)
                if U > k:  # only possible for n < 1
                    total += red.side_mass(k, U)
            return total

        log_c = model.log_normalizer
        log_u = model.log_u

        def f(x: float) -> float:
            dens = math.exp(log_c + float(log_u(np.asarray(x, dtype=float))))
            return 2.0 * dens * w(x)

        pts = sorted({abs(inner_barrier - k), inner_barrier + k, inner_barrier, k}
                     | set(model.breakpoints))
        if math.isfinite(red.finite_range):
            pts.append(inner_barrier + red.finite_range)
        val, err = quad_pieces(f, 0.0, math.inf, points=[p for p in pts if p > 0],
                               epsabs=settings.epsabs, epsrel=settings.epsrel)
        return RegionEstimate(val, err, "reduced-quadrature")

    inner = n - 1.0

    def indicator(x, y):
        return ((_radii(x - y, model.m) > k) & (_radii(y, model.m) >= inner)).astype(float)

    return _mc_region(kernel, model, indicator, settings, ("gamma", n, k))


def _eta_generic(kernel: JumpKernel, model: RadialModel, n: float, k: float,
                 outer_barrier: float, settings: QuadratureSettings,
                 tag: str) -> RegionEstimate:
    inner_ball = n + 1.0
    gap = outer_barrier - inner_ball  # minimal displacement in the region
    if gap >= kernel.finite_range:
        return RegionEstimate(0.0, 0.0, "finite-range")
    _require_regions_possible(kernel)
    red = kernel.reduced
    if red is not None and model.m == 1 and model.log_u is not None:
        log_c = model.log_normalizer
        log_u = model.log_u

        def f(x: float) -> float:
            # For x > outer_barrier >= inner_ball the target interval
            # [-(n+1) - x, (n+1) - x] sits on the negative z side.
            mass = red.side_mass(x - inner_ball, x + inner_ball)
            dens = math.exp(log_c + float(log_u(np.asarray(x, dtype=float))))
            return 2.0 * dens * mass

        hi = math.inf
        if math.isfinite(red.finite_range):
            hi = inner_ball + red.finite_range
        if hi <= outer_barrier:
            return RegionEstimate(0.0, 0.0, "reduced-quadrature")
        pts = [p for p in sorted(set(model.breakpoints)) if outer_barrier < p < hi]
        val, err = quad_pieces(f, outer_barrier, hi, points=pts,
                               epsabs=settings.epsabs, epsrel=settings.epsrel)
        return RegionEstimate(val, err, "reduced-quadrature")

    def indicator(x, y):
        return ((_radii(x, model.m) > outer_barrier)
                & (_radii(y, model.m) <= inner_ball)).astype(float)

    return _mc_region(kernel, model, indicator, settings, (tag, n, k))


def region_eta(kernel: JumpKernel, model: RadialModel, n: float, k: float,
               settings: QuadratureSettings = DEFAULT_SETTINGS) -> RegionEstimate:
    """Jump mass from outside radius n+k+2 into the ball of radius n+1:

        eta(n, k) = ∬ 1{rho(x) > n+k+2, rho(y) <= n+1} q(x,y) mu(dx) mu(dy).
    """
    return _eta_generic(kernel, model, n, k, n + k + 2.0, settings, "eta")


def region_tilde_eta(kernel: JumpKernel, model: RadialModel, n: float, k: float,
                     settings: QuadratureSettings = DEFAULT_SETTINGS) -> RegionEstimate:
    """Variant of eta with the outer barrier at n+k+1."""
    return _eta_generic(kernel, model, n, k, n + k + 1.0, settings, "tilde-eta")


def region_tilde_gamma(kernel: JumpKernel, model: RadialModel, k: float,
                       settings: QuadratureSettings = DEFAULT_SETTINGS) -> RegionEstimate:
    """Total jump mass at displacement beyond k:

        tilde-gamma(k) = ∬ 1{d(x,y) > k} q(x,y) mu(dx) mu(dy).

    For reduced kernels this is the exact tail of the jump measure.
    """
    if k >= kernel.finite_range:
        return RegionEstimate(0.0, 0.0, "finite-range")
    _require_regions_possible(kernel)
    if kernel.reduced is not None:
        return RegionEstimate(kernel.reduced.total_tail(k), 0.0, "closed-form")

    def indicator(x, y):
        return (_radii(x - y, model.m) > k).astype(float)

    return _mc_region(kernel, model, indicator, settings, ("tilde-gamma", k))
