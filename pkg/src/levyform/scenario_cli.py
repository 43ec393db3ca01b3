"""Scenario registry, config ingestion, exponent fits, and CSV/JSON emission.

This module is the orchestration layer: it binds named measure/kernel/
potential/rate bundles (scenarios), runs the four rate synthesizers over
r-grids into :class:`RateCurve` artifacts, fits power-law exponents to the
curves, and serializes everything deterministically.  The ``levyform``
console script dispatches here.

Exit codes: 0 success, 2 hypothesis failure, 3 precision failure, 4 config
error.  The only environment variable honoured is ``LEVYFORM_THREADS`` (the
default worker count for grid evaluation); output assembly is always
single-threaded and ordered, so the emitted bytes do not depend on it.
"""

from __future__ import annotations

import argparse
import hashlib
import importlib.metadata
import json
import math
import os
import platform
import sys
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ._extended import exp_ext, log_ext
from .errors import ConfigError, HypothesisError, PrecisionError
from .inequality_lab import (
    FamilySpec,
    _check_sawtooth_params,
    make_family,
    poincare_disproof_sweep,
    sharpness_probe,
    super_residual,
    weak_residual,
)
from .measure_kernel import (
    DEFAULT_SETTINGS,
    JumpKernel,
    Potential,
    QuadratureSettings,
    RadialModel,
    abstract_kernel,
    dyadic_model,
    exp_power_model,
    log1p_potential,
    log_weighted_stable_model,
    loglog_potential,
    normalize_potential,
    power_potential,
    sawtooth_potential,
    stable_model,
    stable_pair,
    zero_potential,
)
from .perturbation_calculus import (
    Context,
    RateFunction,
    SequencePlan,
    SynthesisResult,
    beta_V_super_finite,
    beta_V_super_infinite,
    beta_V_variation,
    beta_V_weak,
)

THEOREMS = ("super-finite", "super-infinite", "variation", "weak")

CSV_COLUMNS = ("r", "beta_V_raw", "beta_V_monotone", "witness_n", "witness_k",
               "witness_j", "witness_s", "witness_rprime", "support_status",
               "stderr_bars")


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A named measure/kernel/potential/rate bundle with its grids."""

    name: str
    model: RadialModel
    kernel: JumpKernel
    potential: Potential
    rate: RateFunction
    theorems: Tuple[str, ...]
    r_grid: Tuple[float, ...] = ()
    plan: Optional[SequencePlan] = None
    seed: int = 20260814
    kappa1: float = 0.0
    n_max: int = 48
    sawtooth: Optional[Tuple[float, float, float]] = None
    n_range: Tuple[int, ...] = ()
    params: Mapping = field(default_factory=dict)
    notes: str = ""
    settings: QuadratureSettings = DEFAULT_SETTINGS

    def context(self) -> Context:
        return Context(model=self.model, kernel=self.kernel,
                       potential=self.potential, rate=self.rate,
                       settings=replace(self.settings, seed=self.seed),
                       label=self.name)


def _build_ex2_3() -> Scenario:
    model = log_weighted_stable_model(alpha=1.0, m=1)
    kernel = stable_pair(model, alpha=1.0, finite_range=math.inf)
    potential = normalize_potential(loglog_potential(0.5), model)
    return Scenario(
        name="ex2_3", model=model, kernel=kernel, potential=potential,
        rate=RateFunction.exp_power(1.0, 1.0),
        theorems=("super-infinite",),
        r_grid=tuple(float(r) for r in np.geomspace(1e-3, 1e-1, 9)),
        plan=SequencePlan(delta=1.5, a=1.0, b=2.0, I_max=40),
        params={"alpha": 1.0, "m": 1, "eps": 0.5, "rate_c": 1.0, "rate_p": 1.0,
                "delta": 1.5},
        notes="doubly-logarithmic tilt of a log-weighted heavy-tail measure; "
              "infinite jump range")


def _build_ex2_4() -> Scenario:
    model = exp_power_model(2.0, 1)
    kernel = stable_pair(model, alpha=0.5, finite_range=1.0)
    potential = normalize_potential(power_potential(1.0, 0.5), model)
    # The rate grows like exp(log^2(1/r)), so the fitted exponent converges
    # only in log log(1/r); the default grid probes deep to damp the
    # sqrt(log) correction (local slope is 2 - O(1/sqrt(log(1/r)))).
    return Scenario(
        name="ex2_4", model=model, kernel=kernel, potential=potential,
        rate=RateFunction.exp_log_power(1.0, 2.0),
        theorems=("super-finite",),
        r_grid=tuple(float(r) for r in np.geomspace(1e-48, 1e-12, 8)),
        n_max=192,
        params={"kappa": 2.0, "alpha": 0.5, "theta": 1.5, "c1": 1.0,
                "rate_c": 1.0, "rate_g": 2.0},
        notes="light-tail measure with unit-range jumps under a square-root "
              "tilt")


def _build_prop2_5() -> Scenario:
    model = exp_power_model(2.0, 1)
    kernel = stable_pair(model, alpha=0.5, finite_range=1.0)
    potential = normalize_potential(sawtooth_potential(5.0, 2.0, 20.0), model)
    return Scenario(
        name="prop2_5", model=model, kernel=kernel, potential=potential,
        rate=RateFunction.exp_log_power(1.0, 2.0),
        theorems=("falsify", "super-finite"),
        r_grid=(0.1, 0.5, 1.0),
        sawtooth=(5.0, 2.0, 20.0),
        n_range=tuple(range(2, 9)),
        params={"kappa": 2.0, "alpha": 0.5, "H": 5.0, "L": 20.0},
        notes="sawtooth tilt steep enough to defeat every spectral-gap "
              "constant")


def _build_ex3_2() -> Scenario:
    model = stable_model(alpha=1.0, m=1)
    kernel = stable_pair(model, alpha=1.0, finite_range=math.inf)
    potential = normalize_potential(log1p_potential(0.5), model)
    return Scenario(
        name="ex3_2", model=model, kernel=kernel, potential=potential,
        rate=RateFunction.constant(1.0),
        theorems=("weak",),
        r_grid=tuple(float(r) for r in np.geomspace(1e-2, 1.0, 9)),
        params={"alpha": 1.0, "eps": 0.5, "s": 0.0},
        notes="polynomially growing tilt of a heavy-tail measure; weak-rate "
              "route")


def _build_toy_dyadic() -> Scenario:
    model = dyadic_model()
    kernel = abstract_kernel(lambda_cache=1.0, finite_range=1.0)
    return Scenario(
        name="toy_dyadic", model=model, kernel=kernel,
        potential=zero_potential(), rate=RateFunction.power(1.0, 1.0),
        theorems=("super-finite",),
        r_grid=(0.25, 0.5, 1.0, 2.0, 4.0),
        plan=SequencePlan(delta=4.0, a=1.0, b=2.0, I_max=12),
        params={"lambda": 1.0, "delta": 4.0},
        notes="closed-form dyadic toy; every growth quantity is a power of "
              "two")


def _build_lipschitz_var() -> Scenario:
    model = stable_model(alpha=1.0, m=1)
    kernel = stable_pair(model, alpha=1.0, finite_range=math.inf)
    return Scenario(
        name="lipschitz_var", model=model, kernel=kernel,
        potential=zero_potential(), rate=RateFunction.power(1.0, 1.0),
        theorems=("variation",),
        r_grid=(0.5, 1.0, 2.0, 4.0, 8.0),
        kappa1=0.0,
        params={"kappa1": 0.0, "kappa2": 1.0},
        notes="zero tilt exercising the bounded-variation route end to end")


_REGISTRY: dict = {
    "ex2_3": _build_ex2_3,
    "ex2_4": _build_ex2_4,
    "prop2_5": _build_prop2_5,
    "ex3_2": _build_ex3_2,
    "toy_dyadic": _build_toy_dyadic,
    "lipschitz_var": _build_lipschitz_var,
}
_BUILT: dict = {}


def scenario_names() -> Tuple[str, ...]:
    return tuple(_REGISTRY)


def get_scenario(name: str) -> Scenario:
    """The built-in scenario of that name (constructed once, then cached)."""
    builder = _REGISTRY.get(name)
    if builder is None:
        raise ConfigError(f"unknown scenario {name!r}; known scenarios: "
                          f"{', '.join(scenario_names())}")
    hit = _BUILT.get(name)
    if hit is None:
        hit = builder()
        _BUILT[name] = hit
    return hit


def preflight(scenario: Scenario, theorem: str) -> None:
    """Raise unless the theorem's structural hypotheses hold for the scenario."""
    if theorem == "falsify":
        if scenario.sawtooth is None:
            raise ConfigError(
                f"scenario {scenario.name!r} defines no sawtooth falsification "
                f"parameters (H, kappa, L); add a [probe] table")
        _check_sawtooth_params(*scenario.sawtooth)
        red = scenario.kernel.reduced
        if red is None or red.m != 1 or not 0.0 < red.alpha < 1.0:
            raise HypothesisError(
                "the falsification sweep needs a reduced jump kernel with "
                "m = 1 and alpha in (0,1)")
        return
    if theorem not in THEOREMS:
        raise ConfigError(
            f"unknown theorem {theorem!r}; expected one of "
            f"{', '.join(THEOREMS)} (or the 'falsify' protocol)")
    if theorem == "super-finite" and not math.isfinite(scenario.kernel.finite_range):
        raise HypothesisError(
            f"theorem 'super-finite' needs a kernel of finite jump range; "
            f"kernel {scenario.kernel.label!r} has infinite range")
    if theorem == "super-infinite" and scenario.plan is None:
        raise ConfigError(
            f"scenario {scenario.name!r} defines no truncation plan; add a "
            f"[plan] table (delta, a, b, I_max)")
    if theorem == "variation" and scenario.kappa1 < 0:
        raise ConfigError(f"kappa1 must be nonnegative, got {scenario.kappa1}")


# ---------------------------------------------------------------------------
# Config ingestion
# ---------------------------------------------------------------------------


_MISSING = object()
_ABSENT = object()


class _Keys:
    """Typed, consume-and-verify access to one config table."""

    def __init__(self, where: str, mapping: Mapping):
        if not isinstance(mapping, Mapping):
            raise ConfigError(f"{where} must be a table")
        self.where = where
        self.data = dict(mapping)

    def _take(self, key, default):
        if key in self.data:
            return self.data.pop(key)
        if default is _MISSING:
            raise ConfigError(f"missing required key {self._path(key)}")
        return _ABSENT

    def _path(self, key) -> str:
        return f"{self.where}.{key}" if self.where else key

    def num(self, key, default=_MISSING) -> float:
        v = self._take(key, default)
        if v is _ABSENT:
            return default
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self._path(key)} must be a number, got {v!r}")
        return float(v)

    def integer(self, key, default=_MISSING) -> int:
        v = self._take(key, default)
        if v is _ABSENT:
            return default
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{self._path(key)} must be an integer, got {v!r}")
        return int(v)

    def text(self, key, default=_MISSING) -> str:
        v = self._take(key, default)
        if v is _ABSENT:
            return default
        if not isinstance(v, str):
            raise ConfigError(f"{self._path(key)} must be a string, got {v!r}")
        return v

    def flag(self, key, default=_MISSING) -> bool:
        v = self._take(key, default)
        if v is _ABSENT:
            return default
        if not isinstance(v, bool):
            raise ConfigError(f"{self._path(key)} must be a boolean, got {v!r}")
        return v

    def array(self, key, default=_MISSING) -> list:
        v = self._take(key, default)
        if v is _ABSENT:
            return default
        if not isinstance(v, (list, tuple)):
            raise ConfigError(f"{self._path(key)} must be an array, got {v!r}")
        return list(v)

    def table(self, key, default=_MISSING) -> Optional["_Keys"]:
        v = self._take(key, default)
        if v is _ABSENT or v is None:
            return None
        return _Keys(self._path(key), v)

    def done(self) -> None:
        if self.data:
            key = next(iter(self.data))
            raise ConfigError(f"unknown key {self._path(key)}")


def _check_alpha(where: str, alpha: float) -> float:
    if not 0.0 < alpha < 2.0:
        raise ConfigError(f"{where}.alpha must lie in (0,2), got {alpha:g}")
    return alpha


def _numbers(t: _Keys, key: str, default=_MISSING) -> Tuple[float, ...]:
    vals = t.array(key, default)
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{t._path(key)} must contain numbers, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _load_model(t: _Keys, record) -> RadialModel:
    kind = t.text("kind")
    record("model.kind", kind)
    if kind in ("stable", "log-weighted-stable"):
        alpha = _check_alpha("model", t.num("alpha"))
        m = t.integer("m", 1)
        if m < 1:
            raise ConfigError(f"model.m must be a positive integer, got {m}")
        record("model.alpha", alpha)
        record("model.m", m)
        t.done()
        factory = stable_model if kind == "stable" else log_weighted_stable_model
        return factory(alpha=alpha, m=m)
    if kind == "exp-power":
        kappa = t.num("kappa")
        if not kappa > 1.0:
            raise ConfigError(f"model.kappa must exceed 1, got {kappa:g}")
        m = t.integer("m", 1)
        record("model.kappa", kappa)
        record("model.m", m)
        t.done()
        return exp_power_model(kappa, m)
    if kind == "dyadic":
        t.done()
        return dyadic_model()
    raise ConfigError(f"unknown model.kind {kind!r}; expected stable, "
                      f"log-weighted-stable, exp-power, or dyadic")


def _load_kernel(t: _Keys, model: RadialModel, record) -> JumpKernel:
    kind = t.text("kind")
    record("kernel.kind", kind)
    fr = t.num("finite_range", math.inf)
    if not fr > 0:
        raise ConfigError(f"kernel.finite_range must be positive, got {fr:g}")
    record("kernel.finite_range", fr)
    if kind == "stable-pair":
        alpha = _check_alpha("kernel", t.num("alpha"))
        amplitude = t.num("amplitude", None)
        if amplitude is not None and not amplitude > 0:
            raise ConfigError(f"kernel.amplitude must be positive, got {amplitude:g}")
        record("kernel.alpha", alpha)
        record("kernel.amplitude", amplitude)
        t.done()
        return stable_pair(model, alpha, finite_range=fr, amplitude=amplitude)
    if kind == "abstract":
        lam = t.num("lambda_cache")
        if not lam > 0:
            raise ConfigError(f"kernel.lambda_cache must be positive, got {lam:g}")
        record("kernel.lambda_cache", lam)
        t.done()
        return abstract_kernel(lambda_cache=lam, finite_range=fr)
    raise ConfigError(f"unknown kernel.kind {kind!r}; expected stable-pair or "
                      f"abstract")


def _load_potential(t: _Keys, model: RadialModel, record):
    kind = t.text("kind")
    record("potential.kind", kind)
    normalize = t.flag("normalize", True)
    record("potential.normalize", normalize)
    sawtooth = None
    if kind == "zero":
        t.done()
        return zero_potential(), None
    if kind == "loglog":
        eps = t.num("eps")
        record("potential.eps", eps)
        t.done()
        pot = loglog_potential(eps)
    elif kind == "power":
        coef, p = t.num("coef"), t.num("p")
        if not p > 0:
            raise ConfigError(f"potential.p must be positive, got {p:g}")
        record("potential.coef", coef)
        record("potential.p", p)
        t.done()
        pot = power_potential(coef, p)
    elif kind == "log1p":
        coef = t.num("coef")
        record("potential.coef", coef)
        t.done()
        pot = log1p_potential(coef)
    elif kind == "sawtooth":
        H, kappa, L = t.num("H"), t.num("kappa"), t.num("L")
        _check_sawtooth_params(H, kappa, L)
        record("potential.H", H)
        record("potential.kappa", kappa)
        record("potential.L", L)
        t.done()
        pot = sawtooth_potential(H, kappa, L)
        sawtooth = (H, kappa, L)
    else:
        raise ConfigError(f"unknown potential.kind {kind!r}; expected zero, "
                          f"loglog, power, log1p, or sawtooth")
    if normalize:
        pot = normalize_potential(pot, model)
    return pot, sawtooth


def _load_rate(t: _Keys, record) -> RateFunction:
    kind = t.text("kind")
    record("rate.kind", kind)
    if kind == "constant":
        c = t.num("c")
        record("rate.c", c)
        t.done()
        return RateFunction.constant(c)
    if kind in ("power", "exp-power", "exp-log-power"):
        c, p = t.num("c"), t.num("p")
        record("rate.c", c)
        record("rate.p", p)
        t.done()
        factory = {"power": RateFunction.power,
                   "exp-power": RateFunction.exp_power,
                   "exp-log-power": RateFunction.exp_log_power}[kind]
        return factory(c, p)
    if kind == "table":
        rs = _numbers(t, "rs")
        betas = _numbers(t, "betas")
        record("rate.rs", rs)
        record("rate.betas", betas)
        t.done()
        return RateFunction.table(rs, betas)
    raise ConfigError(f"unknown rate.kind {kind!r}; expected constant, power, "
                      f"exp-power, exp-log-power, or table")


def load_scenario(document) -> Scenario:
    """Build a scenario from a TOML document (text, bytes, or parsed mapping).

    Unknown keys are rejected by name; every numeric constraint errors with
    the key and the violated bound.
    """
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8")
    if isinstance(document, str):
        try:
            data = tomllib.loads(document)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid config document: {exc}") from None
    elif isinstance(document, Mapping):
        data = dict(document)
    else:
        raise ConfigError(
            f"config document must be TOML text or a mapping, got "
            f"{type(document).__name__}")

    params: dict = {}

    def record(key, value):
        if value is not None:
            params[key] = value

    top = _Keys("", data)
    name = top.text("name")
    seed = top.integer("seed", DEFAULT_SETTINGS.seed)
    kappa1 = top.num("kappa1", 0.0)
    if kappa1 < 0:
        raise ConfigError(f"kappa1 must be nonnegative, got {kappa1:g}")
    n_max = top.integer("n_max", 48)
    if n_max < 1:
        raise ConfigError(f"n_max must be a positive integer, got {n_max}")
    notes = top.text("notes", "")

    theorem_single = top.text("theorem", None)
    theorem_many = top.array("theorems", None)
    if theorem_single is not None and theorem_many is not None:
        raise ConfigError("pass either 'theorem' or 'theorems', not both")
    if theorem_many is not None:
        theorems = tuple(str(v) for v in theorem_many)
    elif theorem_single is not None:
        theorems = (theorem_single,)
    else:
        raise ConfigError("missing required key theorem")
    valid = THEOREMS + ("falsify",)
    for th in theorems:
        if th not in valid:
            raise ConfigError(f"unknown theorem {th!r}; expected one of "
                              f"{', '.join(valid)}")
    record("theorems", list(theorems))
    record("kappa1", kappa1)

    model_t = top.table("model", None)
    kernel_t = top.table("kernel", None)
    potential_t = top.table("potential", None)
    rate_t = top.table("rate", None)
    for label, tval in (("model", model_t), ("kernel", kernel_t),
                        ("potential", potential_t), ("rate", rate_t)):
        if tval is None:
            raise ConfigError(f"missing required table [{label}]")
    grid_t = top.table("grid", None)
    plan_t = top.table("plan", None)
    probe_t = top.table("probe", None)
    top.done()

    model = _load_model(model_t, record)
    kernel = _load_kernel(kernel_t, model, record)
    potential, sawtooth = _load_potential(potential_t, model, record)
    rate = _load_rate(rate_t, record)

    r_grid: Tuple[float, ...] = ()
    if grid_t is not None:
        r_grid = _numbers(grid_t, "r")
        grid_t.done()
        if any(r <= 0 for r in r_grid) or any(
                a >= b for a, b in zip(r_grid, r_grid[1:])):
            raise ConfigError("grid.r must be positive and strictly increasing")
        record("grid.r", r_grid)

    plan = None
    if plan_t is not None:
        delta = plan_t.num("delta")
        if not delta > 1.0:
            raise ConfigError(f"plan.delta must exceed 1, got {delta:g}")
        a = plan_t.num("a", 1.0)
        b = plan_t.num("b", 2.0)
        if not a > 0 or not b > 1.0:
            raise ConfigError("plan needs a > 0 and b > 1")
        i_max = plan_t.integer("I_max", 40)
        if i_max < 1:
            raise ConfigError(f"plan.I_max must be at least 1, got {i_max}")
        k_rule = plan_t.text("k_rule", "equal")
        plan_t.done()
        plan = SequencePlan(delta=delta, a=a, b=b, k_rule=k_rule, I_max=i_max)
        record("plan", [delta, a, b, k_rule, i_max])

    n_range: Tuple[int, ...] = ()
    if probe_t is not None:
        H = probe_t.num("H")
        kappa = probe_t.num("kappa")
        L = probe_t.num("L")
        _check_sawtooth_params(H, kappa, L)
        sawtooth = (H, kappa, L)
        raw_range = probe_t.array("n_range", None)
        probe_t.done()
        if raw_range is not None:
            n_range = tuple(int(v) for v in raw_range)
            if any(a >= b for a, b in zip(n_range, n_range[1:])):
                raise ConfigError("probe.n_range must be strictly increasing")
        record("probe", [H, kappa, L])

    return Scenario(name=name, model=model, kernel=kernel, potential=potential,
                    rate=rate, theorems=theorems, r_grid=r_grid, plan=plan,
                    seed=seed, kappa1=kappa1, n_max=n_max, sawtooth=sawtooth,
                    n_range=n_range, params=params, notes=notes)


# ---------------------------------------------------------------------------
# Rate curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatePoint:
    """One synthesized rate value with its witness and provenance."""

    r: float
    log_beta_raw: float
    log_beta_monotone: float
    witness: Mapping
    status: str
    stderr: float
    diagnostic: Optional[str] = None

    @property
    def beta_raw(self) -> float:
        return exp_ext(self.log_beta_raw)

    @property
    def beta_monotone(self) -> float:
        return exp_ext(self.log_beta_monotone)


@dataclass(frozen=True)
class RateCurve:
    """Synthesized rate values over an increasing r-grid."""

    scenario: str
    theorem: str
    seed: int
    scenario_hash: str
    points: Tuple[RatePoint, ...]


def running_min(values: Sequence[float]) -> Tuple[float, ...]:
    """Prefix minima; the grid-infimum monotonization of a raw rate column."""
    out, best = [], math.inf
    for v in values:
        best = min(best, v)
        out.append(best)
    return tuple(out)


def thread_count(explicit: Optional[int] = None) -> int:
    """Worker count: the explicit request, else LEVYFORM_THREADS, else 1."""
    if explicit is None:
        raw = os.environ.get("LEVYFORM_THREADS", "")
        if not raw:
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(
                f"LEVYFORM_THREADS must be an integer, got {raw!r}") from None
    else:
        n = int(explicit)
    if n < 1:
        raise ConfigError(f"thread count must be at least 1, got {n}")
    return n


def scenario_hash_of(scenario: Scenario) -> str:
    """Stable 16-hex digest of the scenario's declarative description."""
    plan = scenario.plan
    desc = {
        "name": scenario.name,
        "theorems": list(scenario.theorems),
        "r_grid": list(scenario.r_grid),
        "seed": scenario.seed,
        "kappa1": scenario.kappa1,
        "n_max": scenario.n_max,
        "sawtooth": list(scenario.sawtooth) if scenario.sawtooth else None,
        "n_range": list(scenario.n_range),
        "params": {k: _jsonable(v) for k, v in sorted(dict(scenario.params).items())},
        "plan": None if plan is None else [plan.delta, plan.a, plan.b,
                                           plan.k_rule, plan.I_max],
        "labels": [getattr(scenario.model, "label", ""),
                   getattr(scenario.kernel, "label", ""),
                   getattr(scenario.potential, "label", ""),
                   scenario.rate.label],
    }
    return hashlib.sha256(_json_text(desc).encode("utf-8")).hexdigest()[:16]


def run_rate(scenario: Scenario, theorem: Optional[str] = None, *,
             r_grid: Optional[Sequence[float]] = None,
             max_workers: Optional[int] = None) -> RateCurve:
    """Synthesize the rate curve over the r-grid (parallel, ordered assembly).

    The curve carries both the raw grid values and their running minimum;
    results are deterministic for a fixed (scenario, seed) regardless of the
    worker count.
    """
    th = theorem if theorem is not None else scenario.theorems[0]
    if th == "falsify":
        raise ConfigError("'falsify' is a falsification protocol, not a rate "
                          "synthesizer; use the falsify subcommand")
    preflight(scenario, th)
    grid = tuple(float(r) for r in (scenario.r_grid if r_grid is None else r_grid))
    if not grid:
        raise ConfigError("the r-grid is empty; pass --r-grid or give the "
                          "scenario a [grid] table")
    if any(r <= 0 for r in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
        raise ConfigError("the r-grid must be positive and strictly increasing")

    ctx = scenario.context()
    if th == "super-finite":
        fn: Callable[[float], SynthesisResult] = (
            lambda r: beta_V_super_finite(ctx, r, n_max=scenario.n_max))
    elif th == "super-infinite":
        plan = scenario.plan
        fn = lambda r: beta_V_super_infinite(ctx, plan, r)
    elif th == "variation":
        fn = lambda r: beta_V_variation(ctx, scenario.kappa1, r)
    else:
        fn = lambda r: beta_V_weak(ctx, r)

    workers = thread_count(max_workers)
    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, grid))
    else:
        results = [fn(r) for r in grid]

    points, best = [], math.inf
    for res in results:
        best = min(best, res.log_value)
        points.append(RatePoint(
            r=res.r, log_beta_raw=res.log_value, log_beta_monotone=best,
            witness=dict(res.witness), status=res.status, stderr=res.stderr,
            diagnostic=res.diagnostic))
    return RateCurve(scenario=scenario.name, theorem=th, seed=scenario.seed,
                     scenario_hash=scenario_hash_of(scenario),
                     points=tuple(points))


# ---------------------------------------------------------------------------
# Exponent fits
# ---------------------------------------------------------------------------


_TRANSFORMS = ("log-log", "loglog-log", "loglog-loglog")


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through the transformed curve points."""

    transform: str
    column: str
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def fit_exponent(curve: RateCurve, transform: str, *,
                 column: str = "monotone") -> FitResult:
    """Fit a line to the transformed (r, beta) pairs.

    Transforms (y vs x): ``log-log`` is log beta vs log(1/r); ``loglog-log``
    is log log beta vs log(1/r); ``loglog-loglog`` is log log beta vs
    log log(1/r).  Points whose transform is undefined or infinite are
    dropped; at least 5 must survive.
    """
    if transform not in _TRANSFORMS:
        raise ConfigError(f"unknown transform {transform!r}; expected one of "
                          f"{', '.join(_TRANSFORMS)}")
    if column not in ("raw", "monotone"):
        raise ConfigError(f"column must be 'raw' or 'monotone', got {column!r}")
    xs, ys = [], []
    for pt in curve.points:
        log_beta = (pt.log_beta_monotone if column == "monotone"
                    else pt.log_beta_raw)
        x = -math.log(pt.r)
        if transform == "log-log":
            y = log_beta
        else:
            y = math.log(log_beta) if log_beta > 0 else math.nan
            if transform == "loglog-loglog":
                x = math.log(x) if x > 0 else math.nan
        if math.isfinite(x) and math.isfinite(y):
            xs.append(x)
            ys.append(y)
    if len(xs) < 5:
        raise PrecisionError(
            f"exponent fit needs at least 5 finite transformed points, got "
            f"{len(xs)}")
    slope, intercept = np.polyfit(np.asarray(xs), np.asarray(ys), 1)
    resid = np.asarray(ys) - (slope * np.asarray(xs) + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((np.asarray(ys) - np.mean(ys)) ** 2))
    if ss_tot > 0.0:
        r_squared = 1.0 - ss_res / ss_tot
    else:
        r_squared = 1.0 if ss_res == 0.0 else 0.0
    return FitResult(transform=transform, column=column, slope=float(slope),
                     intercept=float(intercept), r_squared=r_squared,
                     n_points=len(xs))


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _fmt17(x: float) -> str:
    """17-significant-digit decimal; round-trips every finite float64."""
    return format(float(x), ".17g")


def _jsonable(v):
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    return v


def _json_text(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats and inf tokens."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return _fmt17(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {_json_text(v, indent + 1)}"
            for k, v in obj.items())
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(f"{pad}  {_json_text(v, indent + 1)}" for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    raise ConfigError(f"cannot serialize {type(obj).__name__} to JSON")


def _dist_version(name: str) -> str:
    try:
        return importlib.metadata.version(name)
    except importlib.metadata.PackageNotFoundError:
        return "unknown"


def _versions() -> dict:
    return {"levyform": _dist_version("levyform"),
            "numpy": _dist_version("numpy"),
            "scipy": _dist_version("scipy"),
            "python": platform.python_version()}


def _witness_cells(witness: Mapping) -> list:
    n = witness.get("n")
    k = witness.get("k")
    j = witness.get("j")
    s = witness.get("s", witness.get("s_prime"))
    rp = witness.get("rprime", witness.get("r"))
    return ["" if n is None else _fmt17(n),
            "" if k is None else _fmt17(k),
            "" if j is None else str(int(j)),
            "" if s is None else _fmt17(s),
            "" if rp is None else _fmt17(rp)]


def curve_to_csv(curve: RateCurve) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for pt in curve.points:
        cells = [_fmt17(pt.r), _fmt17(pt.beta_raw), _fmt17(pt.beta_monotone)]
        cells += _witness_cells(pt.witness)
        cells += [pt.status, _fmt17(pt.stderr)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def curve_to_json(curve: RateCurve) -> str:
    meta = {"artifact": "rate-curve", "scenario": curve.scenario,
            "theorem": curve.theorem, "seed": curve.seed,
            "scenario_hash": curve.scenario_hash, "versions": _versions(),
            "columns": list(CSV_COLUMNS)}
    points = []
    for pt in curve.points:
        entry = {"r": pt.r, "beta_V_raw": pt.beta_raw,
                 "beta_V_monotone": pt.beta_monotone,
                 "log_beta_V_raw": pt.log_beta_raw,
                 "log_beta_V_monotone": pt.log_beta_monotone,
                 "witness": dict(pt.witness), "support_status": pt.status,
                 "stderr_bars": pt.stderr}
        if pt.diagnostic is not None:
            entry["diagnostic"] = pt.diagnostic
        points.append(entry)
    return _json_text({"meta": meta, "points": points}) + "\n"


def emit(obj, fmt: str, path) -> Path:
    """Write a curve (csv or json) or a report mapping (json) to a file."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}; expected csv or json")
    if isinstance(obj, RateCurve):
        text = curve_to_csv(obj) if fmt == "csv" else curve_to_json(obj)
    elif isinstance(obj, Mapping):
        if fmt == "csv":
            raise ConfigError("only rate curves emit as csv; use --format json")
        text = _json_text(obj) + "\n"
    else:
        raise ConfigError(f"cannot emit a {type(obj).__name__}")
    target = Path(path)
    try:
        target.write_bytes(text.encode("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot write {target}: {exc}") from None
    return target


def _coerce_witness(raw: Mapping) -> dict:
    out = {}
    for key, value in raw.items():
        out[key] = int(value) if key == "j" else float(value)
    return out


def _curve_from_json(text: str) -> RateCurve:
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"invalid JSON curve: {exc}") from None
    meta = doc.get("meta", {})
    points = []
    for entry in doc.get("points", ()):
        braw = float(entry["beta_V_raw"])
        bmono = float(entry["beta_V_monotone"])
        lraw = entry.get("log_beta_V_raw")
        lmono = entry.get("log_beta_V_monotone")
        points.append(RatePoint(
            r=float(entry["r"]),
            log_beta_raw=float(lraw) if lraw is not None else log_ext(braw),
            log_beta_monotone=(float(lmono) if lmono is not None
                               else log_ext(bmono)),
            witness=_coerce_witness(entry.get("witness", {})),
            status=str(entry.get("support_status", "")),
            stderr=float(entry.get("stderr_bars", 0.0)),
            diagnostic=entry.get("diagnostic")))
    return RateCurve(scenario=str(meta.get("scenario", "")),
                     theorem=str(meta.get("theorem", "")),
                     seed=int(meta.get("seed", 0)),
                     scenario_hash=str(meta.get("scenario_hash", "")),
                     points=tuple(points))


def _curve_from_csv(text: str) -> RateCurve:
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ConfigError("unrecognized CSV header; expected "
                          + ",".join(CSV_COLUMNS))
    points = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise ConfigError(f"malformed CSV row: {ln!r}")
        witness = {}
        for key, cell in zip(("n", "k", "j", "s", "rprime"), cells[3:8]):
            if cell:
                witness[key] = int(cell) if key == "j" else float(cell)
        braw, bmono = float(cells[1]), float(cells[2])
        points.append(RatePoint(
            r=float(cells[0]), log_beta_raw=log_ext(braw),
            log_beta_monotone=log_ext(bmono), witness=witness,
            status=cells[8], stderr=float(cells[9])))
    return RateCurve(scenario="", theorem="", seed=0, scenario_hash="",
                     points=tuple(points))


def load_curve(path) -> RateCurve:
    """Read a curve back from an emitted CSV or JSON file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        return _curve_from_json(text)
    return _curve_from_csv(text)


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D401 - argparse hook
        raise ConfigError(message)


def _parse_r_grid(text: str) -> Tuple[float, ...]:
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ConfigError("an r-grid span must be lo:hi:count")
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if not 0 < lo < hi or count < 2:
                raise ConfigError(
                    "an r-grid span needs 0 < lo < hi and count >= 2")
            return tuple(float(r) for r in np.geomspace(lo, hi, count))
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"cannot parse r-grid {text!r}") from None
    if not values:
        raise ConfigError("the r-grid is empty")
    return values


def _parse_int_list(text: str, what: str) -> Tuple[int, ...]:
    text = text.strip()
    try:
        if ":" in text:
            lo, hi = (int(tok) for tok in text.split(":"))
            if hi < lo:
                raise ConfigError(f"{what} span must be lo:hi with hi >= lo")
            return tuple(range(lo, hi + 1))
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}") from None


def _parse_rate_spec(text: str) -> RateFunction:
    parts = text.split(":")
    kind = parts[0]
    factories = {"constant": (RateFunction.constant, 1),
                 "power": (RateFunction.power, 2),
                 "exp-power": (RateFunction.exp_power, 2),
                 "exp-log-power": (RateFunction.exp_log_power, 2)}
    if kind not in factories:
        raise ConfigError(f"unknown rate kind {kind!r}; expected one of "
                          f"{', '.join(factories)}")
    factory, arity = factories[kind]
    if len(parts) != 1 + arity:
        raise ConfigError(f"rate spec {text!r} needs {arity} numeric "
                          f"parameter(s) after the kind")
    try:
        args = [float(tok) for tok in parts[1:]]
    except ValueError:
        raise ConfigError(f"cannot parse rate spec {text!r}") from None
    return factory(*args)


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="name of a built-in scenario")
    p.add_argument("--config", help="path to a TOML scenario document")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--max-samples", type=int,
                   help="override the Monte Carlo sample budget")
    p.add_argument("--tolerance", type=float,
                   help="relative tolerance (Monte Carlo error cap, or the "
                        "residual tolerance for 'test')")


def _curve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theorem", choices=THEOREMS + ("falsify",),
                   help="which synthesizer to run (default: the scenario's "
                        "first theorem)")
    p.add_argument("--r-grid", help="comma-separated values or lo:hi:count "
                                    "(geometric)")
    p.add_argument("--out", help="write the artifact to this path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _resolve_scenario(args, *, tolerance_is_mc: bool = True) -> Scenario:
    if args.config and args.scenario:
        raise ConfigError("pass either --scenario or --config, not both")
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
        scn = load_scenario(text)
    elif args.scenario:
        scn = get_scenario(args.scenario)
    else:
        raise ConfigError("a scenario is required: pass --scenario NAME or "
                          "--config FILE")
    if args.seed is not None:
        scn = replace(scn, seed=args.seed)
    settings = scn.settings
    if args.max_samples is not None:
        if args.max_samples < 1:
            raise ConfigError("--max-samples must be positive")
        settings = replace(settings, max_samples=args.max_samples)
    if tolerance_is_mc and args.tolerance is not None:
        if not 0 < args.tolerance < 1:
            raise ConfigError("--tolerance must lie in (0,1)")
        settings = replace(settings, rel_err_cap=args.tolerance)
    if settings is not scn.settings:
        scn = replace(scn, settings=settings)
    return scn


def _emit_or_print(obj, args) -> None:
    if args.out:
        path = emit(obj, args.format, args.out)
        count = len(obj.points) if isinstance(obj, RateCurve) else 1
        print(f"wrote {path} ({count} point(s))" if isinstance(obj, RateCurve)
              else f"wrote {path}")
    elif isinstance(obj, RateCurve):
        text = curve_to_csv(obj) if args.format == "csv" else curve_to_json(obj)
        sys.stdout.write(text)
    else:
        sys.stdout.write(_json_text(obj) + "\n")


def _report_meta(scn: Scenario, artifact: str) -> dict:
    return {"artifact": artifact, "scenario": scn.name, "seed": scn.seed,
            "scenario_hash": scenario_hash_of(scn), "versions": _versions()}


def _cmd_lambda(args) -> int:
    scn = _resolve_scenario(args)
    lam = scn.context().lambda_()
    print(f"scenario = {scn.name}")
    print(f"lambda = {lam:.12g}")
    return 0


def _cmd_quantities(args) -> int:
    scn = _resolve_scenario(args)
    ctx = scn.context()
    row = ctx.row(args.n, args.k, args.variant)
    print(f"scenario = {scn.name}")
    print(f"n = {args.n:g}, k = {args.k:g}, variant = {args.variant}")
    print(f"lambda = {row.lam:.12g}")
    print(f"K = {row.K:.12g}")
    print(f"J = {row.J:.12g}")
    print(f"Z = {row.Z:.12g}")
    if args.variant == "super":
        print(f"eps = {row.eps:.12g} ({row.eps_status})")
        print(f"zeta = {row.zeta:.12g} ({row.zeta_status})")
    print(f"gamma = {row.gamma:.12g} (stderr {row.gamma_stderr:.3g}, "
          f"{row.region_status})")
    print(f"eta = {row.eta:.12g} (stderr {row.eta_stderr:.3g}, "
          f"{row.region_status})")
    return 0


def _cmd_rate(args) -> int:
    scn = _resolve_scenario(args)
    grid = _parse_r_grid(args.r_grid) if args.r_grid else None
    curve = run_rate(scn, args.theorem, r_grid=grid)
    _emit_or_print(curve, args)
    return 0


def _cmd_test(args) -> int:
    scn = _resolve_scenario(args, tolerance_is_mc=False)
    theorem = args.theorem if args.theorem else scn.theorems[0]
    grid = _parse_r_grid(args.r_grid) if args.r_grid else None
    curve = run_rate(scn, theorem, r_grid=grid)
    ctx = scn.context()
    rel_tol = args.tolerance if args.tolerance is not None else 1e-3
    ramps = _parse_int_list(args.ramps, "--ramps")
    families = [(n, make_family(FamilySpec(family="ramp", n=n))) for n in ramps]
    failures = 0
    reports = []
    for pt in curve.points:
        for n, f in families:
            if theorem == "weak":
                rep = weak_residual(ctx, f, pt.r, pt.beta_monotone,
                                    rel_tol=rel_tol)
            else:
                rep = super_residual(ctx, f, pt.r, pt.beta_monotone,
                                     rel_tol=rel_tol)
            reports.append({"r": pt.r, "ramp_n": n, **asdict(rep)})
            failures += rep.verdict != "pass"
            print(f"r = {pt.r:g}  ramp n = {n}  residual = {rep.residual:.6g}"
                  f"  [{rep.verdict}]")
    if args.out:
        emit({"meta": _report_meta(scn, "residual-check"), "theorem": theorem,
              "reports": reports}, "json", args.out)
        print(f"wrote {args.out}")
    if failures:
        raise PrecisionError(f"{failures} residual check(s) failed")
    print(f"all {len(reports)} residual check(s) pass")
    return 0


def _cmd_falsify(args) -> int:
    scn = _resolve_scenario(args)
    ctx = scn.context()
    n_range = (_parse_int_list(args.n_range, "--n-range") if args.n_range
               else scn.n_range)
    if not n_range:
        raise ConfigError("an n-range is required: pass --n-range or use a "
                          "scenario that defines one")
    if args.via == "rayleigh":
        preflight(scn, "falsify")
        H, kappa, L = scn.sawtooth
        sweep = poincare_disproof_sweep(ctx, H, kappa, L, n_range,
                                        max_workers=thread_count())
        print(f"log-Rayleigh sweep on scenario {scn.name} "
              f"(H={H:g}, kappa={kappa:g}, L={L:g})")
        for n, value in sweep.points:
            print(f"n={n}  log ratio = {value:.6f}")
        print(f"strictly decreasing: "
              f"{'yes' if sweep.strictly_decreasing else 'no'}")
        if sweep.slope is not None:
            print(f"slope = {sweep.slope:.6g} per unit n")
        if args.out:
            emit({"meta": _report_meta(scn, "rayleigh-sweep"),
                  "H": H, "kappa": kappa, "L": L,
                  "points": [{"n": n, "log_rayleigh": v}
                             for n, v in sweep.points],
                  "strictly_decreasing": sweep.strictly_decreasing,
                  "slope": sweep.slope}, "json", args.out)
            print(f"wrote {args.out}")
        return 0
    # probe mode: residual falsification of a candidate rate
    if not args.candidate:
        raise ConfigError("probe mode needs --candidate kind:c:p")
    candidate = _parse_rate_spec(args.candidate)
    result = sharpness_probe(ctx, candidate, n_range, mode=args.mode)
    print(f"sharpness probe on scenario {scn.name} "
          f"(candidate {candidate.label}, mode {args.mode})")
    for n, rep in result.reports:
        print(f"n={n}  residual = {rep.residual:.6g}  [{rep.verdict}]")
    if result.indeterminate:
        print(f"indeterminate at n = "
              f"{', '.join(str(n) for n in result.indeterminate)}")
    print(f"probe status: {result.status}")
    if result.violation_n is not None:
        print(f"first violation at n = {result.violation_n}")
    if args.out:
        emit({"meta": _report_meta(scn, "sharpness-probe"),
              "candidate": candidate.label, "mode": args.mode,
              "status": result.status, "violation_n": result.violation_n,
              "indeterminate": list(result.indeterminate),
              "reports": [{"n": n, **asdict(rep)}
                          for n, rep in result.reports]}, "json", args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_fit(args) -> int:
    curve = load_curve(args.path)
    fit = fit_exponent(curve, args.transform, column=args.column)
    print(f"transform = {fit.transform}")
    print(f"column = {fit.column}")
    print(f"slope = {fit.slope:.12g}")
    print(f"intercept = {fit.intercept:.12g}")
    print(f"R^2 = {fit.r_squared:.12g}")
    print(f"points = {fit.n_points}")
    return 0


def _cmd_scenario_list(args) -> int:
    for name in scenario_names():
        scn = get_scenario(name)
        grid = f"{len(scn.r_grid)} grid pts" if scn.r_grid else "no grid"
        print(f"{name:14s} theorems={','.join(scn.theorems):26s} {grid:13s} "
              f"{scn.notes}")
    return 0


def _cmd_scenario_run(args) -> int:
    scn = _resolve_scenario(args)
    theorem = args.theorem if args.theorem else scn.theorems[0]
    if theorem == "falsify":
        return _run_falsify_default(scn, args)
    grid = _parse_r_grid(args.r_grid) if args.r_grid else None
    curve = run_rate(scn, theorem, r_grid=grid)
    _emit_or_print(curve, args)
    return 0


def _run_falsify_default(scn: Scenario, args) -> int:
    preflight(scn, "falsify")
    H, kappa, L = scn.sawtooth
    sweep = poincare_disproof_sweep(scn.context(), H, kappa, L, scn.n_range,
                                    max_workers=thread_count())
    report = {"meta": _report_meta(scn, "rayleigh-sweep"),
              "H": H, "kappa": kappa, "L": L,
              "points": [{"n": n, "log_rayleigh": v} for n, v in sweep.points],
              "strictly_decreasing": sweep.strictly_decreasing,
              "slope": sweep.slope}
    if args.out:
        if args.format == "csv":
            raise ConfigError("falsification reports emit as json; pass "
                              "--format json")
        emit(report, "json", args.out)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(_json_text(report) + "\n")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="levyform",
                     description="Rate-function laboratory for jump-form "
                                 "perturbation bounds")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("lambda", help="print the kernel domination constant")
    _scenario_flags(p)
    p.set_defaults(func=_cmd_lambda)

    p = sub.add_parser("quantities", help="print the growth row at (n, k)")
    _scenario_flags(p)
    p.add_argument("--n", type=float, default=2.0)
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--variant", choices=("super", "weak"), default="super")
    p.set_defaults(func=_cmd_quantities)

    p = sub.add_parser("rate", help="synthesize a rate curve over an r-grid")
    _scenario_flags(p)
    _curve_flags(p)
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("test", help="synthesize a curve and verify its "
                                    "defining inequality on ramp functions")
    _scenario_flags(p)
    _curve_flags(p)
    p.add_argument("--ramps", default="4,8,16",
                   help="comma-separated ramp scales (default 4,8,16)")
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("falsify", help="run a falsification protocol")
    _scenario_flags(p)
    p.add_argument("--via", choices=("rayleigh", "probe"), default="rayleigh")
    p.add_argument("--n-range", help="scales, comma-separated or lo:hi")
    p.add_argument("--candidate", help="candidate rate kind:c:p (probe mode)")
    p.add_argument("--mode", choices=("super", "weak"), default="super")
    p.add_argument("--out", help="write a JSON report to this path")
    p.set_defaults(func=_cmd_falsify)

    p = sub.add_parser("fit", help="fit an exponent to an emitted curve file")
    p.add_argument("path")
    p.add_argument("--transform", choices=_TRANSFORMS, default="log-log")
    p.add_argument("--column", choices=("raw", "monotone"), default="monotone")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("scenario", help="list or run built-in scenarios")
    ssub = p.add_subparsers(dest="action", metavar="action")
    pl = ssub.add_parser("list", help="list the scenario registry")
    pl.set_defaults(func=_cmd_scenario_list)
    pr = ssub.add_parser("run", help="run a scenario's default protocol")
    _scenario_flags(pr)
    _curve_flags(pr)
    pr.set_defaults(func=_cmd_scenario_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        func = getattr(args, "func", None)
        if func is None:
            raise ConfigError("a subcommand is required; try 'levyform --help'")
        rc = func(args)
        return 0 if rc is None else int(rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except PrecisionError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return 3
    except HypothesisError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
