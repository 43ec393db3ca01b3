"""End-to-end acceptance checks for the rate-synthesis laboratory.

Each test pins one externally checkable contract of the full pipeline:
closed-form oracles, structural inequalities that hold in exact arithmetic,
recovered asymptotic exponents, and bit-exact determinism of emitted
artifacts.  Rate values carry unspecified constants, so the assertions
target structure, oracle values, and exponents - never absolute levels of
the synthesized curves (the two closed-form toys are the exception).
"""

import math
import multiprocessing
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from levyform.inequality_lab import (
    FamilySpec,
    lemma_split_check,
    log_rayleigh,
    make_family,
    super_residual,
    truncation_slack,
    weak_residual,
)
from levyform.perturbation_calculus import RateFunction, beta_V_super_finite
from levyform.quadrature_engine import piecewise_linear
from levyform.scenario_cli import (
    CSV_COLUMNS,
    fit_exponent,
    get_scenario,
    load_scenario,
    run_rate,
)

SEED = 20260814


# ---------------------------------------------------------------------------
# 1. generalized-inverse contract (exact)
# ---------------------------------------------------------------------------


def _random_rate(rng: np.random.Generator, i: int) -> RateFunction:
    kind = i % 4
    if kind == 0:
        return RateFunction.power(float(rng.uniform(0.1, 10.0)),
                                  float(rng.uniform(0.5, 3.0)))
    if kind == 1:
        return RateFunction.exp_power(float(rng.uniform(0.1, 3.0)),
                                      float(rng.uniform(0.3, 2.0)))
    if kind == 2:
        return RateFunction.constant(float(rng.uniform(0.1, 10.0)))
    m = int(rng.integers(2, 12))
    rs = np.sort(rng.uniform(0.01, 50.0, m))
    betas = np.sort(rng.uniform(0.01, 100.0, m))[::-1]
    return RateFunction.table(rs, betas)


def test_01_generalized_inverse_contract():
    """beta(r) <= s beyond the inverse, beta(r) > s strictly below it."""
    rng = np.random.default_rng(SEED)
    upper_checks = lower_checks = 0
    for i in range(1000):
        rate = _random_rate(rng, i)
        if i % 3 == 2:
            s = float(rng.uniform(0.001, 200.0))  # wild level
        else:
            x = float(10.0 ** rng.uniform(-3.0, 2.0))  # level on the curve
            s = rate.value(x)
            if i % 3 == 1 and math.isfinite(s):
                s *= float(1.0 + 0.3 * rng.uniform())
        if not (math.isfinite(s) and s > 0):
            continue
        rinv = rate.inverse(s)
        assert rinv >= 0.0
        if math.isinf(rinv):
            # the sub-level set is empty: every positive r sits below it
            for r in (1e-6, 1.0, 1e6):
                assert rate.value(r) > s
                lower_checks += 1
            continue
        if rinv < 1e6:  # keep 1e-9 above the float spacing at the boundary
            for bump in (0.0, 0.731, 17.0):
                r = rinv + 1e-9 + bump
                assert rate.value(r) <= s, (rate.label, s, rinv, r)
                upper_checks += 1
        else:
            assert rate.value(2.0 * rinv) <= s
            upper_checks += 1
        edge = rinv - 1e-9
        if edge > 0:
            for shrink in (1.0, 0.5, 1e-3):
                r = edge * shrink
                assert rate.value(r) > s, (rate.label, s, rinv, r)
                lower_checks += 1
    assert upper_checks > 1500 and lower_checks > 1500


# ---------------------------------------------------------------------------
# 2. layer-cake truncation bound (exact arithmetic)
# ---------------------------------------------------------------------------


def test_02_band_truncation_layer_cake_bound():
    """sum of squared band truncations dominates the scaled excess square."""
    rng = np.random.default_rng(SEED + 1)
    worst = math.inf
    for _ in range(100):
        delta = float(rng.uniform(1.05, 10.0))
        k = int(rng.integers(0, 21))
        block = 1000
        values = np.abs(rng.normal(0.0, 3.0, block)) * (
            10.0 ** rng.uniform(-1.0, 1.5))
        values[rng.integers(0, block, 30)] = 0.0
        # pin some values exactly on band edges delta^{j/2}
        edges = delta ** (rng.integers(0, 8, 30) / 2.0)
        values[rng.integers(0, block, 30)] = edges
        slack = truncation_slack(values, delta, k)
        worst = min(worst, float(np.min(slack)))
    assert worst >= -1e-12


# ---------------------------------------------------------------------------
# 3. kernel domination constant, closed form
# ---------------------------------------------------------------------------


def test_03_domination_constant_closed_form():
    """lambda for the alpha=1 stable pair matches c(2/(2-a) + 2/a), c=a/2."""
    lam = get_scenario("lipschitz_var").context().lambda_()
    alpha = 1.0
    oracle = (alpha / 2.0) * (2.0 / (2.0 - alpha) + 2.0 / alpha)
    assert lam == pytest.approx(oracle, rel=0.01)


# ---------------------------------------------------------------------------
# 4, 5, 7. recovered asymptotic exponents
# ---------------------------------------------------------------------------


def test_04_heavy_tail_loglog_tilt_exponent():
    """Infinite-range route: log beta_V ~ r^{-1/(1-eps)} with eps=1/2."""
    scn = get_scenario("ex2_3")
    assert scn.r_grid[0] == pytest.approx(1e-3) and scn.r_grid[-1] == pytest.approx(1e-1)
    curve = run_rate(scn)
    fit = fit_exponent(curve, "loglog-log")
    assert fit.n_points >= 5
    assert fit.slope == pytest.approx(2.0, abs=0.3)


def test_05_light_tail_sqrt_tilt_exponent():
    """Finite-range route: log beta_V ~ log^{kappa/(kappa-1)}(1/r), kappa=2."""
    curve = run_rate(get_scenario("ex2_4"))
    assert all(pt.status in ("exact", "certified") for pt in curve.points)
    fit = fit_exponent(curve, "loglog-loglog")
    assert fit.n_points >= 5
    assert fit.slope == pytest.approx(2.0, abs=0.4)


def test_07_weak_rate_polynomial_exponent():
    """Weak route: beta_V ~ r^{-eps/(alpha-eps)} = r^{-1} for alpha=1, eps=1/2."""
    curve = run_rate(get_scenario("ex3_2"))
    fit = fit_exponent(curve, "log-log")
    assert fit.n_points >= 5
    assert fit.slope == pytest.approx(1.0, abs=0.15)


# ---------------------------------------------------------------------------
# 6. spectral-gap disproof trend
# ---------------------------------------------------------------------------


def _rayleigh_point(n: int):
    scn = get_scenario("prop2_5")
    f = make_family(FamilySpec(family="sawtooth-exp", n=n, H=5.0, kappa=2.0,
                               L=20.0))
    return n, log_rayleigh(scn.context(), f)


def test_06_sawtooth_rayleigh_quotients_collapse():
    """log-Rayleigh strictly decreasing on n=2..8 with a drop of >= 13 nats."""
    get_scenario("prop2_5")  # build once; forked workers inherit the cache
    ns = [8, 7, 6, 5, 4, 3, 2]  # heaviest first for an even split
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=4, mp_context=ctx) as pool:
        values = dict(pool.map(_rayleigh_point, ns))
    seq = [values[n] for n in range(2, 9)]
    assert all(b < a for a, b in zip(seq, seq[1:])), seq
    assert seq[-1] - seq[0] <= -13.0


# ---------------------------------------------------------------------------
# 8. splitting inequalities on random test functions
# ---------------------------------------------------------------------------


def test_08_splitting_inequalities_random_functions():
    """Far/near splitting bounds hold for random piecewise-linear functions."""
    ctx = get_scenario("ex2_3").context()
    rng = np.random.default_rng(SEED + 2)
    functions = []
    while len(functions) < 20:
        xs = np.sort(rng.uniform(-12.0, 12.0, 6))
        ys = rng.uniform(-1.0, 1.0, 6)
        if np.min(np.diff(xs)) > 1e-3:
            functions.append(piecewise_linear(xs, ys))
    for idx, f in enumerate(functions):
        for n, k in ((6, 6), (10, 10)):
            for s in (0.1, 1.0):
                far, near = lemma_split_check(ctx, f, n, k, s)
                assert far.verdict == "pass", (idx, n, k, s, far)
                assert near.verdict == "pass", (idx, n, k, s, near)


# ---------------------------------------------------------------------------
# 9, 10. closed-form synthesis oracles
# ---------------------------------------------------------------------------


def test_09_variation_route_cubic_oracle():
    """kappa1=0, kappa2=1, beta=1/r collapse to beta_V(s) = 4096/s^3."""
    curve = run_rate(get_scenario("lipschitz_var"), "variation",
                     r_grid=(1.0, 2.0, 4.0))
    for pt in curve.points:
        assert pt.beta_raw == pytest.approx(4096.0 / pt.r ** 3, rel=1e-6)


def test_10_dyadic_toy_single_point():
    """Exhaustive lattice scan of the dyadic toy pins beta_V(1)."""
    res = beta_V_super_finite(get_scenario("toy_dyadic").context(), 1.0)
    assert math.exp(res.log_value) == pytest.approx(64.016, rel=5e-3)


# ---------------------------------------------------------------------------
# 11. end-to-end residual consistency on zero-potential scenarios
# ---------------------------------------------------------------------------


WEAK_ZERO_DOC = """
name = "weak-zero"
theorem = "weak"

[model]
kind = "stable"
alpha = 1.0

[kernel]
kind = "stable-pair"
alpha = 1.0

[potential]
kind = "zero"

[rate]
kind = "constant"
c = 1.0

[grid]
r = [0.05, 0.2, 1.0]
"""


def test_11_zero_potential_curves_satisfy_their_inequalities():
    """Every synthesized point keeps the defining residual nonnegative."""
    ramps = [(n, make_family(FamilySpec(family="ramp", n=n)))
             for n in (4, 8, 16)]

    scn = get_scenario("lipschitz_var")
    curve = run_rate(scn)
    ctx = scn.context()
    assert all(math.isfinite(pt.log_beta_monotone) for pt in curve.points)
    for pt in curve.points:
        for n, f in ramps:
            rep = super_residual(ctx, f, pt.r, pt.beta_monotone)
            assert rep.verdict == "pass", (pt.r, n, rep)

    scn = load_scenario(WEAK_ZERO_DOC)
    curve = run_rate(scn)
    ctx = scn.context()
    assert all(math.isfinite(pt.log_beta_monotone) for pt in curve.points)
    for pt in curve.points:
        for n, f in ramps:
            rep = weak_residual(ctx, f, pt.r, pt.beta_monotone)
            assert rep.verdict == "pass", (pt.r, n, rep)


# ---------------------------------------------------------------------------
# 12. determinism of emitted artifacts across thread counts
# ---------------------------------------------------------------------------


def test_12_csv_bytes_invariant_across_thread_counts(tmp_path):
    """Repeated runs with a fixed seed emit identical bytes for 1/4/8 threads."""
    outputs = []
    for run, threads in enumerate(("1", "4", "8", "1")):
        out = tmp_path / f"curve_{run}.csv"
        env = dict(os.environ, LEVYFORM_THREADS=threads)
        proc = subprocess.run(
            [sys.executable, "-m", "levyform.scenario_cli", "scenario", "run",
             "--scenario", "ex3_2", "--seed", str(SEED), "--out", str(out),
             "--format", "csv"],
            env=env, capture_output=True, text=True, timeout=110)
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    assert len(set(outputs)) == 1
    text = outputs[0].decode("utf-8")
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(text.splitlines()) == 1 + len(get_scenario("ex3_2").r_grid)
