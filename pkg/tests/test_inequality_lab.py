"""Tests for test-function families, residual checks, and lemma verification.

Frozen oracle values
--------------------
* Layer-cake lower bound, single case (exhaustive summation of the closed
  formula): f=7.3, delta=2.5, k=0 ->
      sum_i f_{delta,i}^2 = 9.672204373227373
      c(delta)            = 0.05403557437305933
      c(delta)((f-1)^+)^2 = 2.144671946866725
* Exponential-scenario log Rayleigh quotients (independent tensor midpoint
  log-sum oracle over the sawtooth ramps; normalization-free ratios):
      n=2: -39.5826   n=3: -43.9416   n=4: -48.2076
* Cauchy-model ramp moments (closed-form integrals of (1+|x|)^{-2}/2):
      mu(|f_4|) = 0.1469468...,  mu(f_4^2) = 0.132638...
  used only to size margins; the tests assert signs and verdicts.
"""

import math

import numpy as np
import pytest

from levyform.errors import ConfigError, HypothesisError
from levyform.inequality_lab import (
    FamilySpec,
    ResidualReport,
    lemma_split_check,
    make_family,
    poincare_disproof_sweep,
    rayleigh,
    sharpness_probe,
    super_residual,
    truncate,
    truncation_slack,
    truncation_sum_check,
    weak_residual,
)
from levyform.measure_kernel import (
    exp_power_model,
    log1p_potential,
    log_weighted_stable_model,
    loglog_potential,
    normalize_potential,
    sawtooth_potential,
    stable_model,
    stable_pair,
    zero_potential,
)
from levyform.perturbation_calculus import Context, RateFunction
from levyform.quadrature_engine import TestFunction, piecewise_linear


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def cauchy_v0_ctx():
    # beta(r) = 4/r: the prefactor must majorize the measured worst-case
    # ramp ratio mu(f^2)^2 / (4 mu(|f|)^2 E(f)) ~= 2.6 (attained near n = 8),
    # so c = 1 is genuinely invalid while c = 4 holds with uniform margin
    model = stable_model(alpha=1.0, m=1)
    kernel = stable_pair(model, alpha=1.0, finite_range=math.inf)
    return Context(model=model, kernel=kernel, potential=zero_potential(),
                   rate=RateFunction.power(4.0, 1.0))


@pytest.fixture(scope="module")
def ex23_ctx():
    model = log_weighted_stable_model(alpha=1.0, m=1)
    kernel = stable_pair(model, alpha=1.0, finite_range=math.inf)
    pot = normalize_potential(loglog_potential(0.5), model)
    return Context(model=model, kernel=kernel, potential=pot,
                   rate=RateFunction.exp_power(1.0, 1.0))


@pytest.fixture(scope="module")
def prop_ctx():
    model = exp_power_model(2.0, 1)
    kernel = stable_pair(model, alpha=0.5, finite_range=1.0)
    pot = normalize_potential(sawtooth_potential(5.0, 2.0, 20.0), model)
    return Context(model=model, kernel=kernel, potential=pot,
                   rate=RateFunction.exp_log_power(1.0, 2.0))


def hat_function():
    return piecewise_linear([-2.0, -1.0, 1.0, 2.0], [0.0, 1.0, 1.0, 0.0])


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


class TestMakeFamily:
    def test_ramp(self):
        f = make_family(FamilySpec(family="ramp", n=8))
        assert float(f(8.0)) == 0.0
        assert float(f(-8.0)) == 0.0
        assert float(f(16.0)) == 1.0
        assert float(f(-20.0)) == 1.0
        assert float(f(12.0)) == pytest.approx(0.5)
        assert float(f(0.0)) == 0.0
        assert f.lipschitz <= 2.0 / 8.0 + 1e-15
        assert f.sup_norm == pytest.approx(1.0)
        xs = np.linspace(-40, 40, 801)
        vals = np.asarray(f(xs))
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)

    def test_cutoff_l(self):
        f = make_family(FamilySpec(family="cutoff-l", n=5))
        assert float(f(5.5)) == 1.0
        assert float(f(-5.0)) == 1.0
        assert float(f(3.9)) == 0.0
        assert float(f(7.1)) == 0.0
        assert float(f(4.5)) == pytest.approx(0.5)
        xs = np.linspace(-10, 10, 4001)
        slopes = np.abs(np.diff(np.asarray(f(xs)))) / np.diff(xs)
        assert np.max(slopes) <= 2.0 + 1e-9

    def test_cutoff_g(self):
        f = make_family(FamilySpec(family="cutoff-g", n=5))
        assert float(f(0.0)) == 1.0
        assert float(f(5.0)) == 1.0
        assert float(f(-5.0)) == 1.0
        assert float(f(6.0)) == 0.0
        assert float(f(6.1)) == 0.0
        assert float(f(5.5)) == pytest.approx(0.5)
        xs = np.linspace(-8, 8, 3201)
        slopes = np.abs(np.diff(np.asarray(f(xs)))) / np.diff(xs)
        assert np.max(slopes) <= 2.0 + 1e-9

    def test_sawtooth_exp(self):
        f = make_family(FamilySpec(family="sawtooth-exp", n=3,
                                   H=5.0, kappa=2.0, L=20.0))
        assert float(f(16.0)) == 0.0
        assert float(f(10.0)) == 0.0
        assert 0.0 < float(f(17.5)) < 1.0
        assert float(f(19.0)) == pytest.approx(1.0, abs=1e-12)
        assert float(f(20.0)) == 1.0
        xs = np.linspace(16.0, 19.0, 200)
        vals = np.asarray(f(xs))
        assert np.all(np.diff(vals) >= -1e-15)

    def test_sawtooth_exp_parameter_gates(self):
        with pytest.raises(ConfigError, match="L"):
            make_family(FamilySpec(family="sawtooth-exp", n=3,
                                   H=5.0, kappa=2.0, L=10.0))
        with pytest.raises(ConfigError, match="H"):
            make_family(FamilySpec(family="sawtooth-exp", n=3,
                                   H=4.0, kappa=2.0, L=100.0))
        with pytest.raises(ConfigError, match="kappa"):
            make_family(FamilySpec(family="sawtooth-exp", n=3,
                                   H=5.0, kappa=1.0, L=100.0))
        with pytest.raises(ConfigError):
            make_family(FamilySpec(family="ramp", n=0))
        with pytest.raises(ConfigError):
            make_family(FamilySpec(family="no-such-family", n=3))

    def test_truncation_family(self):
        base = piecewise_linear([-2.0, -1.0, 1.0, 2.0],
                                [0.0, 10.0, 10.0, 0.0])
        spec = FamilySpec(family="truncation", delta=4.0, i=1, base=base)
        g = make_family(spec)
        assert float(g(0.0)) == pytest.approx(2.0)   # min(10-2, 4-2)
        assert float(g(2.0)) == 0.0
        assert float(g(-1.85)) == 0.0                # base value 1.5 < 2
        assert g.sup_norm == pytest.approx(2.0)
        with pytest.raises(ConfigError):
            make_family(FamilySpec(family="truncation", delta=4.0, i=1))

    def test_spec_records_realized_function(self):
        spec = FamilySpec(family="ramp", n=4)
        f = make_family(spec)
        assert spec.realized is f


# ---------------------------------------------------------------------------
# truncation arithmetic and the layer-cake lower bound
# ---------------------------------------------------------------------------


class TestTruncate:
    def test_spot_values(self):
        assert truncate(0.0, 3.0, 2) == 0.0
        assert truncate(10.0, 4.0, 1) == pytest.approx(2.0)

    def test_range_bound(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            v = rng.uniform(0.0, 40.0)
            d = 1.0 + rng.uniform(0.01, 9.0)
            i = int(rng.integers(0, 8))
            out = truncate(v, d, i)
            assert 0.0 <= out <= d ** ((i + 1) / 2.0) - d ** (i / 2.0) + 1e-12

    def test_vectorized(self):
        vals = np.array([0.0, 1.0, 5.0, 10.0, 100.0])
        out = truncate(vals, 4.0, 1)
        np.testing.assert_allclose(out, [0.0, 0.0, 2.0, 2.0, 2.0])

    def test_layer_cake_single_case(self):
        # exhaustive-summation oracle, frozen in the module docstring
        vals = np.array([7.3])
        slack = truncation_slack(vals, 2.5, 0)
        lhs_minus_rhs = 9.672204373227373 - 2.144671946866725
        assert float(slack[0]) == pytest.approx(lhs_minus_rhs, rel=1e-12)

    def test_layer_cake_random_nonnegative(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            vals = rng.uniform(0.0, 60.0, size=500)
            d = 1.0 + rng.uniform(0.02, 8.0)
            k = int(rng.integers(0, 6))
            slack = truncation_slack(vals, d, k)
            assert float(np.min(slack)) >= -1e-12


# ---------------------------------------------------------------------------
# residual reports
# ---------------------------------------------------------------------------


class TestSuperResidual:
    def test_constant_pass_and_fail(self, cauchy_v0_ctx):
        c = TestFunction(fn=lambda x: np.full_like(np.asarray(x, float), 1.2),
                         sup_norm=1.2, lipschitz=0.0, settle_radius=0.0)
        rep = super_residual(cauchy_v0_ctx, c, 0.3, 2.0)
        assert rep.tag == "super"
        assert rep.residual == pytest.approx(1.44, rel=1e-6)
        assert rep.verdict == "pass"
        rep2 = super_residual(cauchy_v0_ctx, c, 0.3, 0.5)
        assert rep2.residual == pytest.approx(-0.72, rel=1e-6)
        assert rep2.verdict == "fail"

    def test_base_inequality_sanity_on_ramp(self, cauchy_v0_ctx):
        # V = 0, base rate beta(r) = 4/r at r = 0.1 on the ramp f_8
        f = make_family(FamilySpec(family="ramp", n=8))
        r = 0.1
        rep = super_residual(cauchy_v0_ctx, f, r,
                             cauchy_v0_ctx.rate.value(r))
        assert rep.rate_value == pytest.approx(40.0)
        assert rep.verdict == "pass"
        assert rep.residual > 0.0

    def test_adversarial_zero_rate_fails(self, cauchy_v0_ctx):
        f = make_family(FamilySpec(family="ramp", n=4))
        rep = super_residual(cauchy_v0_ctx, f, 0.01, 1e-12)
        assert rep.verdict == "fail"
        assert rep.residual < 0.0

    def test_report_arithmetic(self, cauchy_v0_ctx):
        f = make_family(FamilySpec(family="ramp", n=4))
        rep = super_residual(cauchy_v0_ctx, f, 0.1, 5.0)
        assert rep.residual == pytest.approx(rep.right - rep.left, rel=1e-12)
        assert rep.tolerance >= 0.0
        assert rep.verdict == ("pass" if rep.residual >= -rep.tolerance
                               else "fail")


class TestWeakResidual:
    def test_constant_is_exactly_trivial(self, cauchy_v0_ctx):
        c = TestFunction(fn=lambda x: np.full_like(np.asarray(x, float), 3.0),
                         sup_norm=3.0, lipschitz=0.0, settle_radius=0.0)
        rep = weak_residual(cauchy_v0_ctx, c, 0.2, 1.0)
        assert rep.tag == "weak"
        assert rep.residual == pytest.approx(0.0, abs=1e-9)
        assert rep.verdict == "pass"

    def test_base_inequality_sanity_on_ramp(self, cauchy_v0_ctx):
        f = make_family(FamilySpec(family="ramp", n=8))
        rep = weak_residual(cauchy_v0_ctx, f, 0.1,
                            cauchy_v0_ctx.rate.value(0.1))
        assert rep.verdict == "pass"
        assert rep.residual > 0.0

    def test_zero_rate_tiny_r_fails(self, cauchy_v0_ctx):
        f = make_family(FamilySpec(family="ramp", n=8))
        rep = weak_residual(cauchy_v0_ctx, f, 1e-8, 1e-12)
        assert rep.verdict == "fail"
        assert rep.residual < 0.0


# ---------------------------------------------------------------------------
# Rayleigh quotients and the counterexample sweep
# ---------------------------------------------------------------------------


class TestRayleigh:
    def test_constant_rejected(self, cauchy_v0_ctx):
        c = TestFunction(fn=lambda x: np.full_like(np.asarray(x, float), 2.0),
                         sup_norm=2.0, lipschitz=0.0, settle_radius=0.0)
        with pytest.raises(HypothesisError):
            rayleigh(cauchy_v0_ctx, c)

    def test_affine_invariance(self, cauchy_v0_ctx):
        h = hat_function()
        h2 = piecewise_linear([-2.0, -1.0, 1.0, 2.0], [7.0, 10.0, 10.0, 7.0])
        r1 = rayleigh(cauchy_v0_ctx, h)
        r2 = rayleigh(cauchy_v0_ctx, h2)
        assert r1 > 0.0
        assert r2 == pytest.approx(r1, rel=1e-6)

    def test_exponential_scenario_matches_log_oracle(self, prop_ctx):
        f3 = make_family(FamilySpec(family="sawtooth-exp", n=3,
                                    H=5.0, kappa=2.0, L=20.0))
        val = rayleigh(prop_ctx, f3)
        assert val > 0.0
        assert math.log(val) == pytest.approx(-43.9416, abs=0.1)


class TestDisproofSweep:
    def test_pinned_log_ratios_and_decay(self, prop_ctx):
        sweep = poincare_disproof_sweep(prop_ctx, 5.0, 2.0, 20.0, range(2, 5))
        assert [n for n, _ in sweep.points] == [2, 3, 4]
        logs = [v for _, v in sweep.points]
        assert logs[0] == pytest.approx(-39.5826, abs=0.1)
        assert logs[1] == pytest.approx(-43.9416, abs=0.1)
        assert logs[2] == pytest.approx(-48.2076, abs=0.1)
        assert sweep.strictly_decreasing
        assert sweep.slope == pytest.approx(-4.3125, abs=0.5)

    def test_single_point_has_no_trend(self, prop_ctx):
        sweep = poincare_disproof_sweep(prop_ctx, 5.0, 2.0, 20.0, [3])
        assert len(sweep.points) == 1
        assert sweep.slope is None
        assert sweep.strictly_decreasing

    def test_parameter_gates(self, prop_ctx, cauchy_v0_ctx):
        with pytest.raises(ConfigError):
            poincare_disproof_sweep(prop_ctx, 5.0, 2.0, 10.0, [2, 3])
        with pytest.raises(ConfigError):
            poincare_disproof_sweep(prop_ctx, 4.0, 2.0, 100.0, [2, 3])
        with pytest.raises(HypothesisError):
            # alpha = 1 violates the standing assumption alpha in (0, 1)
            poincare_disproof_sweep(cauchy_v0_ctx, 5.0, 2.0, 20.0, [2, 3])


# ---------------------------------------------------------------------------
# sharpness probes
# ---------------------------------------------------------------------------


class TestSharpnessProbe:
    def test_empty_range_is_inconclusive(self, cauchy_v0_ctx):
        res = sharpness_probe(cauchy_v0_ctx, RateFunction.constant(2.0), [],
                              mode="weak")
        assert res.status == "inconclusive"
        assert res.violation_n is None

    def test_own_rate_has_no_violation(self, cauchy_v0_ctx):
        # beta_V == 2 is the synthesized weak rate of this V = 0 scenario
        res = sharpness_probe(cauchy_v0_ctx, RateFunction.constant(2.0),
                              [4, 8], mode="weak")
        assert res.status == "inconclusive"
        assert res.violation_n is None
        assert all(rep.verdict == "pass" for _, rep in res.reports)

    def test_undersized_candidate_is_violated(self, ex23_ctx):
        # log beta(r) ~ r^{-1.2} is essentially smaller than the r^{-2}
        # growth this scenario requires, so some ramp must witness failure.
        # Measured trend: the schedule radius r_n ~ (log n)^{-1/1.2} shrinks
        # more slowly than the measured ratio mu_V(f^2)/E_V(f) ~ (log n)^{-1},
        # and the residual first crosses zero between n = 2^14 and n = 2^16.
        candidate = RateFunction.exp_power(1.0, 1.2)
        res = sharpness_probe(ex23_ctx, candidate,
                              [2 ** k for k in range(1, 17)], mode="super")
        assert res.status == "violation"
        assert res.violation_n is not None
        assert 16384 < res.violation_n <= 65536
        # every report before the witness passed; the schedule was not
        # invertible at n = 2, which is recorded rather than silently skipped
        assert all(rep.verdict == "pass" for m, rep in res.reports
                   if m != res.violation_n)
        assert res.indeterminate == (2,)


# ---------------------------------------------------------------------------
# lemma checks
# ---------------------------------------------------------------------------


class TestLemmaSplitCheck:
    def test_random_function_passes_both(self, ex23_ctx):
        rng = np.random.default_rng(3)
        xs = np.sort(rng.uniform(-12.0, 12.0, 6))
        f = piecewise_linear(xs, rng.uniform(-1.0, 1.0, 6))
        far_rep, near_rep = lemma_split_check(ex23_ctx, f, 6, 6, 0.1)
        for rep in (far_rep, near_rep):
            assert isinstance(rep, ResidualReport)
            assert rep.verdict == "pass"
            assert not rep.vacuous
            assert math.isfinite(rep.right)
        assert far_rep.left >= 0.0 and near_rep.left >= 0.0

    def test_inner_supported_function_has_zero_far_side(self, ex23_ctx):
        f = hat_function()  # supported in {rho <= 2} < n - 1
        far_rep, _ = lemma_split_check(ex23_ctx, f, 6, 6, 1.0)
        assert far_rep.left == pytest.approx(0.0, abs=1e-12)
        assert far_rep.verdict == "pass"

    def test_infinite_eps_flags_vacuous(self):
        model = stable_model(alpha=1.0, m=1)
        kernel = stable_pair(model, alpha=1.0, finite_range=math.inf)
        pot = normalize_potential(log1p_potential(0.5), model)
        ctx = Context(model=model, kernel=kernel, potential=pot,
                      rate=RateFunction.constant(1.0))
        far_rep, _ = lemma_split_check(ctx, hat_function(), 1, 1, 0.1)
        assert far_rep.vacuous
        assert far_rep.verdict == "pass"
        assert far_rep.right == math.inf


class TestTruncationSumCheck:
    def test_scaled_ramp(self, cauchy_v0_ctx):
        f = piecewise_linear([-4.0, -2.0, 2.0, 4.0], [5.0, 0.0, 0.0, 5.0])
        rep = truncation_sum_check(cauchy_v0_ctx, f, 2.0, 0)
        assert rep.verdict == "pass"

    def test_small_function_is_trivial(self, cauchy_v0_ctx):
        rep = truncation_sum_check(cauchy_v0_ctx, hat_function(), 2.0, 0)
        assert rep.verdict == "pass"
        assert rep.left == pytest.approx(0.0, abs=1e-10)

    def test_level_beyond_sup_is_vacuous(self, cauchy_v0_ctx):
        rep = truncation_sum_check(cauchy_v0_ctx, hat_function(), 2.0, 10)
        assert rep.verdict == "pass"
        assert rep.left == pytest.approx(0.0, abs=1e-12)
