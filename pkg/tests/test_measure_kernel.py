"""Closed-form and cross-method oracles for measures, kernels, potentials, regions.

Every expected value below is either an exact closed form derived by hand or
an independent numeric route (tensor midpoint sums, scipy quadrature written
directly in the test) — never the code under test evaluated twice.
"""

import math

import numpy as np
import pytest
from scipy import integrate as sci_integrate
from scipy.special import erfc

from levyform.errors import DivergenceError, HypothesisError
from levyform.measure_kernel import (
    JumpKernel,
    ReducedJump,
    abstract_kernel,
    abstract_model,
    custom_potential,
    dyadic_model,
    exp_power_model,
    finite_range_pair,
    lambda_bound,
    log1p_potential,
    log_exp_moment,
    log_weighted_stable_model,
    loglog_potential,
    normalize_measure,
    normalize_potential,
    power_potential,
    region_eta,
    region_gamma,
    region_tilde_eta,
    region_tilde_gamma,
    sawtooth_potential,
    stable_model,
    stable_pair,
    surface_area,
    tail_mass,
    weighted_tail_log,
    zero_potential,
)
from levyform.settings import DEFAULT_SETTINGS


class TestRadialModel:
    def test_stable_normalizer_is_half_alpha(self):
        # c = alpha/2 in one dimension: total mass 2c * integral (1+r)^-(1+a) = 2c/a.
        model = stable_model(1.0)
        assert math.exp(model.log_normalizer) == pytest.approx(0.5, rel=1e-12)
        model2 = stable_model(0.5)
        assert math.exp(model2.log_normalizer) == pytest.approx(0.25, rel=1e-12)

    def test_stable_tail_closed_form(self):
        model = stable_model(1.0)
        assert tail_mass(model, 0.0) == 1.0
        assert tail_mass(model, 3.0) == pytest.approx(0.25, rel=1e-14)
        model2 = stable_model(0.5)
        assert tail_mass(model2, 8.0) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_stable_tail_quadrature_matches_closed_form(self):
        # Same profile without the closed-form shortcut: pure quadrature route.
        quad_model = normalize_measure(lambda r: -2.0 * np.log1p(r), 1)
        exact = stable_model(1.0)
        assert math.exp(quad_model.log_normalizer) == pytest.approx(0.5, rel=1e-11)
        for t in (0.5, 3.0, 40.0, 1e6):
            assert quad_model.log_tail(t) == pytest.approx(exact.log_tail(t), abs=1e-9)

    def test_exp_power_normalizer_and_tail(self):
        # integral_0^inf e^{-r^2} dr = sqrt(pi)/2, so c = 1/sqrt(pi);
        # tail(t) = erfc(t).
        model = exp_power_model(2.0)
        assert math.exp(model.log_normalizer) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-10)
        assert tail_mass(model, 1.0) == pytest.approx(erfc(1.0), rel=1e-9)
        assert model.log_tail(9.0) == pytest.approx(math.log(erfc(9.0)), rel=1e-9)

    def test_two_dimensional_stable_normalizer(self):
        # m=2, alpha=1: 1 = c * 2 pi * integral r (1+r)^-3 dr = c * pi, so c = 1/pi.
        model = stable_model(1.0, m=2)
        assert math.exp(model.log_normalizer) == pytest.approx(1.0 / math.pi, rel=1e-9)

    def test_log_weighted_tail_decreases_and_splices(self):
        model = log_weighted_stable_model(1.0)
        assert tail_mass(model, 0.0) == 1.0
        # continuity across the quadrature/asymptote switch radius
        sw = model.settings.asym_switch_radius
        below = model.log_tail(sw * 0.999)
        above = model.log_tail_ell(math.log(sw) + 1e-4)
        assert above < below
        assert abs(above - below) < 2e-3
        # deep asymptotic regime stays ordered and finite
        huge = [model.log_tail_ell(e) for e in (1e3, 1e6, 1e9, 1e13)]
        assert all(np.isfinite(huge))
        assert all(a > b for a, b in zip(huge, huge[1:]))

    def test_dyadic_tail(self):
        model = dyadic_model()
        assert tail_mass(model, 0.0) == 1.0
        assert tail_mass(model, 0.5) == pytest.approx(0.5)
        assert tail_mass(model, 3.0) == pytest.approx(0.125)
        assert tail_mass(model, 7.0) == pytest.approx(2.0 ** -7)

    def test_abstract_model_has_no_density_or_sampler(self):
        model = dyadic_model()
        with pytest.raises(HypothesisError):
            model.log_density(np.array([1.0]))
        with pytest.raises(HypothesisError):
            model.sampler()

    def test_divergent_profile_rejected(self):
        with pytest.raises(DivergenceError):
            normalize_measure(lambda r: -np.log1p(r), 1)  # integral diverges

    def test_sampler_matches_closed_form_tail(self):
        model = stable_model(1.0)
        draw = model.sampler()
        rng = np.random.default_rng(1234)
        x = draw(rng, 200_000)
        p1 = float(np.mean(np.abs(x) > 1.0))
        p3 = float(np.mean(np.abs(x) > 3.0))
        assert p1 == pytest.approx(0.5, abs=0.006)
        assert p3 == pytest.approx(0.25, abs=0.006)
        assert abs(float(np.mean(x > 0)) - 0.5) < 0.006


class TestReducedJumpAndLambda:
    def test_side_mass_closed_form(self):
        red = ReducedJump(amplitude=0.5, alpha=1.0)
        assert red.side_mass(1.0, 2.0) == pytest.approx(0.25, rel=1e-14)
        assert red.side_mass(2.0) == pytest.approx(0.25, rel=1e-14)
        with pytest.raises(DivergenceError):
            red.side_mass(0.0, 1.0)

    def test_total_tail(self):
        red = ReducedJump(amplitude=0.5, alpha=1.0)
        assert red.total_tail(2.0) == pytest.approx(0.5, rel=1e-14)
        assert red.total_tail(0.0) == math.inf
        truncated = ReducedJump(amplitude=0.5, alpha=1.0, finite_range=1.0)
        assert truncated.total_tail(1.0) == 0.0
        assert truncated.total_tail(0.5) == pytest.approx(0.5 * (2.0 - 1.0) * 2, rel=1e-14)

    def test_lambda_stable_line_is_two(self):
        # amplitude 1/2, alpha 1, infinite range:
        # lambda = 2 * (1/2) * [1/(2-1) + 1/1] = 2 exactly.
        model = stable_model(1.0)
        kernel = stable_pair(model, 1.0)
        assert lambda_bound(kernel, model) == pytest.approx(2.0, rel=1e-14)

    def test_lambda_truncated_exp_power(self):
        # amplitude 1/sqrt(pi), alpha 1/2, range 1: lambda = 2A/(3/2) = 4/(3 sqrt(pi)).
        model = exp_power_model(2.0)
        kernel = finite_range_pair(model, 0.5, 1.0)
        assert lambda_bound(kernel, model) == pytest.approx(4.0 / (3.0 * math.sqrt(math.pi)), rel=1e-12)

    def test_lambda_two_dimensional(self):
        # m=2, alpha=1, A=1/pi: lambda = 2 pi * (1/pi) * (1 + 1) = 4.
        model = stable_model(1.0, m=2)
        kernel = stable_pair(model, 1.0)
        assert lambda_bound(kernel, model) == pytest.approx(4.0, rel=1e-9)

    def test_lambda_cache_wins(self):
        kernel = abstract_kernel(lambda_cache=1.0, finite_range=1.0)
        assert lambda_bound(kernel, dyadic_model()) == 1.0

    def test_lambda_custom_kernel_grid_matches_reduced(self):
        # Strip the reduced form: the per-point quadrature + grid-sup route
        # must recover the translation-invariant value 2.0.
        model = stable_model(1.0)
        pair = stable_pair(model, 1.0)
        custom = JumpKernel(q=pair.q, label="stripped")
        val = lambda_bound(custom, model)
        assert val == pytest.approx(2.0, rel=1e-5)

    def test_pair_density_reduces_to_power_law(self):
        model = stable_model(1.0)
        pair = stable_pair(model, 1.0)
        x, y = np.array(0.3), np.array(1.7)
        lhs = float(pair.q(x, y)) * math.exp(float(model.log_density(y)))
        assert lhs == pytest.approx(0.5 * abs(1.7 - 0.3) ** -2, rel=1e-12)


class TestPotentials:
    def test_zero_potential(self):
        V = zero_potential()
        assert V.ball_sup(100.0) == 0.0
        assert V.ball_inf(100.0) == 0.0
        assert V.ball_sup_ell(1e12) == 0.0
        assert V.bounded and V.lipschitz == 0.0

    def test_loglog_monotone_extrema(self):
        eps = 1.2
        V = loglog_potential(eps)
        expected_sup = eps * math.log(math.log(math.e + 12.0))
        assert V.ball_sup(12.0) == pytest.approx(expected_sup, rel=1e-14)
        assert V.ball_inf(12.0) == 0.0

    def test_loglog_log_radius_form_agrees(self):
        eps = 0.7
        V = loglog_potential(eps)
        for ell in (3.0, 10.0, 100.0, 575.0):
            direct = eps * math.log(math.log(math.e + math.exp(ell)))
            assert V.ball_sup_ell(ell) == pytest.approx(direct, rel=1e-12)
        # far beyond float range the form is eps*log(ell) to high accuracy
        assert V.ball_sup_ell(1e9) == pytest.approx(eps * math.log(1e9), rel=1e-9)

    def test_log1p_potential_ell_form(self):
        V = log1p_potential(0.5)
        assert V.ball_sup(7.0) == pytest.approx(0.5 * math.log(8.0), rel=1e-14)
        assert V.ball_sup_ell(50.0) == pytest.approx(0.5 * (50.0 + math.log1p(math.exp(-50.0))), rel=1e-14)

    def test_power_potential_monotone(self):
        V = power_potential(2.0, 0.5)
        assert V.ball_sup(9.0) == pytest.approx(6.0, rel=1e-14)
        assert V.ball_inf(9.0) == 0.0

    def test_sawtooth_values_and_extrema(self):
        # H=5, kappa=2, L=20: flat zero on [0,5), amplitudes 40, 60, ... on
        # [5,10), [10,15), ...; one-sided (zero on the negative axis).
        V = sawtooth_potential(5.0, 2.0, 20.0)
        assert float(V.v0_at_radius(0.0)) == 0.0
        assert float(V.v0_at_radius(4.0)) == 0.0
        assert float(V.v0_at_radius(5.0)) == pytest.approx(40.0)
        assert float(V.v0_at_radius(7.5)) == pytest.approx(0.0)
        assert float(V.v0_at_radius(10.0)) == pytest.approx(60.0)
        assert float(V.v0_at_radius(12.0)) == pytest.approx(12.0)
        # one-sided evaluation at positions
        vals = V(np.array([-6.0, 6.0]))
        assert vals[0] == 0.0
        assert vals[1] == pytest.approx(40.0 * (3.0 - 12.0 / 5.0))
        # extrema
        assert V.ball_sup(4.0) == 0.0 and V.ball_inf(4.0) == 0.0
        assert V.ball_sup(5.0) == pytest.approx(40.0)
        assert V.ball_inf(5.0) == 0.0
        assert V.ball_sup(9.99) == pytest.approx(40.0)
        assert V.ball_inf(9.99) == pytest.approx(40.0 * (3.0 - 2.0 * 9.99 / 5.0))
        assert V.ball_sup(10.0) == pytest.approx(60.0)
        assert V.ball_inf(10.0) == pytest.approx(-40.0)
        assert V.ball_sup(12.0) == pytest.approx(60.0)
        assert V.ball_inf(12.0) == pytest.approx(-40.0)

    def test_custom_grid_extrema_bracket_truth(self):
        V = custom_potential(np.cos, lipschitz=1.0, label="cos")
        lo, hi = V.ball_inf(20.0), V.ball_sup(20.0)
        assert lo <= -1.0 <= 1.0 <= hi
        assert hi < 1.01 and lo > -1.01
        assert not V.exact_extrema

    def test_normalize_log1p_closed_form(self):
        # V0 = (1/2) log(1+r) against the alpha=1 stable measure:
        # mu(e^{V0}) = 2c * integral (1+r)^{-3/2} dr = 0.5 * 2 * 2 = 2,
        # so the offset is -log 2 and mu_V(rho > t) = (1+t)^{-1/2}.
        model = stable_model(1.0)
        V = normalize_potential(log1p_potential(0.5), model)
        assert V.offset == pytest.approx(-math.log(2.0), abs=1e-10)
        assert log_exp_moment(model, V, 1.0) == pytest.approx(0.0, abs=1e-9)
        assert weighted_tail_log(model, V, 3.0) == pytest.approx(-0.5 * math.log(4.0), abs=1e-9)

    def test_normalize_sawtooth_against_direct_quadrature(self):
        # Independent oracle: the potential lives on the positive axis only, so
        # mu(e^{V0}) = c * [sqrt(pi)/2 + integral_0^inf e^{V0(r) - r^2} dr]
        # with c = 1/sqrt(pi), evaluated directly with scipy per segment.
        model = exp_power_model(2.0)
        V0 = sawtooth_potential(5.0, 2.0, 20.0)

        def integrand(r):
            n = math.floor(r / 5.0)
            if n < 1:
                return math.exp(-r * r)
            amp = 20.0 * (n + 1.0)
            return math.exp(amp * (2 * n + 1 - 2 * r / 5.0) - r * r)

        pos = 0.0
        for a, b in zip(np.arange(0, 60, 5.0), np.arange(5.0, 65, 5.0)):
            piece, _ = sci_integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
            pos += piece
        moment = (math.sqrt(math.pi) / 2.0 + pos) / math.sqrt(math.pi)
        expected_offset = -math.log(moment)
        V = normalize_potential(V0, model)
        assert V.offset == pytest.approx(expected_offset, abs=1e-8)
        assert log_exp_moment(model, V, 1.0) == pytest.approx(0.0, abs=1e-8)
        assert weighted_tail_log(model, V, 0.0) == pytest.approx(0.0, abs=1e-8)

    def test_exp_moment_negative_coefficient(self):
        # kappa_2-style moment: mu(e^{-2V}) for V = (1/2) log(1+r), normalized.
        # e^{-2V} = e^{2 log 2} (1+r)^{-1}; mu(e^{-2V}) = 4 * 2c * integral (1+r)^{-3} dr = 2.
        model = stable_model(1.0)
        V = normalize_potential(log1p_potential(0.5), model)
        assert log_exp_moment(model, V, -2.0) == pytest.approx(math.log(2.0), abs=1e-9)


class TestRegions:
    def test_finite_range_short_circuits(self):
        model = dyadic_model()
        kernel = abstract_kernel(lambda_cache=1.0, finite_range=1.0)
        g = region_gamma(kernel, model, n=4, k=1.0)
        assert g.value == 0.0 and g.method == "finite-range"
        e = region_eta(kernel, model, n=4, k=1.0)
        assert e.value == 0.0 and e.method == "finite-range"
        te = region_tilde_eta(kernel, model, n=4, k=1.0)
        assert te.value == 0.0 and te.method == "finite-range"
        tg = region_tilde_gamma(kernel, model, k=1.0)
        assert tg.value == 0.0 and tg.method == "finite-range"

    def test_gamma_needs_positive_k(self):
        model = stable_model(1.0)
        kernel = stable_pair(model, 1.0)
        with pytest.raises(HypothesisError):
            region_gamma(kernel, model, n=3, k=0.0)

    def test_gamma_whole_space_equals_jump_tail(self):
        # n=1 makes the landing constraint vacuous, so gamma equals the
        # total jump mass beyond k: here 2 * 0.5 * (1/2) = 0.5.
        model = stable_model(1.0)
        kernel = stable_pair(model, 1.0)
        g = region_gamma(kernel, model, n=1, k=2.0)
        assert g.method == "reduced-quadrature"
        assert g.value == pytest.approx(0.5, rel=1e-9)

    def test_tilde_gamma_closed_form(self):
        model = stable_model(1.0)
        kernel = stable_pair(model, 1.0)
        tg = region_tilde_gamma(kernel, model, k=4.0)
        assert tg.method == "closed-form"
        assert tg.value == pytest.approx(0.25, rel=1e-14)

    def test_gamma_against_tensor_midpoint_oracle(self):
        # Gaussian-tail measure, truncated jump kernel; independent midpoint
        # sum over the (x, z) plane with the exact indicator geometry.
        model = exp_power_model(2.0)
        alpha, k0, n, k = 0.5, 3.0, 3.0, 1.0
        kernel = finite_range_pair(model, alpha, k0)
        got = region_gamma(kernel, model, n=n, k=k)
        assert got.method == "reduced-quadrature"

        c = 1.0 / math.sqrt(math.pi)
        A = c
        nx, nz = 6000, 3000
        xs = np.linspace(-12.0, 12.0, nx, endpoint=False) + 12.0 * 2 / nx / 2
        zs = np.linspace(-3.0, 3.0, nz, endpoint=False) + 3.0 * 2 / nz / 2
        dx = xs[1] - xs[0]
        dz = zs[1] - zs[0]
        X, Z = np.meshgrid(xs, zs, indexing="ij")
        with np.errstate(divide="ignore"):
            w = A * np.abs(Z) ** -(1 + alpha)
        region = (np.abs(Z) > k) & (np.abs(Z) <= k0) & (np.abs(X + Z) >= n - 1)
        oracle = float(np.sum(c * np.exp(-X * X) * w * region) * dx * dz)
        assert got.value == pytest.approx(oracle, rel=5e-3)

    def test_eta_against_tensor_midpoint_oracle(self):
        # eta(1, 1): mass entering the ball of radius 2 from outside radius 4,
        # kernel range 3 — the support is the thin wedge x in (4, 5], y in [1, 2]
        # (plus its mirror image).
        model = exp_power_model(2.0)
        alpha, k0 = 0.5, 3.0
        kernel = finite_range_pair(model, alpha, k0)
        got = region_eta(kernel, model, n=1, k=1.0)
        assert got.method == "reduced-quadrature"

        c = 1.0 / math.sqrt(math.pi)
        A = c
        nx, ny = 4000, 4000
        xs = np.linspace(4.0, 6.0, nx, endpoint=False) + 2.0 / nx / 2
        ys = np.linspace(0.0, 2.0, ny, endpoint=False) + 2.0 / ny / 2
        dx, dy = xs[1] - xs[0], ys[1] - ys[0]
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        D = np.abs(X - Y)
        with np.errstate(divide="ignore"):
            w = A * D ** -(1 + alpha)
        region = (D <= k0) & (X > 4.0) & (np.abs(Y) <= 2.0)
        # y in [-2, 0) contributes nothing (distance > 3); factor 2 mirrors x < -4.
        oracle = 2.0 * float(np.sum(c * np.exp(-X * X) * w * region) * dx * dy)
        assert got.value == pytest.approx(oracle, rel=5e-3)

    def test_tilde_eta_barrier_sits_one_unit_closer(self):
        model = exp_power_model(2.0)
        kernel = finite_range_pair(model, 0.5, 3.0)
        plain = region_eta(kernel, model, n=1, k=1.0)
        tilde = region_tilde_eta(kernel, model, n=1, k=1.0)
        assert tilde.value > plain.value > 0.0

    def test_monte_carlo_agrees_with_tensor_oracle(self):
        # Bounded custom kernel (no reduced form): q = exp(-(x-y)^2/2).
        # Independent tensor-midpoint oracle over the Gaussian-weighted plane.
        model = exp_power_model(2.0)
        kernel = JumpKernel(q=lambda x, y: np.exp(-0.5 * (x - y) ** 2), label="gauss-q")
        mc = region_gamma(kernel, model, n=2, k=1.0)
        assert mc.method == "monte-carlo"
        assert mc.stderr > 0

        c = 1.0 / math.sqrt(math.pi)
        ns = 3000
        xs = np.linspace(-8.0, 8.0, ns, endpoint=False) + 8.0 * 2 / ns / 2
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        region = (np.abs(X - Y) > 1.0) & (np.abs(Y) >= 1.0)
        w = np.exp(-0.5 * (X - Y) ** 2) * region
        dens = c * c * np.exp(-X * X - Y * Y)
        dxy = (xs[1] - xs[0]) ** 2
        oracle = float(np.sum(w * dens) * dxy)
        assert abs(mc.value - oracle) <= 5.0 * mc.stderr + 1e-6

    def test_monte_carlo_heavy_weights_raise_precision_error(self):
        # The stripped power-law pair has exponentially heavy importance
        # weights; a small budget must fail loudly, not silently.
        from levyform.errors import PrecisionError

        model = exp_power_model(2.0)
        pair = finite_range_pair(model, 0.5, 3.0)
        stripped = JumpKernel(q=pair.q, finite_range=3.0, label="mc-only")
        settings = DEFAULT_SETTINGS.with_(max_samples=40_000, mc_batch=10_000,
                                          rel_err_cap=0.01)
        with pytest.raises(PrecisionError):
            region_gamma(stripped, model, n=3, k=1.0, settings=settings)

    def test_region_without_any_evaluation_route_raises(self):
        model = dyadic_model()
        kernel = abstract_kernel(lambda_cache=1.0, finite_range=5.0)
        with pytest.raises(HypothesisError):
            region_gamma(kernel, model, n=3, k=1.0)


def test_surface_area_values():
    assert surface_area(1) == pytest.approx(2.0)
    assert surface_area(2) == pytest.approx(2 * math.pi)
    assert surface_area(3) == pytest.approx(4 * math.pi)
