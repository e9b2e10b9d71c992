"""Tests for the log-domain special functions and the unit-interval integrator.

Reference values are frozen from a 40-digit arbitrary-precision evaluation
so the checks are independent of the scipy-backed implementation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from betcs.special import (
    DEFAULT_QUADRATURE,
    NonFiniteLogIntegrandError,
    QuadratureSpec,
    binary_entropy,
    binary_kl,
    log_beta,
    log_gamma,
    log_integrate_unit,
    log_integrate_unit_rule,
    log_lower_incomplete_gamma,
    lower_incomplete_gamma,
    unit_gl_rule,
)


class TestLogGamma:
    def test_frozen_values(self):
        np.testing.assert_allclose(log_gamma(0.5), 0.57236494292470008707, atol=1e-12)
        np.testing.assert_allclose(log_gamma(4.7), 2.7364051463155666822, atol=1e-12)
        np.testing.assert_allclose(
            log_gamma(123.25), 468.61448295051664423, rtol=1e-13
        )

    def test_integer_factorials(self):
        for n in range(1, 15):
            np.testing.assert_allclose(
                log_gamma(n + 1), math.log(math.factorial(n)), rtol=1e-13
            )

    def test_recurrence(self):
        # Gamma(x+1) = x Gamma(x), in logs
        for x in (0.3, 1.7, 9.2, 55.0):
            np.testing.assert_allclose(
                log_gamma(x + 1.0), log_gamma(x) + math.log(x), rtol=1e-12
            )


class TestLogBeta:
    def test_frozen_values(self):
        np.testing.assert_allclose(
            log_beta(1.5, 0.5), 0.45158270528945486473, atol=1e-12
        )
        np.testing.assert_allclose(log_beta(3, 4), -4.0943445622221006848, atol=1e-12)
        np.testing.assert_allclose(
            log_beta(40.5, 0.25), 0.36501656443023290264, atol=1e-12
        )

    def test_symmetry_and_identity(self):
        np.testing.assert_allclose(log_beta(2.3, 7.1), log_beta(7.1, 2.3), rtol=1e-14)
        # B(1, b) = 1/b
        np.testing.assert_allclose(log_beta(1.0, 9.0), -math.log(9.0), rtol=1e-13)


class TestIncompleteGamma:
    def test_frozen_values(self):
        np.testing.assert_allclose(
            lower_incomplete_gamma(2.5, 1.3), 0.317226787475933609, rtol=1e-10
        )
        np.testing.assert_allclose(
            lower_incomplete_gamma(1.0, 1.0), 0.6321205588285576784, rtol=1e-12
        )
        np.testing.assert_allclose(
            log_lower_incomplete_gamma(0.5, 2.0), 0.52579703063230992352, atol=1e-10
        )
        np.testing.assert_allclose(
            log_lower_incomplete_gamma(6.0, 3.5), 2.8382812820138408417, atol=1e-10
        )

    def test_limits_and_errors(self):
        # gamma(s, inf) = Gamma(s)
        np.testing.assert_allclose(
            math.log(lower_incomplete_gamma(3.0, 1e6)), log_gamma(3.0), rtol=1e-12
        )
        assert lower_incomplete_gamma(2.0, 0.0) == 0.0
        with pytest.raises(ValueError):
            lower_incomplete_gamma(-1.0, 1.0)
        with pytest.raises(ValueError):
            lower_incomplete_gamma(1.0, -0.5)


class TestBinaryEntropyKl:
    def test_frozen_values(self):
        np.testing.assert_allclose(
            binary_entropy(0.25), 0.56233514461880835029, atol=1e-12
        )
        np.testing.assert_allclose(
            binary_kl(0.3, 0.7), 0.33891914415488144548, atol=1e-12
        )

    def test_edge_cases(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        np.testing.assert_allclose(binary_entropy(0.5), math.log(2.0), rtol=1e-14)
        np.testing.assert_allclose(binary_kl(1.0, 0.5), math.log(2.0), rtol=1e-14)
        assert binary_kl(0.4, 0.4) == pytest.approx(0.0, abs=1e-14)

    def test_kl_nonnegative(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            p, q = rng.uniform(0.01, 0.99, 2)
            assert binary_kl(p, q) >= 0.0


class TestLogIntegrateUnit:
    def test_polynomial(self):
        # int_0^1 x^2 dx = 1/3
        val = log_integrate_unit(lambda x: 2.0 * math.log(x))
        np.testing.assert_allclose(val, -1.0986122886681096914, atol=1e-9)

    def test_beta_kernel(self):
        # int_0^1 x (1-x)^2 dx = B(2, 3)
        val = log_integrate_unit(lambda x: math.log(x) + 2.0 * math.log1p(-x))
        np.testing.assert_allclose(val, -2.4849066497880003102, atol=1e-9)

    def test_sharp_peak(self):
        # int_0^1 x^200 (1-x)^3 dx = B(201, 4); nearly all mass sits near 1
        val = log_integrate_unit(lambda x: 200.0 * math.log(x) + 3.0 * math.log1p(-x))
        np.testing.assert_allclose(val, -19.451139109118229233, rtol=1e-9, atol=1e-9)

    def test_translation_in_log_domain(self):
        # adding a constant to log f must shift the log integral by exactly that
        base = log_integrate_unit(lambda x: math.log(x) + 2.0 * math.log1p(-x))
        shifted = log_integrate_unit(
            lambda x: 5000.0 + math.log(x) + 2.0 * math.log1p(-x)
        )
        np.testing.assert_allclose(shifted - base, 5000.0, atol=1e-9)

    def test_vectorized_path_matches_scalar(self):
        def lf(x):
            return 30.0 * math.log(x) + 7.0 * math.log1p(-x)

        def lf_vec(xs):
            xs = np.asarray(xs, dtype=float)
            return 30.0 * np.log(xs) + 7.0 * np.log1p(-xs)

        a = log_integrate_unit(lf)
        b = log_integrate_unit(lf, log_f_vec=lf_vec)
        np.testing.assert_allclose(a, b, atol=1e-10)

    def test_rejects_nan_integrand(self):
        with pytest.raises(NonFiniteLogIntegrandError):
            log_integrate_unit(lambda x: float("nan"))

    def test_custom_spec_still_converges(self):
        spec = QuadratureSpec(abs_tol=1e-8, rel_tol=1e-7, max_subdivisions=256)
        val = log_integrate_unit(lambda x: 2.0 * math.log(x), spec)
        np.testing.assert_allclose(val, math.log(1.0 / 3.0), atol=1e-7)

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.floats(min_value=1.0, max_value=50.0),
        b=st.floats(min_value=1.0, max_value=50.0),
    )
    def test_beta_kernels_match_closed_form(self, a, b):
        val = log_integrate_unit(
            lambda x: (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x)
        )
        np.testing.assert_allclose(val, log_beta(a, b), rtol=1e-8, atol=1e-8)

    def test_endpoint_singularity_truncation(self):
        # integrable endpoint singularities lose the mass beyond the clip:
        # for (1-x)^(-1/2) that is 2 sqrt(clip) ~ 2e-6 of the total, no more
        val = log_integrate_unit(lambda x: -0.5 * math.log1p(-x))
        np.testing.assert_allclose(val, math.log(2.0), rtol=3e-6)
        assert abs(val - math.log(2.0)) > 1e-8


class TestFixedRule:
    def test_matches_adaptive_on_smooth_integrand(self):
        nodes, log_w = unit_gl_rule(32)

        def lf_vec(xs):
            xs = np.asarray(xs, dtype=float)
            return 4.0 * np.log(xs) + 2.0 * np.log1p(-xs)

        fixed = log_integrate_unit_rule(lf_vec(nodes), log_w)
        np.testing.assert_allclose(fixed, log_beta(5, 3), rtol=1e-10, atol=1e-10)

    def test_rule_is_cached_and_normalized(self):
        nodes, log_w = unit_gl_rule(16)
        again = unit_gl_rule(16)
        assert nodes is again[0] and log_w is again[1]
        # weights integrate the constant 1 to 1
        total = log_integrate_unit_rule(np.zeros_like(nodes), log_w)
        np.testing.assert_allclose(total, 0.0, atol=1e-10)
        assert nodes.min() > 0.0 and nodes.max() < 1.0


class TestQuadratureSpec:
    def test_defaults(self):
        spec = DEFAULT_QUADRATURE
        assert spec.abs_tol <= 1e-10
        assert spec.rel_tol <= 1e-9
        assert spec.max_subdivisions >= 1024
