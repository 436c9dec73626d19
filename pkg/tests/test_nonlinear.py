"""Dual-route right-hand side evaluation and the series term machinery."""

import math

import numpy as np
import pytest
from scipy.integrate import simpson

from epitaxy.exceptions import NumericalError
from epitaxy.nonlinear import (
    DEPTH_HARD_CAP,
    TaylorDepth,
    padded_grid_size,
    rhs_exponential,
    rhs_taylor,
    taylor_sum,
    taylor_term_Fj,
)
from epitaxy.norms import wiener_norm
from epitaxy.spectral import FourierField

from conftest import random_field_with_norm


def cosine(truncation=8, amplitude=1.0):
    return FourierField.from_modes(1, truncation, {(1,): amplitude / 2.0})


def norm_with_mean(field, mean):
    """Full Wiener norm of a field-plus-mean pair."""
    return abs(mean) + wiener_norm(field, 0)


class TestTaylorDepth:
    def test_exactly_one_mode_required(self):
        with pytest.raises(ValueError):
            TaylorDepth()
        with pytest.raises(ValueError):
            TaylorDepth(max_j=3, tail_tol=1e-10)

    def test_fixed_depth_resolves_to_itself(self):
        assert TaylorDepth.fixed(7).resolve(0.4) == 7

    def test_linear_sentinel_allowed(self):
        assert TaylorDepth.fixed(1).resolve(10.0) == 1

    def test_fixed_zero_rejected(self):
        with pytest.raises(ValueError):
            TaylorDepth.fixed(0)

    def test_adaptive_respects_remainder_bound(self):
        depth = TaylorDepth.adaptive(1e-12)
        for r in (0.0, 0.1, 0.5, 0.9, 2.0):
            j = depth.resolve(r)
            assert j >= 2
            assert r ** (j + 1) / math.factorial(j + 1) < 1e-12
            if j > 2:  # minimality: one term fewer violates the tolerance
                assert r**j / math.factorial(j) >= 1e-12

    def test_adaptive_cap_reports_tail(self):
        with pytest.raises(NumericalError, match="tail bound"):
            TaylorDepth.adaptive(1e-12).resolve(20.0)
        assert DEPTH_HARD_CAP == 64

    def test_padded_grid_size(self):
        assert padded_grid_size(8, 2.0) == 34
        assert padded_grid_size(8, 1.0) == 17
        with pytest.raises(ValueError):
            padded_grid_size(8, 0.5)


class TestTaylorTermFj:
    def test_f2_of_cosine_matches_hand_expansion_and_quadrature(self):
        # lap h = -cos x, F2 = cos^2 x / 2 = 1/4 + cos(2x)/4
        field, mean = taylor_term_Fj(cosine(), 2)
        assert mean == pytest.approx(0.25, abs=1e-14)
        assert field.coeff(2) == pytest.approx(0.125, abs=1e-14)
        assert field.coeff(-2) == pytest.approx(0.125, abs=1e-14)
        # quadrature oracle for the mode-2 coefficient of cos^2 / 2
        x = np.linspace(0.0, 2.0 * np.pi, 2049)
        target = simpson(0.5 * np.cos(x) ** 2 * np.exp(-2j * x), x=x) / (2.0 * np.pi)
        assert field.coeff(2) == pytest.approx(target, abs=1e-10)

    def test_f3_of_zero_field(self):
        field, mean = taylor_term_Fj(FourierField.zero(1, 4), 3)
        assert mean == 0.0
        assert field.max_abs() == 0.0

    def test_j_below_two_rejected(self):
        with pytest.raises(ValueError):
            taylor_term_Fj(cosine(), 1)

    def test_f3_to_f2_ratio_bounded_by_third_of_norm(self, rng):
        # |F3| / |F2| <= |lap h| / 3 by the algebra property
        for _ in range(20):
            h = random_field_with_norm(rng, float(rng.uniform(0.05, 0.8)))
            f2 = norm_with_mean(*taylor_term_Fj(h, 2))
            f3 = norm_with_mean(*taylor_term_Fj(h, 3))
            r = wiener_norm(h, 2)
            assert f3 <= (r / 3.0) * f2 * (1 + 1e-10)


class TestRhsTaylor:
    def test_depth_two_closed_form(self):
        eps = 0.2
        result = rhs_taylor(cosine(amplitude=eps), TaylorDepth.fixed(2))
        assert result.coeff(1) == pytest.approx(-eps / 2.0, abs=1e-14)
        assert result.coeff(2) == pytest.approx(-(eps**2) / 2.0, abs=1e-13)

    def test_zero_field(self):
        result = rhs_taylor(FourierField.zero(1, 5), TaylorDepth.adaptive())
        assert result.max_abs() == 0.0

    def test_mean_zero_output(self, rng):
        h = random_field_with_norm(rng, 0.3)
        assert rhs_taylor(h, TaylorDepth.adaptive()).coeff(0) == 0.0


class TestRhsExponential:
    def test_zero_field(self):
        assert rhs_exponential(FourierField.zero(1, 5)).max_abs() == 0.0

    def test_linearization_about_zero(self):
        eps = 1e-4
        result = rhs_exponential(cosine(amplitude=eps))
        assert result.coeff(1) == pytest.approx(-eps / 2.0, rel=1e-6)

    def test_overflow_names_grid_value(self):
        big = cosine(amplitude=2000.0)
        with pytest.raises(NumericalError, match="overflow"):
            rhs_exponential(big)

    def test_agreement_with_deep_taylor_at_eps_01(self):
        h = cosine(amplitude=0.1)
        via_exp = rhs_exponential(h)
        via_series = rhs_taylor(h, TaylorDepth.fixed(20))
        assert wiener_norm(via_exp - via_series, 0) <= 1e-10


class TestMutualOracle:
    def test_paths_agree_on_random_small_fields(self, rng):
        for _ in range(15):
            dim = int(rng.integers(1, 3))
            trunc = 8 if dim == 1 else 5
            r = float(rng.uniform(0.02, 0.5))
            h = random_field_with_norm(rng, r, dim=dim, truncation=trunc)
            gap = wiener_norm(
                rhs_taylor(h, TaylorDepth.adaptive(1e-12)) - rhs_exponential(h), 0
            )
            assert gap <= max(1e-10, 1e-8 * r)

    def test_first_order_consistency_scaling(self, rng):
        # |rhs(eps f) + eps lap^2 f| = O(eps^2): the ratio between eps = 1e-2
        # and eps = 1e-3 must be 100 up to the next-order correction.
        f = random_field_with_norm(rng, 1.0)
        def defect(eps):
            h = f * eps
            linear_part = rhs_exponential(h) - rhs_taylor(h, TaylorDepth.fixed(1))
            return wiener_norm(linear_part, 0)
        ratio = defect(1e-2) / defect(1e-3)
        assert ratio == pytest.approx(100.0, rel=0.05)

    def test_tail_domination_envelope(self, rng):
        # the series remainder beyond depth J obeys sum_{j>J} r^j / j!
        for depth_j in (2, 3, 5):
            h = random_field_with_norm(rng, 0.6)
            r = wiener_norm(h, 2)
            total_field, total_mean = taylor_sum(h, TaylorDepth.fixed(40))
            part_field, part_mean = taylor_sum(h, TaylorDepth.fixed(depth_j))
            measured = norm_with_mean(total_field - part_field, total_mean - part_mean)
            envelope = sum(r**j / math.factorial(j) for j in range(depth_j + 1, 60))
            assert measured <= envelope * (1 + 1e-10) + 1e-14
