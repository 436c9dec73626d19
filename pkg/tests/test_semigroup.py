"""Propagator, Duhamel accumulation and the operator-norm probe."""

import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad, simpson

from epitaxy.semigroup import (
    Trajectory,
    duhamel_Iplus,
    exp_moment_weights,
    linear_trajectory,
    operator_bound_probe,
    propagate,
    random_probe_trajectory,
    stable_expm_moments,
)
from epitaxy.spectral import FourierField

from conftest import random_field


def cosine(truncation=4, amplitude=1.0):
    return FourierField.from_modes(1, truncation, {(1,): amplitude / 2.0})


def single_mode_trajectory(times, profile, k=1, truncation=4):
    """One real cosine mode whose coefficient follows ``profile(t)``."""
    fields = tuple(
        FourierField.from_modes(1, truncation, {(k,): profile(t)}) for t in times
    )
    return Trajectory(np.asarray(times, dtype=float), fields)


class TestTrajectory:
    def test_first_node_must_be_zero(self):
        f = cosine()
        with pytest.raises(ValueError, match="t = 0"):
            Trajectory(np.array([0.5, 1.0]), (f, f))

    def test_times_strictly_increasing(self):
        f = cosine()
        with pytest.raises(ValueError, match="increasing"):
            Trajectory(np.array([0.0, 1.0, 1.0]), (f, f, f))

    def test_mixed_truncations_rejected(self):
        with pytest.raises(ValueError, match="share"):
            Trajectory(np.array([0.0, 1.0]), (cosine(4), cosine(5)))

    def test_json_round_trip(self, rng):
        traj = linear_trajectory(random_field(rng, truncation=3), np.linspace(0, 1, 5))
        back = Trajectory.from_json_dict(traj.to_json_dict())
        assert np.array_equal(back.times, traj.times)
        for a, b in zip(back.fields, traj.fields):
            np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=0, atol=1e-15)


class TestPropagate:
    def test_zero_time_is_identity(self, rng):
        f = random_field(rng, dim=2, truncation=3)
        np.testing.assert_array_equal(propagate(f, 0.0).coeffs, f.coeffs)

    def test_unit_mode_decay_factor(self):
        g = propagate(cosine(), 1.0)
        assert g.coeff(1) == pytest.approx(0.5 * 0.36787944117144233, rel=1e-15)

    def test_semigroup_law(self, rng):
        f = random_field(rng, truncation=5)
        once = propagate(f, 0.7 + 0.4)
        twice = propagate(propagate(f, 0.7), 0.4)
        scale = max(np.max(np.abs(once.coeffs)), 1e-300)
        assert np.max(np.abs(once.coeffs - twice.coeffs)) <= 1e-13 * scale

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            propagate(cosine(), -0.1)


class TestLinearTrajectory:
    def test_zero_data_stays_zero(self):
        traj = linear_trajectory(FourierField.zero(1, 4), np.linspace(0, 1, 5))
        assert all(f.max_abs() == 0.0 for f in traj.fields)

    def test_two_node_values(self):
        traj = linear_trajectory(cosine(), np.array([0.0, 1.0]))
        assert traj.fields[0].coeff(1) == pytest.approx(0.5)
        assert traj.fields[1].coeff(1) == pytest.approx(0.5 * math.exp(-1.0))

    def test_per_mode_monotone_decay(self, rng):
        traj = linear_trajectory(random_field(rng, truncation=4), np.linspace(0, 2, 9))
        mags = np.stack([np.abs(f.coeffs) for f in traj.fields])
        assert np.all(np.diff(mags, axis=0) <= 1e-300 + 0.0)


class TestExpmMoments:
    def test_constant_integrand_closed_form(self):
        lam, dt = 3.0, 0.4
        got = stable_expm_moments(lam, dt, 1.0, 1.0)
        assert got == pytest.approx((1.0 - math.exp(-lam * dt)) / lam, rel=1e-14)

    def test_trapezoid_limit_small_z(self):
        got = stable_expm_moments(1e-12, 0.5, 0.0, 1.0)
        assert got == pytest.approx(0.25, rel=1e-12)  # dt / 2

    def test_simpson_oracle_lam16(self):
        # refined Simpson rule; 64 subintervals only reach ~2e-10 here, so the
        # brute-force oracle uses 4096 to support the 1e-12 comparison
        lam, dt = 16.0, 0.1
        x = np.linspace(0.0, dt, 4097)
        y = np.exp(-lam * (dt - x)) * (1.0 - x / dt)
        oracle = float(simpson(y, x=x))
        got = stable_expm_moments(lam, dt, 1.0, 0.0)
        assert got.imag == 0.0
        assert got.real == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.018557384891167810, abs=1e-15)

    @pytest.mark.parametrize("z", [1e-8, 1e-6, 1e-3, 0.1, 0.5, 0.999, 1.0, 2.0, 16.0, 1e3])
    def test_relative_accuracy_against_mpmath(self, z):
        mp.mp.dps = 40
        zm = mp.mpf(z)
        w0_ref = (1 - mp.e**-zm) / zm
        w1_ref = (zm - 1 + mp.e**-zm) / zm**2
        dt = 0.25
        lam = z / dt
        for f0, f1 in ((1.0, 0.0), (0.0, 1.0), (0.3 + 0.7j, -1.1 + 0.2j)):
            ref = complex(mp.mpf(dt) * (f0 * (w0_ref - w1_ref) + f1 * w1_ref))
            got = stable_expm_moments(lam, dt, f0, f1)
            assert abs(got - ref) <= 1e-14 * abs(ref)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            stable_expm_moments(0.0, 0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            stable_expm_moments(1.0, 0.0, 1.0, 1.0)

    def test_weights_continuous_across_branch(self):
        below = exp_moment_weights(1.0 - 1e-12)
        above = exp_moment_weights(1.0 + 1e-12)
        assert below[0] == pytest.approx(above[0], rel=1e-11)
        assert below[1] == pytest.approx(above[1], rel=1e-11)


class TestDuhamelIplus:
    def test_zero_in_zero_out(self):
        traj = linear_trajectory(FourierField.zero(1, 3), np.linspace(0, 1, 6))
        out = duhamel_Iplus(traj)
        assert all(f.max_abs() == 0.0 for f in out.fields)

    def test_constant_profile_closed_form(self):
        # f(s, k) = c at |k| = 1: g(t) = -c (1 - e^{-t}); exact for the
        # piecewise-linear representation, so roundoff-level agreement
        c = 0.3
        times = np.linspace(0.0, 4.0, 41)
        traj = single_mode_trajectory(times, lambda t: c)
        out = duhamel_Iplus(traj)
        for t, f in zip(out.times, out.fields):
            assert f.coeff(1) == pytest.approx(-c * (1.0 - math.exp(-t)), abs=1e-14)
        # long-time limit tends to -c
        assert out.fields[-1].coeff(1) == pytest.approx(-c, rel=1e-1)
        # independent quadrature oracle at the final node
        val, _ = quad(lambda s: math.exp(-(4.0 - s)) * c, 0.0, 4.0, epsabs=1e-14)
        assert out.fields[-1].coeff(1) == pytest.approx(-val, abs=1e-12)

    def test_exponential_profile_against_closed_form(self):
        # f(s, 1) = c e^{-s/2}: g(1) = -c (e^{-1/2} - e^{-1}) / (1 - 1/2)
        c = 0.25
        closed = -c * 0.47730243708238217
        errors = []
        for n in (40, 80, 160):
            times = np.linspace(0.0, 1.0, n + 1)
            traj = single_mode_trajectory(times, lambda t: c * math.exp(-0.5 * t))
            got = duhamel_Iplus(traj).fields[-1].coeff(1)
            errors.append(abs(got - closed))
        assert errors[0] <= 5e-5  # already accurate on the coarse grid
        # second-order refinement towards the closed form
        order1 = math.log2(errors[0] / errors[1])
        order2 = math.log2(errors[1] / errors[2])
        assert order1 == pytest.approx(2.0, abs=0.3)
        assert order2 == pytest.approx(2.0, abs=0.3)

    def test_refinement_changes_output_quadratically(self, rng):
        # doubling the grid moves the result by O(dt^2) for smooth inputs
        h0 = random_field(rng, truncation=3)
        def result(n):
            times = np.linspace(0.0, 1.0, n + 1)
            return duhamel_Iplus(linear_trajectory(h0, times))
        coarse, mid, fine = result(20), result(40), result(80)
        d1 = np.max(np.abs(coarse.fields[-1].coeffs - mid.fields[-1].coeffs))
        d2 = np.max(np.abs(mid.fields[-1].coeffs - fine.fields[-1].coeffs))
        assert math.log2(d1 / d2) == pytest.approx(2.0, abs=0.35)

    def test_discrete_residual_second_order(self):
        # d/dt g = -|k|^4 g - |k|^2 f at |k| = 1, central differences
        def residual(n):
            times = np.linspace(0.0, 1.0, n + 1)
            traj = single_mode_trajectory(times, lambda t: 0.5 * math.exp(-0.3 * t))
            out = duhamel_Iplus(traj)
            g = np.array([f.coeff(1) for f in out.fields])
            f = np.array([f.coeff(1) for f in traj.fields])
            dt = times[1] - times[0]
            dgdt = (g[2:] - g[:-2]) / (2.0 * dt)
            res = dgdt + g[1:-1] + f[1:-1]
            return float(np.max(np.abs(res)))
        r1, r2 = residual(50), residual(100)
        assert math.log2(r1 / r2) == pytest.approx(2.0, abs=0.3)

    def test_mean_zero_and_hermitian_preserved(self, rng):
        traj = linear_trajectory(random_field(rng, dim=2, truncation=3), np.linspace(0, 1, 9))
        out = duhamel_Iplus(traj)
        for f in out.fields:
            assert f.coeff((0, 0)) == 0.0  # construction re-checks symmetry


class TestOperatorBoundProbe:
    def test_extremal_profile_at_unit_mode(self):
        # profile e^{-alpha t} at |k| = 1 attains the per-mode supremum as
        # t grows; the measured ratio must stay below 1/(1 - alpha)
        alpha = 0.5
        times = np.linspace(0.0, 4.0, 401)
        traj = single_mode_trajectory(times, lambda t: 0.5 * math.exp(-alpha * t))
        report = operator_bound_probe(traj, alpha)
        expected = (1.0 - math.exp(-(1.0 - alpha) * 4.0)) / (1.0 - alpha)
        assert report.ratio == pytest.approx(expected, rel=1e-3)
        assert report.passed
        assert report.bound == pytest.approx(2.0)

    def test_mode_two_respects_per_mode_bound(self):
        alpha = 0.5
        dt = 0.01
        times = np.linspace(0.0, 4.0, 401)
        decay = alpha * 2
        traj = single_mode_trajectory(times, lambda t: 0.5 * math.exp(-decay * t), k=2)
        report = operator_bound_probe(traj, alpha)
        # the piecewise-linear chord overshoots the convex profile by up to
        # (decay*dt)^2/8 relative, which inflates the measured ratio slightly
        slack = (decay * dt) ** 2 / 4.0
        assert report.ratio <= 1.0 / (1.0 - alpha / 8.0) * (1 + slack)  # 16/15
        assert report.passed

    def test_alpha_09_bound_is_ten(self, rng):
        traj = random_probe_trajectory(rng, 1, 8, np.linspace(0.0, 2.0, 201))
        report = operator_bound_probe(traj, 0.9)
        assert report.bound == pytest.approx(10.0)
        assert report.passed

    def test_zero_trajectory_rejected(self):
        traj = linear_trajectory(FourierField.zero(1, 3), np.linspace(0, 1, 5))
        with pytest.raises(ValueError, match="nonzero"):
            operator_bound_probe(traj, 0.5)

    def test_randomized_suite(self, rng):
        times = np.linspace(0.0, 2.0, 201)
        for i in range(30):
            dim = 1 if i % 2 == 0 else 2
            truncation = int(rng.integers(2, 9))
            traj = random_probe_trajectory(rng, dim, truncation, times)
            for alpha in (0.1, 0.5, 0.9):
                assert operator_bound_probe(traj, alpha).passed
