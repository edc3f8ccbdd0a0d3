import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.errors import DomainError, FitNotAttempted
from app.fitdsp import (
    background_model,
    damped_cosine,
    fit_background_model,
    fit_decaying_sinusoid,
    fit_ple_doublet,
    levenberg_marquardt,
    lorentzian_pair,
)
from app.fitdsp.least_squares import MAX_ITERATIONS
from app.fitdsp.models import OMEGA_K_MAX, TAU_K_MIN
from app.timeseries import TimeSeries


def line(p, t):
    return p[0] + p[1] * t


def decay(p, t):
    return p[0] * np.exp(-t / p[1])


class TestLevenbergMarquardt:
    def test_exact_start(self):
        t = np.linspace(0, 5, 20)
        fit = levenberg_marquardt(line, TimeSeries(t, line([1.5, -0.3], t)), [1.5, -0.3])
        assert fit.converged
        assert_allclose(fit.params, [1.5, -0.3])
        assert fit.residual_norm == pytest.approx(0.0, abs=1e-12)

    def test_linear_model_matches_normal_equations(self, rng):
        t = np.linspace(0, 10, 50)
        y = 0.7 + 0.25 * t + rng.normal(scale=0.05, size=t.size)
        fit = levenberg_marquardt(line, TimeSeries(t, y), [0.0, 0.0])
        slope, intercept = np.polyfit(t, y, 1)
        assert fit.converged
        assert_allclose(fit.params, [intercept, slope], atol=1e-9)

    def test_start_on_bound_reaches_interior(self):
        t = np.linspace(0, 4, 30)
        fit = levenberg_marquardt(line, TimeSeries(t, 1.0 + 2.0 * t), [0.0, 0.0], bounds=[(-5, 5), (0.0, 10.0)])
        assert fit.converged
        assert_allclose(fit.params, [1.0, 2.0], atol=1e-8)

    def test_active_bound_holds(self):
        t = np.linspace(0, 4, 30)
        fit = levenberg_marquardt(line, TimeSeries(t, 1.0 + 2.0 * t), [0.0, 0.5], bounds=[(-5, 5), (0.0, 1.0)])
        assert fit[1] == pytest.approx(1.0)
        assert -5 <= fit[0] <= 5

    def test_iteration_cap(self, caplog):
        t = np.linspace(0, 30, 60)
        data = TimeSeries(t, decay([2.0, 7.0], t))
        init = [0.5, 1.0]
        start = np.linalg.norm(decay(init, t) - data.values)
        with caplog.at_level(logging.WARNING, logger="app.fitdsp.least_squares"):
            fit = levenberg_marquardt(decay, data, init, max_iterations=1)
        assert not fit.converged
        assert fit.iterations == 1
        assert fit.residual_norm <= start
        assert "no convergence" in caplog.text

    def test_nonlinear_recovery(self):
        t = np.linspace(0, 30, 60)
        fit = levenberg_marquardt(decay, TimeSeries(t, decay([2.0, 7.0], t)), [1.0, 3.0], bounds=[(0, 10), (0.1, 100)])
        assert fit.converged
        assert_allclose(fit.params, [2.0, 7.0], rtol=1e-6)

    def test_errors_shrink_with_more_data(self, rng):
        def errors(n):
            t = np.linspace(0, 10, n)
            y = 0.7 + 0.25 * t + rng.normal(scale=0.1, size=n)
            return levenberg_marquardt(line, TimeSeries(t, y), [0.0, 0.0]).param_errors

        ratio = errors(100) / errors(400)
        assert_allclose(ratio, 2.0, rtol=0.25)

    def test_runaway_damping_is_not_converged(self, caplog):
        def cusp(p, t):
            return np.where(p[0] >= 0, 3.0 * p[0], -p[0]) * np.ones_like(t)

        t = np.linspace(0, 1, 10)
        with caplog.at_level(logging.DEBUG, logger="app.fitdsp.least_squares"):
            fit = levenberg_marquardt(cusp, TimeSeries(t, -np.ones_like(t)), [0.0])
        assert not fit.converged
        assert fit.iterations < MAX_ITERATIONS
        assert_allclose(fit.params, [0.0])
        assert "damping overflow" in caplog.text

    def test_tolerances_follow_data_scale(self):
        t = np.linspace(0, 30, 60)
        small = levenberg_marquardt(decay, TimeSeries(t, decay([2e-6, 7.0], t)), [1e-6, 3.0], bounds=[(0, 1), (0.1, 100)])
        assert small.converged
        assert small.iterations > 0
        assert_allclose(small.params, [2e-6, 7.0], rtol=1e-6)

    def test_init_outside_bounds(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(DomainError):
            levenberg_marquardt(line, TimeSeries(t, t), [0.0, 5.0], bounds=[(-1, 1), (-1, 1)])

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            levenberg_marquardt(line, TimeSeries([0.0], [1.0]), [0.0, 0.0])


def _s5(p, t):
    return background_model(np.asarray(p, dtype=float), t)


class TestBackgroundModel:
    t = np.arange(0, 60.05, 0.1)

    def test_pure_exponential(self):
        data = TimeSeries(self.t, 0.2 + 1.0 * np.exp(-self.t / 12.0))
        fit = fit_background_model(data)
        assert fit.converged
        assert fit[2] == pytest.approx(12.0, rel=0.01)
        assert abs(fit[3]) < 1e-3

    def test_synthetic_instance(self):
        truth = [0.3, 0.8, 10.0, 0.05, 2 * math.pi * 0.03, 20.0, 0.5]
        fit = fit_background_model(TimeSeries(self.t, _s5(truth, self.t)))
        assert_allclose(fit.params, truth, rtol=0.02)

    def test_fast_oscillation_pins_frequency_bound(self):
        y = 0.3 + 0.8 * np.exp(-self.t / 10.0) + 0.2 * np.cos(2 * math.pi * 0.15 * self.t) * np.exp(-self.t / 30.0)
        fit = fit_background_model(TimeSeries(self.t, y))
        assert fit[4] == pytest.approx(OMEGA_K_MAX, rel=0.02)
        assert fit[5] >= TAU_K_MIN

    def test_time_measured_from_first_sample(self):
        truth = [0.2, 1.0, 12.0, 0.0, 0.1, 10.0, 0.0]
        offset = self.t + 105.0
        fit = fit_background_model(TimeSeries(offset, _s5(truth, self.t)))
        assert fit[2] == pytest.approx(12.0, rel=0.01)

    def test_too_short(self):
        with pytest.raises(DomainError):
            fit_background_model(TimeSeries(np.arange(5.0), np.ones(5)))


class TestDecayingSinusoid:
    t = np.arange(0, 20.0001, 0.05)

    def test_noiseless_recovery(self):
        y = damped_cosine(np.array([1.0, 0.3, 5.0, 0.0, 0.0]), self.t)
        fit = fit_decaying_sinusoid(TimeSeries(self.t, y))
        assert fit.converged
        assert fit[0] == pytest.approx(1.0, rel=1e-3)
        assert fit[1] == pytest.approx(0.3, rel=1e-3)
        assert fit[2] == pytest.approx(5.0, rel=1e-3)

    def test_tiny_amplitude(self):
        t = np.arange(0.05, 40.0001, 0.05)
        y = damped_cosine(np.array([1e-5, 0.3, 8.0, 0.0, 0.0]), t)
        fit = fit_decaying_sinusoid(TimeSeries(t, y))
        assert fit.converged
        assert fit.iterations > 0
        assert fit[1] == pytest.approx(0.3, rel=1e-3)
        assert fit[2] == pytest.approx(8.0, rel=1e-3)

    def test_constant_input(self):
        with pytest.raises(FitNotAttempted):
            fit_decaying_sinusoid(TimeSeries(self.t, np.full(self.t.size, 0.4)))

    def test_time_origin_shift(self):
        y = damped_cosine(np.array([0.8, 0.45, 6.0, 0.1, 0.3]), self.t)
        base = fit_decaying_sinusoid(TimeSeries(self.t, y))
        moved = fit_decaying_sinusoid(TimeSeries(self.t + 3.7, y))
        assert moved[1] == pytest.approx(base[1], abs=1e-6)
        assert moved[2] == pytest.approx(base[2], rel=1e-6)

    def test_offset_recovered(self):
        y = damped_cosine(np.array([0.5, 0.2, 8.0, 0.25, 0.0]), self.t)
        fit = fit_decaying_sinusoid(TimeSeries(self.t, y))
        assert fit[3] == pytest.approx(0.25, abs=1e-4)


class TestPleDoublet:
    x = np.arange(-2.0, 2.0001, 0.01)

    def test_symmetric_doublet(self):
        y = lorentzian_pair(np.array([0.1, 1.0, -0.2, 0.1, 1.0, 0.2, 0.1]), self.x)
        fit = fit_ple_doublet(self.x, y)
        assert fit.resolved
        assert fit.splitting == pytest.approx(0.4, rel=0.01)
        assert fit.center1 < fit.center2

    def test_single_line_unresolved(self):
        y = 0.05 + 0.1**2 / ((self.x - 0.3) ** 2 + 0.1**2)
        fit = fit_ple_doublet(self.x, y)
        assert not fit.resolved
        assert fit.splitting == 0.0
        assert fit.center1 == fit.center2 == pytest.approx(0.3, abs=1e-3)

    def test_unsorted_input(self):
        y = lorentzian_pair(np.array([0.0, 1.0, -0.5, 0.08, 0.6, 0.4, 0.08]), self.x)
        order = np.random.default_rng(0).permutation(self.x.size)
        fit = fit_ple_doublet(self.x[order], y[order])
        assert fit.splitting == pytest.approx(0.9, rel=0.01)

    def test_too_few_points(self):
        with pytest.raises(DomainError):
            fit_ple_doublet([0, 1, 2], [1, 2, 1])
