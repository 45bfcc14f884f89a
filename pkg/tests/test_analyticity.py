"""Radius fitting, Gevrey norm monitoring and the growth-law experiment."""

import warnings

import numpy as np
import pytest

import gevreyns as g
from gevreyns.analyticity import default_growth_times, radius_fit
from gevreyns.errors import UndefinedRadiusError
from gevreyns.norms import NormSpec
from gevreyns.solver import SolverConfig, step_solve
from gevreyns.ensembles import random_div_free, single_mode

from conftest import place_modes


def synthetic_l1_decay(grid, rate, noise_seed=None, noise_level=0.0):
    table = np.exp(-rate * grid.xi_l1)
    if noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        table = table * np.abs(1.0 + noise_level * rng.standard_normal(grid.shape))
    return g.SpectralField(grid, (table + 0j)[None])


class TestRadiusFit:
    def test_exact_synthetic(self, grid64):
        fit = radius_fit(synthetic_l1_decay(grid64, 0.3))
        assert abs(fit.radius - 0.3) < 0.01
        assert fit.fit_residual < 1e-10

    def test_noise_robustness(self, grid64):
        fit = radius_fit(synthetic_l1_decay(grid64, 0.3, noise_seed=1, noise_level=0.1))
        assert 0.25 <= fit.radius <= 0.35

    @pytest.mark.parametrize("rate", [0.1, 0.25, 0.5, 0.75, 1.0])
    def test_three_percent_recovery(self, grid64, rate):
        fit = radius_fit(synthetic_l1_decay(grid64, rate))
        assert abs(fit.radius - rate) / rate < 0.03

    def test_single_mode_undefined(self, grid64):
        with pytest.raises(UndefinedRadiusError):
            radius_fit(place_modes(grid64, {(1, 0): 0.5}))

    def test_zero_field_undefined(self, grid64):
        with pytest.raises(UndefinedRadiusError):
            radius_fit(g.SpectralField.zeros(grid64))

    def test_window_excludes_dealias_band(self, grid64):
        fit = radius_fit(synthetic_l1_decay(grid64, 0.5))
        assert fit.frequency_window[1] <= grid64.resolution // 3


class TestMonitor:
    def test_zero_trace(self, grid32):
        from gevreyns.norms import constant_trace

        tr = constant_trace(g.SpectralField.zeros(grid32, 2), [0.0, 0.5, 1.0])
        mon = g.gevrey_norm_monitor(tr, 1.0, 1.0, NormSpec("besov", s=0.0, p=2.0, q=1.0))
        assert np.all(mon["values"] == 0.0)
        assert mon["alarm_time"] is None

    def test_rate_zero_reproduces_unweighted(self, grid32):
        from gevreyns.decomposition import DyadicSystem, UniformSystem
        from gevreyns.norms import snapshot_norm

        u0 = random_div_free(grid32, decay=2.0, amplitude=0.2, seed=1)
        cfg = SolverConfig(alpha=1.0, T=0.2, dt=5e-3, save_every=8, allow_large_data=True)
        tr = step_solve(u0, cfg)
        spec = NormSpec("besov", s=0.0, p=2.0, q=1.0)
        mon = g.gevrey_norm_monitor(tr, 1.0, 0.0, spec)
        dyadic, uniform = DyadicSystem(grid32), UniformSystem(grid32)
        direct = [snapshot_norm(s, spec, dyadic, uniform) for s in tr.states]
        assert np.allclose(mon["values"], direct, rtol=1e-13)

    def test_heat_single_mode_oracle(self, grid64):
        # scalar oracle: for |xi0| = (1,0), the weighted block value is
        # e^{sqrt t - t}, whose max over t is e^{1/4}
        u0 = single_mode(grid64, (1, 0), 1.0)
        cfg = SolverConfig(alpha=1.0, T=1.0, dt=5e-3, nonlinearity=False, save_every=5)
        tr = step_solve(u0, cfg, save_times=[0.25])
        mon = g.gevrey_norm_monitor(tr, 1.0, 1.0, NormSpec("besov", s=0.0, p=2.0, q=1.0))
        ratio = np.max(mon["values"]) / mon["values"][0]
        assert ratio == pytest.approx(np.exp(0.25), rel=1e-6)
        assert mon["alarm_time"] is None

    def test_monotone_radius_heat_flow(self, grid64):
        u0 = random_div_free(grid64, decay=2.0, amplitude=1.0, seed=2)
        cfg = SolverConfig(alpha=1.0, T=1.0, dt=5e-3, nonlinearity=False,
                           save_every=10**9, allow_large_data=True)
        tr = step_solve(u0, cfg, save_times=[0.2, 0.4, 0.7, 1.0])
        radii = []
        for t in (0.2, 0.4, 0.7, 1.0):
            i = int(np.argmin(np.abs(tr.times - t)))
            radii.append(radius_fit(tr.states[i]).radius)
        assert all(b >= a - 1e-9 for a, b in zip(radii, radii[1:]))


class TestGrowthExperiment:
    def test_heat_from_analytic_datum(self, grid64):
        # datum radius 0.5: the linear flow only adds decay, so every fitted
        # radius stays >= 0.5 and increases
        rng = np.random.default_rng(3)
        mags = np.exp(-0.5 * grid64.xi_l1)
        from gevreyns.ensembles import hermitize

        coeffs = hermitize((mags * (1 + 0j))[None], grid64)
        coeffs[0][0, 0] = 0.0
        u0 = g.SpectralField(grid64, np.stack([coeffs[0], coeffs[0] * 0.5]))
        u0 = g.leray_project(u0)
        cfg = SolverConfig(alpha=1.0, T=1.0, dt=5e-3, nonlinearity=False,
                           allow_large_data=True)
        res = g.radius_growth_experiment(u0, 1.0, [0.2, 0.5, 1.0], cfg)
        radii = [f.radius for f in res["per_time"]]
        assert all(r >= 0.5 - 1e-6 for r in radii)
        assert radii == sorted(radii)

    def test_rejects_bad_times(self, grid32):
        u0 = random_div_free(grid32, decay=1.0, amplitude=1e-3, seed=4)
        cfg = SolverConfig(alpha=1.0, T=1.0, dt=5e-3, allow_large_data=True)
        from gevreyns.errors import InvalidParameterError

        with pytest.raises(InvalidParameterError):
            g.radius_growth_experiment(u0, 1.0, [0.0, 0.5], cfg)
        with pytest.raises(InvalidParameterError):
            g.radius_growth_experiment(u0, 1.0, [0.5, 1.5], cfg)

    def test_ns_exponent_alpha_one(self, grid64):
        u0 = random_div_free(grid64, decay=1.0, amplitude=1e-3, seed=21)
        cfg = SolverConfig(alpha=1.0, T=1.0, dt=2e-3, allow_large_data=True)
        res = g.radius_growth_experiment(u0, 1.0, default_growth_times(1.0), cfg)
        assert 0.35 <= res["exponent"] <= 0.65


def test_default_growth_times_inside_unit_interval():
    for alpha in (0.5, 0.75, 1.0):
        ts = default_growth_times(alpha)
        assert ts[0] > 0 and ts[-1] <= 1.0 and np.all(np.diff(ts) > 0)
