"""Picard fixed-point machinery, the ETD2 stepper, smallness, continuation and
the scaling symmetry."""

import warnings

import numpy as np
import pytest

import gevreyns as g
from gevreyns.errors import InvalidParameterError, SmallnessError
from gevreyns.norms import NormSpec, snapshot_norm
from gevreyns.solver import (
    SolverConfig,
    critical_norm_spec,
    dilate_datum,
    energy_balance_defect,
    extension_schedule,
    modulation_metric,
    picard_solve,
    save_solve,
    step_solve,
    theorem_metric,
)
from gevreyns.spectral import parseval_l2
from gevreyns.decomposition import DyadicSystem, UniformSystem
from gevreyns.ensembles import random_div_free, single_mode, taylor_green

from conftest import rng_field


@pytest.fixture(scope="module")
def tg64(grid64):
    return taylor_green(grid64)


class TestStepSolve:
    def test_heat_only_single_mode(self, grid64):
        u0 = single_mode(grid64, (2, 1), 1.0)
        cfg = SolverConfig(alpha=1.0, T=0.5, dt=0.01, nonlinearity=False, save_every=10)
        tr = step_solve(u0, cfg)
        lam = 5.0
        for t, s in zip(tr.times, tr.states):
            exact = np.exp(-lam * t) * u0
            err = parseval_l2(s - exact) / parseval_l2(exact)
            assert err < 1e-10

    def test_taylor_green_closed_form(self, grid64, tg64):
        cfg = SolverConfig(alpha=1.0, T=1.0, dt=5e-4, save_every=200, allow_large_data=True)
        tr = step_solve(tg64, cfg)
        for t, s in zip(tr.times, tr.states):
            exact = np.exp(-2.0 * t) * tg64
            assert parseval_l2(s - exact) / parseval_l2(exact) < 1e-6

    def test_energy_monotone(self, grid32):
        u0 = random_div_free(grid32, decay=2.0, amplitude=0.5, seed=1)
        cfg = SolverConfig(alpha=0.75, T=0.3, dt=1e-3, save_every=50, allow_large_data=True)
        tr = step_solve(u0, cfg)
        e = tr.diagnostics["energy"]
        assert np.all(np.diff(e) <= 1e-12 * e[0])

    def test_energy_balance(self, grid32):
        u0 = random_div_free(grid32, decay=2.5, amplitude=0.2, seed=2)
        cfg = SolverConfig(alpha=1.0, T=0.5, dt=5e-4, save_every=10**9, allow_large_data=True)
        tr = step_solve(u0, cfg)
        assert energy_balance_defect(tr, 1.0) < 1e-6

    def test_divergence_free_maintained(self, grid32):
        u0 = random_div_free(grid32, decay=2.0, amplitude=0.3, seed=3)
        cfg = SolverConfig(alpha=1.0, T=0.2, dt=1e-3, save_every=100, allow_large_data=True)
        tr = step_solve(u0, cfg)
        assert tr.states[-1].divergence_error() <= 1e-10

    def test_cfl_warning(self, grid32):
        u0 = random_div_free(grid32, decay=2.0, amplitude=30.0, seed=4)
        cfg = SolverConfig(alpha=1.0, T=0.01, dt=5e-3, save_every=10, allow_large_data=True)
        with pytest.warns(RuntimeWarning, match="CFL"):
            step_solve(u0, cfg)

    def test_save_times_hit_exactly(self, grid32):
        u0 = random_div_free(grid32, decay=2.0, amplitude=0.1, seed=5)
        cfg = SolverConfig(alpha=1.0, T=0.3, dt=7e-3, save_every=10**9, allow_large_data=True)
        tr = step_solve(u0, cfg, save_times=[0.1, 0.25])
        for t in (0.1, 0.25, 0.3):
            assert np.min(np.abs(tr.times - t)) < 1e-12

    def test_diagnostics_norms_recorded(self, grid32):
        u0 = random_div_free(grid32, decay=2.0, amplitude=0.1, seed=6)
        spec = NormSpec("besov", s=0.0, p=2.0, q=1.0, label="critical")
        cfg = SolverConfig(
            alpha=1.0, T=0.05, dt=5e-3, save_every=1, allow_large_data=True,
            diagnostics_norms=[spec],
        )
        tr = step_solve(u0, cfg)
        assert "critical" in tr.diagnostics
        assert len(tr.diagnostics["critical"]) == len(tr.diagnostics["t"])


class TestPicard:
    def test_zero_datum(self, grid32):
        cfg = SolverConfig(alpha=1.0, T=0.5, n_picard=3, picard_time_samples=17)
        rep = picard_solve(g.SpectralField.zeros(grid32, 2), cfg)
        assert rep.converged
        assert all(d == 0.0 for d in rep.iterate_distances)
        assert all(r == 0.0 for r in rep.contraction_ratios)

    def test_taylor_green_one_iterate(self, grid64, tg64):
        # oracle: e^{-2t} TG solves exactly (the transport term is a gradient)
        cfg = SolverConfig(alpha=1.0, T=0.5, n_picard=2, picard_time_samples=33,
                           allow_large_data=True)
        rep = picard_solve(tg64, cfg)
        worst = max(
            parseval_l2(s - np.exp(-2.0 * t) * tg64) / parseval_l2(np.exp(-2.0 * t) * tg64)
            for t, s in zip(rep.final_trace.times, rep.final_trace.states)
        )
        assert worst < 1e-6
        assert rep.converged

    def test_contraction_small_data(self, grid32):
        cfg = SolverConfig(alpha=1.0, T=0.5, n_picard=5, picard_time_samples=33)
        dyadic, uniform = DyadicSystem(grid32), UniformSystem(grid32)
        crit = critical_norm_spec(1.0, 2)
        for seed in range(3):
            u0 = random_div_free(
                grid32, decay=2.5, amplitude=1.0, seed=seed,
                norm=lambda u: snapshot_norm(u, crit, dyadic, uniform),
            ) * 0.05
            rep = picard_solve(u0, cfg)
            assert not rep.diverged
            assert all(r < 1.0 for r in rep.contraction_ratios[1:])

    def test_fixed_point_consistency(self, grid32):
        cfg = SolverConfig(alpha=1.0, T=0.5, n_picard=12, picard_time_samples=33)
        u0 = random_div_free(grid32, decay=2.5, amplitude=0.02, seed=9)
        rep = picard_solve(u0, cfg)
        again = picard_solve(u0, cfg, initial_trace=rep.final_trace)
        assert again.iterate_distances[0] < 1e-8

    def test_mild_vs_stepped_agreement(self, grid32):
        u0 = random_div_free(grid32, decay=2.5, amplitude=0.05, seed=10)
        cfg = SolverConfig(
            alpha=1.0, T=0.1, dt=0.1 / 32, n_picard=8, picard_time_samples=33,
            time_grid_kind="uniform", allow_large_data=True,
        )
        rep = picard_solve(u0, cfg)
        tr = step_solve(u0, cfg)
        worst = 0.0
        for t, s in zip(rep.final_trace.times, rep.final_trace.states):
            i = int(np.argmin(np.abs(tr.times - t)))
            if abs(tr.times[i] - t) < 1e-12:
                ref = parseval_l2(tr.states[i])
                if ref > 0:
                    worst = max(worst, parseval_l2(s - tr.states[i]) / ref)
        assert worst < 1e-5

    def test_smallness_gate(self, grid32):
        cal = {"C_emp": 1.0}
        cfg = SolverConfig(alpha=1.0, T=0.2, n_picard=2, picard_time_samples=9,
                           calibration=cal)
        big = taylor_green(grid32, amplitude=50.0)
        with pytest.raises(SmallnessError):
            picard_solve(big, cfg)
        cfg_ok = SolverConfig(alpha=1.0, T=0.2, n_picard=2, picard_time_samples=9,
                              calibration=cal, allow_large_data=True)
        picard_solve(big, cfg_ok)  # override allows it

    def test_extension_schedule(self, grid32):
        u0 = random_div_free(grid32, decay=2.5, amplitude=0.02, seed=11)
        cfg = SolverConfig(alpha=1.0, T=1.0, n_picard=6, picard_time_samples=17,
                           metric_norms=modulation_metric())
        reports = extension_schedule(u0, cfg, [0.0, 0.3, 0.6])
        assert len(reports) == 2
        assert all(rep.converged for rep in reports)
        # restart state continuity: last state of leg 1 seeds leg 2 at t = 0.3
        assert reports[0].final_trace.times[-1] == pytest.approx(0.3)


class TestSmallness:
    def test_zero_passes(self, grid32):
        cfg = SolverConfig()
        res = g.smallness_check(g.SpectralField.zeros(grid32, 2), cfg)
        assert res["pass"] and res["norm"] == 0.0

    def test_norm_scales_linearly(self, grid32):
        cfg = SolverConfig()
        u0 = random_div_free(grid32, decay=2.0, amplitude=1.0, seed=12)
        a = g.smallness_check(u0, cfg)["norm"]
        b = g.smallness_check(3.0 * u0, cfg)["norm"]
        assert b == pytest.approx(3.0 * a, rel=1e-12)

    def test_threshold_uses_calibration(self, grid32):
        cfg = SolverConfig(delta=2.0)
        res = g.smallness_check(
            g.SpectralField.zeros(grid32, 2), cfg, calibration={"C_emp": 4.0}
        )
        assert res["threshold"] == pytest.approx(2.0 / 16.0)


class TestContinuation:
    def test_zero_trace(self, grid32):
        from gevreyns.norms import constant_trace

        cfg = SolverConfig(alpha=1.0)
        tr = constant_trace(g.SpectralField.zeros(grid32, 2), [0.0, 0.5])
        assert g.continuation_functional(tr, cfg) == 0.0

    def test_heat_single_mode_oracle(self, grid64):
        # oracle: 1D quadrature of the L~3 / L~3/2 pair for one decaying mode
        from gevreyns.norms import EvolutionTrace
        from gevreyns.verification import alpha_weight

        u0 = single_mode(grid64, (1, 0), 1.0)
        times = np.unique(np.concatenate([[0.0], np.geomspace(1e-4, 1.0, 200)]))
        states = [g.apply_semigroup(u0, float(t), 1.0) for t in times]
        tr = EvolutionTrace(times, states)
        w = alpha_weight(1.0, 2)
        metric = [
            NormSpec("besov", s=2 / 2 - 1 / 3, p=2.0, q=1.0, gamma=3.0, weight=w),
        ]
        cfg = SolverConfig(alpha=1.0, continuation_norms=metric)
        got = g.continuation_functional(tr, cfg)
        # scalar oracle: the mode sits in shell j=0 with phi = 1, |xi|_1 = 1;
        # value = (int_0^1 (e^{sqrt t - t} a)^3 dt)^{1/3} with a = ||u0||_2
        a = parseval_l2(u0)
        integrand = (np.exp(np.sqrt(times) - times) * a) ** 3
        expect = np.trapezoid(integrand, times) ** (1 / 3)
        assert got == pytest.approx(expect, rel=1e-6)

    def test_monotone_under_extension(self, grid32):
        cfg = SolverConfig(alpha=1.0)
        u0 = random_div_free(grid32, decay=2.0, amplitude=0.1, seed=13)
        run = SolverConfig(alpha=1.0, T=0.4, dt=2e-3, save_every=20, allow_large_data=True)
        tr = step_solve(u0, run)
        vals = [
            g.continuation_functional(tr.restricted(t_end), cfg)
            for t_end in (0.1, 0.2, 0.3, 0.4)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestScalingSymmetry:
    def test_identity_dilation(self, grid64):
        tgs = taylor_green(grid64, amplitude=1e-3)
        cfg = SolverConfig(alpha=1.0, T=0.25, dt=2e-3)
        assert g.scaling_symmetry_check(tgs, 1, cfg) == 0.0

    def test_heat_only(self, grid64):
        u0 = single_mode(grid64, (1, 0), 0.5)
        cfg = SolverConfig(alpha=1.0, T=0.25, dt=2e-3, nonlinearity=False)
        assert g.scaling_symmetry_check(u0, 2, cfg) < 1e-8

    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    def test_taylor_green_small(self, grid64, alpha):
        tgs = taylor_green(grid64, amplitude=1e-3)
        cfg = SolverConfig(alpha=alpha, T=0.25, dt=2e-3)
        assert g.scaling_symmetry_check(tgs, 2, cfg) < 1e-4

    def test_frequency_overflow_rejected(self, grid32):
        u0 = single_mode(grid32, (10, 0), 1.0)
        with pytest.raises(InvalidParameterError):
            dilate_datum(u0, 2, 1.0)


class TestPersistence:
    def test_save_solve_layout(self, grid32, tmp_path):
        u0 = random_div_free(grid32, decay=2.0, amplitude=0.1, seed=14)
        spec = NormSpec("besov", s=0.0, p=2.0, q=1.0, label="b0")
        cfg = SolverConfig(alpha=1.0, T=0.05, dt=5e-3, save_every=2,
                           allow_large_data=True, diagnostics_norms=[spec])
        tr = step_solve(u0, cfg)
        written = save_solve(tmp_path / "run", cfg, tr)
        names = {p.name for p in written}
        assert "config.json" in names and "diagnostics.csv" in names
        lines = (tmp_path / "run" / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "t,energy,b0,gevrey_norm,continuation_functional"
        # continuation functional is monotone along the trace
        cont = [float(line.split(",")[-1]) for line in lines[1:]]
        assert all(b >= a - 1e-12 for a, b in zip(cont, cont[1:]))
        # snapshots round trip
        first = g.load_field(tmp_path / "run" / "state_000000")
        assert np.array_equal(first.coeffs, tr.states[0].coeffs)


def test_theorem_metric_shapes():
    m1 = theorem_metric(1.0, 2)
    assert [round(n.s, 3) for n in m1] == [round(2 / 2 - 1 / 3, 3), round(2 / 2 + 1 / 3, 3)]
    assert [n.gamma for n in m1] == [3.0, 1.5]
    m075 = theorem_metric(0.75, 2, epsilon=0.1)
    assert [round(n.gamma, 4) for n in m075] == [2.5, 3.75]
    assert m075[0].weight.power == pytest.approx(1 / 1.5)
    m05 = theorem_metric(0.5, 2)
    assert m05[0].s == pytest.approx(1.0) and np.isinf(m05[0].gamma)
    mod = modulation_metric()
    assert mod[0].weight.rate == pytest.approx(2.0**-10)
