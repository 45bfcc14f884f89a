"""The empirical inequality harness: determinism, per-id sanity and the
calibration gate."""

import dataclasses

import numpy as np
import pytest

from gevreyns.errors import CalibrationRefusedError, InvalidParameterError, UsageError
from gevreyns.verification import (
    EnsembleSpec,
    VERIFY_IDS,
    calibrate,
    verify,
    verification_time_grid,
)


SMALL = EnsembleSpec(n_samples=10, resolutions=(32,), n_dims=2, seed=7)


class TestEnsembleSpec:
    def test_minimum_samples_enforced(self):
        with pytest.raises(InvalidParameterError):
            EnsembleSpec(n_samples=5)

    def test_rng_child_streams_deterministic(self):
        a = EnsembleSpec(seed=3).rng(1, 2).standard_normal(4)
        b = EnsembleSpec(seed=3).rng(1, 2).standard_normal(4)
        c = EnsembleSpec(seed=3).rng(1, 3).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestVerify:
    def test_unknown_id(self):
        with pytest.raises(UsageError):
            verify("nonsense", SMALL)

    def test_report_determinism(self):
        a = verify("bernstein", SMALL)
        b = verify("bernstein", SMALL)
        assert a.to_dict() == b.to_dict()

    def test_bernstein_ratio_bound(self):
        rep = verify("bernstein", SMALL)
        assert rep.passed
        # s = 1 block ratios obey the two-sided comparison within a factor 2
        # plus lattice slack
        assert rep.C_emp <= 2.5
        details = rep.details["32"]
        assert details["shell_drift"] <= 2.0

    def test_bilinear_exp_t0_is_hoelder(self):
        rep = verify("bilinear_exp", SMALL)
        assert rep.passed
        assert rep.details["32"]["holder_t0_max"] <= 1.0 + 1e-9

    def test_uniform_decay_gate(self):
        rep = verify("uniform_decay", SMALL)
        assert rep.passed
        assert rep.C_emp <= 1.0 + 1e-9

    def test_gevrey_equivalence_stability(self):
        rep = verify("gevrey_equivalence", SMALL)
        assert rep.passed
        per_m = rep.details["32"]["per_order_max"]
        vals = np.array(list(per_m.values()))
        assert np.all(np.isfinite(vals))

    def test_alpha_restriction(self):
        rep = verify("semigroup_besov", SMALL, alphas=(1.0,))
        assert rep.passed

    def test_report_shape(self):
        rep = verify("linear_modulation", SMALL)
        d = rep.to_dict()
        assert d["inequality_id"] == "linear_modulation"
        assert d["pass"] is True
        assert set(d["per_resolution"]) == {"32"}
        assert len(d["per_sample_ratio"]) >= 10

    @pytest.mark.parametrize("vid", sorted(VERIFY_IDS))
    def test_every_id_passes_at_n32(self, vid):
        rep = verify(vid, SMALL)
        assert rep.passed, (vid, rep.C_emp, rep.resolution_drift)

    def test_resolution_drift_two_ids_at_128(self):
        # spot check the invariant's N = 128 leg on the cheap coefficient-space ids
        spec = EnsembleSpec(n_samples=10, resolutions=(32, 64, 128), n_dims=2, seed=7)
        for vid in ("linear_modulation", "product_modulation"):
            rep = verify(vid, spec)
            assert rep.passed, (vid, rep.per_resolution)

    def test_semigroup_sharpness_plateau(self):
        # block-supported data saturate the linear estimate: the per-shell
        # ratio plateau varies by less than a factor 2 across j in [2, jmax-2]
        spec = EnsembleSpec(n_samples=10, resolutions=(32, 64), n_dims=2, seed=7)
        rep = verify("semigroup_besov", spec, alphas=(1.0,))
        for N in (32, 64):
            assert rep.details[str(N)]["plateau_drift"] < 2.0


class TestCalibrate:
    def test_deterministic_record(self):
        a = calibrate(1.0, 2, 32, "besov", seed=5)
        b = calibrate(1.0, 2, 32, "besov", seed=5)
        assert a == b
        assert a["digest"] == b["digest"]

    def test_gate_refusal(self):
        from gevreyns.verification import VerificationReport

        failing = VerificationReport(
            inequality_id="bilinear_besov",
            per_sample_ratio=[float("inf")],
            C_emp=float("inf"),
            resolution_drift=float("inf"),
            passed=False,
        )
        with pytest.raises(CalibrationRefusedError):
            calibrate(
                1.0, 2, 32, "besov", seed=5,
                gate_reports={
                    "bilinear_besov": failing,
                },
            )

    def test_resolution_stability(self):
        a = calibrate(1.0, 2, 32, "besov", seed=5)
        b = calibrate(1.0, 2, 64, "besov", seed=5)
        assert a["C_emp"] / b["C_emp"] < 2.0
        assert b["C_emp"] / a["C_emp"] < 2.0

    def test_unknown_family(self):
        with pytest.raises(UsageError):
            calibrate(1.0, 2, 32, "sobolev")


def test_time_grid_refined_at_both_ends():
    t = verification_time_grid()
    assert t[0] == 0.0 and t[-1] == 1.0
    gaps = np.diff(t)
    assert gaps[0] < 1e-3 and gaps[-1] < 2e-3
    assert np.all(gaps > 0)
