# -*- coding: utf-8 -*-
import numpy as np
import pytest

from conftest import scalar_system
from ErgodicRiskLQR.ErgodicRisk import RiskFunctional
from ErgodicRiskLQR.Errors import ChannelOutOfRange, DimensionMismatch, MomentUndefined, NumericalOverflow
from ErgodicRiskLQR.LtiSystem import LtiSystem, Policy, average_cost
from ErgodicRiskLQR.NoiseModels import GaussianNoise, StudentTNoise
from ErgodicRiskLQR.Simulator import (GustConfig, RolloutConfig, clt_check, doob_check, ensemble,
                                      ensemble_variance_curve, inject_gust, lln_check, mds_check, rollout)


class TestRollout :

    def test_noise_free_is_zero(self) :
        sys = LtiSystem(A=[[0.5, 0.1], [0.0, 0.3]], B=np.eye(2), H=np.eye(2), noise=GaussianNoise(np.zeros((2, 2))))
        stats = rollout(sys, Policy.linear(np.zeros((2, 2))), RiskFunctional(Qc=np.eye(2)), RolloutConfig(horizon=100))
        assert not np.any(stats.S_series)
        assert not np.any(stats.final_state)
        assert stats.J_T == 0.0

    def test_deterministic(self, three_state) :
        cfg = RolloutConfig(horizon=3000, seed=5, record_stride=100)
        a = rollout(*three_state, cfg, rep_index=3)
        b = rollout(*three_state, cfg, rep_index=3)
        np.testing.assert_array_equal(a.S_series, b.S_series)
        np.testing.assert_array_equal(a.Gamma_T, b.Gamma_T)

    def test_grouping_does_not_matter(self, three_state) :
        cfg = RolloutConfig(horizon=500, reps=70, seed=2, record_stride=50)
        batch = ensemble(*three_state, cfg)
        single = rollout(*three_state, cfg, rep_index=66)
        np.testing.assert_allclose(batch[66].S_series, single.S_series, rtol=1e-10, atol=1e-9)

    def test_record_times(self) :
        cfg = RolloutConfig(horizon=1050, record_stride=100)
        times = cfg.record_times
        assert times[0] == 100 and times[-1] == 1050 and len(times) == 11

    def test_unstable_policy_overflows(self) :
        sys = scalar_system(1.5)
        with pytest.raises(NumericalOverflow) as e :
            rollout(sys, Policy.linear([[0.0]]), RiskFunctional(Qc=[[1.0]]), RolloutConfig(horizon=5000))
        assert e.value.step is not None
        assert e.value.partial is not None


class TestEnsembleCost :

    @pytest.mark.montecarlo
    def test_default_weights_match_average_cost(self, deadbeat) :
        sys, pol, _ = deadbeat
        rf = RiskFunctional(Qc=[[4.0]])
        batch = ensemble(sys, pol, rf, RolloutConfig(horizon=20000, reps=100, seed=1, record_stride=20000))
        expected = average_cost(sys, [[1.0]], [[1.0]], pol)
        assert expected == pytest.approx(1.25)
        assert np.mean(batch.J_T) / batch.steps == pytest.approx(expected, rel=0.02)

    @pytest.mark.montecarlo
    def test_custom_weights_match_average_cost(self, deadbeat) :
        sys, pol, rf = deadbeat
        cfg = RolloutConfig(horizon=20000, reps=100, seed=1, record_stride=20000, cost=([[2.0]], [[3.0]]))
        batch = ensemble(sys, pol, rf, cfg)
        expected = average_cost(sys, [[2.0]], [[3.0]], pol)
        assert expected == pytest.approx(2.75)
        assert np.mean(batch.J_T) / batch.steps == pytest.approx(expected, rel=0.02)

    def test_wrong_weight_shape(self, deadbeat) :
        cfg = RolloutConfig(horizon=10, cost=(np.eye(2), [[1.0]]))
        with pytest.raises(DimensionMismatch) :
            ensemble(*deadbeat, cfg)


class TestVarianceCurve :

    @pytest.mark.montecarlo
    def test_deadbeat_gaussian(self, deadbeat) :
        curve = ensemble_variance_curve(*deadbeat, RolloutConfig(horizon=20000, reps=1000, seed=1, record_stride=1000))
        assert curve.terminal == pytest.approx(2.0, rel=0.15)

    @pytest.mark.montecarlo
    def test_deadbeat_student_t(self, deadbeat_t) :
        curve = ensemble_variance_curve(*deadbeat_t, RolloutConfig(horizon=20000, reps=1000, seed=1, record_stride=1000))
        assert curve.terminal == pytest.approx(8.0, rel=0.25)

    def test_single_replication_has_zero_spread(self, deadbeat) :
        curve = ensemble_variance_curve(*deadbeat, RolloutConfig(horizon=200, reps=1, record_stride=50))
        assert not np.any(curve.sd)
        assert curve.rows("K")[0][:2] == ["K", 50]

    def test_needs_fourth_moment(self) :
        sys = scalar_system(0.5, noise=StudentTNoise(3, [[1.0]]))
        with pytest.raises(MomentUndefined) :
            ensemble_variance_curve(sys, Policy.linear([[-0.5]]), RiskFunctional(Qc=[[1.0]]), RolloutConfig(horizon=10))


class TestLlnCheck :

    @pytest.mark.montecarlo
    def test_deadbeat(self, deadbeat) :
        sys, pol, rf = deadbeat
        report = lln_check(sys, pol, RolloutConfig(horizon=100000, seed=3), rf=rf)
        assert report.passed
        assert report["gamma_dev"] <= 0.05
        assert report["lambda_dev"] <= 0.02
        assert report["gamma_N_dev"] <= 0.05

    def test_noise_free_is_degenerate(self) :
        sys = scalar_system(0.5, noise=GaussianNoise([[0.0]]))
        report = lln_check(sys, Policy.linear([[-0.5]]), RolloutConfig(horizon=100))
        assert report.degenerate
        assert report["lambda_dev"] == 0.0


class TestCltCheck :

    @pytest.mark.montecarlo
    def test_scalar_and_three_state(self, deadbeat, three_state) :
        for sys, pol, rf in (deadbeat, three_state) :
            report = clt_check(sys, pol, rf, RolloutConfig(horizon=10000, reps=1000, seed=8))
            assert report["lambda_dev"] <= 0.15

    def test_zero_risk_weight_is_degenerate(self, deadbeat) :
        sys, pol, _ = deadbeat
        report = clt_check(sys, pol, RiskFunctional.zero(1), RolloutConfig(horizon=200, reps=200, seed=1))
        assert report.degenerate
        assert report["S_max"] == 0.0

    def test_needs_replications(self, deadbeat) :
        with pytest.raises(ValueError) :
            clt_check(*deadbeat, RolloutConfig(horizon=100, reps=50))


class TestMartingaleChecks :

    @pytest.mark.montecarlo
    def test_doob_increments(self, three_state) :
        report = doob_check(*three_state, RolloutConfig(horizon=1, reps=2000, seed=6), times=[1000, 10000])
        assert report.passed

    @pytest.mark.montecarlo
    def test_mds(self, three_state) :
        report = mds_check(*three_state, RolloutConfig(horizon=1, reps=2000, seed=6), times=[1, 50, 500])
        assert report.passed


class TestGusts :

    def test_inject_gust(self) :
        cfg = RolloutConfig(horizon=1000, gust=GustConfig(period=200, magnitude=20.0, channel=1))
        np.testing.assert_array_equal(inject_gust(cfg, 200, 2), [0.0, 20.0])
        assert not np.any(inject_gust(cfg, 199, 2))
        assert not np.any(inject_gust(RolloutConfig(horizon=10), 200, 2))

    def test_channel_out_of_range(self, deadbeat) :
        cfg = RolloutConfig(horizon=500, gust=GustConfig(period=100, magnitude=5.0, channel=3))
        with pytest.raises(ChannelOutOfRange) :
            rollout(*deadbeat, cfg)

    def test_peak_response(self) :
        sys = scalar_system(0.5, noise=GaussianNoise([[0.0]]))
        cfg = RolloutConfig(horizon=400, gust=GustConfig(period=100, magnitude=10.0))
        stats = rollout(sys, Policy.linear([[0.0]]), RiskFunctional(Qc=[[1.0]]), cfg)
        # the kick lands in X_{t+1}; the window starts one step later
        assert stats.peak_post_gust_norm == pytest.approx(5.0)
