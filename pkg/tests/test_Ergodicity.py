# -*- coding: utf-8 -*-
import numpy as np
import pytest

from conftest import scalar_system
from ErgodicRiskLQR.Errors import DriftViolated, MomentUndefined
from ErgodicRiskLQR.Ergodicity import drift_certificate, drift_moments, verify_drift
from ErgodicRiskLQR.LtiSystem import Policy
from ErgodicRiskLQR.NoiseModels import StudentTNoise
from ErgodicRiskLQR.PrimalDual import lqr_solve


class TestDriftCertificate :

    def test_deadbeat_constants(self, deadbeat) :
        sys, pol, _ = deadbeat
        cert = drift_certificate(sys, pol, Q_drift=[[2.0]], draws=10 ** 5, seed=1)
        assert cert.M[0, 0] == pytest.approx(2.0)
        assert cert.beta == pytest.approx(1.0 / 32.0)
        assert cert.moments.m2 == pytest.approx(2.0)
        assert cert.contraction_gain == pytest.approx(0.0, abs=1e-12)

    def test_quadratic_order(self, deadbeat) :
        sys, pol, _ = deadbeat
        cert = drift_certificate(sys, pol, Q_drift=[[2.0]], order=2, draws=10 ** 4, seed=1)
        assert cert.beta == pytest.approx(0.25)
        assert cert.radius == pytest.approx(3.0)
        assert cert.b == pytest.approx(2.25)

    def test_requires_fourth_moment(self) :
        sys = scalar_system(0.5, noise=StudentTNoise(3, [[1.0]]))
        with pytest.raises(MomentUndefined) :
            drift_certificate(sys, Policy.linear([[-0.5]]))

    def test_drift_weight_must_dominate_identity(self, deadbeat) :
        sys, pol, _ = deadbeat
        with pytest.raises(ValueError) :
            drift_certificate(sys, pol, Q_drift=[[1.0]])

    def test_bad_order(self, deadbeat) :
        sys, pol, _ = deadbeat
        with pytest.raises(ValueError) :
            drift_certificate(sys, pol, order=3)


class TestDriftMoments :

    def test_gaussian_second_moment_is_exact(self, three_state) :
        sys, _, _ = three_state
        M = np.diag([2.0, 1.0, 3.0])
        mom = drift_moments(sys, M, draws=1000, seed=2)
        assert mom.m2 == pytest.approx(np.trace(M @ sys.noise_covariance()))
        assert mom.se[0] == 0.0

    def test_monte_carlo_method(self, three_state) :
        sys, _, _ = three_state
        M = np.eye(3)
        mom = drift_moments(sys, M, draws=200000, seed=2, method="monte_carlo")
        assert abs(mom.m2 - np.trace(sys.noise_covariance())) <= 5.0 * mom.se[0]


class TestVerifyDrift :

    @pytest.mark.montecarlo
    @pytest.mark.parametrize("order", [2, 4])
    def test_battery_passes(self, deadbeat, deadbeat_t, three_state, order) :
        for sys, pol, _ in (deadbeat, deadbeat_t, three_state) :
            cert = drift_certificate(sys, pol, order=order, draws=200000, seed=3)
            report = verify_drift(cert, sys, pol, n_states=200, n_noise=20000, seed=4)
            assert report.passed and report.violations == 0

    @pytest.mark.montecarlo
    def test_random_lqr_gain(self, random_4x2) :
        prob = random_4x2[0]
        pol = Policy.linear(lqr_solve(prob.system, prob.Q, prob.R).K)
        cert = drift_certificate(prob.system, pol, draws=200000, seed=3)
        assert verify_drift(cert, prob.system, pol, n_states=200, n_noise=20000, seed=4).passed

    @pytest.mark.montecarlo
    @pytest.mark.parametrize("order", [2, 4])
    def test_negative_control_fails(self, three_state, order) :
        sys, pol, _ = three_state
        cert = drift_certificate(sys, pol, order=order, draws=200000, seed=3).corrupted()
        with pytest.raises(DriftViolated) as e :
            verify_drift(cert, sys, pol, n_states=200, n_noise=20000, seed=4)
        assert e.value.report.violations > 0
        assert e.value.worst_state is not None

    def test_deadbeat_negative_control(self, deadbeat) :
        sys, pol, _ = deadbeat
        cert = drift_certificate(sys, pol, draws=10 ** 4, seed=3).corrupted()
        assert cert.beta == pytest.approx(1.0)
        report = verify_drift(cert, sys, pol, n_states=50, n_noise=5000, seed=4, raise_on_failure=False)
        assert not report.passed

    def test_other_closed_loop_rejected(self, deadbeat) :
        sys, pol, _ = deadbeat
        cert = drift_certificate(sys, pol, draws=10 ** 4, seed=3)
        with pytest.raises(ValueError) :
            verify_drift(cert, sys, Policy.linear([[-0.2]]), n_states=10, n_noise=100)
