# -*- coding: utf-8 -*-
import numpy as np
import pytest

from conftest import random_problems
from ErgodicRiskLQR.Errors import DegenerateBudget, InfeasibleSuspected, MaxIterations, NegativeMultiplier
from ErgodicRiskLQR.MatOps import solve_dlyap
from ErgodicRiskLQR.PrimalDual import (HistoryRow, bisect_multiplier, dual_function, gamma_N_sq_of_gain,
                                       hewer_inner_loop, kkt_errors, lagrangian, lqr_solve, primal_dual_solve,
                                       riccati_policy)


def one_hewer_update(prob, lam, K) :
    try :
        return hewer_inner_loop(prob, lam, K, eps=1e-30, max_iter=1).K
    except MaxIterations as e :
        return e.K


def finite_difference(prob, K, lam, h=1e-5) :
    G = np.zeros_like(K)
    for idx in np.ndindex(K.shape) :
        E = np.zeros_like(K)
        E[idx] = h
        G[idx] = (lagrangian(prob, K + E, lam).value - lagrangian(prob, K - E, lam).value) / (2.0 * h)
    return G


class TestLagrangian :

    @pytest.mark.parametrize("lam", [0.0, 0.5, 2.0])
    def test_gradient_matches_finite_differences(self, random_4x2, lam) :
        for prob in random_4x2 :
            K = riccati_policy(prob, 1.0)
            ev = lagrangian(prob, K, lam)
            fd = finite_difference(prob, K, lam)
            assert np.linalg.norm(fd - ev.gradient) <= 1e-6 * max(1.0, np.linalg.norm(ev.gradient))

    def test_trace_form_identity(self, random_4x2) :
        for prob in random_4x2 :
            K = riccati_policy(prob, 0.7)
            lam = 1.3
            ev = lagrangian(prob, K, lam)
            weight = prob.Q + K.T @ prob.R @ K + 4.0 * lam * prob.U
            trace_form = np.trace(weight @ ev.Sigma_K) - lam * prob.beta_constant
            assert trace_form == pytest.approx(ev.J + lam * (ev.gammaN - prob.beta_bar), rel=1e-10)

    def test_no_multiplier_is_lqr_cost(self, scalar_feasible) :
        prob = scalar_feasible
        K = np.array([[-0.5]])
        ev = lagrangian(prob, K, 0.0)
        A_K = prob.system.A + prob.system.B @ K
        Sigma = solve_dlyap(A_K, prob.S)
        P = solve_dlyap(A_K.T, prob.Q + K.T @ prob.R @ K)
        assert ev.value == pytest.approx(ev.J)
        np.testing.assert_allclose(ev.gradient, 2.0 * (prob.R @ K + prob.system.B.T @ P @ A_K) @ Sigma)

    def test_negative_multiplier(self, scalar_feasible) :
        with pytest.raises(NegativeMultiplier) :
            lagrangian(scalar_feasible, [[-0.5]], -1.0)


class TestRiccatiPolicy :

    def test_reduces_to_lqr(self, random_4x2) :
        for prob in random_4x2 :
            lqr = lqr_solve(prob.system, prob.Q, prob.R)
            assert np.linalg.norm(riccati_policy(prob, 0.0) - lqr.K) <= 1e-8
            J = lagrangian(prob, lqr.K, 0.0).J
            assert J == pytest.approx(lqr.J, rel=1e-8)

    def test_large_multiplier_approaches_deadbeat(self, scalar_feasible) :
        assert riccati_policy(scalar_feasible, 1e6)[0, 0] == pytest.approx(-1.2, rel=1e-5)

    def test_scalar_lqr_gain(self, scalar_feasible) :
        assert riccati_policy(scalar_feasible, 0.0)[0, 0] == pytest.approx(-0.7935, abs=1e-4)

    @pytest.mark.parametrize("index", range(50))
    def test_lqr_gain_is_stationary(self, random_50, index) :
        prob = random_50[index]
        ev = lagrangian(prob, lqr_solve(prob.system, prob.Q, prob.R).K, 0.0)
        assert ev.grad_norm <= 1e-7 * max(1.0, np.linalg.norm(ev.Sigma_K))

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    @pytest.mark.parametrize("index", range(50))
    def test_stationary_at_multiplier(self, random_50, index, lam) :
        prob = random_50[index]
        ev = lagrangian(prob, riccati_policy(prob, lam), lam)
        assert ev.grad_norm <= 1e-7 * max(1.0, np.linalg.norm(ev.Sigma_K))


class TestHewerInnerLoop :

    @pytest.mark.parametrize("method", ["hewer", "gradient"])
    def test_reaches_riccati_gain(self, scalar_feasible, method) :
        res = hewer_inner_loop(scalar_feasible, 0.5, [[-0.5]], eps=1e-12, method=method)
        assert res.grad_norm < 1e-6
        np.testing.assert_allclose(res.K, riccati_policy(scalar_feasible, 0.5), atol=1e-6)

    def test_random_instances(self, random_4x2) :
        for prob in random_4x2[:5] :
            start = lqr_solve(prob.system, prob.Q, prob.R).K
            res = hewer_inner_loop(prob, 2.0, start, eps=1e-14)
            np.testing.assert_allclose(res.K, riccati_policy(prob, 2.0), atol=1e-6)

    @pytest.mark.parametrize("index", range(50))
    def test_one_update_from_lqr_gain(self, random_50, index) :
        prob = random_50[index]
        lam = 2.0
        K0 = lqr_solve(prob.system, prob.Q, prob.R).K
        P = lagrangian(prob, K0, lam).P
        A, B, R = prob.system.A, prob.system.B, prob.R
        expected = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        np.testing.assert_allclose(one_hewer_update(prob, lam, K0), expected, rtol=1e-8, atol=1e-10)

    @pytest.mark.parametrize("lam", [0.0, 0.5, 2.0])
    @pytest.mark.parametrize("index", range(50))
    def test_no_iterations_from_riccati_gain(self, random_50, index, lam) :
        prob = random_50[index]
        res = hewer_inner_loop(prob, lam, riccati_policy(prob, lam))
        assert res.iterations == 0

    def test_iteration_cap(self, scalar_feasible) :
        with pytest.raises(MaxIterations) as e :
            hewer_inner_loop(scalar_feasible, 0.5, [[-0.5]], eps=1e-16, max_iter=0)
        assert e.value.grad_norm > 0.0

    def test_unknown_method(self, scalar_feasible) :
        with pytest.raises(ValueError) :
            hewer_inner_loop(scalar_feasible, 0.5, [[-0.5]], method="newton")


class TestKktErrors :

    def test_lqr_with_slack_budget(self, scalar_feasible) :
        prob = scalar_feasible.with_budget(10.0)
        kkt = kkt_errors(prob, riccati_policy(prob, 0.0), 0.0)
        assert kkt.stationarity <= 1e-7
        assert kkt.cs == 0.0
        assert kkt.feasibility == 0.0

    def test_bisection_saddle(self, scalar_feasible) :
        lam = bisect_multiplier(scalar_feasible)
        assert lam > 0.0
        kkt = kkt_errors(scalar_feasible, riccati_policy(scalar_feasible, lam), lam)
        assert abs(kkt.cs) <= 1e-6

    def test_zero_multiplier_kills_slackness(self, scalar_infeasible) :
        assert kkt_errors(scalar_infeasible, [[-0.3]], 0.0).cs == 0.0


class TestDualFunction :

    def test_monotone_along_multiplier(self, scalar_feasible) :
        prob = scalar_feasible
        grid = np.linspace(0.0, 5.0, 20)
        gains = [riccati_policy(prob, lam) for lam in grid]
        risks = [gamma_N_sq_of_gain(prob, K) for K in gains]
        costs = [lagrangian(prob, K, 0.0).J for K in gains]
        assert all(b <= a + 1e-12 for a, b in zip(risks, risks[1:]))
        assert all(b >= a - 1e-12 for a, b in zip(costs, costs[1:]))

    def test_weak_duality(self, scalar_feasible) :
        prob = scalar_feasible
        feasible = riccati_policy(prob, 10.0)
        assert gamma_N_sq_of_gain(prob, feasible) <= prob.beta_bar
        J_feasible = lagrangian(prob, feasible, 0.0).J
        for lam in np.linspace(0.0, 5.0, 20) :
            assert dual_function(prob, lam) <= J_feasible + 1e-10

    @pytest.mark.parametrize("pair", [(0.0, 2.0), (0.5, 4.0), (1.0, 10.0)])
    @pytest.mark.parametrize("index", range(50))
    def test_concave(self, random_50, index, pair) :
        prob = random_50[index]
        lo, hi = pair
        chord = 0.5 * (dual_function(prob, lo) + dual_function(prob, hi))
        assert dual_function(prob, 0.5 * (lo + hi)) >= chord - 1e-8 * max(1.0, abs(chord))

    @pytest.mark.parametrize("index", range(50))
    def test_monotone_on_random_instances(self, random_50, index) :
        prob = random_50[index]
        gains = [riccati_policy(prob, lam) for lam in np.linspace(0.0, 5.0, 20)]
        risks = [gamma_N_sq_of_gain(prob, K) for K in gains]
        costs = [lagrangian(prob, K, 0.0).J for K in gains]
        assert all(b <= a * (1.0 + 1e-9) for a, b in zip(risks, risks[1:]))
        assert all(b >= a * (1.0 - 1e-9) for a, b in zip(costs, costs[1:]))

    @pytest.mark.parametrize("index", range(50))
    def test_weak_duality_on_random_instances(self, random_50, index) :
        prob = random_50[index]
        try :
            lam_hat = bisect_multiplier(prob)
        except InfeasibleSuspected :
            pytest.skip("budget below the achievable risk")
        feasible = riccati_policy(prob, 2.0 * lam_hat + 1.0)
        assert gamma_N_sq_of_gain(prob, feasible) <= prob.beta_bar
        J_feasible = lagrangian(prob, feasible, 0.0).J
        for lam in np.linspace(0.0, 5.0, 20) :
            assert dual_function(prob, lam) <= J_feasible * (1.0 + 1e-9)


class TestPrimalDualSolve :

    def test_scalar_converges_to_bisection_multiplier(self, scalar_feasible) :
        prob = scalar_feasible
        rows = []
        report = primal_dual_solve(prob, T_max=5000, callback=rows.append)
        assert report.converged and report.status == "converged"
        assert report.lambda_last == pytest.approx(bisect_multiplier(prob), rel=0.05)
        assert report.gammaN <= prob.beta_bar * (1.0 + 1e-6)
        assert report.J >= lqr_solve(prob.system, prob.Q, prob.R).J
        assert len(rows) == report.iterations == len(report.history)
        assert isinstance(rows[0], HistoryRow)

    def test_budget_at_lqr_risk(self, scalar_feasible) :
        prob = scalar_feasible
        lqr = lqr_solve(prob.system, prob.Q, prob.R)
        boundary = prob.with_budget(gamma_N_sq_of_gain(prob, lqr.K))
        report = primal_dual_solve(boundary, T_max=5000)
        assert report.lambda_last == pytest.approx(0.0, abs=1e-4)
        np.testing.assert_allclose(report.K, lqr.K, atol=1e-4)

    def test_infeasible_budget(self, scalar_infeasible) :
        with pytest.raises(InfeasibleSuspected) as e :
            primal_dual_solve(scalar_infeasible, T_max=2000, patience=20)
        report = e.value.report
        assert report.status == "infeasible"
        assert report.history[-1].feas_gap > 0.0

    def test_degenerate_budget(self, scalar_feasible) :
        prob = scalar_feasible
        K_lqr = lqr_solve(prob.system, prob.Q, prob.R).K
        with pytest.raises(DegenerateBudget) :
            primal_dual_solve(prob.with_budget(gamma_N_sq_of_gain(prob, K_lqr)), K_0=K_lqr)

    def test_iteration_cap_reports_status(self, scalar_feasible) :
        report = primal_dual_solve(scalar_feasible, T_max=2)
        assert not report.converged
        assert report.status == "max_iterations"
        assert report.iterations == 2

    @pytest.mark.solver
    def test_random_instances(self) :
        solved, feasible = 0, 0
        for prob in random_problems(50, fraction=0.9, start=100) :
            scale = gamma_N_sq_of_gain(prob, lqr_solve(prob.system, prob.Q, prob.R).K)
            try :
                report = primal_dual_solve(prob, eps=1e-8, T_max=3000, cs_tol=1e-3 * scale, feas_tol=1e-3 * scale)
            except InfeasibleSuspected :
                continue
            feasible += 1
            solved += report.converged
            if report.converged :
                assert report.J >= lqr_solve(prob.system, prob.Q, prob.R).J * (1.0 - 1e-9)
        assert feasible > 0
        assert solved >= 0.9 * feasible

    @pytest.mark.solver
    def test_multiplier_matches_bisection(self) :
        compared = 0
        for prob in random_problems(10, fraction=0.9, start=200) :
            try :
                lam_hat = bisect_multiplier(prob)
            except InfeasibleSuspected :
                continue
            if lam_hat < 0.1 :
                continue
            scale = gamma_N_sq_of_gain(prob, lqr_solve(prob.system, prob.Q, prob.R).K)
            report = primal_dual_solve(prob, eps=1e-10, T_max=5000, cs_tol=1e-4 * scale, feas_tol=1e-4 * scale)
            if not report.converged :
                continue
            compared += 1
            assert report.lambda_last == pytest.approx(lam_hat, rel=0.05)
        assert compared > 0

    @pytest.mark.solver
    def test_tighter_budget(self) :
        solved = 0
        for prob in random_problems(10, fraction=0.8, start=300) :
            lqr = lqr_solve(prob.system, prob.Q, prob.R)
            scale = gamma_N_sq_of_gain(prob, lqr.K)
            try :
                report = primal_dual_solve(prob, eps=1e-8, T_max=3000, cs_tol=1e-3 * scale, feas_tol=1e-3 * scale)
            except InfeasibleSuspected :
                continue
            if not report.converged :
                continue
            solved += 1
            assert report.J >= lqr.J * (1.0 - 1e-9)
            assert report.gammaN <= prob.beta_bar + 1e-3 * scale
        assert solved > 0
