# -*- coding: utf-8 -*-
"""
Ergodic-risk constrained LQR synthesis.

    minimize J(K) subject to gamma_N^2(K) <= beta_bar

for linear policies u = Kx with a control-free risk functional. The Lagrangian
L(K, lam) = J(K) + lam (gamma_N^2(K) - beta_bar) is an LQR cost with state weight
Q + 4 lam Qc S Qc, S = H Sigma_W H^T, so every inner problem is a Riccati equation.
"""
import math

from dataclasses import dataclass, field
from functools import cached_property
from typing import List, NamedTuple, Optional

import numpy as np
import scipy.linalg as la

from ErgodicRiskLQR.Errors import (ConfigError, DegenerateBudget, InfeasibleSuspected, LostStability,
                                   MaxIterations, NegativeMultiplier, NotStabilizing)
from ErgodicRiskLQR.LtiSystem import Policy, closed_loop
from ErgodicRiskLQR.MatOps import check_symmetric, dare_gain, solve_dare, solve_dlyap, spectral_radius, resolve_margin
from ErgodicRiskLQR.NoiseModels import m4_functional
from ErgodicRiskLQR.Utils import ToolboxLogger, config_key


def _pd(M, name) :
    M = check_symmetric(M, name)
    if la.eigvalsh(M).min() <= 0.0 :
        raise ConfigError("{} must be positive definite".format(name))
    return M


class CocpProblem :
    """Constrained synthesis instance (system, Q, R, risk functional, beta_bar).

    Offsets are fixed to zero and the risk functional must not weight inputs.
    """

    def __init__(self, system, Q, R, risk, beta_bar) :
        self.system = system
        self.Q = _pd(Q, "Q")
        self.R = _pd(R, "R")
        if self.Q.shape[0] != system.n or self.R.shape[0] != system.m :
            raise ConfigError("Q must be {0}x{0} and R {1}x{1}".format(system.n, system.m))
        if not risk.control_free :
            raise ConfigError("synthesis requires a risk functional with Rc = 0")
        if risk.Qc.shape[0] != system.n :
            raise ConfigError("Qc must be {0}x{0}".format(system.n))
        if np.linalg.matrix_rank(system.H) < system.n :
            raise ConfigError("H must have full row rank for synthesis")
        if not system.noise.fourth_moment_finite :
            raise ConfigError("synthesis requires noise with a finite fourth moment")
        self.risk = risk
        self.beta_bar = float(beta_bar)

    @cached_property
    def S(self) :
        return self.system.noise_covariance()

    @cached_property
    def U(self) :
        """Qc S Qc; the Lagrangian state weight is Q + 4 lam U."""
        Qc = self.risk.Qc
        U = Qc @ self.S @ Qc
        return 0.5 * (U + U.T)

    @cached_property
    def m4(self) :
        return m4_functional(self.system.noise, self.risk.Qc, self.system.H)

    @cached_property
    def beta_constant(self) :
        """4 tr((Qc S)^2) - m4(Qc) + beta_bar."""
        return float(4.0 * np.trace(self.U @ self.S) - self.m4 + self.beta_bar)

    def with_budget(self, beta_bar) :
        return CocpProblem(self.system, self.Q, self.R, self.risk, beta_bar)

    def to_dict(self) :
        return {"Q" : self.Q.tolist(), "R" : self.R.tolist(), "Qc" : self.risk.Qc.tolist(), "beta_bar" : self.beta_bar}


class LqrSolution(NamedTuple) :
    K: np.ndarray
    P: np.ndarray
    J: float


def lqr_solve(sys, Q, R) :
    P = solve_dare(sys.A, sys.B, Q, R)
    K = dare_gain(sys.A, sys.B, R, P)
    J = float(np.trace(P @ sys.noise_covariance()))
    return LqrSolution(K=K, P=P, J=J)


def _stable_closed_loop(prob, K) :
    A_K = prob.system.A + prob.system.B @ K
    rho = spectral_radius(A_K)
    if rho > 1.0 - resolve_margin(None) :
        raise NotStabilizing("gain is not stabilizing: spectral radius {:.12g}".format(rho), rho=rho)
    return A_K


def gamma_N_sq_of_gain(prob, K, Sigma_K=None) :
    """gamma_N^2(K) = 4 tr(Qc S Qc (Sigma_K - S)) + m4(Qc) for u = Kx."""
    if Sigma_K is None :
        Sigma_K = solve_dlyap(_stable_closed_loop(prob, K), prob.S)
    return float(4.0 * np.trace(prob.U @ (Sigma_K - prob.S)) + prob.m4)


@dataclass
class LagrangianEval :
    value: float
    gradient: np.ndarray
    P: np.ndarray
    Sigma_K: np.ndarray
    J: float
    gammaN: float
    lam: float

    @property
    def grad_norm(self) :
        return float(la.norm(self.gradient))


def lagrangian(prob, K, lam) :
    if lam < 0 :
        raise NegativeMultiplier("multiplier must be nonnegative, got {}".format(lam))
    K = np.atleast_2d(np.asarray(K, dtype=float))
    A_K = _stable_closed_loop(prob, K)
    R, B = prob.R, prob.system.B
    Q_K = prob.Q + K.T @ R @ K
    weight = Q_K + 4.0 * lam * prob.U

    Sigma_K = solve_dlyap(A_K, prob.S)
    P = solve_dlyap(A_K.T, weight)
    value = float(np.trace(weight @ Sigma_K) - lam * prob.beta_constant)
    J = float(np.trace(Q_K @ Sigma_K))
    gammaN = gamma_N_sq_of_gain(prob, K, Sigma_K)

    direct = J + lam * (gammaN - prob.beta_bar)
    if abs(value - direct) > 1e-9 * max(1.0, abs(direct)) :
        ToolboxLogger.warning("Lagrangian routes disagree: trace {:.12g} vs direct {:.12g}".format(value, direct))
    gradient = 2.0 * (R @ K + B.T @ P @ A_K) @ Sigma_K
    return LagrangianEval(value=direct, gradient=gradient, P=P, Sigma_K=Sigma_K, J=J, gammaN=gammaN, lam=float(lam))


def riccati_policy(prob, lam) :
    """K*(lam), the unique minimizer of L(., lam) over stabilizing gains."""
    if lam < 0 :
        raise NegativeMultiplier("multiplier must be nonnegative, got {}".format(lam))
    sys = prob.system
    P = solve_dare(sys.A, sys.B, prob.Q + 4.0 * lam * prob.U, prob.R)
    return dare_gain(sys.A, sys.B, prob.R, P)


@dataclass
class InnerLoopResult :
    K: np.ndarray
    iterations: int
    grad_norm: float
    evaluation: LagrangianEval


def _hewer_step(prob, K, ev) :
    B, R = prob.system.B, prob.R
    G = -la.solve(R + B.T @ ev.P @ B, ev.gradient) @ la.inv(ev.Sigma_K)
    return K + 0.5 * G


def _gradient_step(prob, K, ev, lam) :
    """Backtracking gradient step that keeps the iterate stabilizing and decreases L."""
    step = 1.0 / (2.0 * la.norm(prob.R + prob.system.B.T @ ev.P @ prob.system.B, 2) * la.norm(ev.Sigma_K, 2))
    for _ in range(60) :
        candidate = K - step * ev.gradient
        if spectral_radius(prob.system.A + prob.system.B @ candidate) <= 1.0 - resolve_margin(None) :
            trial = lagrangian(prob, candidate, lam)
            if trial.value <= ev.value - 0.25 * step * ev.grad_norm ** 2 :
                return candidate
        step *= 0.5
    return K


@ToolboxLogger.log_method
def hewer_inner_loop(prob, lam, K_init, eps=None, method="hewer", max_iter=None) :
    """Minimize L(., lam) from K_init until ||grad L||_F < sqrt(eps).

    Hewer updates K + G/2 = -(R + B^T P B)^{-1} B^T P A with P the cost-to-go of
    the current gain; ``method="gradient"`` runs plain gradient descent instead.
    """
    eps = config_key("EPSILON") if eps is None else eps
    if eps <= 0 :
        raise ValueError("eps must be positive")
    if method == "hewer" :
        max_iter = config_key("HEWER_MAX_ITER") if max_iter is None else max_iter
    elif method == "gradient" :
        max_iter = config_key("GRADIENT_MAX_ITER") if max_iter is None else max_iter
    else :
        raise ValueError("unknown inner method '{}'".format(method))
    threshold = math.sqrt(eps)

    K = np.atleast_2d(np.asarray(K_init, dtype=float))
    ev = lagrangian(prob, K, lam)
    for it in range(max_iter + 1) :
        if ev.grad_norm < threshold :
            return InnerLoopResult(K=K, iterations=it, grad_norm=ev.grad_norm, evaluation=ev)
        if it == max_iter :
            break
        K_next = _hewer_step(prob, K, ev) if method == "hewer" else _gradient_step(prob, K, ev, lam)
        rho = spectral_radius(prob.system.A + prob.system.B @ K_next)
        if rho > 1.0 - resolve_margin(None) :
            raise LostStability("inner iterate {} left the stabilizing set (rho={:.12g})".format(it + 1, rho),
                                iteration=it + 1, rho=rho)
        if la.norm(K_next - K) <= 1e-14 * max(1.0, la.norm(K)) :
            ToolboxLogger.warning("inner loop stopped at its numerical floor: ||grad|| = {:.3e}".format(ev.grad_norm))
            return InnerLoopResult(K=K, iterations=it, grad_norm=ev.grad_norm, evaluation=ev)
        K = K_next
        ev = lagrangian(prob, K, lam)
    raise MaxIterations("inner loop did not reach ||grad|| < {:.3e} in {} iterations".format(threshold, max_iter),
                        K=K, grad_norm=ev.grad_norm)


@dataclass
class KktErrors :
    stationarity: float
    cs: float
    feasibility: float

    def to_dict(self) :
        return {"stationarity" : self.stationarity, "cs" : self.cs, "feasibility" : self.feasibility}


def kkt_errors(prob, K, lam) :
    ev = lagrangian(prob, K, lam)
    gap = ev.gammaN - prob.beta_bar
    return KktErrors(stationarity=ev.grad_norm, cs=float(lam * gap), feasibility=float(max(0.0, gap)))


@dataclass
class HistoryRow :
    m: int
    lam: float
    grad_norm: float
    cs: float
    feas_gap: float
    J: float
    gammaN: float

    HEADER = ("m", "lambda", "grad_norm", "cs", "feas_gap", "J", "gammaN")

    def as_row(self) :
        return [self.m, self.lam, self.grad_norm, self.cs, self.feas_gap, self.J, self.gammaN]


@dataclass
class SolveReport :
    K: np.ndarray
    lambda_avg: float
    lambda_last: float
    iterations: int
    converged: bool
    history: List[HistoryRow] = field(default_factory=list)
    kkt_last: Optional[KktErrors] = None
    kkt_avg: Optional[KktErrors] = None
    J: float = float("nan")
    gammaN: float = float("nan")
    beta_bar: float = float("nan")
    status: str = ""

    def to_dict(self) :
        return {"K" : self.K.tolist(), "lambda_avg" : self.lambda_avg, "lambda_last" : self.lambda_last,
                "iterations" : self.iterations, "converged" : self.converged, "status" : self.status,
                "J" : self.J, "gammaN" : self.gammaN, "beta_bar" : self.beta_bar,
                "kkt_last" : None if self.kkt_last is None else self.kkt_last.to_dict(),
                "kkt_avg" : None if self.kkt_avg is None else self.kkt_avg.to_dict()}


def default_t_max(eps_outer=None) :
    eps_outer = config_key("EPSILON_OUTER") if eps_outer is None else eps_outer
    return int(min(math.ceil(1.0 / eps_outer ** 2), config_key("T_MAX_CAP")))


def _infeasible(prob, history, patience, rtol, check_factor) :
    if len(history) <= patience :
        return False
    window = history[-(patience + 1):]
    gaps = [row.feas_gap for row in window]
    if min(gaps) <= 0.0 :
        return False
    if any(b.lam < a.lam for a, b in zip(window, window[1:])) :
        return False
    if (gaps[0] - gaps[-1]) >= rtol * gaps[0] :
        return False
    K_check = riccati_policy(prob, check_factor * max(1.0, window[-1].lam))
    return gamma_N_sq_of_gain(prob, K_check) > prob.beta_bar


@ToolboxLogger.log_method
def primal_dual_solve(prob, K_0=None, eps=None, T_max=None, eps_outer=None, lambda_0=None,
                      cs_tol=None, feas_tol=None, inner="hewer", patience=None, callback=None) :
    """Dual ascent on lam with a Hewer inner loop for K.

    lam_{m+1} = max(0, lam_m + eta_m (gamma_N^2(K_m) - beta_bar)),
    eta_m = |gamma_N^2(K_0) - beta_bar|^{-1} (m + 1)^{-1/2}.
    K_0 defaults to K*(lambda_0).
    """
    eps = config_key("EPSILON") if eps is None else eps
    T_max = default_t_max(eps_outer) if T_max is None else int(T_max)
    lam = float(config_key("LAMBDA_0") if lambda_0 is None else lambda_0)
    scale = max(1.0, abs(prob.beta_bar))
    cs_tol = config_key("CS_TOL_REL") * scale if cs_tol is None else cs_tol
    feas_tol = config_key("FEAS_TOL_REL") * scale if feas_tol is None else feas_tol
    patience = int(config_key("INFEASIBLE_PATIENCE") if patience is None else patience)
    rtol = config_key("INFEASIBLE_RTOL")
    check_factor = config_key("SLATER_CHECK_FACTOR")
    if lam < 0 :
        raise NegativeMultiplier("lambda_0 must be nonnegative")

    K = riccati_policy(prob, lam) if K_0 is None else np.atleast_2d(np.asarray(K_0, dtype=float))
    _stable_closed_loop(prob, K)
    gap_0 = gamma_N_sq_of_gain(prob, K) - prob.beta_bar
    if abs(gap_0) <= 1e-12 * scale :
        raise DegenerateBudget("beta_bar equals gamma_N^2(K_0) = {:.12g}; the step size is undefined".format(prob.beta_bar))
    ToolboxLogger.info("Primal-dual: beta_bar={:.6g}, gamma_N^2(K_0)={:.6g}, T_max={}".format(
        prob.beta_bar, gap_0 + prob.beta_bar, T_max))

    history = []
    lam_sum = 0.0
    converged = False
    threshold = math.sqrt(eps)
    m = 0
    for m in range(T_max) :
        result = hewer_inner_loop(prob, lam, K, eps=eps, method=inner)
        K = result.K
        ev = result.evaluation
        gap = ev.gammaN - prob.beta_bar
        row = HistoryRow(m=m, lam=lam, grad_norm=ev.grad_norm, cs=lam * gap, feas_gap=gap, J=ev.J, gammaN=ev.gammaN)
        history.append(row)
        lam_sum += lam
        if callback is not None :
            callback(row)

        if ev.grad_norm < threshold and abs(row.cs) <= cs_tol and max(0.0, gap) <= feas_tol :
            converged = True
            break
        if _infeasible(prob, history, patience, rtol, check_factor) :
            report = _report(prob, K, lam_sum / (m + 1), lam, m + 1, False, history, "infeasible")
            raise InfeasibleSuspected("multiplier grows while the constraint stays violated by {:.6g}; "
                                      "the budget is likely below inf gamma_N^2".format(gap), report=report)
        eta = 1.0 / (abs(gap_0) * math.sqrt(m + 1))
        lam = max(0.0, lam + eta * gap)

    lam_last = history[-1].lam
    status = "converged" if converged else "max_iterations"
    report = _report(prob, K, lam_sum / len(history), lam_last, len(history), converged, history, status)
    ToolboxLogger.info("Primal-dual {} after {} iterations: lambda={:.6g}, J={:.6g}, gamma_N^2={:.6g}".format(
        status, report.iterations, lam_last, report.J, report.gammaN))
    return report


def _report(prob, K, lam_avg, lam_last, iterations, converged, history, status) :
    last = history[-1]
    return SolveReport(K=K, lambda_avg=float(lam_avg), lambda_last=float(lam_last), iterations=iterations,
                       converged=converged, history=history, kkt_last=kkt_errors(prob, K, lam_last),
                       kkt_avg=kkt_errors(prob, K, lam_avg), J=last.J, gammaN=last.gammaN,
                       beta_bar=prob.beta_bar, status=status)


def dual_function(prob, lam) :
    """g(lam) = min_K L(K, lam) = L(K*(lam), lam)."""
    return lagrangian(prob, riccati_policy(prob, lam), lam).value


def bisect_multiplier(prob, rtol=1e-10, max_doublings=60) :
    """lam with gamma_N^2(K*(lam)) = beta_bar; 0 when the LQR gain is feasible."""
    def gap(lam) :
        return gamma_N_sq_of_gain(prob, riccati_policy(prob, lam)) - prob.beta_bar

    if gap(0.0) <= 0.0 :
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(max_doublings) :
        if gap(hi) <= 0.0 :
            break
        lo, hi = hi, 2.0 * hi
    else :
        raise InfeasibleSuspected("no multiplier up to {:.3g} meets beta_bar={:.6g}".format(hi, prob.beta_bar))
    while hi - lo > rtol * max(1.0, hi) :
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0 :
            lo = mid
        else :
            hi = mid
    return 0.5 * (lo + hi)


def synthesized_policy(report) :
    return Policy(K=report.K)
