# -*- coding: utf-8 -*-
"""
Ergodic-risk criteria of a closed loop under the quadratic risk functional
g(x, u) = x^T Qc x + u^T Rc u.

C_{t+1} = g(X_{t+1}, U_{t+1}) - E[g(X_{t+1}, U_{t+1}) | X_t] is a martingale
difference sequence. S_t = sum C_s, N_t = sum E[C_s^2 | X_{s-1}], and the
criteria are the limits gamma_C^2 = lim E[S_t^2] / t and gamma_N^2 = lim N_t / t.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft
import scipy.linalg as la
from scipy.integrate import trapezoid

from ErgodicRiskLQR.Errors import MomentUndefined, NegativeVariance, RequiresGaussian
from ErgodicRiskLQR.LtiSystem import closed_loop
from ErgodicRiskLQR.MatOps import SpectrumResult, check_symmetric, solve_dlyap, spectral_density_grid, sym_eig
from ErgodicRiskLQR.NoiseModels import GaussianNoise, draw_blocks, moment_functionals, replication_rng
from ErgodicRiskLQR.Utils import ToolboxLogger, config_key, worker_count


def _psd(S, name) :
    S = check_symmetric(S, name)
    if la.eigvalsh(S).min() < -1e-10 * max(1.0, la.norm(S)) :
        raise ValueError("{} is not positive semidefinite".format(name))
    return S


@dataclass(frozen=True, eq=False)
class RiskFunctional :
    Qc: np.ndarray
    Rc: Optional[np.ndarray] = None

    def __post_init__(self) :
        object.__setattr__(self, "Qc", _psd(self.Qc, "Qc"))
        if self.Rc is not None :
            object.__setattr__(self, "Rc", _psd(self.Rc, "Rc"))

    @classmethod
    def zero(cls, n) :
        return cls(Qc=np.zeros((n, n)))

    @property
    def control_free(self) :
        return self.Rc is None or not np.any(self.Rc)

    def weight(self, K) :
        """Q_K^c = Qc + K^T Rc K."""
        if self.control_free :
            return self.Qc
        return self.Qc + K.T @ self.Rc @ K

    def offset(self, K, ell) :
        """K^T Rc l, the linear part of g along the policy."""
        if self.control_free :
            return np.zeros(K.shape[1])
        return K.T @ self.Rc @ ell

    def g(self, x, u) :
        x = np.atleast_2d(x)
        u = np.atleast_2d(u)
        out = np.einsum("ri,ij,rj->r", x, self.Qc, x)
        if not self.control_free :
            out = out + np.einsum("ri,ij,rj->r", u, self.Rc, u)
        return out

    def to_dict(self) :
        out = {"Qc" : self.Qc.tolist()}
        if self.Rc is not None :
            out["Rc"] = self.Rc.tolist()
        return out


@dataclass(frozen=True, eq=False)
class RiskTerms :
    """Per closed loop constants shared by C_t, N_t and the criteria."""
    Q_tilde: np.ndarray
    r: np.ndarray
    S: np.ndarray
    trace_QS: float
    q_bar: np.ndarray
    moments: object = None

    def q(self, cl, x) :
        """Q_K^c (A_K x + B l) + K^T Rc l, row-wise for x of shape (k, n)."""
        mean_next = x @ cl.A_K.T + cl.drift
        return mean_next @ self.Q_tilde + self.r


def risk_terms(cl, rf, with_moments=True, moment_method="auto") :
    if rf.Qc.shape != cl.A_K.shape :
        raise ValueError("Qc is {} but the state dimension is {}".format(rf.Qc.shape, cl.A_K.shape[0]))
    Q_tilde = rf.weight(cl.K)
    r = rf.offset(cl.K, cl.ell)
    moments = None
    if with_moments :
        if not cl.system.noise.fourth_moment_finite :
            raise MomentUndefined("noise has no finite fourth moment; {!r}".format(cl.system.noise))
        moments = moment_functionals(cl.system.noise, Q_tilde, cl.system.H, method=moment_method)
    return RiskTerms(Q_tilde=Q_tilde, r=r, S=cl.S, trace_QS=float(np.trace(Q_tilde @ cl.S)),
                     q_bar=Q_tilde @ cl.x_bar + r, moments=moments)


def _rows(v, width) :
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    v = np.atleast_2d(v)
    if v.shape[1] != width :
        raise ValueError("expected vectors of length {}, got shape {}".format(width, v.shape))
    return v, single


def c_increment(cl, terms, x, e) :
    """C_{t+1} for states x (k, n) and state-space noise increments e = H w (k, n)."""
    q = terms.q(cl, x)
    return 2.0 * np.einsum("ri,ri->r", q, e) + np.einsum("ri,ij,rj->r", e, terms.Q_tilde, e) - terms.trace_QS


def c_step(cl, rf, x_t, w_next, terms=None) :
    """C_{t+1} = 2 q^T H w + (H w)^T Q_K^c H w - tr(Q_K^c H Sigma_W H^T)."""
    terms = risk_terms(cl, rf, with_moments=False) if terms is None else terms
    x, single = _rows(x_t, cl.A_K.shape[0])
    w, _ = _rows(w_next, cl.system.d)
    C = c_increment(cl, terms, x, w @ cl.system.H.T)
    return float(C[0]) if single else C


def c_step_definition(cl, rf, x_t, w_next) :
    """g(X_{t+1}, U_{t+1}) - E[g(X_{t+1}, U_{t+1}) | X_t = x_t] by direct evaluation."""
    sys = cl.system
    x, single = _rows(x_t, sys.n)
    w, _ = _rows(w_next, sys.d)
    u = x @ cl.K.T + cl.ell
    x_next = x @ sys.A.T + u @ sys.B.T + w @ sys.H.T
    u_next = x_next @ cl.K.T + cl.ell
    realized = rf.g(x_next, u_next)

    mean_x = x @ cl.A_K.T + cl.drift
    mean_u = mean_x @ cl.K.T + cl.ell
    expected = rf.g(mean_x, mean_u) + np.trace(rf.Qc @ cl.S)
    if not rf.control_free :
        expected = expected + np.trace(rf.Rc @ cl.K @ cl.S @ cl.K.T)
    C = realized - expected
    return float(C[0]) if single else C


def conditional_variance_increment(cl, terms, x) :
    q = terms.q(cl, x)
    mf = terms.moments
    return 4.0 * np.einsum("ri,ij,rj->r", q, terms.S, q) + 4.0 * q @ mf.M3 + mf.m4


def conditional_variance_step(cl, rf, x_t, terms=None) :
    """E[C_{t+1}^2 | X_t = x_t] = 4 q^T S q + 4 q^T M3 + m4."""
    terms = risk_terms(cl, rf) if terms is None else terms
    x, single = _rows(x_t, cl.A_K.shape[0])
    v = conditional_variance_increment(cl, terms, x)
    return float(v[0]) if single else v


def _clamp(value, scale, what) :
    tol = config_key("GAMMA_N_CLAMP_TOL")
    if value >= 0.0 :
        return float(value)
    if value >= -tol * max(1.0, scale) :
        ToolboxLogger.warning("{} = {:.3e} clamped at 0".format(what, value))
        return 0.0
    raise NegativeVariance("{} = {:.6e} is negative beyond rounding; check the closed loop and noise model"
                           .format(what, value), quantity=what, value=float(value))


def gamma_N_sq_closed_loop(cl, rf, terms=None) :
    terms = risk_terms(cl, rf) if terms is None else terms
    Q, S, q_bar = terms.Q_tilde, terms.S, terms.q_bar
    mf = terms.moments
    state_part = 4.0 * np.trace(S @ Q @ (cl.Sigma_K - S) @ Q)
    mean_part = 4.0 * q_bar @ S @ q_bar + 4.0 * q_bar @ mf.M3
    value = float(state_part + mean_part + mf.m4)
    return _clamp(value, abs(state_part) + abs(mean_part) + mf.m4, "gamma_N^2")


def gamma_N_sq(sys, pol, rf, moment_method="auto") :
    """Asymptotic conditional variance lim N_t / t in closed form."""
    cl = closed_loop(sys, pol)
    return gamma_N_sq_closed_loop(cl, rf, risk_terms(cl, rf, moment_method=moment_method))


def risk_weight_matrix(cl, rf) :
    """M = Q_K^c - A_K^T Q_K^c A_K."""
    Q = rf.weight(cl.K)
    M = Q - cl.A_K.T @ Q @ cl.A_K
    return 0.5 * (M + M.T)


def lambda_cov_zero(cl) :
    """Sigma_Gamma(0) = (I - A_K)^{-1} H Sigma_W H^T (I - A_K)^{-T}."""
    I_A = np.eye(cl.A_K.shape[0]) - cl.A_K
    X = la.solve(I_A, cl.S)
    X = la.solve(I_A, X.T).T
    return 0.5 * (X + X.T)


def _nodes(nodes) :
    nodes = int(config_key("SPECTRAL_NODES") if nodes is None else nodes)
    if nodes < 3 :
        raise ValueError("need at least 3 quadrature nodes, got {}".format(nodes))
    return nodes


def _spectral_grid(cl, nodes) :
    omegas = np.linspace(0.0, np.pi, nodes)
    sys = cl.system
    return omegas, spectral_density_grid(cl.A_K, sys.H, sys.noise.covariance(), omegas)


def gamma_M_sq_gaussian(cl, M, nodes=None) :
    """(1/pi) int_{-pi}^{pi} tr((M Sigma_Gamma(w))^2) dw by the trapezoid rule on [0, pi]."""
    if not isinstance(cl.system.noise, GaussianNoise) :
        raise RequiresGaussian("the spectral form of gamma_M^2 holds for Gaussian noise only")
    M = check_symmetric(M, "M")
    omegas, grid = _spectral_grid(cl, _nodes(nodes))
    F = M[None, :, :] @ grid
    integrand = np.einsum("kij,kji->k", F, F).real
    return max(float(2.0 / np.pi * trapezoid(integrand, omegas)), 0.0)


def ma_truncation(A_K, tol=None, max_terms=None) :
    """Smallest N with ||A_K^N||_2 <= tol, capped at max_terms."""
    tol = config_key("MA_TRUNC_TOL") if tol is None else tol
    max_terms = int(config_key("MA_TRUNC_MAX") if max_terms is None else max_terms)
    P = np.eye(A_K.shape[0])
    for N in range(1, max_terms + 1) :
        P = P @ A_K
        if la.norm(P, 2) <= tol :
            return N
    ToolboxLogger.warning("moving-average truncation hit the cap of {} terms".format(max_terms))
    return max_terms


@dataclass
class EstimatorConfig :
    """Settings of gamma_C_sq_estimate.

    method: "auto", "spectral", "cumulant", "autocov" or "batch_means".
    """
    method: str = "auto"
    k_max: Optional[int] = None
    ma_trunc: Optional[int] = None
    reps: int = 64
    horizon: int = 20000
    seed: Optional[int] = None
    nodes: Optional[int] = None

    @classmethod
    def from_dict(cls, doc) :
        doc = doc or {}
        known = {k : doc[k] for k in ("method", "k_max", "ma_trunc", "reps", "horizon", "seed", "nodes") if k in doc}
        return cls(**known)


@dataclass
class GammaCEstimate :
    value: float
    stderr: float
    method: str
    eigen: SpectrumResult
    per_direction: np.ndarray
    per_direction_se: np.ndarray
    linear_term: float

    @property
    def diagonal_sum(self) :
        """sum_j lambda_j^2 gamma_{v_j}^2; equals ``value`` when directions decouple."""
        return float(np.sum(self.eigen.values ** 2 * self.per_direction))

    def to_dict(self) :
        return {"value" : self.value, "stderr" : self.stderr, "method" : self.method,
                "eigenvalues" : self.eigen.values.tolist(), "per_direction" : self.per_direction.tolist(),
                "per_direction_se" : self.per_direction_se.tolist(), "diagonal_sum" : self.diagonal_sum,
                "linear_term" : self.linear_term}


def _linear_vector(cl, terms) :
    """c with S_t ~ sum tr(M (Y Y^T - Sigma_K)) + c^T Y."""
    return 2.0 * (np.eye(cl.A_K.shape[0]) - cl.A_K).T @ terms.q_bar


def _spectral(cl, terms, M, eigen, nodes) :
    omegas, grid = _spectral_grid(cl, _nodes(nodes))
    F = M[None, :, :] @ grid
    integrand = np.einsum("kij,kji->k", F, F).real
    quad = 2.0 / np.pi * trapezoid(integrand, omegas)
    dirs = np.einsum("ik,wij,jk->wk", eigen.vectors, grid, eigen.vectors).real
    per_direction = 2.0 / np.pi * trapezoid(dirs ** 2, omegas, axis=0)
    c = _linear_vector(cl, terms)
    linear = float(c @ lambda_cov_zero(cl) @ c)
    value = max(float(quad) + linear, 0.0)
    return value, 0.0, per_direction, np.zeros_like(per_direction), linear


def _cumulant(cl, terms, M, eigen) :
    sys = cl.system
    noise = sys.noise
    A, Sigma, H = cl.A_K, cl.Sigma_K, sys.H
    n = A.shape[0]

    P_M = solve_dlyap(A.T, M)
    Z = P_M - M
    gaussian = 2.0 * np.trace(M @ Sigma @ M @ Sigma) + 4.0 * np.trace(Z @ Sigma @ M @ Sigma)
    T_bar = H.T @ P_M @ H
    excess = noise.excess_quadratic_covariance(T_bar, T_bar)

    c = _linear_vector(cl, terms)
    u = la.solve(np.eye(n) - A.T, c)
    third = 2.0 * float((H.T @ u) @ noise.third_moment(T_bar))
    linear = float(c @ lambda_cov_zero(cl) @ c)
    value = float(gaussian + excess + third + linear)

    per_direction = np.zeros(n)
    for j in range(n) :
        v = eigen.vectors[:, j]
        vv = np.outer(v, v)
        P_v = solve_dlyap(A.T, vv)
        s = Sigma @ v
        T_v = H.T @ P_v @ H
        per_direction[j] = 2.0 * (v @ s) ** 2 + 4.0 * s @ (P_v - vv) @ s + noise.excess_quadratic_covariance(T_v, T_v)
    return _clamp(value, abs(gaussian) + abs(excess) + abs(third) + linear, "gamma_C^2"), 0.0, \
        np.clip(per_direction, 0.0, None), np.zeros(n), linear


def _stationary_paths(cl, reps, burn, horizon, seed) :
    """Centered closed-loop paths Y_t (reps, horizon, n) started from 0 and run ``burn`` steps."""
    sys = cl.system
    generators = [replication_rng(seed, r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=worker_count()) as executor :
        W = draw_blocks(sys.noise, generators, burn + horizon, executor)
    E = W @ sys.H.T
    A_T = cl.A_K.T
    z = np.zeros((reps, cl.A_K.shape[0]))
    for t in range(burn) :
        z = z @ A_T + E[:, t]
    Y = np.empty((reps, horizon, z.shape[1]))
    prev = np.empty_like(Y)
    for t in range(horizon) :
        prev[:, t] = z
        z = z @ A_T + E[:, burn + t]
        Y[:, t] = z
    return Y, prev, E[:, burn:]


def _long_run_variance(series, k_max) :
    """Truncated autocovariance sum per replication, mean known to be zero."""
    T = series.shape[-1]
    size = scipy.fft.next_fast_len(2 * T)
    F = scipy.fft.rfft(series, n=size, axis=-1)
    acov = scipy.fft.irfft(F * np.conj(F), n=size, axis=-1)[..., :k_max + 1]
    acov = acov / (T - np.arange(k_max + 1))
    return acov[..., 0] + 2.0 * acov[..., 1:].sum(axis=-1)


def _mean_se(samples) :
    samples = np.asarray(samples, dtype=float)
    reps = samples.shape[0]
    se = samples.std(axis=0, ddof=1) / np.sqrt(reps) if reps > 1 else np.zeros_like(samples[0])
    return samples.mean(axis=0), se


def _autocov(cl, terms, M, eigen, cfg, N, k_max, seed) :
    Y, _, _ = _stationary_paths(cl, cfg.reps, N, cfg.horizon, seed)
    c = _linear_vector(cl, terms)
    f = np.einsum("rti,ij,rtj->rt", Y, M, Y) - np.trace(M @ cl.Sigma_K) + Y @ c
    value, se = _mean_se(_long_run_variance(f, k_max))
    proj = Y @ eigen.vectors
    g = proj ** 2 - np.einsum("ij,ik,kj->j", eigen.vectors, cl.Sigma_K, eigen.vectors)
    per_dir, per_dir_se = _mean_se(_long_run_variance(np.moveaxis(g, 1, 2), k_max))
    linear = float(c @ lambda_cov_zero(cl) @ c)
    return float(value), float(se), per_dir, per_dir_se, linear


def _batch_means(cl, terms, M, eigen, cfg, N, seed) :
    Y, prev, E = _stationary_paths(cl, cfg.reps, N, cfg.horizon, seed)
    T = cfg.horizon
    x_prev = prev + cl.x_bar
    reps, _, n = Y.shape
    C = c_increment(cl, terms, x_prev.reshape(-1, n), E.reshape(-1, n)).reshape(reps, T)
    S_T = C.sum(axis=1)
    value, se = _mean_se(S_T ** 2 / T)
    proj = Y @ eigen.vectors
    g = proj ** 2 - np.einsum("ij,ik,kj->j", eigen.vectors, cl.Sigma_K, eigen.vectors)
    per_dir, per_dir_se = _mean_se(g.sum(axis=1) ** 2 / T)
    c = _linear_vector(cl, terms)
    linear = float(c @ lambda_cov_zero(cl) @ c)
    return float(value), float(se), per_dir, per_dir_se, linear


@ToolboxLogger.log_method
def gamma_C_sq_estimate(sys, pol, rf, cfg=None) :
    """Asymptotic variance gamma_C^2 = lim E[S_t^2] / t with its standard error.

    gamma_C^2 is the long-run variance of tr(M (Y_t Y_t^T - Sigma_K)) + c^T Y_t for
    the stationary centered state Y_t, M the risk weight matrix and
    c = 2 (I - A_K)^T (Q_K^c x_bar + K^T Rc l).
    """
    cfg = EstimatorConfig() if cfg is None else cfg
    cl = closed_loop(sys, pol)
    if not sys.noise.fourth_moment_finite :
        raise MomentUndefined("gamma_C^2 requires a finite fourth noise moment; {!r}".format(sys.noise))
    terms = risk_terms(cl, rf, with_moments=False)
    M = risk_weight_matrix(cl, rf)
    eigen = sym_eig(M, tol=1e-9)

    method = cfg.method
    if method == "auto" :
        method = "spectral" if isinstance(sys.noise, GaussianNoise) else "cumulant"
    seed = config_key("MC_SEED") if cfg.seed is None else cfg.seed

    if method == "spectral" :
        if not isinstance(sys.noise, GaussianNoise) :
            raise RequiresGaussian("the spectral estimator needs Gaussian noise")
        parts = _spectral(cl, terms, M, eigen, cfg.nodes)
    elif method == "cumulant" :
        parts = _cumulant(cl, terms, M, eigen)
    elif method in ("autocov", "batch_means") :
        N = ma_truncation(cl.A_K) if cfg.ma_trunc is None else int(cfg.ma_trunc)
        if method == "autocov" :
            k_max = N if cfg.k_max is None else int(cfg.k_max)
            if k_max >= cfg.horizon // 2 :
                k_max = max(1, cfg.horizon // 4)
                ToolboxLogger.warning("k_max reduced to {} for horizon {}".format(k_max, cfg.horizon))
            parts = _autocov(cl, terms, M, eigen, cfg, N, k_max, seed)
        else :
            parts = _batch_means(cl, terms, M, eigen, cfg, N, seed)
    else :
        raise ValueError("unknown gamma_C^2 method '{}'".format(cfg.method))

    value, se, per_dir, per_dir_se, linear = parts
    ToolboxLogger.debug("gamma_C^2 [{}] = {:.6g} (se {:.2g})".format(method, value, se))
    return GammaCEstimate(value=float(value), stderr=float(se), method=method, eigen=eigen,
                          per_direction=np.asarray(per_dir, dtype=float),
                          per_direction_se=np.asarray(per_dir_se, dtype=float), linear_term=linear)


@dataclass
class ErgodicRiskReport :
    gamma_N_sq: float
    gamma_C: GammaCEstimate
    M: np.ndarray
    moments: object = None
    extras: dict = field(default_factory=dict)

    @property
    def gamma_C_sq(self) :
        return self.gamma_C.value

    @property
    def gamma_C_se(self) :
        return self.gamma_C.stderr

    @property
    def eigenpairs(self) :
        return self.gamma_C.eigen.pairs

    @property
    def per_direction(self) :
        return self.gamma_C.per_direction

    def to_dict(self) :
        out = {"gamma_N_sq" : self.gamma_N_sq, "gamma_C_sq" : self.gamma_C.to_dict(), "M" : self.M.tolist()}
        if self.moments is not None :
            out["moments"] = self.moments.to_dict()
        out.update(self.extras)
        return out


def ergodic_risk_report(sys, pol, rf, cfg=None) :
    cl = closed_loop(sys, pol)
    terms = risk_terms(cl, rf)
    return ErgodicRiskReport(gamma_N_sq=gamma_N_sq_closed_loop(cl, rf, terms),
                             gamma_C=gamma_C_sq_estimate(sys, pol, rf, cfg),
                             M=risk_weight_matrix(cl, rf), moments=terms.moments,
                             extras={"Sigma_Gamma_0" : lambda_cov_zero(cl).tolist()})
