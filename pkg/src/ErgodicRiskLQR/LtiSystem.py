# -*- coding: utf-8 -*-
"""
The plant X_{t+1} = A X_t + B U_t + H W_{t+1}, affine policies U_t = K X_t + l,
and the closed-loop quantities every criterion is built from.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg as la

from ErgodicRiskLQR.Errors import DimensionMismatch, NotStabilizing
from ErgodicRiskLQR.MatOps import check_symmetric, controllability_rank, solve_dlyap, spectral_radius, resolve_margin
from ErgodicRiskLQR.NoiseModels import EmpiricalNoise, NoiseModel


def _matrix(value, name) :
    M = np.atleast_2d(np.asarray(value, dtype=float))
    if M.ndim != 2 :
        raise DimensionMismatch("{} must be a matrix, got shape {}".format(name, M.shape))
    if not np.all(np.isfinite(M)) :
        raise ValueError("{} has non-finite entries".format(name))
    return M


@dataclass(frozen=True, eq=False)
class InitialDistribution :
    mean: np.ndarray
    cov: np.ndarray

    @classmethod
    def point_mass(cls, n, at=None) :
        mean = np.zeros(n) if at is None else np.asarray(at, dtype=float).reshape(n)
        return cls(mean=mean, cov=np.zeros((n, n)))

    @property
    def is_point_mass(self) :
        return not np.any(self.cov)


@dataclass(frozen=True, eq=False)
class LtiSystem :
    A: np.ndarray
    B: np.ndarray
    H: np.ndarray
    noise: NoiseModel
    init: Optional[InitialDistribution] = None

    def __post_init__(self) :
        A = _matrix(self.A, "A")
        if A.shape[0] != A.shape[1] :
            raise DimensionMismatch("A must be square, got shape {}".format(A.shape))
        n = A.shape[0]
        B = _matrix(self.B, "B")
        H = _matrix(self.H, "H")
        if B.shape[0] != n :
            raise DimensionMismatch("B has {} rows, expected {}".format(B.shape[0], n))
        if H.shape[0] != n :
            raise DimensionMismatch("H has {} rows, expected {}".format(H.shape[0], n))
        if self.noise.d != H.shape[1] :
            raise DimensionMismatch("noise dimension {} does not match H with {} columns".format(self.noise.d, H.shape[1]))
        init = self.init
        if init is None :
            init = InitialDistribution.point_mass(n)
        else :
            mean = np.asarray(init.mean, dtype=float).reshape(-1)
            cov = check_symmetric(init.cov, "initial covariance")
            if mean.shape != (n,) or cov.shape != (n, n) :
                raise DimensionMismatch("initial distribution does not match state dimension {}".format(n))
            if la.eigvalsh(cov).min() < -1e-10 * max(1.0, la.norm(cov)) :
                raise ValueError("initial covariance is not positive semidefinite")
            init = InitialDistribution(mean=mean, cov=cov)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "init", init)

    @property
    def n(self) :
        return self.A.shape[0]

    @property
    def m(self) :
        return self.B.shape[1]

    @property
    def d(self) :
        return self.H.shape[1]

    def noise_covariance(self) :
        """H Sigma_W H^T, the state-space noise covariance."""
        S = self.H @ self.noise.covariance() @ self.H.T
        return 0.5 * (S + S.T)

    def with_noise(self, noise) :
        return LtiSystem(A=self.A, B=self.B, H=self.H, noise=noise, init=self.init)


@dataclass(frozen=True, eq=False)
class Policy :
    K: np.ndarray
    ell: Optional[np.ndarray] = None

    def __post_init__(self) :
        K = _matrix(self.K, "K")
        ell = np.zeros(K.shape[0]) if self.ell is None else np.asarray(self.ell, dtype=float).reshape(-1)
        if ell.shape != (K.shape[0],) :
            raise DimensionMismatch("offset has length {}, gain has {} rows".format(ell.size, K.shape[0]))
        if not np.all(np.isfinite(ell)) :
            raise ValueError("offset has non-finite entries")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "ell", ell)

    @classmethod
    def linear(cls, K) :
        return cls(K=K)

    @property
    def is_linear(self) :
        return not np.any(self.ell)

    def check(self, sys) :
        if self.K.shape != (sys.m, sys.n) :
            raise DimensionMismatch("gain is {}, expected {}".format(self.K.shape, (sys.m, sys.n)))

    def to_dict(self) :
        return {"K" : self.K.tolist(), "ell" : self.ell.tolist()}


@dataclass(frozen=True, eq=False)
class ClosedLoop :
    """A_K = A + BK with its stationary covariance Sigma_K and mean x_bar."""
    system: LtiSystem
    policy: Policy
    A_K: np.ndarray
    Sigma_K: np.ndarray
    x_bar: np.ndarray
    S: np.ndarray
    spectral_radius: float

    @property
    def K(self) :
        return self.policy.K

    @property
    def ell(self) :
        return self.policy.ell

    @property
    def drift(self) :
        """B l, the constant input term."""
        return self.system.B @ self.policy.ell

    def Q_K(self, Q, R) :
        return Q + self.K.T @ R @ self.K


def closed_loop(sys, pol, margin=None) :
    pol.check(sys)
    A_K = sys.A + sys.B @ pol.K
    rho = spectral_radius(A_K)
    if rho > 1.0 - resolve_margin(margin) :
        raise NotStabilizing("policy is not stabilizing: spectral radius of A+BK is {:.12g}".format(rho), rho=rho)
    S = sys.noise_covariance()
    Sigma_K = solve_dlyap(A_K, S, margin=margin)
    x_bar = la.solve(np.eye(sys.n) - A_K, sys.B @ pol.ell)
    return ClosedLoop(system=sys, policy=pol, A_K=A_K, Sigma_K=Sigma_K, x_bar=x_bar, S=S, spectral_radius=rho)


def is_stabilizing(sys, K, margin=None) :
    K = _matrix(K, "K")
    if K.shape != (sys.m, sys.n) :
        return False
    return spectral_radius(sys.A + sys.B @ K) <= 1.0 - resolve_margin(margin)


@dataclass
class AssumptionCheck :
    name: str
    passed: Optional[bool]
    detail: str

    def to_dict(self) :
        return {"name" : self.name, "passed" : self.passed, "detail" : self.detail}


@dataclass
class AssumptionReport :
    """``passed`` is None for assumptions that cannot be checked from data."""
    checks: List[AssumptionCheck] = field(default_factory=list)

    @property
    def passed(self) :
        return all(c.passed is not False for c in self.checks)

    @property
    def failures(self) :
        return [c.name for c in self.checks if c.passed is False]

    @property
    def unverified(self) :
        return [c.name for c in self.checks if c.passed is None]

    def __getitem__(self, name) :
        for c in self.checks :
            if c.name == name :
                return c
        raise KeyError(name)

    def to_dict(self) :
        return {"passed" : self.passed, "checks" : [c.to_dict() for c in self.checks]}


def assert_assumptions(sys, pol) :
    report = AssumptionReport()
    pol.check(sys)
    A_K = sys.A + sys.B @ pol.K
    rho = spectral_radius(A_K)
    report.checks.append(AssumptionCheck("stabilizing", rho <= 1.0 - resolve_margin(None),
                                         "spectral radius of A+BK is {:.6g}".format(rho)))

    rank = controllability_rank(A_K, sys.H)
    report.checks.append(AssumptionCheck("controllable", rank == sys.n,
                                         "rank of [H, A_K H, ...] is {} of {}".format(rank, sys.n)))

    report.checks.append(AssumptionCheck("fourth_moment", bool(sys.noise.fourth_moment_finite),
                                         "{!r}".format(sys.noise)))

    try :
        min_eig = float(la.eigvalsh(sys.noise.covariance()).min())
        cov_ok = min_eig > 0.0
        detail = "smallest eigenvalue of Sigma_W is {:.6g}".format(min_eig)
    except Exception as e :
        cov_ok = False
        detail = str(e)
    report.checks.append(AssumptionCheck("noise_covariance_pd", cov_ok, detail))

    if isinstance(sys.noise, EmpiricalNoise) :
        report.checks.append(AssumptionCheck("noise_density", None,
                                             "a sample bank cannot certify a non-singular density"))
    else :
        report.checks.append(AssumptionCheck("noise_density", cov_ok, "parametric law with density iff Sigma_W > 0"))
    return report


def average_cost(sys, Q, R, pol) :
    """Stationary E[x^T Q x + u^T R u] under u = Kx + l.

    For l = 0 this is tr((Q + K^T R K)(Sigma_K + x_bar x_bar^T)). For l != 0 the
    control offset adds 2 l^T R K x_bar + l^T R l, and J differs from the trace form.
    """
    cl = closed_loop(sys, pol)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    Q_K = cl.Q_K(Q, R)
    J = float(np.trace(Q_K @ (cl.Sigma_K + np.outer(cl.x_bar, cl.x_bar))))
    if not pol.is_linear :
        J += float(2.0 * pol.ell @ R @ pol.K @ cl.x_bar + pol.ell @ R @ pol.ell)
    return max(J, 0.0)
