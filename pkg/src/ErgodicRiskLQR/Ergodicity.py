# -*- coding: utf-8 -*-
"""
Geometric drift certificates PV(x) - V(x) <= -beta V(x) + b 1_C(x) for the
closed loop, with V(x) = ||x - x_bar||_M^4 + 1 (or the quadratic variant),
M = A_K^T M A_K + Q_drift and C = {x : ||x - x_bar||_{Q_drift} <= radius}.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np
import scipy.linalg as la

from ErgodicRiskLQR.Errors import DriftViolated, MomentUndefined
from ErgodicRiskLQR.LtiSystem import closed_loop
from ErgodicRiskLQR.MatOps import check_symmetric, solve_dlyap
from ErgodicRiskLQR.NoiseModels import GaussianNoise, as_generator
from ErgodicRiskLQR.Utils import ToolboxLogger, config_key, worker_count

_CHUNK = 1 << 16
_STATE_CHUNK = 64


@dataclass(frozen=True)
class DriftMoments :
    """m_k = E ||H W||_M^k for k = 2, 3, 4 with Monte Carlo standard errors."""
    m2: float
    m3: float
    m4: float
    se: tuple = (0.0, 0.0, 0.0)

    def to_dict(self) :
        return {"m2" : self.m2, "m3" : self.m3, "m4" : self.m4, "se" : list(self.se)}


@dataclass(frozen=True, eq=False)
class DriftCertificate :
    M: np.ndarray
    Q_drift: np.ndarray
    beta: float
    b: float
    radius: float
    moments: DriftMoments
    order: int
    x_bar: np.ndarray
    A_K: np.ndarray
    contraction_gain: float
    worst_direction: np.ndarray

    @property
    def lambda_max(self) :
        return float(la.eigvalsh(self.M)[-1])

    def V(self, x) :
        y = np.atleast_2d(x) - self.x_bar
        return np.einsum("ri,ij,rj->r", y, self.M, y) ** (self.order // 2) + 1.0

    def in_small_set(self, x) :
        y = np.atleast_2d(x) - self.x_bar
        return np.sqrt(np.einsum("ri,ij,rj->r", y, self.Q_drift, y)) <= self.radius

    def corrupted(self) :
        """Negative control: the contraction rate a worst-direction state cannot meet."""
        beta = 1.0 - self.contraction_gain ** self.order / 2.0
        return replace(self, beta=float(beta))

    def to_dict(self) :
        return {"order" : self.order, "M" : self.M.tolist(), "Q_drift" : self.Q_drift.tolist(),
                "beta" : self.beta, "b" : self.b, "radius" : self.radius, "moments" : self.moments.to_dict(),
                "x_bar" : self.x_bar.tolist(), "contraction_gain" : self.contraction_gain,
                "lambda_max" : self.lambda_max}


def _norm_powers(E, M, draws_sum) :
    """Sums of ||e||_M^k and their squares for k = 2, 3, 4."""
    sq = np.einsum("ri,ij,rj->r", E, M, E)
    p = np.stack([sq, sq ** 1.5, sq * sq])
    draws_sum[0] += p.sum(axis=1)
    draws_sum[1] += (p * p).sum(axis=1)


def drift_moments(sys, M, draws=None, seed=None, method="auto") :
    """m_2, m_3, m_4 of ||H W||_M by Monte Carlo; ``method="auto"`` takes m_2 = tr(M S) for Gaussian noise."""
    draws = int(config_key("MC_DRAWS") if draws is None else draws)
    seed = config_key("MC_SEED") if seed is None else seed
    rng = as_generator(seed)
    sums = [np.zeros(3), np.zeros(3)]
    done = 0
    while done < draws :
        size = min(_CHUNK, draws - done)
        _norm_powers(sys.noise.sample(rng, size) @ sys.H.T, M, sums)
        done += size
    mean = sums[0] / draws
    se = np.sqrt(np.clip(sums[1] / draws - mean ** 2, 0.0, None) / max(draws - 1, 1))
    if method == "auto" and isinstance(sys.noise, GaussianNoise) :
        mean[0] = float(np.trace(M @ sys.noise_covariance()))
        se[0] = 0.0
    elif method not in ("auto", "monte_carlo") :
        raise ValueError("unknown moment method '{}'".format(method))
    return DriftMoments(m2=float(mean[0]), m3=float(mean[1]), m4=float(mean[2]), se=tuple(float(s) for s in se))


def _worst_direction(A_K, M) :
    """Largest M-norm gain of A_K, sqrt of the top generalized eigenvalue of (A_K^T M A_K, M)."""
    values, vectors = la.eigh(A_K.T @ M @ A_K, M)
    v = vectors[:, -1]
    return float(np.sqrt(max(values[-1], 0.0))), v / la.norm(v)


@ToolboxLogger.log_method
def drift_certificate(sys, pol, Q_drift=None, order=4, draws=None, seed=None, moment_method="auto") :
    if order not in (2, 4) :
        raise ValueError("order must be 2 or 4, got {}".format(order))
    if order == 4 and not sys.noise.fourth_moment_finite :
        raise MomentUndefined("the fourth-order drift certificate needs a finite fourth noise moment; {!r}"
                              .format(sys.noise))
    cl = closed_loop(sys, pol)
    n = sys.n
    if Q_drift is None :
        Q_drift = config_key("Q_DRIFT_SCALE") * np.eye(n)
    Q_drift = check_symmetric(Q_drift, "Q_drift")
    if la.eigvalsh(Q_drift)[0] <= 1.0 :
        raise ValueError("Q_drift - I must be positive definite")

    M = solve_dlyap(cl.A_K.T, Q_drift)
    lam = float(la.eigvalsh(M)[-1])
    mom = drift_moments(sys, M, draws=draws, seed=seed, method=moment_method)
    if order == 4 :
        beta = 1.0 / (2.0 * lam ** 4)
        radius = max(6.0 * mom.m2 + 2.0 * mom.m3, 1.0 + 2.0 * mom.m4 + 4.0 * mom.m3)
        b = mom.m4 + 2.0 * mom.m3 + 0.5 + (6.0 * mom.m2 + 2.0 * mom.m3) * lam ** 2 * radius ** 2
    else :
        beta = 1.0 / (2.0 * lam)
        radius = float(np.sqrt(1.0 + 2.0 * lam * mom.m2))
        b = mom.m2 + beta
    gain, v = _worst_direction(cl.A_K, M)
    ToolboxLogger.info("Drift certificate (order {}): beta={:.6g}, radius={:.6g}, b={:.6g}".format(order, beta, radius, b))
    return DriftCertificate(M=M, Q_drift=Q_drift, beta=float(beta), b=float(b), radius=float(radius), moments=mom,
                            order=order, x_bar=cl.x_bar, A_K=cl.A_K, contraction_gain=gain, worst_direction=v)


@dataclass
class DriftReport :
    passed: bool
    n_states: int
    n_noise: int
    worst_state: np.ndarray
    worst_excess: float
    violations: int
    rows: List[dict] = field(default_factory=list, repr=False)

    def to_dict(self) :
        return {"passed" : self.passed, "n_states" : self.n_states, "n_noise" : self.n_noise,
                "worst_state" : self.worst_state.tolist(), "worst_excess" : self.worst_excess,
                "violations" : self.violations, "states" : self.rows}


def _test_states(cert, count, rng) :
    """Anchors (x_bar, worst direction at +-radius and +-10 radius) then random states around C."""
    n = cert.x_bar.size
    v = cert.worst_direction / np.sqrt(cert.worst_direction @ cert.Q_drift @ cert.worst_direction)
    anchors = [np.zeros(n)] + [s * r * v for r in (cert.radius, 10.0 * cert.radius) for s in (1.0, -1.0)]
    extra = max(count - len(anchors), 0)
    directions = rng.standard_normal((extra, n))
    directions /= np.sqrt(np.einsum("ri,ij,rj->r", directions, cert.Q_drift, directions))[:, None]
    scale = cert.radius * 10.0 ** rng.uniform(-2.0, 1.0, extra)
    Y = np.vstack([np.array(anchors), directions * scale[:, None]])
    return Y + cert.x_bar


def _expected_next(cert, Y, E) :
    """Monte Carlo E[V(X+) | X = x] for centered states Y with common draws E, and its standard error."""
    M = cert.M
    AY = Y @ cert.A_K.T
    a = np.einsum("ri,ij,rj->r", AY, M, AY)
    cross = (AY @ M) @ E.T
    e2 = np.einsum("ri,ij,rj->r", E, M, E)
    sq = a[:, None] + 2.0 * cross + e2[None, :]
    if cert.order == 4 :
        # 4 a <A y, e>_M has mean zero
        f = sq * sq - 4.0 * a[:, None] * cross
    else :
        f = sq - 2.0 * cross
    return f.mean(axis=1) + 1.0, f.std(axis=1, ddof=1) / np.sqrt(E.shape[0])


@ToolboxLogger.log_method
def verify_drift(cert, sys, pol, n_states=1000, n_noise=20000, seed=None, slack=None, raise_on_failure=True) :
    """Check the drift inequality at sampled states with ``slack`` Monte Carlo standard errors of room."""
    slack = config_key("DRIFT_SE_SLACK") if slack is None else slack
    seed = config_key("MC_SEED") if seed is None else seed
    cl = closed_loop(sys, pol)
    if not np.allclose(cl.A_K, cert.A_K) :
        raise ValueError("certificate was built for a different closed loop")
    rng = as_generator(seed)
    X = _test_states(cert, int(n_states), rng)
    E = sys.noise.sample(rng, int(n_noise)) @ sys.H.T
    Y = X - cert.x_bar

    chunks = [Y[i:i + _STATE_CHUNK] for i in range(0, len(Y), _STATE_CHUNK)]
    with ThreadPoolExecutor(max_workers=worker_count()) as executor :
        parts = list(executor.map(lambda c : _expected_next(cert, c, E), chunks))
    PV = np.concatenate([p[0] for p in parts])
    se = np.concatenate([p[1] for p in parts])

    V = cert.V(X)
    inside = cert.in_small_set(X)
    bound = -cert.beta * V + cert.b * inside
    excess = (PV - V) - bound - slack * se
    worst = int(np.argmax(excess / V))
    violations = int(np.sum(excess > 0.0))
    rows = [{"state" : x.tolist(), "delta_V" : float(pv - v), "bound" : float(bd), "se" : float(s), "in_C" : bool(c)}
            for x, pv, v, bd, s, c in zip(X, PV, V, bound, se, inside)]
    report = DriftReport(passed=violations == 0, n_states=len(X), n_noise=E.shape[0], worst_state=X[worst],
                         worst_excess=float(excess[worst]), violations=violations, rows=rows)
    if violations and raise_on_failure :
        raise DriftViolated("drift inequality fails at {} of {} states; worst at {}".format(
            violations, len(X), np.array2string(X[worst], precision=6)), worst_state=X[worst], report=report)
    ToolboxLogger.info("Drift check at {} states ({} noise draws): {} violations".format(len(X), E.shape[0], violations))
    return report
