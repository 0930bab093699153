# -*- coding: utf-8 -*-
"""
Seeded rollouts of X_{t+1} = A X_t + B U_t + H W_{t+1} under U_t = K X_t + l with
the running statistics

    S_t = sum_{s<=t} C_s            N_t = sum_{s<=t} E[C_s^2 | X_{s-1}]
    Lambda_t = sum (X_s - x_bar)    Gamma_t = sum (X_s - x_bar)(X_s - x_bar)^T

plus the ensemble checks built on them. Replication r always draws from
SeedSequence([seed, r]) in blocks of ROLLOUT_BLOCK steps, so results do not
depend on how replications are grouped or on the thread count.
"""
import math

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from ErgodicRiskLQR.Errors import ChannelOutOfRange, DimensionMismatch, MomentUndefined, NotStabilizing, NumericalOverflow
from ErgodicRiskLQR.ErgodicRisk import (EstimatorConfig, RiskFunctional, c_increment, conditional_variance_increment,
                                        gamma_C_sq_estimate, gamma_N_sq_closed_loop, lambda_cov_zero, risk_terms)
from ErgodicRiskLQR.LtiSystem import ClosedLoop, closed_loop
from ErgodicRiskLQR.MatOps import spectral_radius
from ErgodicRiskLQR.NoiseModels import draw_blocks, replication_rng
from ErgodicRiskLQR.Utils import ToolboxLogger, config_key, worker_count

REP_CHUNK = 64


@dataclass(frozen=True)
class GustConfig :
    """Deterministic kick of ``magnitude`` on noise ``channel`` every ``period`` steps."""
    period: int
    magnitude: float
    channel: int = 0

    def __post_init__(self) :
        if int(self.period) < 1 :
            raise ValueError("gust period must be >= 1, got {}".format(self.period))

    @classmethod
    def from_dict(cls, doc) :
        if not doc :
            return None
        return cls(period=int(doc["period"]), magnitude=float(doc["magnitude"]), channel=int(doc.get("channel", 0)))

    def to_dict(self) :
        return {"period" : self.period, "magnitude" : self.magnitude, "channel" : self.channel}


@dataclass
class RolloutConfig :
    horizon: int
    reps: int = 1
    seed: Optional[int] = None
    gust: Optional[GustConfig] = None
    record_stride: int = 1
    snapshot_times: Sequence[int] = ()
    cost: Optional[Tuple[np.ndarray, np.ndarray]] = None  # (Q, R) of J_T; identities when None

    def __post_init__(self) :
        if int(self.horizon) < 1 :
            raise ValueError("horizon must be >= 1, got {}".format(self.horizon))
        if int(self.reps) < 1 :
            raise ValueError("reps must be >= 1, got {}".format(self.reps))
        if int(self.record_stride) < 1 :
            raise ValueError("record_stride must be >= 1, got {}".format(self.record_stride))
        self.horizon = int(self.horizon)
        self.reps = int(self.reps)
        self.record_stride = int(self.record_stride)
        snaps = sorted({int(t) for t in self.snapshot_times})
        if snaps and (snaps[0] < 0 or snaps[-1] > self.horizon) :
            raise ValueError("snapshot times must lie in [0, {}]".format(self.horizon))
        self.snapshot_times = tuple(snaps)
        if self.seed is None :
            self.seed = config_key("MC_SEED")

    @classmethod
    def from_dict(cls, doc, seed=None) :
        doc = doc or {}
        return cls(horizon=doc.get("horizon", 20000), reps=doc.get("reps", 100),
                   seed=doc.get("seed", seed), gust=GustConfig.from_dict(doc.get("gust")),
                   record_stride=doc.get("record_stride", 1), snapshot_times=doc.get("snapshot_times", ()))

    @property
    def record_times(self) :
        """t_k = min(k stride, T) for k = 1..ceil(T / stride)."""
        count = math.ceil(self.horizon / self.record_stride)
        return np.minimum(np.arange(1, count + 1) * self.record_stride, self.horizon)


def inject_gust(cfg, t, d) :
    """Gust added to W_{t+1}: magnitude e_channel when t > 0 and t % period == 0."""
    gust = getattr(cfg, "gust", cfg)
    out = np.zeros(d)
    if gust is None :
        return out
    if not 0 <= gust.channel < d :
        raise ChannelOutOfRange("gust channel {} outside noise dimension {}".format(gust.channel, d))
    if t > 0 and t % gust.period == 0 :
        out[gust.channel] = gust.magnitude
    return out


def _gust_steps(gust, start, count) :
    """Offsets within [start, start + count) of transitions carrying a gust."""
    t = np.arange(start, start + count)
    return np.nonzero((t > 0) & (t % gust.period == 0))[0]


def _peak_mask(gust, states) :
    """States X_s inside a post-gust window s in [t + 2, t + period]."""
    s = states - 2
    k = s // gust.period
    return (s >= 0) & (k >= 1) & (s % gust.period <= gust.period - 2)


@dataclass
class RolloutStats :
    """Running statistics of one replication."""
    rep: int
    times: np.ndarray
    S_series: np.ndarray
    N_series: np.ndarray
    Lambda_T: np.ndarray
    Gamma_T: np.ndarray
    J_T: float
    final_state: np.ndarray
    S_T: float
    N_T: float
    steps: int
    snapshot_times: Tuple[int, ...] = ()
    S_snap: np.ndarray = None
    N_snap: np.ndarray = None
    C_snap: np.ndarray = None
    peak_post_gust_norm: float = 0.0
    stable: bool = True

    def to_dict(self) :
        return {"rep" : self.rep, "steps" : self.steps, "S_T" : self.S_T, "N_T" : self.N_T, "J_T" : self.J_T,
                "Lambda_T" : self.Lambda_T.tolist(), "Gamma_T" : self.Gamma_T.tolist(),
                "final_state" : self.final_state.tolist(), "peak_post_gust_norm" : self.peak_post_gust_norm,
                "stable" : self.stable}


@dataclass
class RolloutBatch :
    """Stacked statistics of replications ``reps``; leading axis indexes replications."""
    reps: np.ndarray
    times: np.ndarray
    S_series: np.ndarray
    N_series: np.ndarray
    Lambda_T: np.ndarray
    Gamma_T: np.ndarray
    J_T: np.ndarray
    final_state: np.ndarray
    steps: int
    snapshot_times: Tuple[int, ...]
    S_snap: np.ndarray
    N_snap: np.ndarray
    C_snap: np.ndarray
    peak_norm: np.ndarray
    stable: bool = True

    @property
    def S_T(self) :
        return self.S_series[:, -1] if self.S_series.shape[1] else np.zeros(len(self.reps))

    @property
    def N_T(self) :
        return self.N_series[:, -1] if self.N_series.shape[1] else np.zeros(len(self.reps))

    def __len__(self) :
        return len(self.reps)

    def __getitem__(self, i) :
        return RolloutStats(rep=int(self.reps[i]), times=self.times, S_series=self.S_series[i],
                            N_series=self.N_series[i], Lambda_T=self.Lambda_T[i], Gamma_T=self.Gamma_T[i],
                            J_T=float(self.J_T[i]), final_state=self.final_state[i], S_T=float(self.S_T[i]),
                            N_T=float(self.N_T[i]), steps=self.steps, snapshot_times=self.snapshot_times,
                            S_snap=self.S_snap[i], N_snap=self.N_snap[i], C_snap=self.C_snap[i],
                            peak_post_gust_norm=float(self.peak_norm[i]), stable=self.stable)

    @classmethod
    def concat(cls, parts) :
        first = parts[0]
        stack = lambda name : np.concatenate([getattr(p, name) for p in parts], axis=0)
        return cls(reps=stack("reps"), times=first.times, S_series=stack("S_series"), N_series=stack("N_series"),
                   Lambda_T=stack("Lambda_T"), Gamma_T=stack("Gamma_T"), J_T=stack("J_T"),
                   final_state=stack("final_state"), steps=first.steps, snapshot_times=first.snapshot_times,
                   S_snap=stack("S_snap"), N_snap=stack("N_snap"), C_snap=stack("C_snap"),
                   peak_norm=stack("peak_norm"), stable=first.stable)


def _rollout_loop(sys, pol) :
    """Closed loop for simulation; unstable gains are allowed with a warning."""
    try :
        return closed_loop(sys, pol)
    except NotStabilizing as e :
        ToolboxLogger.warning("simulating a non-stabilizing policy (spectral radius {:.6g})".format(e.rho))
    A_K = sys.A + sys.B @ pol.K
    x_bar = la.lstsq(np.eye(sys.n) - A_K, sys.B @ pol.ell)[0]
    return ClosedLoop(system=sys, policy=pol, A_K=A_K, Sigma_K=np.full((sys.n, sys.n), np.nan), x_bar=x_bar,
                      S=sys.noise_covariance(), spectral_radius=spectral_radius(A_K))


def _cost_weights(cfg, sys) :
    """(Q, R) of J_T = sum X^T Q X + U^T R U: cfg.cost, or the identities a problem document defaults to."""
    if cfg.cost is None :
        return np.eye(sys.n), np.eye(sys.m)
    Q, R = (np.atleast_2d(np.asarray(w, dtype=float)) for w in cfg.cost)
    if Q.shape != (sys.n, sys.n) or R.shape != (sys.m, sys.m) :
        raise DimensionMismatch("cost weights must be {0}x{0} and {1}x{1}, got {2} and {3}"
                                .format(sys.n, sys.m, Q.shape, R.shape))
    return Q, R


def _initial_states(sys, generators) :
    init = sys.init
    if init.is_point_mass :
        return np.tile(init.mean, (len(generators), 1))
    return np.stack([rng.multivariate_normal(init.mean, init.cov) for rng in generators])


class _Accumulator :
    """Block-wise reduction of the running statistics of a group of replications."""

    def __init__(self, cl, terms, cfg, Q, R, reps) :
        n = cl.A_K.shape[0]
        self.cl, self.terms, self.cfg = cl, terms, cfg
        self.Q, self.R = Q, R
        self.times = cfg.record_times
        self.snapshots = np.asarray(cfg.snapshot_times, dtype=int)
        count = len(reps)
        self.S = np.zeros(count)
        self.N = np.zeros(count)
        self.S_rec = np.zeros((count, len(self.times)))
        self.N_rec = np.zeros((count, len(self.times)))
        self.S_snap = np.zeros((count, len(self.snapshots)))
        self.N_snap = np.zeros((count, len(self.snapshots)))
        self.C_snap = np.zeros((count, len(self.snapshots)))
        self.Lambda = np.zeros((count, n))
        self.Gamma = np.zeros((count, n, n))
        self.J = np.zeros(count)
        self.peak = np.zeros(count)
        self.steps = 0

    def add(self, start, x_prev, X, E) :
        """Fold transitions start -> start + L given X_{start..start+L-1}, X_{start+1..start+L} and H W."""
        cl, terms = self.cl, self.terms
        count, L, n = X.shape
        C = c_increment(cl, terms, x_prev.reshape(-1, n), E.reshape(-1, n)).reshape(count, L)
        if terms.moments is not None :
            V = conditional_variance_increment(cl, terms, x_prev.reshape(-1, n)).reshape(count, L)
        else :
            V = np.full((count, L), np.nan)
        S = self.S[:, None] + np.cumsum(C, axis=1)
        N = self.N[:, None] + np.cumsum(V, axis=1)
        t = np.arange(start + 1, start + L + 1)

        rec = np.nonzero((self.times > start) & (self.times <= start + L))[0]
        self.S_rec[:, rec] = S[:, self.times[rec] - start - 1]
        self.N_rec[:, rec] = N[:, self.times[rec] - start - 1]
        hit = np.nonzero((self.snapshots > start) & (self.snapshots <= start + L))[0]
        if hit.size :
            idx = self.snapshots[hit] - start - 1
            self.S_snap[:, hit] = S[:, idx]
            self.N_snap[:, hit] = N[:, idx]
            self.C_snap[:, hit] = C[:, idx]

        Y = X - cl.x_bar
        self.Lambda += Y.sum(axis=1)
        self.Gamma += np.einsum("rti,rtj->rij", Y, Y)
        self.J += np.einsum("rti,ij,rtj->r", X, self.Q, X)
        U = X @ cl.K.T + cl.ell
        self.J += np.einsum("rti,ij,rtj->r", U, self.R, U)
        gust = self.cfg.gust
        if gust is not None :
            mask = _peak_mask(gust, t)
            if mask.any() :
                self.peak = np.maximum(self.peak, la.norm(X[:, mask], axis=2).max(axis=1))
        self.S, self.N = S[:, -1], N[:, -1]
        self.steps = start + L

    def batch(self, reps, final_state, stable) :
        steps = self.steps
        # statistics recorded past an overflow stay at zero
        return RolloutBatch(reps=np.asarray(reps), times=self.times, S_series=self.S_rec, N_series=self.N_rec,
                            Lambda_T=self.Lambda, Gamma_T=0.5 * (self.Gamma + self.Gamma.transpose(0, 2, 1)),
                            J_T=self.J, final_state=final_state, steps=steps, snapshot_times=tuple(self.snapshots.tolist()),
                            S_snap=self.S_snap, N_snap=self.N_snap, C_snap=self.C_snap,
                            peak_norm=self.peak, stable=stable)


def _simulate_reps(cl, rf, terms, cfg, reps) :
    sys = cl.system
    block = int(config_key("ROLLOUT_BLOCK"))
    limit = config_key("OVERFLOW_NORM")
    Q, R = _cost_weights(cfg, sys)
    generators = [replication_rng(cfg.seed, r) for r in reps]
    acc = _Accumulator(cl, terms, cfg, Q, R, reps)

    z = _initial_states(sys, generators)
    A_T = cl.A_K.T
    drift = cl.drift
    H_T = sys.H.T
    stable = cl.spectral_radius < 1.0
    inject_gust(cfg, 0, sys.d)
    T = cfg.horizon
    start = 0
    with np.errstate(over="ignore", invalid="ignore") :
        while start < T :
            L = min(block, T - start)
            W = draw_blocks(sys.noise, generators, L)
            if cfg.gust is not None :
                for k in _gust_steps(cfg.gust, start, L) :
                    W[:, k] += inject_gust(cfg, start + k, sys.d)
            E = W @ H_T
            X = np.empty((len(reps), L, sys.n))
            x = z
            for k in range(L) :
                x = x @ A_T + drift + E[:, k]
                X[:, k] = x
            norms = la.norm(X, axis=2)
            bad = ~(norms <= limit)
            if bad.any() :
                step = start + int(np.argmax(bad.any(axis=0))) + 1
                partial = acc.batch(reps, z, stable=False)
                raise NumericalOverflow("state norm exceeded {:.3g} at step {}".format(limit, step),
                                        step=step, partial=partial)
            x_prev = np.concatenate([z[:, None, :], X[:, :-1]], axis=1)
            acc.add(start, x_prev, X, E)
            z = X[:, -1]
            start += L
    return acc.batch(reps, z, stable)


def _prepare(sys, pol, rf, need_moments) :
    cl = _rollout_loop(sys, pol)
    with_moments = sys.noise.fourth_moment_finite
    if need_moments and not with_moments :
        raise MomentUndefined("conditional variances need a finite fourth noise moment; {!r}".format(sys.noise))
    return cl, risk_terms(cl, rf, with_moments=with_moments)


def _label_gust(cfg) :
    if cfg.gust is not None :
        ToolboxLogger.warning("gusted rollout: criteria stay computed on the nominal noise model "
                              "(period {}, magnitude {:.6g})".format(cfg.gust.period, cfg.gust.magnitude))


def rollout(sys, pol, rf, cfg, rep_index=0) :
    """One replication; identical output for identical (cfg.seed, rep_index)."""
    cl, terms = _prepare(sys, pol, rf, need_moments=False)
    _label_gust(cfg)
    return _simulate_reps(cl, rf, terms, cfg, [int(rep_index)])[0]


@ToolboxLogger.log_method
def ensemble(sys, pol, rf, cfg, need_moments=False) :
    """Replications 0..reps-1, processed in groups of REP_CHUNK on a worker pool."""
    cl, terms = _prepare(sys, pol, rf, need_moments)
    _label_gust(cfg)
    groups = [list(range(lo, min(lo + REP_CHUNK, cfg.reps))) for lo in range(0, cfg.reps, REP_CHUNK)]
    workers = min(worker_count(), len(groups))
    if workers <= 1 :
        parts = [_simulate_reps(cl, rf, terms, cfg, g) for g in groups]
    else :
        with ThreadPoolExecutor(max_workers=workers) as executor :
            parts = list(executor.map(lambda g : _simulate_reps(cl, rf, terms, cfg, g), groups))
    ToolboxLogger.debug("ensemble of {} replications over {} steps".format(cfg.reps, cfg.horizon))
    return RolloutBatch.concat(parts)


@dataclass
class VarianceCurve :
    times: np.ndarray
    mean_S2_over_t: np.ndarray
    sd: np.ndarray
    reps: int
    batch: RolloutBatch = field(repr=False, default=None)

    @property
    def terminal(self) :
        return float(self.mean_S2_over_t[-1])

    def rows(self, label) :
        return [[label, int(t), float(m), float(s)] for t, m, s in zip(self.times, self.mean_S2_over_t, self.sd)]


def ensemble_variance_curve(sys, pol, rf, cfg) :
    """Mean and spread of S_t^2 / t over the ensemble at every recorded t."""
    if not sys.noise.fourth_moment_finite :
        raise MomentUndefined("S_t^2 / t has no finite limit without a fourth noise moment; {!r}".format(sys.noise))
    batch = ensemble(sys, pol, rf, cfg)
    ratio = batch.S_series ** 2 / batch.times
    sd = ratio.std(axis=0, ddof=1) if len(batch) > 1 else np.zeros(ratio.shape[1])
    return VarianceCurve(times=batch.times, mean_S2_over_t=ratio.mean(axis=0), sd=sd, reps=len(batch), batch=batch)


@dataclass
class CheckReport :
    name: str
    passed: bool
    values: dict
    degenerate: bool = False

    def __getitem__(self, key) :
        return self.values[key]

    def to_dict(self) :
        return {"name" : self.name, "passed" : self.passed, "degenerate" : self.degenerate, **self.values}


def _rel(a, b) :
    scale = la.norm(b)
    return float(la.norm(a - b) / scale) if scale > 0 else float(la.norm(a - b))


@ToolboxLogger.log_method
def lln_check(sys, pol, cfg, rf=None, tol=None) :
    """Single-trajectory averages: Lambda_T / T -> 0, Gamma_T / T -> Sigma_K and, given rf, N_T / T -> gamma_N^2."""
    tol = config_key("CHECK_TOL") if tol is None else tol
    lam_tol = config_key("LLN_LAMBDA_ABS_TOL")
    cl = closed_loop(sys, pol)
    rf = RiskFunctional.zero(sys.n) if rf is None else rf
    need_n = bool(np.any(rf.Qc)) and sys.noise.fourth_moment_finite
    terms = risk_terms(cl, rf, with_moments=need_n)
    single = RolloutConfig(horizon=cfg.horizon, reps=1, seed=cfg.seed, record_stride=cfg.horizon)
    stats = _simulate_reps(cl, rf, terms, single, [0])[0]
    T = stats.steps

    lambda_dev = float(la.norm(stats.Lambda_T / T))
    degenerate = not np.any(cl.Sigma_K)
    gamma_dev = _rel(stats.Gamma_T / T, cl.Sigma_K)
    values = {"horizon" : T, "lambda_dev" : lambda_dev, "gamma_dev" : gamma_dev}
    passed = lambda_dev <= lam_tol and gamma_dev <= tol
    if need_n :
        gN = gamma_N_sq_closed_loop(cl, rf, terms)
        n_dev = abs(stats.N_T / T - gN) / gN if gN > 0 else abs(stats.N_T / T)
        values.update({"N_T_over_T" : stats.N_T / T, "gamma_N_sq" : gN, "gamma_N_dev" : float(n_dev)})
        passed = passed and n_dev <= tol
    if degenerate :
        ToolboxLogger.warning("LLN check on a noise-free closed loop: Sigma_K = 0")
    return CheckReport(name="lln", passed=bool(passed), values=values, degenerate=degenerate)


@ToolboxLogger.log_method
def clt_check(sys, pol, rf, cfg, gamma_C_sq=None, tol=None, estimator=None) :
    """Ensemble Var(Lambda_T / sqrt T) against Sigma_Gamma(0) and Var(S_T / sqrt T) against gamma_C^2."""
    if cfg.reps < 200 :
        raise ValueError("the CLT check needs at least 200 replications, got {}".format(cfg.reps))
    if not sys.noise.fourth_moment_finite :
        raise MomentUndefined("the CLT for S_t needs a finite fourth noise moment; {!r}".format(sys.noise))
    tol = config_key("CLT_TOL") if tol is None else tol
    cl = closed_loop(sys, pol)
    if gamma_C_sq is None :
        gamma_C_sq = gamma_C_sq_estimate(sys, pol, rf, estimator or EstimatorConfig()).value

    run = RolloutConfig(horizon=cfg.horizon, reps=cfg.reps, seed=cfg.seed, record_stride=cfg.horizon)
    batch = ensemble(sys, pol, rf, run)
    T = batch.steps
    L = batch.Lambda_T / math.sqrt(T)
    lambda_cov = L.T @ L / len(batch)
    target = lambda_cov_zero(cl)
    lambda_dev = _rel(lambda_cov, target)

    s = batch.S_T / math.sqrt(T)
    s_var = float(np.mean(s ** 2))
    values = {"horizon" : T, "reps" : len(batch), "lambda_cov" : lambda_cov.tolist(),
              "Sigma_Gamma_0" : target.tolist(), "lambda_dev" : lambda_dev,
              "S_var" : s_var, "gamma_C_sq" : float(gamma_C_sq)}
    degenerate = gamma_C_sq <= 0.0
    if degenerate :
        s_max = float(np.max(np.abs(s)))
        values["S_max"] = s_max
        passed = lambda_dev <= tol and s_max <= tol
    else :
        s_dev = abs(s_var - gamma_C_sq) / gamma_C_sq
        values["S_dev"] = float(s_dev)
        passed = lambda_dev <= tol and s_dev <= tol
    return CheckReport(name="clt", passed=bool(passed), values=values, degenerate=degenerate)


def _mean_within(samples, slack) :
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(samples.shape[0])
    return mean, se, np.abs(mean) <= slack * se + 1e-12 * np.abs(samples).max(axis=0, initial=0.0)


@ToolboxLogger.log_method
def doob_check(sys, pol, rf, cfg, times, lag=1, slack=4.0) :
    """Ensemble mean of (S_t^2 - N_t) - (S_{t-lag}^2 - N_{t-lag}) within ``slack`` standard errors of 0."""
    times = [int(t) for t in times]
    if lag < 1 or min(times) - lag < 0 :
        raise ValueError("need t - lag >= 0 for every snapshot time")
    run = RolloutConfig(horizon=max(times), reps=cfg.reps, seed=cfg.seed, record_stride=max(times),
                        snapshot_times=times + [t - lag for t in times])
    batch = ensemble(sys, pol, rf, run, need_moments=True)
    pos = {t : i for i, t in enumerate(batch.snapshot_times)}
    D = np.stack([(batch.S_snap[:, pos[t]] ** 2 - batch.N_snap[:, pos[t]])
                  - (batch.S_snap[:, pos[t - lag]] ** 2 - batch.N_snap[:, pos[t - lag]]) for t in times], axis=1)
    mean, se, ok = _mean_within(D, slack)
    return CheckReport(name="doob", passed=bool(ok.all()),
                       values={"times" : times, "lag" : lag, "mean" : mean.tolist(), "se" : se.tolist()})


@ToolboxLogger.log_method
def mds_check(sys, pol, rf, cfg, times, slack=4.0) :
    """Ensemble mean of C_t within ``slack`` standard errors of 0 at each t in ``times``."""
    times = sorted({int(t) for t in times})
    if times[0] < 1 :
        raise ValueError("C_t is defined for t >= 1")
    run = RolloutConfig(horizon=times[-1], reps=cfg.reps, seed=cfg.seed, record_stride=times[-1], snapshot_times=times)
    batch = ensemble(sys, pol, rf, run)
    mean, se, ok = _mean_within(batch.C_snap, slack)
    return CheckReport(name="mds", passed=bool(ok.all()),
                       values={"times" : times, "mean" : mean.tolist(), "se" : se.tolist()})
