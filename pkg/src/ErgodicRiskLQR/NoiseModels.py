# -*- coding: utf-8 -*-
"""
Zero-mean i.i.d. noise models for the plant disturbance W_t.

Every model exposes a seeded sampler, its covariance and the exact second-order
statistics of quadratic forms W^T A W that the risk criteria are built from.
The Student-t model is parameterized by its target covariance, so Sigma_W is the
same matrix for every variant.
"""
import os

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from ErgodicRiskLQR.Errors import MomentUndefined, SingularNoise
from ErgodicRiskLQR.MatOps import check_symmetric, sym_eig
from ErgodicRiskLQR.Utils import CsvFile, ToolboxLogger, config_key

_MC_CHUNK = 1 << 17
_BANK_RANK_TOL = 1e-10


def as_generator(rng_seed) :
    """Accept a Generator, a SeedSequence or anything ``default_rng`` takes."""
    if isinstance(rng_seed, np.random.Generator) :
        return rng_seed
    return np.random.default_rng(rng_seed)


def _psd_factor(S) :
    """L with L L^T = S for a symmetric PSD S (singular allowed)."""
    values, vectors = la.eigh(S)
    if values.min(initial=0.0) < -1e-10 * max(1.0, abs(values).max(initial=0.0)) :
        raise ValueError("covariance is not positive semidefinite (min eigenvalue {:.3e})".format(values.min()))
    return vectors * np.sqrt(np.clip(values, 0.0, None))


class NoiseModel :
    """Base class; concrete variants implement the abstract hooks below."""

    kind = None

    @property
    def d(self) :
        raise NotImplementedError

    @property
    def fourth_moment_finite(self) :
        return True

    def covariance(self) :
        raise NotImplementedError

    def sample(self, rng_seed, count) :
        raise NotImplementedError

    def quadratic_covariance(self, A, B) :
        """Cov(W^T A W, W^T B W) for symmetric A, B."""
        raise NotImplementedError

    def third_moment(self, A) :
        """E[(W^T A W - tr(A Sigma_W)) W] as a d-vector."""
        raise NotImplementedError

    def excess_quadratic_covariance(self, A, B) :
        """Departure of Cov(W^T A W, W^T B W) from its Gaussian value."""
        S = self.covariance()
        return self.quadratic_covariance(A, B) - 2.0 * np.trace(A @ S @ B @ S)

    def to_dict(self) :
        raise NotImplementedError

    def _check_count(self, count) :
        if int(count) < 1 :
            raise ValueError("count must be >= 1, got {}".format(count))
        return int(count)


class GaussianNoise(NoiseModel) :

    kind = "gaussian"

    def __init__(self, cov) :
        self.cov = check_symmetric(cov, "noise covariance")
        self._factor = _psd_factor(self.cov)

    @property
    def d(self) :
        return self.cov.shape[0]

    def covariance(self) :
        return self.cov.copy()

    def sample(self, rng_seed, count) :
        rng = as_generator(rng_seed)
        z = rng.standard_normal((self._check_count(count), self.d))
        return z @ self._factor.T

    def quadratic_covariance(self, A, B) :
        return 2.0 * float(np.trace(A @ self.cov @ B @ self.cov))

    def third_moment(self, A) :
        return np.zeros(self.d)

    def to_dict(self) :
        return {"type" : self.kind, "cov" : self.cov.tolist()}

    def __repr__(self) :
        return "GaussianNoise(d={})".format(self.d)


class StudentTNoise(NoiseModel) :
    """Multivariate t with ``nu`` degrees of freedom and covariance ``cov``.

    Sampled as W = z L^T / sqrt(g / nu) with z standard normal, g ~ chi2(nu) and
    L L^T = cov (nu - 2) / nu.
    """

    kind = "student_t"

    def __init__(self, nu, cov) :
        self.nu = float(nu)
        if not self.nu > 0 :
            raise ValueError("degrees of freedom must be positive, got {}".format(nu))
        self.cov = check_symmetric(cov, "noise covariance")
        self._factor = None

    @property
    def d(self) :
        return self.cov.shape[0]

    @property
    def fourth_moment_finite(self) :
        return self.nu > 4

    def _require(self, order) :
        if not self.nu > order :
            raise MomentUndefined("Student-t noise with nu={:g} has no finite moment of order {} (requires nu > {})"
                                  .format(self.nu, order, order))

    @property
    def kurtosis_factor(self) :
        """E[(W^T A W)^2]-scaling (nu - 2)/(nu - 4) of the elliptical law."""
        self._require(4)
        return (self.nu - 2.0) / (self.nu - 4.0)

    def covariance(self) :
        self._require(2)
        return self.cov.copy()

    def sample(self, rng_seed, count) :
        self._require(2)
        if self._factor is None :
            self._factor = _psd_factor(self.cov * (self.nu - 2.0) / self.nu)
        rng = as_generator(rng_seed)
        count = self._check_count(count)
        z = rng.standard_normal((count, self.d))
        g = rng.chisquare(self.nu, size=count)
        return (z @ self._factor.T) / np.sqrt(g / self.nu)[:, None]

    def quadratic_covariance(self, A, B) :
        kappa = self.kurtosis_factor
        a = np.trace(A @ self.cov)
        b = np.trace(B @ self.cov)
        return float(kappa * (a * b + 2.0 * np.trace(A @ self.cov @ B @ self.cov)) - a * b)

    def third_moment(self, A) :
        self._require(3)
        return np.zeros(self.d)

    def to_dict(self) :
        return {"type" : self.kind, "nu" : self.nu, "cov" : self.cov.tolist()}

    def __repr__(self) :
        return "StudentTNoise(nu={:g}, d={})".format(self.nu, self.d)


class EmpiricalNoise(NoiseModel) :
    """Resampling from a bank of recorded disturbances, centered at load.

    The bank is the law: covariance and higher moments are exact bank averages.
    Its covariance must be positive definite.
    """

    kind = "empirical"

    def __init__(self, samples, samples_path=None) :
        bank = np.asarray(samples, dtype=float)
        if bank.ndim == 1 :
            bank = bank[:, None]
        if bank.ndim != 2 or bank.shape[0] < 2 :
            raise ValueError("empirical noise needs at least two d-vectors, got shape {}".format(bank.shape))
        if not np.all(np.isfinite(bank)) :
            raise ValueError("empirical noise bank has non-finite entries")
        self.bank = bank - bank.mean(axis=0)
        self.samples_path = samples_path
        cov = self.bank.T @ self.bank / self.bank.shape[0]
        self._cov = 0.5 * (cov + cov.T)
        values = sym_eig(self._cov).values
        if not values[-1] > _BANK_RANK_TOL * max(values[0], np.finfo(float).tiny) :
            raise SingularNoise("empirical noise bank is rank deficient: covariance eigenvalues {}".format(values),
                                min_eigenvalue=float(values[-1]))

    @classmethod
    def from_csv(cls, path) :
        rows = CsvFile.readFile(path)
        values = []
        for row in rows :
            if not row :
                continue
            try :
                values.append([float(v) for v in row])
            except ValueError :
                if values :
                    raise
                ToolboxLogger.debug("Skipping header row in {}".format(path))
        ToolboxLogger.debug("Loaded {} noise samples from {}".format(len(values), path))
        return cls(np.array(values, dtype=float), samples_path=path)

    @property
    def d(self) :
        return self.bank.shape[1]

    @property
    def size(self) :
        return self.bank.shape[0]

    def covariance(self) :
        return self._cov.copy()

    def sample(self, rng_seed, count) :
        rng = as_generator(rng_seed)
        idx = rng.integers(0, self.size, size=self._check_count(count))
        return self.bank[idx]

    def _centered_forms(self, A) :
        return np.einsum("ij,jk,ik->i", self.bank, A, self.bank) - np.trace(A @ self._cov)

    def quadratic_covariance(self, A, B) :
        return float(np.mean(self._centered_forms(A) * self._centered_forms(B)))

    def third_moment(self, A) :
        return self.bank.T @ self._centered_forms(A) / self.size

    def bank_standard_errors(self, A) :
        """Standard errors of the bank averages as estimates of the source law."""
        qa = self._centered_forms(A)
        m3_se = (self.bank * qa[:, None]).std(axis=0, ddof=1) / np.sqrt(self.size)
        m4_se = float((qa * qa).std(ddof=1) / np.sqrt(self.size))
        return m3_se, m4_se

    def to_dict(self) :
        out = {"type" : self.kind}
        if self.samples_path is not None :
            out["samples_path"] = str(self.samples_path)
        else :
            out["samples"] = self.bank.tolist()
        return out

    def __repr__(self) :
        return "EmpiricalNoise(size={}, d={})".format(self.size, self.d)


@dataclass(frozen=True)
class MomentFunctionals :
    """M3 (n-vector) and m4 of the closed-loop weight, with standard errors.

    ``M3_se`` and ``m4_se`` are zero for exact evaluations.
    """
    M3: np.ndarray
    m4: float
    M3_se: np.ndarray
    m4_se: float
    method: str

    @property
    def estimator_sd(self) :
        return max(self.m4_se, float(np.max(self.M3_se, initial=0.0)))

    def to_dict(self) :
        return {"M3" : self.M3.tolist(), "m4" : self.m4, "M3_se" : self.M3_se.tolist(),
                "m4_se" : self.m4_se, "method" : self.method}


def sample(model, rng_seed, count) :
    return model.sample(rng_seed, count)


def covariance(model) :
    return model.covariance()


def _pullback(Q_tilde, H) :
    H = np.atleast_2d(np.asarray(H, dtype=float))
    Q_tilde = check_symmetric(Q_tilde, "weight matrix")
    if Q_tilde.shape[0] != H.shape[0] :
        raise ValueError("weight is {} but H is {}".format(Q_tilde.shape, H.shape))
    return H, H.T @ Q_tilde @ H


def _monte_carlo(model, H, T, draws, seed) :
    rng = as_generator(seed)
    trace = np.trace(T @ model.covariance())
    n = H.shape[0]
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    q1 = 0.0
    q2 = 0.0
    done = 0
    while done < draws :
        size = min(_MC_CHUNK, draws - done)
        W = model.sample(rng, size)
        q = np.einsum("ij,jk,ik->i", W, T, W) - trace
        lin = (W @ H.T) * q[:, None]
        s1 += lin.sum(axis=0)
        s2 += (lin * lin).sum(axis=0)
        qq = q * q
        q1 += qq.sum()
        q2 += (qq * qq).sum()
        done += size
    M3 = s1 / draws
    m4 = q1 / draws
    M3_se = np.sqrt(np.clip(s2 / draws - M3 * M3, 0.0, None) / max(draws - 1, 1))
    m4_se = float(np.sqrt(max(q2 / draws - m4 * m4, 0.0) / max(draws - 1, 1)))
    return M3, float(m4), M3_se, m4_se


@ToolboxLogger.log_method
def moment_functionals(model, Q_tilde, H, method="auto", draws=None, seed=None) :
    """M3(Q) = E[H W tr(Q H (W W^T - Sigma_W) H^T)] and m4(Q) = Var(W^T H^T Q H W).

    ``method="auto"`` is exact for every model (closed forms for Gaussian and
    Student-t, bank averages for Empirical); ``"monte_carlo"`` draws
    ``draws`` samples (MC_DRAWS) from the seeded stream ``seed`` (MC_SEED).
    """
    H, T = _pullback(Q_tilde, H)
    if model.d != H.shape[1] :
        raise ValueError("noise dimension {} does not match H with {} columns".format(model.d, H.shape[1]))
    if isinstance(model, StudentTNoise) :
        model._require(4)

    if method == "auto" :
        M3 = H @ model.third_moment(T)
        m4 = model.quadratic_covariance(T, T)
        n = H.shape[0]
        if isinstance(model, EmpiricalNoise) :
            w_se, m4_se = model.bank_standard_errors(T)
            M3_se = np.abs(H) @ w_se
        else :
            M3_se, m4_se = np.zeros(n), 0.0
        return MomentFunctionals(M3=M3, m4=max(float(m4), 0.0), M3_se=M3_se, m4_se=float(m4_se), method="exact")

    if method == "monte_carlo" :
        draws = int(config_key("MC_DRAWS") if draws is None else draws)
        seed = config_key("MC_SEED") if seed is None else seed
        M3, m4, M3_se, m4_se = _monte_carlo(model, H, T, draws, seed)
        ToolboxLogger.debug("Monte Carlo moments over {} draws: m4={:.6g} (se {:.2g})".format(draws, m4, m4_se))
        return MomentFunctionals(M3=M3, m4=m4, M3_se=M3_se, m4_se=m4_se, method="monte_carlo")

    raise ValueError("unknown moment method '{}'".format(method))


def m3_functional(model, Q_tilde, H, method="auto", draws=None, seed=None) :
    if isinstance(model, StudentTNoise) and method == "auto" :
        model._require(3)
        return np.zeros(np.atleast_2d(H).shape[0])
    return moment_functionals(model, Q_tilde, H, method=method, draws=draws, seed=seed).M3


def m4_functional(model, Q_tilde, H, method="auto", draws=None, seed=None) :
    return moment_functionals(model, Q_tilde, H, method=method, draws=draws, seed=seed).m4


def noise_from_dict(doc, base_dir=None) :
    """Build a model from the noise JSON fragment {"type", "cov", "nu", "samples_path"}."""
    kind = str(doc.get("type", "gaussian")).lower()
    if kind == "gaussian" :
        return GaussianNoise(doc["cov"])
    if kind in ("student_t", "studentt", "t") :
        return StudentTNoise(doc["nu"], doc["cov"])
    if kind == "empirical" :
        if "samples" in doc :
            return EmpiricalNoise(doc["samples"])
        path = doc["samples_path"]
        if base_dir is not None and not os.path.isabs(path) :
            path = os.path.join(base_dir, path)
        return EmpiricalNoise.from_csv(path)
    raise ValueError("unknown noise type '{}'".format(doc.get("type")))


def replication_rng(seed, rep_index) :
    """Stream of replication ``rep_index``: SeedSequence([seed, rep_index])."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep_index)]))


def draw_blocks(model, generators, count, executor=None) :
    """One block of ``count`` draws per generator, stacked to (reps, count, d).

    Each generator is consumed sequentially, so the result does not depend on
    the executor or on how replications are grouped.
    """
    if executor is None :
        blocks = [model.sample(rng, count) for rng in generators]
    else :
        blocks = list(executor.map(lambda rng : model.sample(rng, count), generators))
    return np.stack(blocks, axis=0)
