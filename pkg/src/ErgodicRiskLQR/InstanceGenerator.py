# -*- coding: utf-8 -*-
"""
Seeded random synthesis problems: standard-normal A, B, H with A rescaled to a
spectral radius drawn from SPECTRAL_RADIUS_RANGE, identity weights and a budget
given as a fraction of the LQR risk.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ErgodicRiskLQR.Errors import ConfigError, GenerationFailed, NoConvergence
from ErgodicRiskLQR.ErgodicRisk import RiskFunctional
from ErgodicRiskLQR.LtiSystem import LtiSystem, Policy, assert_assumptions, is_stabilizing
from ErgodicRiskLQR.MatOps import spectral_radius
from ErgodicRiskLQR.NoiseModels import GaussianNoise, StudentTNoise
from ErgodicRiskLQR.PrimalDual import CocpProblem, gamma_N_sq_of_gain, lqr_solve
from ErgodicRiskLQR.Utils import ToolboxLogger, config_key


@dataclass
class InstanceSpec :
    n: int
    m: int
    d: Optional[int] = None
    seed: int = 0
    beta_fraction: float = 0.9
    noise: str = "gaussian"
    nu: float = 5.0
    stability_margin: Optional[float] = None

    def __post_init__(self) :
        self.d = self.n if self.d is None else int(self.d)
        if min(self.n, self.m, self.d) < 1 :
            raise ConfigError("instance dimensions must be >= 1")
        if self.d < self.n :
            raise ConfigError("H must have full row rank, so d >= n is required (n={}, d={})".format(self.n, self.d))
        if not self.beta_fraction > 0 :
            raise ConfigError("beta_fraction must be positive")
        if self.noise not in ("gaussian", "student_t") :
            raise ConfigError("instance noise must be 'gaussian' or 'student_t'")

    @classmethod
    def from_dict(cls, doc, seed=None) :
        known = {k : doc[k] for k in ("n", "m", "d", "seed", "beta_fraction", "noise", "nu", "stability_margin")
                 if k in doc}
        if "seed" not in known and seed is not None :
            known["seed"] = seed
        try :
            return cls(**known)
        except TypeError as e :
            raise ConfigError("invalid instance spec: {}".format(e))

    def to_dict(self) :
        return {"n" : self.n, "m" : self.m, "d" : self.d, "seed" : self.seed, "beta_fraction" : self.beta_fraction,
                "noise" : self.noise, "nu" : self.nu}


def _noise(spec) :
    if spec.noise == "student_t" :
        return StudentTNoise(spec.nu, np.eye(spec.d))
    return GaussianNoise(np.eye(spec.d))


@ToolboxLogger.log_method
def random_instance(spec) :
    """Deterministic in ``spec.seed``; retries until (A, B) is stabilizable and the assumptions hold."""
    rng = np.random.default_rng(spec.seed)
    lo, hi = config_key("SPECTRAL_RADIUS_RANGE")
    retries = int(config_key("GENERATION_RETRIES"))
    n, m, d = spec.n, spec.m, spec.d
    for attempt in range(1, retries + 1) :
        A = rng.standard_normal((n, n))
        A *= rng.uniform(lo, hi) / max(spectral_radius(A), 1e-12)
        B = rng.standard_normal((n, m))
        H = rng.standard_normal((n, d))
        if np.linalg.matrix_rank(H) < n :
            continue
        sys = LtiSystem(A=A, B=B, H=H, noise=_noise(spec))
        try :
            lqr = lqr_solve(sys, np.eye(n), np.eye(m))
        except NoConvergence :
            ToolboxLogger.debug("attempt {}: Riccati iteration failed".format(attempt))
            continue
        if not is_stabilizing(sys, lqr.K, spec.stability_margin) :
            continue
        if not assert_assumptions(sys, Policy.linear(lqr.K)).passed :
            continue
        prob = CocpProblem(sys, np.eye(n), np.eye(m), RiskFunctional(Qc=np.eye(n)), 0.0)
        beta = spec.beta_fraction * gamma_N_sq_of_gain(prob, lqr.K)
        ToolboxLogger.debug("instance found after {} attempts, beta_bar={:.6g}".format(attempt, beta))
        return prob.with_budget(beta)
    raise GenerationFailed("no admissible instance after {} attempts (seed {})".format(retries, spec.seed))
