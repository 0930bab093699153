# -*- coding: utf-8 -*-
"""
Experiment documents: validation of the "ergodic-risk/v1" schema and the JSON
forms of problems, policies and solutions.
"""
import os

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ErgodicRiskLQR.Errors import ConfigError, DimensionMismatch
from ErgodicRiskLQR.ErgodicRisk import RiskFunctional, gamma_N_sq
from ErgodicRiskLQR.InstanceGenerator import InstanceSpec, random_instance
from ErgodicRiskLQR.LtiSystem import InitialDistribution, LtiSystem, Policy
from ErgodicRiskLQR.NoiseModels import noise_from_dict
from ErgodicRiskLQR.PrimalDual import CocpProblem, lqr_solve
from ErgodicRiskLQR.Utils import JsonFile, ToolboxLogger, config_key

SECTIONS = ("solver", "rollout", "estimator", "checks", "certify")
TOP_LEVEL_KEYS = {"schema", "seed", "output_dir", "problem", "problem_path", "instance", "policy",
                  "solution_path"} | set(SECTIONS)
SECTION_KEYS = {
    "solver" : {"epsilon", "epsilon_outer", "t_max", "cs_tol", "feas_tol", "lambda_0", "inner"},
    "rollout" : {"horizon", "reps", "record_stride", "gust", "seed", "snapshot_times"},
    "estimator" : {"method", "k_max", "ma_trunc", "reps", "horizon", "seed", "nodes"},
    "checks" : {"lln_horizon", "clt_reps", "clt_horizon", "tol"},
    "certify" : {"q_drift_scale", "order", "n_states", "n_noise", "draws", "negative_control"},
}


@dataclass
class ExperimentProblem :
    """Plant, cost and risk functional of an experiment; the budget may be given as a fraction."""
    system: LtiSystem
    Q: np.ndarray
    R: np.ndarray
    risk: RiskFunctional
    beta_bar: Optional[float] = None
    beta_fraction: Optional[float] = None

    def lqr(self) :
        return lqr_solve(self.system, self.Q, self.R)

    def resolved_beta(self) :
        if self.beta_bar is not None :
            return float(self.beta_bar)
        if self.beta_fraction is None :
            raise ConfigError("the problem needs beta_bar or beta_fraction")
        gamma_lqr = gamma_N_sq(self.system, Policy.linear(self.lqr().K), self.risk)
        return float(self.beta_fraction) * gamma_lqr

    def cocp(self) :
        try :
            return CocpProblem(self.system, self.Q, self.R, self.risk, self.resolved_beta())
        except (ValueError, np.linalg.LinAlgError) as e :
            raise ConfigError("invalid synthesis problem: {}".format(e))


@dataclass
class ExperimentConfig :
    doc: dict
    base_dir: str
    seed: int
    output_dir: str
    sections: dict = field(default_factory=dict)

    def section(self, name) :
        return self.sections.get(name, {})

    def path(self, key) :
        value = self.doc.get(key)
        if value is None :
            return None
        return value if os.path.isabs(value) else os.path.join(self.base_dir, value)


def _mat(doc, key, required=True) :
    if key not in doc :
        if required :
            raise ConfigError("problem is missing '{}'".format(key))
        return None
    return np.atleast_2d(np.asarray(doc[key], dtype=float))


def problem_from_dict(doc, base_dir=None) :
    """Problem document: A, B, H, noise, optional init, Q, R, Qc, optional Rc, beta_bar or beta_fraction."""
    if not isinstance(doc, dict) :
        raise ConfigError("problem must be a JSON object")
    try :
        noise = noise_from_dict(doc["noise"], base_dir)
        init = None
        if "init" in doc :
            init = InitialDistribution(mean=np.asarray(doc["init"]["mean"], dtype=float),
                                       cov=np.atleast_2d(np.asarray(doc["init"]["cov"], dtype=float)))
        system = LtiSystem(A=_mat(doc, "A"), B=_mat(doc, "B"), H=_mat(doc, "H"), noise=noise, init=init)
        n, m = system.n, system.m
        Q = _mat(doc, "Q", False)
        R = _mat(doc, "R", False)
        Qc = _mat(doc, "Qc", False)
        risk = RiskFunctional(Qc=np.eye(n) if Qc is None else Qc, Rc=_mat(doc, "Rc", False))
        problem = ExperimentProblem(system=system, Q=np.eye(n) if Q is None else Q, R=np.eye(m) if R is None else R,
                                    risk=risk, beta_bar=doc.get("beta_bar"), beta_fraction=doc.get("beta_fraction"))
    except KeyError as e :
        raise ConfigError("problem is missing {}".format(e))
    except (TypeError, ValueError, OSError) as e :
        raise ConfigError("invalid problem: {}".format(e))
    if problem.Q.shape != (n, n) or problem.R.shape != (m, m) or risk.Qc.shape != (n, n) :
        raise DimensionMismatch("Q, R and Qc must be {0}x{0}, {1}x{1} and {0}x{0}".format(n, m))
    if risk.Rc is not None and risk.Rc.shape != (m, m) :
        raise DimensionMismatch("Rc must be {0}x{0}".format(m))
    return problem


def problem_to_dict(problem, beta_bar=None) :
    sys = problem.system
    out = {"A" : sys.A.tolist(), "B" : sys.B.tolist(), "H" : sys.H.tolist(), "noise" : sys.noise.to_dict(),
           "Q" : problem.Q.tolist(), "R" : problem.R.tolist(), "Qc" : problem.risk.Qc.tolist()}
    if not sys.init.is_point_mass or np.any(sys.init.mean) :
        out["init"] = {"mean" : sys.init.mean.tolist(), "cov" : sys.init.cov.tolist()}
    if problem.risk.Rc is not None :
        out["Rc"] = problem.risk.Rc.tolist()
    beta = problem.beta_bar if beta_bar is None else beta_bar
    if beta is not None :
        out["beta_bar"] = float(beta)
    elif problem.beta_fraction is not None :
        out["beta_fraction"] = float(problem.beta_fraction)
    return out


def cocp_to_problem(prob) :
    return ExperimentProblem(system=prob.system, Q=prob.Q, R=prob.R, risk=prob.risk, beta_bar=prob.beta_bar)


def policy_from_dict(doc) :
    try :
        return Policy(K=doc["K"], ell=doc.get("ell"))
    except KeyError :
        raise ConfigError("policy needs a gain 'K'")
    except (TypeError, ValueError) as e :
        raise ConfigError("invalid policy: {}".format(e))


def read_solution(path) :
    """Policy and document of a solution.json written by the synthesize command."""
    try :
        doc = JsonFile.readFile(path)
    except (OSError, ValueError) as e :
        raise ConfigError("cannot read solution '{}': {}".format(path, e))
    return policy_from_dict(doc), doc


def write_solution(path, report, problem_doc, extras=None) :
    doc = {"schema" : config_key("CONFIG_SCHEMA"), **report.to_dict(), "problem" : problem_doc}
    doc.update(extras or {})
    JsonFile.writeFile(path, doc)
    return doc


def _check_section(name, value) :
    if not isinstance(value, dict) :
        raise ConfigError("'{}' must be a JSON object".format(name))
    unknown = set(value) - SECTION_KEYS[name]
    if unknown :
        raise ConfigError("unknown keys in '{}': {}".format(name, ", ".join(sorted(unknown))))


@ToolboxLogger.log_method
def read_experiment(path, seed=None, output_dir=None, overrides=None) :
    """Load and validate an experiment config; flags given here take precedence over the document."""
    try :
        doc = JsonFile.readFile(path)
    except OSError as e :
        raise ConfigError("cannot read config '{}': {}".format(path, e))
    except ValueError as e :
        raise ConfigError("config '{}' is not valid JSON: {}".format(path, e))
    return experiment_from_dict(doc, os.path.dirname(os.path.abspath(path)), seed, output_dir, overrides)


def experiment_from_dict(doc, base_dir, seed=None, output_dir=None, overrides=None) :
    if not isinstance(doc, dict) :
        raise ConfigError("config must be a JSON object")
    schema = config_key("CONFIG_SCHEMA")
    if doc.get("schema") != schema :
        raise ConfigError("config schema must be '{}', got {!r}".format(schema, doc.get("schema")))
    unknown = set(doc) - TOP_LEVEL_KEYS
    if unknown :
        raise ConfigError("unknown config keys: {}".format(", ".join(sorted(unknown))))
    if sum(k in doc for k in ("problem", "problem_path", "instance")) > 1 :
        raise ConfigError("give only one of 'problem', 'problem_path' and 'instance'")
    if "policy" in doc and "solution_path" in doc :
        raise ConfigError("give only one of 'policy' and 'solution_path'")
    instance = {k : v for k, v in (overrides or {}).get("instance", {}).items() if v is not None}
    if instance :
        if "problem" in doc or "problem_path" in doc :
            raise ConfigError("instance flags cannot be combined with 'problem' or 'problem_path'")
        doc = dict(doc, instance={**doc.get("instance", {}), **instance})

    sections = {}
    for name in SECTIONS :
        value = dict(doc.get(name, {}))
        for key, v in (overrides or {}).get(name, {}).items() :
            if v is not None :
                value[key] = v
        _check_section(name, value)
        sections[name] = value

    cfg = ExperimentConfig(doc=dict(doc), base_dir=base_dir,
                           seed=int(seed if seed is not None else doc.get("seed", config_key("MC_SEED"))),
                           output_dir=output_dir or doc.get("output_dir") or "out", sections=sections)
    if not os.path.isabs(cfg.output_dir) and output_dir is None :
        cfg.output_dir = os.path.join(base_dir, cfg.output_dir)
    for key in ("problem_path", "solution_path") :
        p = cfg.path(key)
        if p is not None and not os.path.isfile(p) :
            raise ConfigError("'{}' does not exist: {}".format(key, p))
    try :
        os.makedirs(cfg.output_dir, exist_ok=True)
    except OSError as e :
        raise ConfigError("output_dir '{}' is not writable: {}".format(cfg.output_dir, e))
    if not os.access(cfg.output_dir, os.W_OK) :
        raise ConfigError("output_dir '{}' is not writable".format(cfg.output_dir))
    return cfg


def load_problem(cfg) :
    """The experiment's problem: inline, from problem_path, or generated from 'instance'."""
    if "problem" in cfg.doc :
        return problem_from_dict(cfg.doc["problem"], cfg.base_dir)
    path = cfg.path("problem_path")
    if path is not None :
        try :
            doc = JsonFile.readFile(path)
        except ValueError as e :
            raise ConfigError("problem '{}' is not valid JSON: {}".format(path, e))
        return problem_from_dict(doc.get("problem", doc), os.path.dirname(os.path.abspath(path)))
    if "instance" in cfg.doc :
        spec = InstanceSpec.from_dict(cfg.doc["instance"], seed=cfg.seed)
        return cocp_to_problem(random_instance(spec))
    raise ConfigError("config needs one of 'problem', 'problem_path' or 'instance'")


def load_policy(cfg) :
    """Explicit policy, the gain of solution_path, or None."""
    if "policy" in cfg.doc :
        return policy_from_dict(cfg.doc["policy"])
    path = cfg.path("solution_path")
    if path is not None :
        return read_solution(path)[0]
    return None

