# -*- coding: utf-8 -*-
import numpy as np

from ErgodicRiskLQR.ErgodicRisk import EstimatorConfig, gamma_C_sq_estimate, gamma_N_sq
from ErgodicRiskLQR.ErgodicRiskTool import EXIT_OK, ErgodicRiskTool
from ErgodicRiskLQR.LtiSystem import Policy, average_cost, closed_loop
from ErgodicRiskLQR.Simulator import RolloutConfig, clt_check, ensemble_variance_curve, lln_check
from ErgodicRiskLQR.Utils import ToolboxLogger
from ErgodicRiskLQR.ProblemAccess import read_solution

CURVE_HEADER = ("policy", "t", "mean_S2_over_t", "sd")
ROLLOUT_HEADER = ("policy", "rep", "S_T", "N_T", "J_T", "peak_norm")


class Simulate(ErgodicRiskTool) :

    command = "simulate"

    def __init__(self, configuration, experiment) :
        super().__init__(configuration, experiment)
        rollout = dict(self.section("rollout"))
        rollout.setdefault("seed", self.seed)
        self.rollout_doc = rollout
        checks = self.section("checks")
        self.lln_horizon = int(checks.get("lln_horizon", 100000))
        self.clt_reps = int(checks.get("clt_reps", 200))
        self.clt_horizon = int(checks.get("clt_horizon", 10000))
        self.check_tol = checks.get("tol", self.CHECK_TOL)
        self.estimator = EstimatorConfig.from_dict(self.section("estimator"))
        if self.estimator.seed is None :
            self.estimator.seed = self.seed
        self.summary = {}

    def rollout_config(self) :
        cfg = RolloutConfig.from_dict(self.rollout_doc, seed=self.seed)
        cfg.cost = (self.problem.Q, self.problem.R)
        return cfg

    def policies(self) :
        """(label, policy) pairs: an explicit policy, or K_LQR with K* from a prior solution."""
        explicit = self.experiment.doc.get("policy")
        if explicit is not None :
            return [("policy", self.policy())]
        labelled = [("K_LQR", Policy.linear(self.problem.lqr().K))]
        path = self.experiment.path("solution_path")
        if path is not None :
            labelled.append(("K_star", read_solution(path)[0]))
        return labelled

    @ToolboxLogger.log_method
    def evaluate(self, label, pol, cfg) :
        problem = self.problem
        sys, rf = problem.system, problem.risk
        pol.check(sys)
        cl = closed_loop(sys, pol)
        ToolboxLogger.info("Policy {}: spectral radius {:.6g}".format(label, cl.spectral_radius))

        curve = ensemble_variance_curve(sys, pol, rf, cfg)
        estimate = gamma_C_sq_estimate(sys, pol, rf, self.estimator)
        lln = lln_check(sys, pol, RolloutConfig(horizon=self.lln_horizon, seed=cfg.seed), rf=rf, tol=self.check_tol)
        clt = clt_check(sys, pol, rf, RolloutConfig(horizon=self.clt_horizon, reps=self.clt_reps, seed=cfg.seed),
                        gamma_C_sq=estimate.value, tol=self.CLT_TOL)
        batch = curve.batch
        summary = {"K" : pol.K.tolist(), "ell" : pol.ell.tolist(), "spectral_radius" : cl.spectral_radius,
                   "J" : average_cost(sys, problem.Q, problem.R, pol),
                   "J_T_over_T" : float(np.mean(batch.J_T) / batch.steps),
                   "gamma_N_sq" : gamma_N_sq(sys, pol, rf), "gamma_C_sq" : estimate.to_dict(),
                   "terminal_S2_over_t" : curve.terminal, "reps" : curve.reps, "horizon" : batch.steps,
                   "peak_post_gust_norm" : float(np.max(batch.peak_norm)),
                   "lln" : lln.to_dict(), "clt" : clt.to_dict()}
        rollouts = [[label, int(r), float(s), float(n), float(j), float(p)]
                    for r, s, n, j, p in zip(batch.reps, batch.S_T, batch.N_T, batch.J_T, batch.peak_norm)]
        return curve.rows(label), rollouts, summary

    def write_results(self, curves, rollouts) :
        self.write_csv("curves.csv", CURVE_HEADER, curves)
        self.write_csv("rollouts.csv", ROLLOUT_HEADER, rollouts)
        self.write_json("summary.json", {"schema" : self.CONFIG_SCHEMA, "seed" : self.seed,
                                         "rollout" : self.rollout_doc, "policies" : self.summary})

    def run_policies(self) :
        cfg = self.rollout_config()
        curves, rollouts = [], []
        for label, pol in self.policies() :
            c, r, s = self.evaluate(label, pol, cfg)
            curves += c
            rollouts += r
            self.summary[label] = s
        return curves, rollouts

    @ToolboxLogger.log_method
    def execute(self) :
        curves, rollouts = self.run_policies()
        self.write_results(curves, rollouts)
        self.write_metadata("ok")
        return EXIT_OK
