# -*- coding: utf-8 -*-
from ErgodicRiskLQR.ErgodicRiskTool import EXIT_NOT_CONVERGED, EXIT_OK
from ErgodicRiskLQR.LtiSystem import Policy
from ErgodicRiskLQR.ProblemAccess import read_solution
from ErgodicRiskLQR.Simulate import Simulate
from ErgodicRiskLQR.Synthesize import Synthesize
from ErgodicRiskLQR.Utils import ToolboxLogger


class Compare(Simulate) :
    """K_LQR against K* on common random numbers, gusts included when configured."""

    command = "compare"

    def __init__(self, configuration, experiment) :
        super().__init__(configuration, experiment)
        self.converged = True

    def policies(self) :
        lqr = Policy.linear(self.problem.lqr().K)
        path = self.experiment.path("solution_path")
        if path is not None :
            return [("K_LQR", lqr), ("K_star", read_solution(path)[0])]
        synth = Synthesize(self.configuration, self.experiment)
        synth.problem = self.problem
        prob = self.problem.cocp()
        synth.report = synth.solve(prob)
        synth.write_report(prob, synth.report)
        self.artifacts += synth.artifacts
        self.converged = synth.report.converged
        return [("K_LQR", lqr), ("K_star", synth.solution_policy())]

    @staticmethod
    def contrast(base, other) :
        def ratio(a, b) :
            return a / b if b else None
        return {"J_ratio" : ratio(other["J"], base["J"]),
                "gamma_N_ratio" : ratio(other["gamma_N_sq"], base["gamma_N_sq"]),
                "terminal_ratio" : ratio(other["terminal_S2_over_t"], base["terminal_S2_over_t"]),
                "peak_ratio" : ratio(other["peak_post_gust_norm"], base["peak_post_gust_norm"])}

    @ToolboxLogger.log_method
    def execute(self) :
        curves, rollouts = self.run_policies()
        comparison = self.contrast(self.summary["K_LQR"], self.summary["K_star"])
        self.summary["comparison"] = comparison
        ToolboxLogger.info("K* vs K_LQR: {}".format(comparison))
        self.write_results(curves, rollouts)
        self.write_metadata("ok" if self.converged else "max_iterations")
        return EXIT_OK if self.converged else EXIT_NOT_CONVERGED
