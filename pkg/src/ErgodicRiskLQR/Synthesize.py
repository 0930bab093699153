# -*- coding: utf-8 -*-
from ErgodicRiskLQR.Errors import InfeasibleSuspected
from ErgodicRiskLQR.ErgodicRiskTool import EXIT_NOT_CONVERGED, EXIT_OK, ErgodicRiskTool
from ErgodicRiskLQR.LtiSystem import Policy
from ErgodicRiskLQR.PrimalDual import HistoryRow, gamma_N_sq_of_gain, primal_dual_solve
from ErgodicRiskLQR.ProblemAccess import problem_to_dict, write_solution
from ErgodicRiskLQR.Utils import ToolboxLogger


class Synthesize(ErgodicRiskTool) :

    command = "synthesize"

    def __init__(self, configuration, experiment) :
        super().__init__(configuration, experiment)
        solver = self.section("solver")
        self.epsilon = solver.get("epsilon", self.EPSILON)
        self.epsilon_outer = solver.get("epsilon_outer")
        self.t_max = solver.get("t_max")
        self.cs_tol = solver.get("cs_tol")
        self.feas_tol = solver.get("feas_tol")
        self.lambda_0 = solver.get("lambda_0")
        self.inner = solver.get("inner", "hewer")
        self.report = None

    @ToolboxLogger.log_method
    def solve(self, prob) :
        K_0 = None
        initial = self.policy()
        if initial is not None :
            initial.check(prob.system)
            K_0 = initial.K
        return primal_dual_solve(prob, K_0=K_0, eps=self.epsilon, T_max=self.t_max, eps_outer=self.epsilon_outer,
                                 lambda_0=self.lambda_0, cs_tol=self.cs_tol, feas_tol=self.feas_tol, inner=self.inner)

    def write_report(self, prob, report) :
        lqr = self.problem.lqr()
        extras = {"K_LQR" : lqr.K.tolist(), "J_LQR" : lqr.J,
                  "gammaN_LQR" : gamma_N_sq_of_gain(prob, lqr.K), "seed" : self.seed}
        write_solution(self.output_path("solution.json"), report, problem_to_dict(self.problem, prob.beta_bar), extras)
        self.artifacts.append("solution.json")
        self.write_csv("history.csv", HistoryRow.HEADER, [row.as_row() for row in report.history])

    @ToolboxLogger.log_method
    def execute(self) :
        prob = self.problem.cocp()
        ToolboxLogger.info("Risk Budget:   {:.6g}".format(prob.beta_bar))
        try :
            self.report = self.solve(prob)
        except InfeasibleSuspected as e :
            if e.report is not None :
                self.write_report(prob, e.report)
            self.write_metadata("infeasible")
            raise
        self.write_report(prob, self.report)
        status = EXIT_OK if self.report.converged else EXIT_NOT_CONVERGED
        self.write_metadata(self.report.status)
        ToolboxLogger.info("J={:.6g}, gamma_N^2={:.6g}, lambda={:.6g}".format(
            self.report.J, self.report.gammaN, self.report.lambda_last))
        return status

    def solution_policy(self) :
        return Policy.linear(self.report.K)
