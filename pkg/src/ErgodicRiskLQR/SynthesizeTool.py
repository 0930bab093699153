# -*- coding: utf-8 -*-
from ErgodicRiskLQR.CommandTool import CommandTool, Parameter
from ErgodicRiskLQR.ToolsLib import ErgodicRiskTools

class SynthesizeTool(CommandTool):
    def __init__(self):
        """Risk-constrained gain by primal-dual iteration."""
        super().__init__()
        self.label = "Synthesize Risk-Constrained Policy"
        self.description = "Solve the ergodic-risk constrained LQR problem and write solution.json and history.csv"
        self.alias = "synthesize"

    def commandParameters(self):
        return [
            Parameter(("--t-max",), "t_max", "outer iteration cap", "solver", "t_max", {"type" : int}),
            Parameter(("--epsilon",), "epsilon", "inner gradient tolerance", "solver", "epsilon", {"type" : float}),
            Parameter(("--inner",), "inner", "inner solver", "solver", "inner", {"choices" : ("hewer", "gradient")}),
        ]

    def run(self, experiment):
        return ErgodicRiskTools.Synthesize(experiment)
