# -*- coding: utf-8 -*-
from ErgodicRiskLQR.CommandTool import CommandTool, Parameter
from ErgodicRiskLQR.ToolsLib import ErgodicRiskTools

class SimulateTool(CommandTool):
    def __init__(self):
        super().__init__()
        self.label = "Simulate Closed Loop"
        self.description = "Monte Carlo rollouts with variance curves, law of large numbers and CLT checks"
        self.alias = "simulate"

    def commandParameters(self):
        return [
            Parameter(("--reps",), "reps", "number of independent rollouts", "rollout", "reps", {"type" : int}),
            Parameter(("--horizon",), "horizon", "rollout length", "rollout", "horizon", {"type" : int}),
        ]

    def run(self, experiment):
        return ErgodicRiskTools.Simulate(experiment)
