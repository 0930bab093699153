# -*- coding: utf-8 -*-
from ErgodicRiskLQR.CommandTool import CommandTool, Parameter
from ErgodicRiskLQR.ToolsLib import ErgodicRiskTools

class RandomInstanceTool(CommandTool):

    requiresConfig = False

    def __init__(self):
        super().__init__()
        self.label = "Generate Random Instance"
        self.description = "Write a seeded random synthesis problem to problem.json"
        self.alias = "randgen"

    def commandParameters(self):
        return [
            Parameter(("--n",), "n", "state dimension", "instance", "n", {"type" : int}),
            Parameter(("--m",), "m", "input dimension", "instance", "m", {"type" : int}),
            Parameter(("--d",), "d", "noise dimension, defaults to n", "instance", "d", {"type" : int}),
            Parameter(("--fraction",), "fraction", "risk budget as a fraction of the LQR risk", "instance",
                      "beta_fraction", {"type" : float}),
        ]

    def run(self, experiment):
        return ErgodicRiskTools.RandomInstance(experiment)
