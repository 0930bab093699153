# -*- coding: utf-8 -*-
from ErgodicRiskLQR.SimulateTool import SimulateTool
from ErgodicRiskLQR.ToolsLib import ErgodicRiskTools

class CompareTool(SimulateTool):
    def __init__(self):
        super().__init__()
        self.label = "Compare LQR and Risk-Constrained Policies"
        self.description = "Simulate K_LQR and K* on common random numbers and report their ratios"
        self.alias = "compare"

    def run(self, experiment):
        return ErgodicRiskTools.Compare(experiment)
