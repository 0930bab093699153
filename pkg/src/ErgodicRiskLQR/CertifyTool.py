# -*- coding: utf-8 -*-
from ErgodicRiskLQR.CommandTool import CommandTool, Parameter
from ErgodicRiskLQR.ToolsLib import ErgodicRiskTools

class CertifyTool(CommandTool):
    def __init__(self):
        super().__init__()
        self.label = "Certify Ergodicity"
        self.description = "Build a Foster-Lyapunov drift certificate and verify it on sampled states"
        self.alias = "certify"

    def commandParameters(self):
        return [
            Parameter(("--order",), "order", "Lyapunov function order", "certify", "order",
                      {"type" : int, "choices" : (2, 4)}),
            Parameter(("--negative-control",), "negative_control", "corrupt the contraction rate on purpose",
                      "certify", "negative_control", {"action" : "store_const", "const" : True}),
        ]

    def run(self, experiment):
        return ErgodicRiskTools.Certify(experiment)
