# -*- coding: utf-8 -*-
import numpy as np

from ErgodicRiskLQR.Errors import DriftViolated
from ErgodicRiskLQR.Ergodicity import drift_certificate, verify_drift
from ErgodicRiskLQR.ErgodicRiskTool import EXIT_OK, ErgodicRiskTool
from ErgodicRiskLQR.LtiSystem import Policy
from ErgodicRiskLQR.Utils import ToolboxLogger


class Certify(ErgodicRiskTool) :

    command = "certify"

    def __init__(self, configuration, experiment) :
        super().__init__(configuration, experiment)
        certify = self.section("certify")
        self.q_drift_scale = certify.get("q_drift_scale", configuration.getConfigKey("Q_DRIFT_SCALE"))
        self.order = int(certify.get("order", 4))
        self.n_states = int(certify.get("n_states", 1000))
        self.n_noise = int(certify.get("n_noise", 20000))
        self.draws = int(certify.get("draws", self.MC_DRAWS))
        self.negative_control = bool(certify.get("negative_control", False))

        ToolboxLogger.info("Drift Order:   {}".format(self.order))
        if self.negative_control :
            ToolboxLogger.info("Negative control: contraction rate replaced by the corrupted value")

    def target_policy(self) :
        pol = self.policy()
        if pol is None :
            pol = Policy.linear(self.problem.lqr().K)
        pol.check(self.problem.system)
        return pol

    @ToolboxLogger.log_method
    def execute(self) :
        sys = self.problem.system
        pol = self.target_policy()
        cert = drift_certificate(sys, pol, Q_drift=self.q_drift_scale * np.eye(sys.n), order=self.order,
                                 draws=self.draws, seed=self.seed)
        if self.negative_control :
            cert = cert.corrupted()
        self.write_json("certificate.json", {"schema" : self.CONFIG_SCHEMA, "K" : pol.K.tolist(),
                                             "negative_control" : self.negative_control, **cert.to_dict()})
        try :
            report = verify_drift(cert, sys, pol, n_states=self.n_states, n_noise=self.n_noise, seed=self.seed)
        except DriftViolated as e :
            self.write_json("drift_report.json", e.report.to_dict())
            self.write_metadata("drift_violated")
            raise
        self.write_json("drift_report.json", report.to_dict())
        self.write_metadata("ok")
        return EXIT_OK
