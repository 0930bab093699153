# -*- coding: utf-8 -*-
from ErgodicRiskLQR.Errors import ConfigError
from ErgodicRiskLQR.ErgodicRiskTool import EXIT_OK, ErgodicRiskTool
from ErgodicRiskLQR.InstanceGenerator import InstanceSpec, random_instance
from ErgodicRiskLQR.ProblemAccess import cocp_to_problem, problem_to_dict
from ErgodicRiskLQR.Utils import ToolboxLogger


class RandomInstance(ErgodicRiskTool) :
    """Writes problem.json for a seeded random instance, usable as problem_path by the other commands."""

    command = "randgen"

    def __init__(self, configuration, experiment) :
        super().__init__(configuration, experiment)
        doc = experiment.doc.get("instance")
        if doc is None :
            raise ConfigError("randgen needs an 'instance' section")
        self.spec = InstanceSpec.from_dict(doc, seed=self.seed)

    @ToolboxLogger.log_method
    def execute(self) :
        prob = random_instance(self.spec)
        ToolboxLogger.info("Instance:      n={}, m={}, d={}, beta_bar={:.6g}".format(
            self.spec.n, self.spec.m, self.spec.d, prob.beta_bar))
        self.write_json("problem.json", {"schema" : self.CONFIG_SCHEMA, "instance" : self.spec.to_dict(),
                                         "problem" : problem_to_dict(cocp_to_problem(prob))})
        self.write_metadata("ok")
        return EXIT_OK
