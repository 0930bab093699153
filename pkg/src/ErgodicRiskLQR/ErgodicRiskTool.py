# -*- coding: utf-8 -*-
import os

from ErgodicRiskLQR.Utils import Configuration, CsvFile, JsonFile, TimeUtil, ToolboxLogger
from ErgodicRiskLQR.ProblemAccess import ExperimentConfig, load_policy, load_problem

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3
EXIT_DRIFT = 4


class ErgodicRiskTool(object) :
    """Backend of one command: reads package defaults, owns the output folder and writes artifacts."""

    command = None

    def __init__(self, configuration : Configuration, experiment : ExperimentConfig) :
        self.configuration = configuration
        self.experiment = experiment
        self.folder = experiment.output_dir
        self.seed = experiment.seed

        self.CONFIG_SCHEMA = configuration.getConfigKey("CONFIG_SCHEMA")
        self.EPSILON = configuration.getConfigKey("EPSILON")
        self.CHECK_TOL = configuration.getConfigKey("CHECK_TOL")
        self.CLT_TOL = configuration.getConfigKey("CLT_TOL")
        self.MC_DRAWS = configuration.getConfigKey("MC_DRAWS")

        self.timer = TimeUtil()
        self.artifacts = []
        self._problem = None

        ToolboxLogger.info("Command:       {}".format(self.command))
        ToolboxLogger.info("Output Folder: {}".format(self.folder))
        ToolboxLogger.info("Seed:          {}".format(self.seed))

    @property
    def problem(self) :
        if self._problem is None :
            self._problem = load_problem(self.experiment)
        return self._problem

    @problem.setter
    def problem(self, value) :
        self._problem = value

    def policy(self) :
        return load_policy(self.experiment)

    def section(self, name) :
        return self.experiment.section(name)

    def output_path(self, name) :
        return os.path.join(self.folder, name)

    def write_json(self, name, records) :
        path = self.output_path(name)
        JsonFile.writeFile(path, records)
        self.artifacts.append(name)
        ToolboxLogger.info("Written:       {}".format(path))
        return path

    def write_csv(self, name, header, rows) :
        path = self.output_path(name)
        CsvFile.writeFile(path, header, rows)
        self.artifacts.append(name)
        ToolboxLogger.info("Written:       {}".format(path))
        return path

    def write_metadata(self, status) :
        """Timestamps live here only, so the data artifacts are reproducible byte for byte."""
        span = self.timer.stopTimer()
        self.write_json("metadata.json", {"command" : self.command, "schema" : self.CONFIG_SCHEMA,
                                          "seed" : self.seed, "status" : status,
                                          "started" : self.timer.startTime.isoformat(),
                                          "finished" : self.timer.endTime.isoformat(),
                                          "elapsed_seconds" : span.total_seconds(),
                                          "artifacts" : list(self.artifacts)})

    def execute(self) :
        raise NotImplementedError
