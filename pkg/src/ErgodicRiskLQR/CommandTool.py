# -*- coding: utf-8 -*-
import os

from dataclasses import dataclass, field
from typing import Optional

from ErgodicRiskLQR.Errors import ConfigError
from ErgodicRiskLQR.ProblemAccess import experiment_from_dict, read_experiment
from ErgodicRiskLQR.Utils import STREAM_HANDLER, ToolboxLogger, config_key


@dataclass
class Parameter :
    """One command-line flag; ``section``/``key`` name the config entry it overrides."""
    flags: tuple
    dest: str
    help: str
    section: Optional[str] = None
    key: Optional[str] = None
    options: dict = field(default_factory=dict)

    def add_to(self, parser) :
        parser.add_argument(*self.flags, dest=self.dest, help=self.help, **self.options)


class CommandTool(object) :
    """Front end of one command: declares its flags, folds them into the experiment and runs the backend."""

    requiresConfig = True

    def __init__(self) :
        self.label = None
        self.description = None
        self.alias = None
        self.canRunInBackground = True

        if not ToolboxLogger._logger.handlers :
            ToolboxLogger.initLogger(handler_type = STREAM_HANDLER)
            ToolboxLogger.setInfoLevel()

    def getParameterInfo(self) :
        params = [
            Parameter(("--config",), "config", "experiment JSON", options={"required" : self.requiresConfig}),
            Parameter(("--seed",), "seed", "root seed, overrides the config", options={"type" : int}),
            Parameter(("--out",), "out", "output folder, overrides output_dir"),
        ]
        return params + self.commandParameters()

    def commandParameters(self) :
        return []

    def isLicensed(self) :
        return True

    def updateParameters(self, parameters) :
        """Collects the command flags into per-section overrides."""
        overrides = {}
        for p in self.commandParameters() :
            if p.section is not None :
                overrides.setdefault(p.section, {})[p.key] = parameters.get(p.dest)
        parameters["overrides"] = overrides
        return parameters

    def updateMessages(self, parameters) :
        messages = []
        config = parameters.get("config")
        if config is None and self.requiresConfig :
            messages.append("--config is required")
        elif config is not None and not os.path.isfile(config) :
            messages.append("config file not found: {}".format(config))
        return messages

    def experiment(self, parameters) :
        config = parameters.get("config")
        if config is None :
            return experiment_from_dict({"schema" : config_key("CONFIG_SCHEMA")}, os.getcwd(),
                                        parameters.get("seed"), parameters.get("out"), parameters.get("overrides"))
        return read_experiment(config, parameters.get("seed"), parameters.get("out"), parameters.get("overrides"))

    def run(self, experiment) :
        raise NotImplementedError

    def execute(self, parameters, messages) :
        errors = self.updateMessages(parameters)
        if errors :
            messages.extend(errors)
            raise ConfigError("; ".join(errors))
        return self.run(self.experiment(parameters))
