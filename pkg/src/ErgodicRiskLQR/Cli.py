# -*- coding: utf-8 -*-
"""
Command line entry point ``erlqr``. Exit codes: 0 success, 1 solver did not
converge, 2 budget suspected infeasible, 3 configuration or precondition error,
4 drift certificate violated.
"""
import argparse
import os
import sys

from ErgodicRiskLQR.CertifyTool import CertifyTool
from ErgodicRiskLQR.CompareTool import CompareTool
from ErgodicRiskLQR.Errors import (ConfigError, DriftViolated, ErgodicRiskError, InfeasibleSuspected,
                                   LostStability, MaxIterations, NoConvergence, NumericalOverflow)
from ErgodicRiskLQR.ErgodicRiskTool import EXIT_CONFIG, EXIT_DRIFT, EXIT_INFEASIBLE, EXIT_NOT_CONVERGED
from ErgodicRiskLQR.RandomInstanceTool import RandomInstanceTool
from ErgodicRiskLQR.SimulateTool import SimulateTool
from ErgodicRiskLQR.SynthesizeTool import SynthesizeTool
from ErgodicRiskLQR.Utils import FILE_HANDLER, STREAM_HANDLER, ToolboxLogger

TOOLS = (SynthesizeTool, SimulateTool, CertifyTool, RandomInstanceTool, CompareTool)
SOLVER_FAILURES = (NoConvergence, LostStability, MaxIterations, NumericalOverflow)


class _Parser(argparse.ArgumentParser) :
    """Usage errors are configuration errors, not argparse's own exit status."""

    def error(self, message) :
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() :
    parser = _Parser(prog="erlqr", description="Ergodic-risk constrained LQR synthesis and simulation")
    parser.add_argument("--debug", action="store_true", help="debug logging")
    parser.add_argument("--log-file", dest="log_file", help="also log to a rotating file with this prefix")
    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True
    for cls in TOOLS :
        tool = cls()
        sub = commands.add_parser(tool.alias, help=tool.label, description=tool.description)
        for p in tool.getParameterInfo() :
            p.add_to(sub)
        sub.set_defaults(tool=tool)
    return parser


def _init_logging(args) :
    handler_type = STREAM_HANDLER
    if args.log_file :
        handler_type |= FILE_HANDLER
        path, prefix = os.path.split(args.log_file)
        ToolboxLogger.initLogger(log_path=path, log_file=prefix, handler_type=handler_type)
    else :
        ToolboxLogger.initLogger(handler_type=handler_type)
    if args.debug :
        ToolboxLogger.setDebugLevel()
    else :
        ToolboxLogger.setInfoLevel()


def main(argv=None) :
    try :
        args = build_parser().parse_args(argv)
    except ConfigError as e :
        ToolboxLogger.error(str(e))
        return EXIT_CONFIG
    _init_logging(args)

    tool = args.tool
    if not tool.isLicensed() :
        ToolboxLogger.error("command '{}' is not available".format(tool.alias))
        return EXIT_CONFIG
    parameters = tool.updateParameters(vars(args))
    messages = []
    try :
        return tool.execute(parameters, messages)
    except InfeasibleSuspected as e :
        ToolboxLogger.error("Infeasible: {}".format(e))
        return EXIT_INFEASIBLE
    except DriftViolated as e :
        ToolboxLogger.error("Drift violated: {}".format(e))
        return EXIT_DRIFT
    except SOLVER_FAILURES as e :
        ToolboxLogger.error("Solver failed: {}".format(e))
        return EXIT_NOT_CONVERGED
    except (ErgodicRiskError, ValueError) as e :
        for m in messages :
            ToolboxLogger.error(m)
        ToolboxLogger.error(str(e))
        return EXIT_CONFIG


if __name__ == "__main__" :
    sys.exit(main())
