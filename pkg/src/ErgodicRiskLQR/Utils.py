# -*- coding: utf-8 -*-

import csv
import functools
import json
import logging
import os
import sys
import threading

from datetime import datetime
from logging import handlers

import psutil

#### CONSTANTS ######
CONFIG_PATH = os.path.join(os.path.dirname(os.path.realpath(__file__)), "config.json")
LOG_PATH = ""
LOG_FILE = "erlqr"
LOGGER_NAME = "ErgodicRiskLQR"
THREADS_ENV = "ERLQR_THREADS"

STREAM_HANDLER = 2
FILE_HANDLER = 4

class ToolboxLogger :

  _logger = logging.getLogger(LOGGER_NAME)
  _state = threading.local()
  indentSize = 2

  @classmethod
  def _indent(cls) :
    return getattr(cls._state, "indent", "")

  @classmethod
  def _setIndent(cls, indent) :
    cls._state.indent = indent

  @classmethod
  def log_method(cls, func) :

    @functools.wraps(func)
    def inner(*args, **kwargs) :
      cls._logger.debug("{}-->{}".format(cls._indent(), func.__qualname__))
      cls._setIndent(cls._indent() + " ".ljust(cls.indentSize))
      try :
        result = func(*args, **kwargs)
      except Exception as e:
        cls._logger.debug("Exception: {}".format(e))
        raise e
      finally :
        cls._setIndent(cls._indent()[:-cls.indentSize])
        cls._logger.debug("{}<--{}".format(cls._indent(), func.__qualname__))

      return result

    return inner

  @classmethod
  def initLogger(cls, source = LOGGER_NAME, log_path = LOG_PATH, log_file = LOG_FILE, handler_type = STREAM_HANDLER) :
    loggerFactory = LoggerFactory()
    cls._logger = loggerFactory.getLogger(source, log_path, log_file, handler_type = handler_type)
    cls._setIndent("")

  @classmethod
  def setInfoLevel(cls) :
    cls._setLevel(logging.INFO)
    cls.info("Level: INFO")

  @classmethod
  def setDebugLevel(cls) :
    cls._setLevel(logging.DEBUG)
    cls.info("Level: DEBUG")

  @classmethod
  def _setLevel(cls, level) :
    cls._logger.setLevel(level)
    for h in cls._logger.handlers :
      h.setLevel(level)

  @classmethod
  def debug(cls, message) :
    cls._logger.debug("%s", "{}{}".format(cls._indent(), message))

  @classmethod
  def info(cls, message) :
    cls._logger.info("%s", "{}{}".format(cls._indent(), message))

  @classmethod
  def error(cls, message) :
    cls._logger.error("%s", "ERROR! {}{}".format(cls._indent(), message))

  @classmethod
  def warning(cls, message) :
    cls._logger.warning("%s", "WARNING! {}{}".format(cls._indent(), message))


class LoggerFactory :
  #pattern = '%(asctime)s - %(message)s'
  pattern = '%(message)s'

  def clearLogger(self, name) :
    logger = logging.getLogger(name)
    logger.handlers.clear()

  def getLogger(self, name, pathName, fileName, handler_type = STREAM_HANDLER) :
    self.logLevel = logging.INFO

    logger = logging.getLogger(name)
    logger.setLevel(self.logLevel)

    if handler_type & FILE_HANDLER == FILE_HANDLER:
      if not any(isinstance(h, handlers.RotatingFileHandler) for h in logger.handlers) :
        self.addRotatingFileHandler(logger, pathName, fileName)

    if handler_type & STREAM_HANDLER == STREAM_HANDLER:
      if not any(type(h) is logging.StreamHandler for h in logger.handlers) :
        self.addStreamHandler(logger)

    return logger

  def addRotatingFileHandler(self, logger, pathName, fileName) :
    fullFileName = os.path.join(pathName, "{}{}.log".format(fileName, datetime.now().strftime("%Y%m%d%H%M")))
    chs = handlers.RotatingFileHandler(filename = fullFileName, backupCount = 52, maxBytes = 1000000, encoding='utf-8')
    chs.setFormatter(logging.Formatter(self.pattern))
    chs.setLevel(self.logLevel)
    logger.addHandler(chs)
    logger.debug("Adding RotatingFileHandler")

  def addStreamHandler(self, logger) :
    ch = logging.StreamHandler(sys.stdout)
    ch.setFormatter(logging.Formatter(self.pattern))
    ch.setLevel(self.logLevel)
    logger.addHandler(ch)
    logger.debug("Adding StreamHandler")


class Configuration:

    _default = None

    def __init__(self, configPath = None):
        try:
            if configPath is None :
              self.path = CONFIG_PATH
            else :
              self.path = configPath

            with open(self.path, encoding='utf-8') as _file :
              self.configs = json.loads(_file.read())

        except Exception as d:
            self.WriteMessage("Configuration file isn't valid, {}".format(str(d)))
            raise d

    @classmethod
    def default(cls) :
        if cls._default is None :
            cls._default = Configuration(CONFIG_PATH)
        return cls._default

    def getConfigKey(self, key, fallback = None):
        if key in self.configs :
          return self.configs[key]
        self.WriteMessage("Key '{}' doesn't exist, using {}".format(key, fallback))
        return fallback

    def WriteMessage(self, msg) :
        ToolboxLogger.debug(msg)


def config_key(key) :
  """Package default from config.json."""
  return Configuration.default().getConfigKey(key)


class JsonFile :

  @staticmethod
  def readFile(filename):
    with open(filename, encoding='utf-8') as f:
      return json.loads(f.read())

  @staticmethod
  def writeFile(filename, records) :
    with open(filename, 'w', encoding='utf-8', newline='\n') as f:
      f.write(json.dumps(records, indent = 4))
      f.write("\n")


class CsvFile :
  """Plain CSV with a mandatory header, '.' decimals, LF line endings."""

  @staticmethod
  def formatValue(value) :
    if isinstance(value, float) :
      return "%.17g" % value
    return str(value)

  @staticmethod
  def writeFile(filename, header, rows) :
    with open(filename, 'w', encoding='utf-8', newline='') as f:
      writer = csv.writer(f, lineterminator='\n')
      writer.writerow(header)
      for row in rows :
        writer.writerow([CsvFile.formatValue(v) for v in row])

  @staticmethod
  def readFile(filename) :
    with open(filename, encoding='utf-8', newline='') as f:
      reader = csv.reader(f)
      return [row for row in reader]


class TimeUtil :

  startTime = None
  endTime = None
  timeSpan = None

  def __init__(self) :
    self.initTimer()

  def initTimer(self) :
    self.startTime  = datetime.now()

  def stopTimer(self) :
    self.endTime = datetime.now()
    self.timeSpan = self.endTime - self.startTime
    return self.timeSpan

  @staticmethod
  def nowCode() :
    return datetime.now().strftime("%Y%m%d%H%M%S")


def worker_count() :
  """Pool size: physical cores (psutil), capped by ERLQR_THREADS."""
  cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
  cap = os.environ.get(THREADS_ENV)
  if cap :
    try :
      cores = min(cores, max(1, int(cap)))
    except ValueError :
      ToolboxLogger.warning("Ignoring {}={!r}".format(THREADS_ENV, cap))
  return cores
