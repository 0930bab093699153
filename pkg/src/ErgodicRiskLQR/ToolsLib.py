# -*- coding: utf-8 -*-
import os
from ErgodicRiskLQR.Utils import Configuration
from ErgodicRiskLQR.Synthesize import Synthesize
from ErgodicRiskLQR.Simulate import Simulate
from ErgodicRiskLQR.Certify import Certify
from ErgodicRiskLQR.RandomInstance import RandomInstance
from ErgodicRiskLQR.Compare import Compare

class ErgodicRiskTools :

    def getConfiguration() :
        CONFIG_PATH = "config.json"
        folder_path = os.path.dirname(os.path.realpath(__file__))
        config_path = os.path.join(folder_path, CONFIG_PATH)

        return Configuration(config_path)

    @staticmethod
    def Synthesize(experiment=None) :
        if experiment != None :
            return ErgodicRiskTools.getSynthesize(experiment).execute()

    @staticmethod
    def getSynthesize(experiment=None) :
        if experiment != None :
            configuration = ErgodicRiskTools.getConfiguration()
            return Synthesize(configuration=configuration, experiment=experiment)
        else :
            return None

    @staticmethod
    def Simulate(experiment=None) :
        if experiment != None :
            return ErgodicRiskTools.getSimulate(experiment).execute()

    @staticmethod
    def getSimulate(experiment=None) :
        if experiment != None :
            configuration = ErgodicRiskTools.getConfiguration()
            return Simulate(configuration=configuration, experiment=experiment)
        else :
            return None

    @staticmethod
    def Certify(experiment=None) :
        if experiment != None :
            return ErgodicRiskTools.getCertify(experiment).execute()

    @staticmethod
    def getCertify(experiment=None) :
        if experiment != None :
            configuration = ErgodicRiskTools.getConfiguration()
            return Certify(configuration=configuration, experiment=experiment)
        else :
            return None

    @staticmethod
    def RandomInstance(experiment=None) :
        if experiment != None :
            return ErgodicRiskTools.getRandomInstance(experiment).execute()

    @staticmethod
    def getRandomInstance(experiment=None) :
        if experiment != None :
            configuration = ErgodicRiskTools.getConfiguration()
            return RandomInstance(configuration=configuration, experiment=experiment)
        else :
            return None

    @staticmethod
    def Compare(experiment=None) :
        if experiment != None :
            return ErgodicRiskTools.getCompare(experiment).execute()

    @staticmethod
    def getCompare(experiment=None) :
        if experiment != None :
            configuration = ErgodicRiskTools.getConfiguration()
            return Compare(configuration=configuration, experiment=experiment)
        else :
            return None
