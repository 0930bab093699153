# -*- coding: utf-8 -*-

class ErgodicRiskError(Exception) :
    pass

class NotSchurStable(ErgodicRiskError) :
    def __init__(self, message, rho = None) :
        super().__init__(message)
        self.rho = rho

class NotStabilizing(NotSchurStable) :
    pass

class NonSymmetricInput(ErgodicRiskError) :
    pass

class DimensionMismatch(ErgodicRiskError) :
    pass

class NoConvergence(ErgodicRiskError) :
    def __init__(self, message, iterations = None) :
        super().__init__(message)
        self.iterations = iterations

class MomentUndefined(ErgodicRiskError) :
    pass

class RequiresGaussian(ErgodicRiskError) :
    pass

class NegativeMultiplier(ErgodicRiskError) :
    pass

class LostStability(ErgodicRiskError) :
    def __init__(self, message, iteration = None, rho = None) :
        super().__init__(message)
        self.iteration = iteration
        self.rho = rho

class MaxIterations(ErgodicRiskError) :
    def __init__(self, message, K = None, grad_norm = None) :
        super().__init__(message)
        self.K = K
        self.grad_norm = grad_norm

class DegenerateBudget(ErgodicRiskError) :
    pass

class InfeasibleSuspected(ErgodicRiskError) :
    def __init__(self, message, report = None) :
        super().__init__(message)
        self.report = report

class NumericalOverflow(ErgodicRiskError) :
    def __init__(self, message, step = None, partial = None) :
        super().__init__(message)
        self.step = step
        self.partial = partial

class ChannelOutOfRange(ErgodicRiskError) :
    pass

class DriftViolated(ErgodicRiskError) :
    def __init__(self, message, worst_state = None, report = None) :
        super().__init__(message)
        self.worst_state = worst_state
        self.report = report

class GenerationFailed(ErgodicRiskError) :
    pass

class ConfigError(ErgodicRiskError) :
    pass

class NegativeVariance(ErgodicRiskError) :
    def __init__(self, message, quantity = None, value = None) :
        super().__init__(message)
        self.quantity = quantity
        self.value = value

class SingularNoise(ErgodicRiskError) :
    def __init__(self, message, min_eigenvalue = None) :
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
