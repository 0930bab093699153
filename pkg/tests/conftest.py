# -*- coding: utf-8 -*-
import numpy as np
import pytest

from ErgodicRiskLQR.ErgodicRisk import RiskFunctional
from ErgodicRiskLQR.InstanceGenerator import InstanceSpec, random_instance
from ErgodicRiskLQR.LtiSystem import LtiSystem, Policy
from ErgodicRiskLQR.NoiseModels import GaussianNoise, StudentTNoise
from ErgodicRiskLQR.PrimalDual import CocpProblem, gamma_N_sq_of_gain, lqr_solve


def scalar_system(a, b=1.0, h=1.0, noise=None) :
    return LtiSystem(A=[[a]], B=[[b]], H=[[h]], noise=noise or GaussianNoise([[1.0]]))


@pytest.fixture
def deadbeat() :
    """a=0.5, b=1, k=-0.5: A_K = 0 with unit Gaussian noise."""
    return scalar_system(0.5), Policy.linear([[-0.5]]), RiskFunctional(Qc=[[1.0]])


@pytest.fixture
def deadbeat_t() :
    return scalar_system(0.5, noise=StudentTNoise(5, [[1.0]])), Policy.linear([[-0.5]]), RiskFunctional(Qc=[[1.0]])


def scalar_problem(fraction) :
    """a=1.2, b=q=r=qc=1: inf gamma_N^2 = 2 at the deadbeat gain."""
    sys = scalar_system(1.2)
    prob = CocpProblem(sys, [[1.0]], [[1.0]], RiskFunctional(Qc=[[1.0]]), 0.0)
    return prob.with_budget(fraction * gamma_N_sq_of_gain(prob, lqr_solve(sys, prob.Q, prob.R).K))


@pytest.fixture
def scalar_feasible() :
    return scalar_problem(0.8)


@pytest.fixture
def scalar_infeasible() :
    return scalar_problem(0.54)


@pytest.fixture
def three_state() :
    A = np.array([[0.6, 0.2, 0.0],
                  [-0.1, 0.5, 0.3],
                  [0.0, 0.1, 0.4]])
    B = np.array([[1.0], [0.0], [0.5]])
    sys = LtiSystem(A=A, B=B, H=np.eye(3), noise=GaussianNoise(np.diag([1.0, 0.5, 0.25])))
    return sys, Policy.linear([[-0.2, 0.0, -0.1]]), RiskFunctional(Qc=np.eye(3))


def random_problems(count, fraction=0.9, start=0) :
    return [random_instance(InstanceSpec(n=4, m=2, seed=start + s, beta_fraction=fraction)) for s in range(count)]


@pytest.fixture(scope="session")
def random_50() :
    return random_problems(50)


@pytest.fixture(scope="session")
def random_4x2(random_50) :
    return random_50[:20]
