import numpy as np
import pytest

from scoring_markets.convex import Box, BinaryNegEntropy, Quadratic
from scoring_markets.core import OutcomeSpace
from scoring_markets.costmarket import binary_lmsr, discretized_lmsr
from scoring_markets.factory import build_experiment
from scoring_markets.scoring import ExpectationRule, FiniteRule, QuantileRule
from scoring_markets.settings import CONFIG_DIR, load_config


def config_path(name):
    return CONFIG_DIR / '{}.yaml'.format(name)


@pytest.fixture
def experiment():
    def build(name, seed=None):
        return build_experiment(load_config(config_path(name)), seed)
    return build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mode_rule():
    return FiniteRule.mode_rule(OutcomeSpace.finite([1, 2, 3]))


@pytest.fixture
def mean_rule():
    """Squared loss on the real line, S(r, y) = 2ry - r^2"""
    return ExpectationRule(OutcomeSpace.real_line(), Quadratic())


@pytest.fixture
def unit_mean_rule():
    return ExpectationRule(OutcomeSpace.real_line(0.0, 1.0), Quadratic(1.0, Box.interval(0.0, 1.0, closed=True)))


@pytest.fixture
def entropy_rule():
    return ExpectationRule(OutcomeSpace.finite([0, 1]), BinaryNegEntropy())


@pytest.fixture
def median_rule():
    return QuantileRule(OutcomeSpace.real_line(), 0.5)


@pytest.fixture
def lmsr():
    return binary_lmsr()


@pytest.fixture
def lattice_lmsr():
    return discretized_lmsr(4)
