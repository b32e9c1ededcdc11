import math

import numpy as np
import pytest
from scipy import integrate

from scoring_markets.convex import Quadratic
from scoring_markets.core import (
    SIGMOID,
    Contract,
    FiniteBelief,
    FiniteContract,
    OutcomeSpace,
    PiecewiseContract,
    PiecewiseLinearCDF,
    combine,
    contract_bounds,
    expected_payoff,
    make_transform,
    project_cashless,
)
from scoring_markets.errors import (
    BeliefMismatch,
    InvalidBelief,
    InvalidOutcome,
    OutcomeSpaceMismatch,
    UnsupportedContract,
)
from scoring_markets.scoring import ExpectationRule, QuantileRule


@pytest.fixture
def three():
    return OutcomeSpace.finite(['a', 'b', 'c'])


@pytest.fixture
def line():
    return OutcomeSpace.real_line()


def test_finite_space_needs_two_distinct_outcomes():
    with pytest.raises(InvalidOutcome):
        OutcomeSpace.finite([1])
    with pytest.raises(InvalidOutcome):
        OutcomeSpace.finite([1, 1])


def test_empty_interval_rejected():
    with pytest.raises(InvalidOutcome):
        OutcomeSpace.real_line(1.0, 1.0)


def test_finite_contract_evaluates_by_label(three):
    d = FiniteContract(three, [1.0, -2.0, 0.5])
    assert d.evaluate('b') == -2.0
    assert contract_bounds(d) == (-2.0, 1.0)
    with pytest.raises(InvalidOutcome):
        d.evaluate('z')


def test_finite_contract_shape_checked(three):
    with pytest.raises(OutcomeSpaceMismatch):
        FiniteContract(three, [1.0, 2.0])


def test_combine_weighted_sum(three):
    d1 = FiniteContract(three, [1.0, 2.0, 3.0])
    d2 = FiniteContract(three, [0.0, 1.0, 0.0])
    total = combine([d1, d2], [2.0, -1.0])
    assert total.values.tolist() == [2.0, 3.0, 6.0]
    assert (d1 - d2).values.tolist() == [1.0, 1.0, 3.0]


def test_combine_rejects_mixed_spaces(three):
    other = OutcomeSpace.finite(['a', 'b'])
    with pytest.raises(OutcomeSpaceMismatch):
        combine([FiniteContract(three, [0, 0, 0]), FiniteContract(other, [0, 0])], [1, 1])


def test_piecewise_bounds_unbounded_when_linear(line):
    d = PiecewiseContract(line, [(-math.inf, math.inf, (1.0, 2.0, 0.0))])
    assert contract_bounds(d) == (-math.inf, math.inf)


def test_piecewise_bounds_of_concave_quadratic(line):
    # -(y - 1)^2 + 3
    d = PiecewiseContract(line, [(-math.inf, math.inf, (2.0, 2.0, -1.0))])
    inf, sup = contract_bounds(d)
    assert inf == -math.inf
    assert sup == pytest.approx(3.0)


def test_quantile_trade_is_bounded(line):
    rule = QuantileRule(line, 0.5)
    trade = rule.score_contract(1.0) - rule.score_contract(-1.0)
    assert trade.breakpoints() == (-1.0, 1.0)
    assert contract_bounds(trade) == pytest.approx((-1.0, 1.0))
    for y in (-3.0, -1.0, 0.0, 0.5, 1.0, 4.0):
        assert trade.evaluate(y) == pytest.approx(rule.score(1.0, y) - rule.score(-1.0, y))


def test_combine_merges_cancelled_pieces(line):
    rule = QuantileRule(line, 0.3)
    d = rule.score_contract(0.5)
    zero = d - d
    assert len(zero.pieces) == 1
    assert zero.is_constant()


def test_project_cashless(three):
    d0, cash = project_cashless(FiniteContract(three, [1.0, 2.0, 3.0]))
    assert cash == pytest.approx(2.0)
    assert d0.values.tolist() == pytest.approx([-1.0, 0.0, 1.0])


def test_project_cashless_needs_finite_space(line):
    with pytest.raises(UnsupportedContract):
        project_cashless(Contract.constant(line, 1.0))


def test_expected_payoff_finite(three):
    d = FiniteContract(three, [1.0, 2.0, 4.0])
    assert expected_payoff(d, FiniteBelief([0.5, 0.25, 0.25])) == pytest.approx(2.0)


def test_expected_payoff_polynomial_pieces(line):
    square = PiecewiseContract(line, [(-math.inf, math.inf, (0.0, 0.0, 1.0))])
    assert expected_payoff(square, PiecewiseLinearCDF.uniform(0.0, 1.0)) == pytest.approx(1.0 / 3.0)
    identity = PiecewiseContract(line, [(-math.inf, math.inf, (0.0, 1.0, 0.0))])
    assert expected_payoff(identity, PiecewiseLinearCDF.uniform(0.0, 2.0)) == pytest.approx(1.0)


def test_expected_payoff_in_sigmoid_coordinates(line):
    rule = QuantileRule(line, 0.5, SIGMOID)
    belief = PiecewiseLinearCDF([-1.0, 0.5, 2.0], [0.0, 0.7, 1.0])
    exact = expected_payoff(rule.score_contract(0.2), belief)
    numeric = sum(mass / (b - a) * integrate.quad(lambda y: rule.score(0.2, y), a, b)[0]
                  for a, b, mass in belief.segments())
    assert exact == pytest.approx(numeric, abs=1e-10)


def test_expected_payoff_rejects_wrong_belief(three, line):
    with pytest.raises(BeliefMismatch):
        expected_payoff(FiniteContract(three, [0, 0, 0]), PiecewiseLinearCDF.uniform(0, 1))
    with pytest.raises(BeliefMismatch):
        expected_payoff(Contract.constant(OutcomeSpace.real_line(0.0, 1.0), 1.0),
                        PiecewiseLinearCDF.uniform(-1.0, 1.0))


def test_pmf_validation():
    with pytest.raises(InvalidBelief):
        FiniteBelief([0.5, 0.6])
    with pytest.raises(InvalidBelief):
        FiniteBelief([1.5, -0.5])


def test_cdf_validation():
    with pytest.raises(InvalidBelief):
        PiecewiseLinearCDF([0.0, 1.0], [0.0, 0.9])
    with pytest.raises(InvalidBelief):
        PiecewiseLinearCDF([0.0, 1.0, 2.0], [0.0, 0.5, 0.5, 1.0])
    with pytest.raises(InvalidBelief):
        PiecewiseLinearCDF([0.0, 1.0, 2.0, 3.0], [0.0, 0.5, 0.5, 1.0])


def test_cdf_quantile_and_mean():
    belief = PiecewiseLinearCDF([-1.0, 0.0, 1.0], [0.0, 0.8, 1.0])
    assert belief.quantile(0.5) == pytest.approx(-0.375)
    assert belief.mean() == pytest.approx(-0.3)
    assert belief.cdf(-5.0) == 0.0
    assert belief.cdf(5.0) == 1.0


def test_evaluation_points_cover_breakpoints():
    space = OutcomeSpace.real_line(0.0, 1.0, probe_spread=0.25)
    assert space.evaluation_points([0.5]) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_piecewise_linear_transform():
    transform = make_transform('piecewise-linear', [0.0, 1.0], [0.0, 2.0])
    assert transform(0.5) == pytest.approx(1.0)
    assert transform(2.0) == pytest.approx(4.0)
    assert transform.inverse(4.0) == pytest.approx(2.0)
    assert transform.integrate_power(1, 0.0, 1.0) == pytest.approx(1.0)
    with pytest.raises(UnsupportedContract):
        make_transform('piecewise-linear', [0.0, 1.0], [1.0, 0.0])


def test_sigmoid_integrals():
    assert SIGMOID.integrate_power(1, -2.0, 3.0) == pytest.approx(
        integrate.quad(SIGMOID, -2.0, 3.0)[0])
    assert SIGMOID.integrate_power(2, -2.0, 3.0) == pytest.approx(
        integrate.quad(lambda y: SIGMOID(y) ** 2, -2.0, 3.0)[0])
    assert np.isfinite(SIGMOID.inverse(0.25))


def test_expected_payoff_is_linear(line):
    rule = QuantileRule(line, 0.3)
    a, b = rule.score_contract(0.2), rule.score_contract(-1.0)
    p = PiecewiseLinearCDF([-2.0, 0.0, 1.5], [0.0, 0.6, 1.0])
    mixed = combine([a, b], [2.0, -0.5])
    assert expected_payoff(mixed, p) == pytest.approx(2.0 * expected_payoff(a, p) - 0.5 * expected_payoff(b, p))


def test_expectation_lies_between_bounds(three, line, rng):
    for _ in range(20):
        d = FiniteContract(three, rng.normal(size=3))
        lo, hi = contract_bounds(d)
        assert lo - 1e-12 <= expected_payoff(d, FiniteBelief(rng.dirichlet(np.ones(3)))) <= hi + 1e-12
    rule = QuantileRule(line, 0.5, SIGMOID)
    trade = rule.score_contract(1.0) - rule.score_contract(-1.0)
    lo, hi = contract_bounds(trade)
    assert lo <= expected_payoff(trade, PiecewiseLinearCDF.uniform(-2.0, 3.0)) <= hi


def test_project_cashless_is_idempotent(three):
    d0, _ = project_cashless(FiniteContract(three, [1.0, 2.0, 6.0]))
    again, cash = project_cashless(d0)
    assert cash == pytest.approx(0.0, abs=1e-15)
    assert again.values.tolist() == pytest.approx(d0.values.tolist())


def test_trade_minus_itself_is_zero(line):
    rule = QuantileRule(line, 0.5, SIGMOID)
    d = rule.score_contract(0.7) - rule.score_contract(-0.4)
    assert contract_bounds(combine([d, -d], [1.0, 1.0])) == (0.0, 0.0)


def test_constant_combines_with_any_coordinate(line):
    d = QuantileRule(line, 0.5, SIGMOID).score_contract(0.0)
    shifted = d + Contract.constant(line, 2.0)
    assert shifted.transform == SIGMOID
    for y in (-3.0, 0.0, 1.0):
        assert shifted.evaluate(y) == pytest.approx(d.evaluate(y) + 2.0)


def test_tiny_trade_keeps_its_slope(line):
    rule = ExpectationRule(line, Quadratic())
    trade = rule.score_contract(2.0 + 3e-12) - rule.score_contract(2.0)
    assert contract_bounds(trade) == (-math.inf, math.inf)
    assert not trade.is_constant()
