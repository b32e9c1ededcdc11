import math

import numpy as np
import pytest

from scoring_markets.axioms import replay_witness
from scoring_markets.convex import BinaryNegEntropy, Hinge, HuberHinge
from scoring_markets.core import FiniteBelief, OutcomeSpace
from scoring_markets.costmarket import (
    CostFunctionRule,
    CostMarket,
    ShareSpace,
    check_open,
    check_quasi_open,
    check_subgroup,
    extract_cost_market,
    price_bound_check,
    trade_contracts,
)
from scoring_markets.errors import ExtractionError, LatticeViolation
from scoring_markets.report import Verdict
from scoring_markets.scoring import RatioRule


BINARY = OutcomeSpace.finite([0, 1])


def test_lmsr_price_of_one_share(lmsr):
    cost, contract = lmsr.quote([1.0])
    assert cost == pytest.approx(math.log((1.0 + math.e) / 2.0), abs=1e-12)
    assert contract.values.tolist() == pytest.approx([-cost, 1.0 - cost])
    assert lmsr.q.tolist() == [0.0]


def test_trade_moves_share_state(lmsr):
    assert lmsr.price()[0] == pytest.approx(0.5)
    lmsr.trade([2.0])
    assert lmsr.q.tolist() == [2.0]
    assert lmsr.price()[0] == pytest.approx(1.0 / (1.0 + math.exp(-2.0)))


def test_lattice_rejects_fractional_bundle(lattice_lmsr):
    lattice_lmsr.quote([3.0])
    with pytest.raises(LatticeViolation):
        lattice_lmsr.quote([0.5])


def test_share_space_enumeration():
    shares = ShareSpace.lattice([[1.0, 0.0], [0.0, 2.0]], bound=1)
    points = shares.enumerate()
    assert len(points) == 9
    assert shares.contains([1.0, -2.0])
    assert not shares.contains([1.0, 1.0])
    with pytest.raises(LatticeViolation):
        ShareSpace.full(2).enumerate()


def test_neutralizing_bundle_sells_position_back(lmsr):
    position = lmsr.position([[1.0], [2.0]])
    result = lmsr.neutralizing_bundle(position, q=[3.0])
    assert result.bundle.tolist() == [-3.0]
    assert result.constant
    assert result.cash == pytest.approx(0.0, abs=1e-12)
    assert result.margin > 0.0


def test_mirrored_market_pays_the_same(lmsr):
    mirror = lmsr.mirrored()
    cost, contract = lmsr.quote([1.0])
    mirror_cost, mirror_contract = mirror.quote([-1.0])
    assert mirror_cost == pytest.approx(cost)
    assert mirror_contract.values == pytest.approx(contract.values)


def test_cost_rule_property_is_share_state(lmsr):
    rule = CostFunctionRule(lmsr)
    q = rule.property_value(FiniteBelief([0.3, 0.7]))
    assert q == pytest.approx(math.log(0.7 / 0.3))
    assert rule.score(q, 1) == pytest.approx(math.log(0.7))


def test_cost_rule_neutralizer_cancels_shares(lmsr):
    rule = CostFunctionRule(lmsr)
    [q] = rule.neutralizer_candidates([(0.0, 2.0)], 5.0)
    assert q == pytest.approx(3.0)


def test_lmsr_is_open(lmsr, rng):
    report = check_open(lmsr, 200, rng)
    assert report.holds


def test_huber_hinge_market_is_not_open(rng):
    market = CostMarket(BINARY, HuberHinge(1.0), [[0.0], [1.0]])
    report = check_open(market, 200, rng)
    assert report.verdict is Verdict.FAILS
    assert report.witness['kind'] == 'gradient-on-boundary'
    assert replay_witness(report, market)


def test_discretized_lmsr_is_quasi_open(lattice_lmsr):
    report = check_quasi_open(lattice_lmsr, 4)
    assert report.holds
    assert report.budget == 9 * 8


def test_hinge_lattice_market_is_not_quasi_open():
    market = CostMarket(BINARY, Hinge(), [[0.0], [1.0]], ShareSpace.lattice([[1.0]], 2))
    report = check_quasi_open(market, 2)
    assert report.verdict is Verdict.FAILS
    assert replay_witness(report, market)


def test_price_bound(lmsr, rng):
    report = price_bound_check(lmsr, 500, rng)
    assert report.holds
    assert report.margin > 0.0


def test_subgroup_sample_without_negations():
    sample = np.array([[1.0, -1.0], [2.0, -2.0]])
    report = check_subgroup(sample, complete=True)
    assert report.verdict is Verdict.FAILS
    assert report.witness['kind'] == 'negation'
    assert replay_witness(report, sample)


def test_subgroup_with_membership_oracle():
    sample = np.array([[1.0, -1.0], [-1.0, 1.0], [2.0, -2.0]])

    def integral_line(x):
        return bool(np.allclose(x, np.round(x)) and abs(x[0] + x[1]) < 1e-12)

    report = check_subgroup(sample, member=integral_line)
    assert report.verdict is Verdict.HOLDS_AT_BUDGET


def test_mode_trades_not_closed_under_sums(mode_rule):
    cashless, trades, member = trade_contracts(mode_rule, [1, 2, 3])
    assert len(trades) == 6
    assert all(member(-d) for d in trades)
    report = check_subgroup(trades, complete=True, member=member)
    assert report.verdict is Verdict.FAILS
    assert report.witness['kind'] == 'sum'


def test_extract_from_binary_entropy(entropy_rule):
    reports = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    extraction = extract_cost_market(entropy_rule, reports)
    assert extraction.phi.shape == (2, 1)
    assert extraction.roundtrip_residual < 1e-8
    assert extraction.compare_to_conjugate() < 1e-6
    assert extraction.subgroup.holds
    # the extracted market prices trades like the rule does
    expected = entropy_rule.score_contract(0.8).values - entropy_rule.score_contract(0.2).values
    assert extraction.payoffs(1, 7) == pytest.approx(expected, abs=1e-6)


def test_extract_from_mode_rule_fails_at_subgroup(mode_rule):
    with pytest.raises(ExtractionError) as info:
        extract_cost_market(mode_rule, [1, 2, 3])
    assert info.value.step == 'subgroup'
    assert 'point' in info.value.witness


def test_extract_from_ratio_rule_fails_at_subgroup():
    rule = RatioRule(OutcomeSpace.finite([0, 1, 2]), BinaryNegEntropy(), [[0.0], [1.0], [2.0]], [1.0, 3.0, 2.0])
    with pytest.raises(ExtractionError) as info:
        extract_cost_market(rule, [0.2, 0.4, 0.6, 0.8], subgroup_budget=200)
    assert info.value.step == 'subgroup'


def test_extraction_needs_two_reports(entropy_rule):
    with pytest.raises(ExtractionError) as info:
        extract_cost_market(entropy_rule, [0.5])
    assert info.value.step == 'rank'


@pytest.mark.parametrize('name', ['extract_binary_entropy', 'extract_quadratic', 'extract_entropy3'])
def test_extracted_market_reproduces_every_trade(experiment, name):
    exp = experiment(name)
    spec = exp.config['extract']
    extraction = extract_cost_market(exp.rule, spec['reports'], spec['subgroup_budget'])
    assert extraction.roundtrip_residual < 1e-8
    assert extraction.compare_to_conjugate() < 1e-6
    assert extraction.shares.shape == (len(spec['reports']), extraction.phi.shape[1])
