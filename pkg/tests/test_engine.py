import json

import pytest

from scoring_markets.engine import MarketSession, open_session
from scoring_markets.errors import InvalidOutcome, InvalidReport, LedgerMismatch
from scoring_markets.report import Axiom, Verdict


@pytest.fixture
def mean_session(unit_mean_rule):
    # traders report the means of uniform[.1, .5], uniform[.2, 1] and uniform[0, 1]
    session = open_session(unit_mean_rule, 0.0)
    session.execute_trade('low', 0.3)
    session.execute_trade('high', 0.6)
    session.execute_trade('even', 0.5)
    return session


def test_trade_contract_is_score_difference(unit_mean_rule):
    session = open_session(unit_mean_rule, 0.2)
    contract = session.execute_trade('alice', 0.7)
    for y in (0.0, 0.4, 1.0):
        assert contract.evaluate(y) == pytest.approx(unit_mean_rule.score(0.7, y) - unit_mean_rule.score(0.2, y))
    assert session.state == 0.7
    assert session.ledger[0].r_old == 0.2


def test_invalid_trade_leaves_session_untouched(unit_mean_rule):
    session = open_session(unit_mean_rule, 0.2)
    with pytest.raises(InvalidReport):
        session.execute_trade('bob', 1.5)
    assert session.state == 0.2
    assert session.ledger == []


def test_settlement_telescopes(mean_session, unit_mean_rule):
    settlement = mean_session.settle(0.4)
    payoffs = dict(settlement.payoffs)
    assert payoffs['low'] == pytest.approx(0.15)
    assert payoffs['high'] == pytest.approx(-0.03)
    assert payoffs['even'] == pytest.approx(0.03)
    expected = unit_mean_rule.score(0.5, 0.4) - unit_mean_rule.score(0.0, 0.4)
    assert settlement.maker_loss == pytest.approx(expected)
    assert settlement.maker_loss == pytest.approx(0.15)
    assert settlement.telescoped_loss == pytest.approx(settlement.maker_loss, abs=1e-12)


def test_settle_rejects_outcome_outside(mean_session):
    with pytest.raises(InvalidOutcome):
        mean_session.settle(2.0)


def test_path_independence(mean_session):
    report = mean_session.verify_path_independence()
    assert report.axiom is Axiom.PI
    assert report.verdict is Verdict.HOLDS
    assert report.budget == 2


def test_path_independence_with_one_trade(unit_mean_rule):
    session = open_session(unit_mean_rule, 0.0)
    session.execute_trade('solo', 0.5)
    report = session.verify_path_independence()
    assert report.holds
    assert report.notes == ['fewer than two trades']


def test_worst_case_loss_of_ledger(mean_session):
    # cumulative contract S(.5, y) - S(0, y) = y - 1/4 on [0, 1]
    assert mean_session.worst_case_loss() == pytest.approx(0.75)
    assert mean_session.wcl_over_grid([0.0, 0.5, 1.0]) == pytest.approx(1.0)


def test_snapshot_is_frozen(mean_session):
    snapshot = mean_session.snapshot()
    mean_session.execute_trade('late', 0.9)
    assert len(snapshot.records) == 3
    assert snapshot.state == 0.5


def test_quantile_session(median_rule):
    session = open_session(median_rule, 0.0)
    for trader, report in (('first', 0.5), ('second', 0.25), ('third', -0.375)):
        session.execute_trade(trader, report)
    assert session.state == -0.375
    settlement = session.settle(0.3)
    assert settlement.maker_loss == pytest.approx(-0.1875)
    assert settlement.telescoped_loss == pytest.approx(settlement.maker_loss)
    assert session.verify_path_independence().holds


def test_ledger_replay(mean_session, unit_mean_rule):
    lines = mean_session.to_jsonl().splitlines()
    assert len(lines) == 3
    replayed = MarketSession.replay(unit_mean_rule, 0.0, lines)
    assert replayed.state == mean_session.state
    assert replayed.to_jsonl() == mean_session.to_jsonl()


def test_ledger_replay_detects_tampering(mode_rule):
    session = open_session(mode_rule, 1)
    session.execute_trade('a', 2)
    session.execute_trade('b', 3)
    lines = session.to_jsonl().splitlines()
    record = json.loads(lines[1])
    record['contract']['values'][0] += 1.0
    lines[1] = json.dumps(record)
    with pytest.raises(LedgerMismatch):
        MarketSession.replay(mode_rule, 1, lines)


@pytest.mark.parametrize('name', ['mode_market', 'expectation_entropy', 'mean_market', 'mean_real_line',
                                  'quantile_identity', 'quantile_sigmoid', 'expectile', 'ratio'])
def test_random_ledgers_are_path_independent(experiment, name):
    exp = experiment(name)
    rule = exp.rule
    grid = exp.search.report_grid(rule)
    rng = exp.search.rng(7)
    y = rule.space.labels[-1] if rule.space.labels else 0.3
    for _ in range(5):
        session = open_session(rule, grid[int(rng.integers(len(grid)))])
        for i in range(20):
            session.execute_trade('trader-{}'.format(i % 4), grid[int(rng.integers(len(grid)))])
        assert session.verify_path_independence().verdict is Verdict.HOLDS
        settlement = session.settle(y)
        assert settlement.telescoped_loss == pytest.approx(settlement.maker_loss, abs=1e-9)
