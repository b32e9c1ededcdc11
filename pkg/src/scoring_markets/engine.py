"""
Scoring rule market sessions.

A trader moving the market from r to r' receives the contract
S(r', .) - S(r, .). Contracts are stored in the ledger when they are handed
out and settlement sums the stored contracts, so the ledger is the record
of what the market maker owes.
"""
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FINITE, Contract, combine
from .errors import LedgerMismatch
from .report import Axiom, AxiomReport, to_plain

logger = logging.getLogger(__name__)


PI_TOL = 1e-12


@dataclass(frozen=True)
class TradeRecord:
    index: int
    trader: str
    r_old: object
    r_new: object
    contract: Contract

    def to_dict(self):
        return {
            'index': self.index,
            'trader': self.trader,
            'r_old': to_plain(self.r_old),
            'r_new': to_plain(self.r_new),
            'contract': to_plain(self.contract.to_dict()),
        }


@dataclass(frozen=True)
class SessionSnapshot:
    """Immutable view of a session between trades"""
    rule: object
    r0: object
    state: object
    records: tuple

    def cumulative_contract(self):
        if not self.records:
            return Contract.constant(self.rule.space, 0.0)
        return combine([record.contract for record in self.records], [1.0] * len(self.records))

    def worst_case_loss(self):
        """sup over outcomes of what the maker pays out on the current ledger"""
        return self.cumulative_contract().bounds()[1]


@dataclass
class Settlement:
    outcome: object
    payoffs: list = field(default_factory=list)
    maker_loss: float = 0.0
    telescoped_loss: float = 0.0

    def to_dict(self):
        return {
            'outcome': to_plain(self.outcome),
            'payoffs': [{'trader': trader, 'payoff': to_plain(payoff)} for trader, payoff in self.payoffs],
            'maker_loss': to_plain(self.maker_loss),
            'telescoped_loss': to_plain(self.telescoped_loss),
        }


class MarketSession:

    def __init__(self, rule, r0):
        self.rule = rule
        self.r0 = rule.validate_report(r0)
        self.state = self.r0
        self.ledger = []

    def __str__(self):
        return "MarketSession({}, r0={}, trades={})".format(self.rule, to_plain(self.r0), len(self.ledger))

    def execute_trade(self, trader, r_new):
        r_new = self.rule.validate_report(r_new)
        contract = self.rule.score_contract(r_new) - self.rule.score_contract(self.state)
        record = TradeRecord(len(self.ledger) + 1, str(trader), self.state, r_new, contract)
        self.ledger.append(record)
        logger.debug("Trade %s by %s: %s -> %s", record.index, trader, to_plain(self.state), to_plain(r_new))
        self.state = r_new
        return contract

    def snapshot(self):
        return SessionSnapshot(self.rule, self.r0, self.state, tuple(self.ledger))

    def cumulative_contract(self):
        return self.snapshot().cumulative_contract()

    def worst_case_loss(self):
        return self.snapshot().worst_case_loss()

    def wcl_over_grid(self, grid):
        """sup over reports r in grid of sup_y F(r | r0)"""
        start = self.rule.score_contract(self.r0)
        return max((self.rule.score_contract(r) - start).bounds()[1] for r in grid)

    def settle(self, y):
        y = self.rule.space.validate(y)
        totals = {}
        for record in self.ledger:
            totals[record.trader] = totals.get(record.trader, 0.0) + record.contract.evaluate(y)
        maker_loss = sum(totals.values())
        telescoped = self.rule.score(self.state, y) - self.rule.score(self.r0, y)
        logger.info("Settled %s at %s: maker loss %s", self, y, maker_loss)
        return Settlement(y, list(totals.items()), maker_loss, telescoped)

    def verify_path_independence(self):
        """F(r''|r) = F(r'|r) + F(r''|r') for every consecutive pair of trades"""
        subject = str(self)
        if len(self.ledger) < 2:
            return AxiomReport.holding(Axiom.PI, True, margin=0.0, budget=0, subject=subject,
                                       notes=['fewer than two trades'])
        worst = 0.0
        for first, second in zip(self.ledger, self.ledger[1:]):
            direct = self.rule.score_contract(second.r_new) - self.rule.score_contract(first.r_old)
            chained = first.contract + second.contract
            points = self.rule.space.evaluation_points(
                sorted(set(_breakpoints(direct)) | set(_breakpoints(chained))))
            scale = max([1.0] + [abs(direct.evaluate(y)) for y in points])
            lo, hi = (direct - chained).bounds()
            gap = max(abs(lo), abs(hi))
            if not math.isfinite(gap) or gap > PI_TOL * scale:
                y = max(points, key=lambda y: abs(direct.evaluate(y) - chained.evaluate(y)))
                witness = {'trades': [first.index, second.index], 'outcome': y,
                           'direct': direct.evaluate(y), 'chained': chained.evaluate(y)}
                return AxiomReport.failing(Axiom.PI, witness, margin=-gap, budget=second.index, subject=subject)
            worst = max(worst, gap)
        logger.info("Path independence holds on %s", self)
        return AxiomReport.holding(Axiom.PI, True, margin=-worst, budget=len(self.ledger) - 1, subject=subject)

    # ledger serialisation

    def to_jsonl(self):
        return ''.join(json.dumps(record.to_dict(), sort_keys=True) + '\n' for record in self.ledger)

    @classmethod
    def replay(cls, rule, r0, lines):
        """Re-execute a serialised ledger, checking each stored contract bit for bit on finite spaces"""
        session = cls(rule, r0)
        for line in lines:
            if not line.strip():
                continue
            data = json.loads(line)
            if not _same_report(rule, data['r_old'], session.state):
                raise LedgerMismatch("Trade {} starts at {}, session is at {}".format(
                    data['index'], data['r_old'], to_plain(session.state)))
            contract = session.execute_trade(data['trader'], data['r_new'])
            stored = data.get('contract')
            if stored is not None and to_plain(contract.to_dict()) != stored:
                raise LedgerMismatch("Trade {} does not reproduce its contract".format(data['index']))
        return session


def open_session(rule, r0):
    session = MarketSession(rule, r0)
    logger.info("Opened %s", session)
    return session


def _breakpoints(d):
    return d.breakpoints() if d.space.kind != FINITE else ()


def _same_report(rule, a, b):
    if rule.finite_reports:
        return a == b
    return bool(np.array_equal(np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(b)))
