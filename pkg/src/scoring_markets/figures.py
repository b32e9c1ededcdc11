"""
Columnar payoff data for the standard market pictures.

Each builder returns a FigureTable of outcomes against score and trade
payoffs, evaluated from the rules' own contracts; nothing here draws.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .convex import Quadratic, conjugate
from .core import SIGMOID, OutcomeSpace
from .costmarket import discretized_lmsr
from .scoring import ExpectationRule, FiniteRule, QuantileRule

logger = logging.getLogger(__name__)


DEFAULT_OUTCOME_GRID = (-3.0, 3.0, 0.25)


@dataclass
class FigureTable:
    name: str
    columns: list
    rows: list

    def column(self, name):
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_tsv(self):
        lines = ['\t'.join(self.columns)]
        for row in self.rows:
            lines.append('\t'.join(_cell(value) for value in row))
        return '\n'.join(lines) + '\n'


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def outcome_grid(lo, hi, step):
    count = int(round((hi - lo) / step))
    return [float(y) for y in lo + step * np.arange(count + 1)]


def mode_figure(outcomes=(1, 2, 3), r_old=1, r_new=3):
    """Score of two reports in a mode market and the trade between them"""
    rule = FiniteRule.mode_rule(OutcomeSpace.finite(outcomes))
    before, after = rule.score_contract(r_old), rule.score_contract(r_new)
    trade = after - before
    rows = [(y, before.evaluate(y), after.evaluate(y), trade.evaluate(y)) for y in outcomes]
    return FigureTable('mode', ['y', 'S(r_old,y)', 'S(r_new,y)', 'F(r_new,y|r_old)'], rows)


def mean_figure(r_old=-1.0, r_new=1.0, state=2.0, choices=(1.5, 2.5), grid=DEFAULT_OUTCOME_GRID):
    """
    Squared-loss mean market on the real line: a held trade, the contracts on
    offer at a later state, and the trade that neutralises the held one.
    """
    rule = ExpectationRule(OutcomeSpace.real_line(), Quadratic())
    held = rule.score_contract(r_new) - rule.score_contract(r_old)
    start = rule.score_contract(state)
    offers = [rule.score_contract(c) - start for c in choices]
    neutralizer = rule.neutralizer_candidates([(r_old, r_new)], state)[0]
    offset = rule.score_contract(neutralizer) - start
    net = held + offset
    columns = (['y', 'F(r_new,y|r_old)'] + ['F({},y|state)'.format(c) for c in choices]
               + ['F({},y|state)'.format(neutralizer), 'net'])
    rows = []
    for y in outcome_grid(*grid):
        rows.append(tuple([y, held.evaluate(y)] + [d.evaluate(y) for d in offers]
                          + [offset.evaluate(y), net.evaluate(y)]))
    return FigureTable('mean', columns, rows)


def median_figure(alpha=0.5, r_old=-1.0, r_new=1.0, positions=(), grid=DEFAULT_OUTCOME_GRID):
    """
    Quantile market trades with and without the sigmoid transform, plus
    held/offered/net curves for each (r1, r1', r2, r2') in ``positions``.
    """
    space = OutcomeSpace.real_line()
    plain, squashed = QuantileRule(space, alpha), QuantileRule(space, alpha, SIGMOID)
    columns = ['y']
    curves = []
    for label, rule in (('id', plain), ('sigmoid', squashed)):
        before, after = rule.score_contract(r_old), rule.score_contract(r_new)
        columns += ['S_{}(r_old,y)'.format(label), 'S_{}(r_new,y)'.format(label), 'F_{}(r_new,y|r_old)'.format(label)]
        curves += [before, after, after - before]
    for i, (r1, r1_new, r2, r2_new) in enumerate(positions, 1):
        held = plain.score_contract(r1_new) - plain.score_contract(r1)
        offered = plain.score_contract(r2_new) - plain.score_contract(r2)
        columns += ['held_{}'.format(i), 'offered_{}'.format(i), 'net_{}'.format(i)]
        curves += [held, offered, held + offered]
    rows = [tuple([y] + [d.evaluate(y) for d in curves]) for y in outcome_grid(*grid)]
    return FigureTable('median', columns, rows)


def lmsr_figure(bound=4):
    """Discretized binary LMSR: integer share states, their prices, C and its conjugate"""
    market = discretized_lmsr(bound)
    rows = []
    for q in market.shares.enumerate():
        price = float(market.price(q)[0])
        rows.append((float(q[0]), price, market.C.value(q), conjugate(market.C, [price])[0]))
    return FigureTable('lmsr', ['q', 'price', 'C(q)', 'G(price)'], rows)


def build_figure(spec):
    kind = spec['figure']
    grid = tuple(spec.get('outcome_grid', DEFAULT_OUTCOME_GRID))
    if kind == 'mode':
        table = mode_figure(tuple(spec.get('outcomes', (1, 2, 3))), spec.get('r_old', 1), spec.get('r_new', 3))
    elif kind == 'mean':
        table = mean_figure(spec.get('r_old', -1.0), spec.get('r_new', 1.0), spec.get('state', 2.0),
                            tuple(spec.get('choices') or (1.5, 2.5)), grid)
    elif kind == 'median':
        table = median_figure(spec.get('alpha', 0.5), spec.get('r_old', -1.0), spec.get('r_new', 1.0),
                              [tuple(p) for p in spec.get('positions', ())], grid)
    else:
        table = lmsr_figure(spec.get('bound', 4))
    logger.info("Built %s figure with %s rows", kind, len(table.rows))
    return table
