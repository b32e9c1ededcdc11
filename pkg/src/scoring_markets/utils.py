# utils.py
import hashlib
import json

import trafaret as T

from scoring_markets.report import Axiom, Verdict, to_plain


NUMBER = T.ToFloat()
VECTOR = T.List(NUMBER, min_length=1)
MATRIX = T.List(VECTOR, min_length=1)
PAIR = T.List(NUMBER, min_length=2, max_length=2)
LABEL = T.Int() | T.String()
# reports are labels, numbers or vectors; the rule validates them
REPORT = T.Int() | NUMBER | T.String() | VECTOR
AXIOM = T.Enum(*[a.value for a in Axiom])
VERDICT = T.Enum(*[v.value for v in Verdict])
EXPECT = T.Mapping(AXIOM, VERDICT)


POTENTIAL = T.Dict({
    T.Key('name'): T.Enum('quadratic', 'binary-neg-entropy', 'neg-entropy', 'log-partition',
                          'exponential', 'huber-hinge', 'hinge'),
    T.Key('scale', default=1.0): NUMBER,
    T.Key('dim', default=1): T.ToInt(gte=1),
    T.Key('domain', optional=True): T.List(PAIR, min_length=1),
    T.Key('closed', default=False): T.Bool(),
    T.Key('phi', optional=True): MATRIX,
    T.Key('width', default=1.0): NUMBER,
    T.Key('reflected', default=False): T.Bool(),
})

TRANSFORM = T.Dict({
    T.Key('name'): T.Enum('identity', 'sigmoid', 'piecewise-linear'),
    T.Key('knots', optional=True): VECTOR,
    T.Key('values', optional=True): VECTOR,
})

MARKET = T.Dict({
    T.Key('family'): T.Enum('finite', 'expectation', 'quantile', 'expectile', 'ratio', 'cost'),
    T.Key('outcomes', optional=True): T.List(LABEL, min_length=2),
    T.Key('interval', optional=True): PAIR,
    T.Key('probe_spread', default=1.0): NUMBER,
    T.Key('matrix', optional=True): MATRIX,
    T.Key('reports', optional=True): T.List(LABEL, min_length=1),
    T.Key('potential', optional=True): POTENTIAL,
    T.Key('phi', optional=True): MATRIX,
    T.Key('b', optional=True): VECTOR,
    T.Key('alpha', optional=True): NUMBER,
    T.Key('tau', optional=True): NUMBER,
    T.Key('transform', optional=True): TRANSFORM,
    T.Key('lattice', optional=True): MATRIX,
    T.Key('lattice_bound', default=8): T.ToInt(gte=0),
    T.Key('q0', optional=True): VECTOR,
})

BELIEF = (T.Dict({T.Key('pmf'): VECTOR})
          | T.Dict({T.Key('uniform'): PAIR})
          | T.Dict({T.Key('points'): VECTOR, T.Key('values'): VECTOR}))

SEARCH = T.Dict({
    T.Key('report_step', default=1e-2): NUMBER,
    T.Key('report_span', default=5.0): NUMBER,
    T.Key('reports', optional=True): T.List(REPORT, min_length=2),
    T.Key('margin', default=1e-9): NUMBER,
    T.Key('lattice_bound', default=8): T.ToInt(gte=0),
    T.Key('scenarios', default=200): T.ToInt(gte=1),
    T.Key('fixed_scenarios', default=[]): T.List(T.List(REPORT, min_length=3, max_length=3)),
    T.Key('portfolios', default=50): T.ToInt(gte=1),
    T.Key('portfolio_size', default=3): T.ToInt(gte=1),
    T.Key('candidate_limit', default=101): T.ToInt(gte=2),
    T.Key('pair_budget', default=20000): T.ToInt(gte=1),
    T.Key('samples', default=200): T.ToInt(gte=1),
})

FIGURE = T.Dict({
    T.Key('figure'): T.Enum('mode', 'mean', 'median', 'lmsr'),
    T.Key('outcomes', optional=True): T.List(LABEL, min_length=2),
    T.Key('r_old', optional=True): T.Int() | NUMBER,
    T.Key('r_new', optional=True): T.Int() | NUMBER,
    T.Key('state', optional=True): NUMBER,
    T.Key('choices', default=[]): T.List(NUMBER),
    T.Key('positions', default=[]): T.List(T.List(NUMBER, min_length=4, max_length=4)),
    T.Key('alpha', default=0.5): NUMBER,
    T.Key('outcome_grid', optional=True): T.List(NUMBER, min_length=3, max_length=3),
    T.Key('bound', default=4): T.ToInt(gte=1),
})

TRAFARET = T.Dict({
    T.Key('name'): T.String(),
    T.Key('seed', default=0): T.ToInt(gte=0),
    T.Key('output', default='results'): T.String(),
    T.Key('market', optional=True): MARKET,
    T.Key('r0', optional=True): REPORT,
    T.Key('axioms', default=[]): T.List(AXIOM),
    T.Key('expect', default={}): EXPECT,
    T.Key('search', default={}): SEARCH,
    T.Key('beliefs', default=[]): T.List(BELIEF),
    T.Key('random_beliefs', default=0): T.ToInt(gte=0),
    T.Key('belief_support', optional=True): PAIR,
    T.Key('btb', optional=True): T.Dict({
        T.Key('state'): REPORT,
        T.Key('epsilons'): VECTOR,
        T.Key('belief'): BELIEF,
    }),
    T.Key('session', optional=True): T.Dict({
        T.Key('r0'): REPORT,
        T.Key('outcome'): LABEL | NUMBER,
        T.Key('traders'): T.List(T.Dict({T.Key('name'): T.String(), T.Key('belief'): BELIEF}), min_length=1),
        T.Key('random_trades', default=0): T.ToInt(gte=0),
    }),
    T.Key('extract', optional=True): T.Dict({
        T.Key('reports'): T.List(REPORT, min_length=2),
        T.Key('subgroup_budget', default=2000): T.ToInt(gte=1),
        T.Key('expect_step', optional=True): T.Enum('subgroup', 'rank', 'solve', 'injectivity', 'convexity'),
    }),
    T.Key('figures', default=[]): T.List(FIGURE),
})


def config_hash(config, seed):
    """sha256 of the canonical JSON form of a validated config and the seed in effect"""
    canonical = json.dumps({'config': to_plain(config), 'seed': seed}, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
