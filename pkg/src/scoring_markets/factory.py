"""
Build markets, beliefs and search settings from a validated config.

Everything the config cannot describe consistently (a quantile market over
finite outcomes, a ratio rule without ``b``) surfaces as ConfigError.
"""
import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from .axioms import SearchConfig
from .convex import (BinaryNegEntropy, Box, Exponential, Hinge, HuberHinge, LogPartition, NegEntropy,
                     Quadratic, Reflected)
from .core import FINITE, FiniteBelief, OutcomeSpace, PiecewiseLinearCDF, make_transform
from .costmarket import CostFunctionRule, CostMarket, ShareSpace
from .errors import BeliefMismatch, ConfigError, MarketError
from .scoring import ExpectationRule, ExpectileRule, FiniteRule, QuantileRule, RatioRule

logger = logging.getLogger(__name__)


DEFAULT_BELIEF_SUPPORT = (-2.0, 2.0)
BELIEF_ATTEMPTS = 20


def _config_errors(what):
    """Re-raise construction errors of the wrapped builder as ConfigError"""
    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except ConfigError:
                raise
            except (MarketError, ValueError, TypeError) as e:
                raise ConfigError("Cannot build {}: {}".format(what, e)) from e
        return wrapper
    return decorator


def _require(spec, key, family):
    if key not in spec:
        raise ConfigError("{} market needs '{}'".format(family, key))
    return spec[key]


@_config_errors('outcome space')
def make_space(spec):
    if 'outcomes' in spec and 'interval' in spec:
        raise ConfigError("market gives both 'outcomes' and 'interval'")
    if 'outcomes' in spec:
        return OutcomeSpace.finite(spec['outcomes'])
    if spec['family'] == 'cost' and 'phi' in spec:
        return OutcomeSpace.finite(range(len(spec['phi'])))
    lo, hi = spec.get('interval', (-np.inf, np.inf))
    return OutcomeSpace.real_line(lo, hi, spec.get('probe_spread', 1.0))


@_config_errors('potential')
def make_potential(spec):
    name = spec['name']
    domain = None
    if 'domain' in spec:
        lo, hi = zip(*spec['domain'])
        domain = Box(tuple(lo), tuple(hi), closed=spec['closed'])
    if name == 'quadratic':
        G = Quadratic(spec['scale'], domain or Box.full(spec['dim']))
    elif name == 'binary-neg-entropy':
        G = BinaryNegEntropy()
    elif name == 'neg-entropy':
        G = NegEntropy(spec['dim'])
    elif name == 'log-partition':
        if 'phi' not in spec:
            raise ConfigError("log-partition potential needs 'phi'")
        G = LogPartition(spec['phi'])
    elif name == 'exponential':
        G = Exponential(spec['dim'])
    elif name == 'huber-hinge':
        G = HuberHinge(spec['width'])
    else:
        G = Hinge()
    return Reflected(G) if spec['reflected'] else G


@_config_errors('cost market')
def make_cost_market(spec):
    space = make_space(spec)
    phi = _require(spec, 'phi', 'cost')
    potential = spec.get('potential') or {'name': 'log-partition', 'phi': phi, 'reflected': False,
                                          'closed': False}
    C = make_potential(potential)
    shares = None
    if 'lattice' in spec:
        shares = ShareSpace.lattice(spec['lattice'], spec['lattice_bound'])
    return CostMarket(space, C, phi, shares, spec.get('q0'), spec.get('b'))


@_config_errors('market')
def make_rule(spec):
    family = spec['family']
    if family == 'cost':
        return CostFunctionRule(make_cost_market(spec))
    space = make_space(spec)
    if family == 'finite':
        if 'matrix' not in spec:
            return FiniteRule.mode_rule(space)
        return FiniteRule(space, spec['matrix'], spec.get('reports'))
    if family == 'quantile':
        transform = spec.get('transform') or {'name': 'identity'}
        return QuantileRule(space, _require(spec, 'alpha', family),
                            make_transform(transform['name'], transform.get('knots'), transform.get('values')))
    potential = spec.get('potential')
    if family == 'expectile':
        g = make_potential(potential) if potential else Quadratic()
        return ExpectileRule(space, _require(spec, 'tau', family), g)
    G = make_potential(_require(spec, 'potential', family))
    if family == 'expectation':
        return ExpectationRule(space, G, spec.get('phi'))
    return RatioRule(space, G, _require(spec, 'phi', family), _require(spec, 'b', family))


@_config_errors('belief')
def make_belief(spec):
    if 'pmf' in spec:
        return FiniteBelief(spec['pmf'])
    if 'uniform' in spec:
        return PiecewiseLinearCDF.uniform(*spec['uniform'])
    return PiecewiseLinearCDF(spec['points'], spec['values'])


def belief_support(rule, support=None):
    lo, hi = support or DEFAULT_BELIEF_SUPPORT
    lo, hi = max(lo, rule.space.lo), min(hi, rule.space.hi)
    if not lo < hi:
        raise ConfigError("Belief support [{}, {}] misses {}".format(lo, hi, rule.space))
    return lo, hi


def _random_belief(rule, rng, support):
    if rule.space.kind == FINITE:
        return FiniteBelief(rng.dirichlet(np.full(rule.space.n, 2.0)))
    lo, hi = support
    inner = int(rng.integers(0, 4))
    points = np.concatenate([[lo], np.sort(rng.uniform(lo, hi, inner)), [hi]])
    values = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.0, inner)), [1.0]])
    return PiecewiseLinearCDF(points, values)


def random_beliefs(rule, count, rng, support=None):
    """``count`` random beliefs whose property lies in the rule's report domain"""
    support = belief_support(rule, support) if rule.space.kind != FINITE else None
    beliefs = []
    for _ in range(count):
        for _ in range(BELIEF_ATTEMPTS):
            try:
                p = _random_belief(rule, rng, support)
                rule.property_report(p)
            except (BeliefMismatch, ValueError, MarketError):
                continue
            beliefs.append(p)
            break
        else:
            logger.warning("No admissible random belief for %s after %s attempts", rule, BELIEF_ATTEMPTS)
    return beliefs


@_config_errors('search settings')
def make_search(spec, seed):
    values = dict(spec)
    if 'reports' in values:
        values['reports'] = tuple(values['reports'])
    values['fixed_scenarios'] = tuple(tuple(s) for s in values.get('fixed_scenarios', ()))
    return SearchConfig(seed=seed, **values)


@dataclass
class Experiment:
    name: str
    seed: int
    config: dict
    rule: object = None
    search: SearchConfig = None
    beliefs: list = field(default_factory=list)

    @property
    def market(self):
        return getattr(self.rule, 'market', None)

    @property
    def axioms(self):
        return list(self.config['axioms'])

    def default_report(self):
        """Configured r0, else the middle of the report grid"""
        if 'r0' in self.config:
            return self.rule.validate_report(self.config['r0'])
        grid = self.search.report_grid(self.rule)
        return grid[len(grid) // 2]


def build_experiment(config, seed=None):
    seed = config['seed'] if seed is None else seed
    experiment = Experiment(config['name'], seed, config)
    experiment.search = make_search(config['search'], seed)
    if 'market' not in config:
        return experiment
    rule = make_rule(config['market'])
    experiment.rule = rule
    beliefs = [make_belief(b) for b in config['beliefs']]
    if config['random_beliefs']:
        beliefs += random_beliefs(rule, config['random_beliefs'], experiment.search.rng(1),
                                  config.get('belief_support'))
    for p in beliefs:
        try:
            rule.property_value(p)
        except MarketError as e:
            raise ConfigError("Belief {!r} does not fit {}: {}".format(p, rule, e)) from e
    experiment.beliefs = beliefs
    logger.info("Built experiment %s: %s with %s beliefs, seed %s", experiment.name, rule, len(beliefs), seed)
    return experiment
