import pytest
import trafaret as T

from scoring_markets.convex import BinaryNegEntropy, Box, LogPartition, Quadratic, Reflected
from scoring_markets.core import FiniteBelief, PiecewiseLinearCDF
from scoring_markets.costmarket import CostFunctionRule
from scoring_markets.errors import ConfigError
from scoring_markets.factory import (
    build_experiment,
    make_belief,
    make_potential,
    make_rule,
    random_beliefs,
)
from scoring_markets.scoring import ExpectationRule, ExpectileRule, FiniteRule, QuantileRule, RatioRule
from scoring_markets.settings import CONFIG_DIR, bundled_configs, load_config, resolve_config_path
from scoring_markets.utils import MARKET, POTENTIAL, TRAFARET, config_hash


def market(**spec):
    return make_rule(MARKET.check(spec))


def test_every_bundled_config_builds():
    for name in bundled_configs():
        experiment = build_experiment(load_config(CONFIG_DIR / '{}.yaml'.format(name)))
        assert experiment.name == name


def test_finite_market_defaults_to_mode_rule():
    rule = market(family='finite', outcomes=[1, 2, 3])
    assert isinstance(rule, FiniteRule)
    assert rule.score(2, 2) == 1.0


def test_finite_market_with_matrix():
    rule = market(family='finite', outcomes=['rain', 'sun'], reports=['wet', 'dry'],
                  matrix=[[1.0, -1.0], [-1.0, 1.0]])
    assert rule.score('dry', 'sun') == 1.0


def test_expectation_market_on_closed_interval():
    rule = market(family='expectation', interval=[0.0, 1.0],
                  potential={'name': 'quadratic', 'domain': [[0.0, 1.0]], 'closed': True})
    assert isinstance(rule, ExpectationRule)
    assert rule.report_domain == Box((0.0,), (1.0,), True)
    assert rule.validate_report(1.0) == 1.0


def test_quantile_market_with_transform():
    rule = market(family='quantile', alpha=0.25, transform={'name': 'sigmoid'})
    assert isinstance(rule, QuantileRule)
    assert rule.transform.name == 'sigmoid'


def test_expectile_defaults_to_quadratic_kernel():
    rule = market(family='expectile', tau=0.3)
    assert isinstance(rule, ExpectileRule)
    assert isinstance(rule.g, Quadratic)


def test_ratio_market():
    rule = market(family='ratio', outcomes=[0, 1], phi=[[0.0], [1.0]], b=[1.0, 2.0],
                  potential={'name': 'binary-neg-entropy'})
    assert isinstance(rule, RatioRule)


def test_cost_market_defaults_to_log_partition():
    rule = market(family='cost', phi=[[0.0], [1.0]])
    assert isinstance(rule, CostFunctionRule)
    assert isinstance(rule.market.C, LogPartition)
    assert rule.space.labels == (0, 1)


def test_lattice_cost_market():
    rule = market(family='cost', outcomes=[0, 1], phi=[[0.0], [1.0]], lattice=[[1.0]], lattice_bound=3)
    assert len(rule.report_grid()) == 7


def test_reflected_potential():
    G = make_potential(POTENTIAL.check({'name': 'binary-neg-entropy', 'reflected': True}))
    assert isinstance(G, Reflected)
    assert isinstance(G.base, BinaryNegEntropy)


@pytest.mark.parametrize('spec', [
    {'family': 'quantile', 'outcomes': [0, 1], 'alpha': 0.5},
    {'family': 'quantile'},
    {'family': 'ratio', 'outcomes': [0, 1], 'phi': [[0.0], [1.0]], 'potential': {'name': 'binary-neg-entropy'}},
    {'family': 'expectation', 'outcomes': [0, 1], 'interval': [0.0, 1.0], 'potential': {'name': 'quadratic'}},
    {'family': 'cost', 'outcomes': [0, 1]},
    {'family': 'cost', 'outcomes': [0, 1], 'phi': [[0.0], [1.0]], 'potential': {'name': 'log-partition'}},
])
def test_inconsistent_market_is_config_error(spec):
    with pytest.raises(ConfigError):
        market(**spec)


def test_make_belief():
    assert isinstance(make_belief({'pmf': [0.5, 0.5]}), FiniteBelief)
    uniform = make_belief({'uniform': [0.0, 2.0]})
    assert uniform.mean() == pytest.approx(1.0)
    assert isinstance(make_belief({'points': [0.0, 1.0], 'values': [0.0, 1.0]}), PiecewiseLinearCDF)
    with pytest.raises(ConfigError):
        make_belief({'pmf': [0.5, 0.6]})


def test_random_beliefs_fit_the_rule(entropy_rule, unit_mean_rule, rng):
    beliefs = random_beliefs(entropy_rule, 5, rng)
    assert len(beliefs) == 5
    for p in beliefs:
        assert 0.0 < entropy_rule.property_value(p) < 1.0
    for p in random_beliefs(unit_mean_rule, 5, rng, (0.0, 1.0)):
        assert p.support[0] >= 0.0 and p.support[1] <= 1.0


def test_belief_that_does_not_fit_is_config_error():
    config = load_config(CONFIG_DIR / 'mode_market.yaml')
    config['beliefs'] = [{'uniform': [0.0, 1.0]}]
    with pytest.raises(ConfigError):
        build_experiment(config)


def test_default_report():
    mode = build_experiment(load_config(CONFIG_DIR / 'mode_market.yaml'))
    assert mode.default_report() == 2
    mean = build_experiment(load_config(CONFIG_DIR / 'mean_market.yaml'))
    assert mean.default_report() == 0.5


def test_seed_override():
    config = load_config(CONFIG_DIR / 'mode_market.yaml')
    assert build_experiment(config).seed == 0
    assert build_experiment(config, 5).search.seed == 5
    assert config_hash(config, 0) != config_hash(config, 5)
    assert config_hash(config, 0) == config_hash(load_config(CONFIG_DIR / 'mode_market.yaml'), 0)


def test_schema_rejects_unknown_axiom():
    with pytest.raises(T.DataError):
        TRAFARET.check({'name': 'x', 'axioms': ['NOPE']})


def test_resolve_config_path(tmp_path):
    assert resolve_config_path('ratio') == CONFIG_DIR / 'ratio.yaml'
    assert resolve_config_path(None, 'figure').name == 'figures.yaml'
    assert resolve_config_path(None, 'check').name == 'mode_market.yaml'
    path = tmp_path / 'mine.yaml'
    assert resolve_config_path(str(path)) == path
