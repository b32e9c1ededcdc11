import asyncio
import logging
import pathlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import yaml

from . import __version__
from .axioms import (check_arb, check_btb, check_ic, check_pn, check_tn, check_wcl, check_wn,
                     implication_violations)
from .convex import check_convexity
from .core import FINITE
from .costmarket import (check_open, check_quasi_open, check_subgroup, extract_cost_market, price_bound_check,
                         trade_contracts)
from .engine import open_session
from .errors import ConfigError, ExtractionError
from .factory import make_belief
from .figures import build_figure
from .report import Axiom, to_plain
from .utils import config_hash

logger = logging.getLogger(__name__)


PI_TRADES = 20
RESPONSE_TOL = 1e-6
# rng streams 0-9 belong to the search helpers
STREAM_OFFSET = 10


@dataclass
class CheckRun:
    reports: list
    implications: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.mismatches


@dataclass
class SessionRun:
    session: object
    settlement: object
    path_independence: object

    def to_dict(self):
        return {
            'session': str(self.session),
            'final_state': to_plain(self.session.state),
            'trades': [record.to_dict() for record in self.session.ledger],
            'settlement': self.settlement.to_dict(),
            'worst_case_loss': to_plain(self.session.worst_case_loss()),
            'path_independence': self.path_independence.to_dict(),
        }


def compare_verdicts(reports, expected):
    mismatches = []
    for report in reports:
        want = expected.get(report.axiom.value)
        if want is not None and not report.verdict.matches(want):
            mismatches.append({'axiom': report.axiom.value, 'expected': want, 'actual': report.verdict.value})
            logger.warning("%s: expected %s, got %s", report.axiom.value, want, report.verdict.value)
    return mismatches


class ExperimentRunner:
    """Runs the configured checks of one experiment, axioms in parallel worker threads"""

    def __init__(self, experiment, jobs=1):
        self.experiment = experiment
        self.rule = experiment.rule
        self.search = experiment.search
        self.jobs = max(1, int(jobs))
        self.tasks = []

    def __str__(self):
        return "ExperimentRunner({}, seed={}, jobs={})".format(self.experiment.name, self.experiment.seed, self.jobs)

    def _need_rule(self):
        if self.rule is None:
            raise ConfigError("Experiment {} has no market".format(self.experiment.name))
        return self.rule

    def _need_market(self, axiom):
        market = self.experiment.market
        if market is None:
            raise ConfigError("{} is a cost-market check, {} is not a cost market".format(axiom.value, self.rule))
        return market

    def _rng(self, axiom):
        return self.search.rng(STREAM_OFFSET + list(Axiom).index(axiom))

    # checks

    async def check(self, expected=None):
        self._need_rule()
        axioms = [Axiom(a) for a in self.experiment.axioms]
        logger.info("Starting %s on %s", self, ', '.join(a.value for a in axioms))
        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            self.tasks = [loop.run_in_executor(pool, self.run_axiom, axiom) for axiom in axioms]
            reports = list(await asyncio.gather(*self.tasks))
        self.tasks = []
        implications = implication_violations(reports)
        for strong, weak in implications:
            logger.warning("%s holds but %s fails on %s", strong.value, weak.value, self.rule)
        expected = dict(self.experiment.config['expect'], **(expected or {}))
        run = CheckRun(reports, [[s.value, w.value] for s, w in implications], compare_verdicts(reports, expected))
        logger.info("Finished %s: %s", self, '; '.join(str(r) for r in reports))
        return run

    def run_axiom(self, axiom):
        logger.debug("Checking %s on %s", axiom.value, self.rule)
        rule, search, config = self.rule, self.search, self.experiment.config
        if axiom is Axiom.IC:
            if not self.experiment.beliefs:
                raise ConfigError("IC needs 'beliefs' or 'random_beliefs'")
            report = check_ic(rule, self.experiment.beliefs, search)
        elif axiom is Axiom.ARB:
            report = check_arb(rule, search)
        elif axiom is Axiom.WCL:
            report = check_wcl(rule, self.experiment.default_report(), search)
        elif axiom is Axiom.WN:
            report = check_wn(rule, search)
        elif axiom is Axiom.TN:
            report = check_tn(rule, search)
        elif axiom is Axiom.PN:
            report = check_pn(rule, search)
        elif axiom is Axiom.BTB:
            if 'btb' not in config:
                raise ConfigError("BTB needs a 'btb' section")
            spec = config['btb']
            report = check_btb(rule, make_belief(spec['belief']), spec['state'], spec['epsilons'], search)
        elif axiom is Axiom.PI:
            report = self.check_pi()
        elif axiom is Axiom.CONVEX:
            report = check_convexity(self.potential(), search.samples, self._rng(axiom))
        elif axiom is Axiom.OPEN:
            report = check_open(self._need_market(axiom), search.samples, self._rng(axiom))
        elif axiom is Axiom.QUASI_OPEN:
            report = check_quasi_open(self._need_market(axiom), search.lattice_bound, search.samples,
                                      self._rng(axiom))
        elif axiom is Axiom.PRICE_BOUND:
            report = price_bound_check(self._need_market(axiom), search.samples, self._rng(axiom))
        else:
            report = self.check_subgroup()
        logger.info("%s", report)
        return report

    def potential(self):
        market = self.experiment.market
        if market is not None:
            return market.C
        for name in ('G', 'g'):
            if hasattr(self.rule, name):
                return getattr(self.rule, name)
        raise ConfigError("CONVEX needs a market with a potential, {} has none".format(self.rule))

    def check_pi(self):
        """Path independence on a session of random trades over the candidate grid"""
        rng = self._rng(Axiom.PI)
        grid = self.search.candidate_grid(self.rule)
        session = open_session(self.rule, self.experiment.default_report())
        for i in range(PI_TRADES):
            session.execute_trade('random-{}'.format(i + 1), grid[int(rng.integers(len(grid)))])
        return session.verify_path_independence()

    def check_subgroup(self):
        rule = self.rule
        if rule.space.kind != FINITE:
            raise ConfigError("SUBGROUP needs a finite outcome space, {} has none".format(rule))
        market = self.experiment.market
        if market is not None and market.shares.basis is not None:
            reports = [rule._report(q) for q in market.shares.enumerate(self.search.lattice_bound)]
        else:
            reports = self.search.candidate_grid(rule)
        cashless, trades, member = trade_contracts(rule, reports)
        report = check_subgroup(trades, self.search.pair_budget, complete=rule.finite_reports, member=member)
        if not report.holds:
            report.witness['point'] = cashless[0] + report.witness['target']
        report.subject = str(rule)
        return report

    # sessions, extraction, figures

    def session(self):
        rule = self._need_rule()
        spec = self.experiment.config.get('session')
        if spec is None:
            raise ConfigError("Experiment {} has no 'session' section".format(self.experiment.name))
        session = open_session(rule, spec['r0'])
        for trader in spec['traders']:
            belief = make_belief(trader['belief'])
            # traders submit their numeric best response
            response = rule.best_response(belief, self.search.report_step)
            value = rule.property_report(belief)
            if rule.distance(value, response) > RESPONSE_TOL:
                logger.warning("Best response %s of %s is off the property %s",
                               to_plain(response), trader['name'], to_plain(value))
            session.execute_trade(trader['name'], response)
        rng = self.search.rng(STREAM_OFFSET + len(Axiom))
        grid = self.search.candidate_grid(rule)
        for i in range(spec['random_trades']):
            session.execute_trade('random-{}'.format(i + 1), grid[int(rng.integers(len(grid)))])
        settlement = session.settle(spec['outcome'])
        if abs(settlement.maker_loss - settlement.telescoped_loss) > 1e-9 * max(1.0, abs(settlement.maker_loss)):
            logger.warning("Settlement of %s does not telescope: %s vs %s", session,
                           settlement.maker_loss, settlement.telescoped_loss)
        return SessionRun(session, settlement, session.verify_path_independence())

    def extract(self):
        """Extraction result and whether it matched the configured failure step"""
        rule = self._need_rule()
        spec = self.experiment.config.get('extract')
        if spec is None:
            raise ConfigError("Experiment {} has no 'extract' section".format(self.experiment.name))
        try:
            extraction = extract_cost_market(rule, spec['reports'], spec['subgroup_budget'])
        except ExtractionError as e:
            logger.info("Extraction from %s stopped: %s", rule, e)
            result = {'status': 'failed', 'step': e.step, 'message': str(e), 'witness': e.witness}
        else:
            result = dict({'status': 'extracted', 'step': None}, **extraction.to_dict())
        ok = 'expect_step' not in spec or spec['expect_step'] == result['step']
        if not ok:
            logger.warning("Extraction expected to stop at %s, got %s", spec['expect_step'], result['step'])
        return result, ok

    def figures(self):
        specs = self.experiment.config['figures']
        if not specs:
            raise ConfigError("Experiment {} has no 'figures'".format(self.experiment.name))
        return [build_figure(spec) for spec in specs]


# Output

def result_dir(experiment, out=None):
    path = pathlib.Path(out or experiment.config['output']) / experiment.name
    path.mkdir(parents=True, exist_ok=True)
    return path


def header(experiment, command):
    return {
        'tool': 'scoring_markets',
        'version': __version__,
        'command': command,
        'experiment': experiment.name,
        'config_hash': config_hash(experiment.config, experiment.seed),
        'seed': experiment.seed,
    }


def write_yaml(path, document):
    path.write_text(yaml.safe_dump(to_plain(document), sort_keys=False, default_flow_style=None))
    logger.info("Wrote %s", path)
    return path


def write_check(experiment, run, out=None):
    directory = result_dir(experiment, out)
    paths = []
    for report in run.reports:
        document = dict(header(experiment, 'check'), report=report.to_dict())
        paths.append(write_yaml(directory / '{}.yaml'.format(report.axiom.value), document))
    summary = dict(header(experiment, 'check'),
                   verdicts={r.axiom.value: r.verdict.value for r in run.reports},
                   implication_violations=run.implications,
                   mismatches=run.mismatches)
    paths.append(write_yaml(directory / 'summary.yaml', summary))
    return paths


def write_session(experiment, result, out=None):
    directory = result_dir(experiment, out)
    ledger = directory / 'ledger.jsonl'
    ledger.write_text(result.session.to_jsonl())
    document = dict(header(experiment, 'session'), ledger=ledger.name, **result.to_dict())
    return [write_yaml(directory / 'session.yaml', document), ledger]


def write_extraction(experiment, result, out=None):
    directory = result_dir(experiment, out)
    return [write_yaml(directory / 'extraction.yaml', dict(header(experiment, 'extract'), **result))]


def write_figures(experiment, tables, out=None):
    directory = result_dir(experiment, out)
    paths = []
    for i, table in enumerate(tables, 1):
        path = directory / 'figure_{}_{}.tsv'.format(i, table.name)
        path.write_text(table.to_tsv())
        logger.info("Wrote %s", path)
        paths.append(path)
    return paths


def verdict_line(report):
    return '{:<12} {:<16} margin={:.3g} budget={}'.format(
        report.axiom.value, report.verdict.value, report.margin, report.budget)
