import argparse
import asyncio
import logging
import sys

import trafaret_config
from trafaret_config import commandline

from .errors import MarketError
from .factory import build_experiment
from .runner import (ExperimentRunner, verdict_line, write_check, write_extraction, write_figures,
                     write_session)
from .settings import add_config_options, bundled_configs, load_config, resolve_config_path
from .utils import EXPECT, TRAFARET

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"

parser = argparse.ArgumentParser(
    prog='scoring_markets',
    description='Check market axioms of scoring-rule and cost-function prediction markets.',
    epilog='Bundled configs: {}'.format(', '.join(bundled_configs())))

parser.add_argument('command', choices=['check', 'session', 'extract', 'figure'],
                    help='check axioms, run a scripted session, extract a cost function or write figure data')
add_config_options(parser)
parser.add_argument('--seed', type=int, help='Override the config seed')
parser.add_argument('--out', help='Output directory (default: the config output key)')
parser.add_argument('--jobs', type=int, default=1, help='Axiom checks run in parallel')
parser.add_argument('--expect', help='YAML mapping of axiom to expected verdict, merged over the config')
parser.add_argument('--log-level', help='Log level', default='INFO')


def load_expected(path):
    if path is None:
        return {}
    return trafaret_config.read_and_validate(path, EXPECT)


def do_check(runner, options, expected):
    run = asyncio.run(runner.check(expected))
    write_check(runner.experiment, run, options.out)
    for report in run.reports:
        print(verdict_line(report))
    for strong, weak in run.implications:
        print('implication violated: {} holds, {} fails'.format(strong, weak))
    for mismatch in run.mismatches:
        print('MISMATCH {axiom}: expected {expected}, got {actual}'.format(**mismatch))
    return EXIT_OK if run.ok else EXIT_MISMATCH


def do_session(runner, options, expected):
    result = runner.session()
    write_session(runner.experiment, result, options.out)
    settlement = result.settlement
    for trader, payoff in settlement.payoffs:
        print('{:<16} {:.6g}'.format(trader, payoff))
    print('maker loss {:.6g} at outcome {}'.format(settlement.maker_loss, settlement.outcome))
    print(verdict_line(result.path_independence))
    return EXIT_OK if result.path_independence.holds else EXIT_MISMATCH


def do_extract(runner, options, expected):
    result, ok = runner.extract()
    write_extraction(runner.experiment, result, options.out)
    if result['step'] is None:
        print('extracted: round-trip residual {:.3g}'.format(result['roundtrip_residual']))
    else:
        print('failed at {}: {}'.format(result['step'], result['message']))
    return EXIT_OK if ok else EXIT_MISMATCH


def do_figure(runner, options, expected):
    for path in write_figures(runner.experiment, runner.figures(), options.out):
        print(path)
    return EXIT_OK


COMMANDS = {
    'check': do_check,
    'session': do_session,
    'extract': do_extract,
    'figure': do_figure,
}


def main(argv=None):
    options = parser.parse_args(argv)
    logging.basicConfig(level=options.log_level.upper(), format=LOG_FORMAT)
    options.config = str(resolve_config_path(options.config, options.command))
    try:
        config = load_config(options.config)
        expected = load_expected(options.expect)
    except trafaret_config.ConfigError as e:
        e.output()
        return EXIT_CONFIG
    if options.print_config or options.print_config_vars or options.check_config:
        # prints and exits
        commandline.config_from_options(options, TRAFARET)
    try:
        runner = ExperimentRunner(build_experiment(config, options.seed), options.jobs)
        return COMMANDS[options.command](runner, options, expected)
    except MarketError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_CONFIG


def run():
    sys.exit(main(sys.argv[1:]))


if __name__ == '__main__':
    run()
