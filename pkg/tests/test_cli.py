import json

import pytest
import yaml

from scoring_markets import main
from scoring_markets.report import Axiom
from scoring_markets.runner import ExperimentRunner


def run(*argv):
    return main.main(list(argv) + ['--log-level', 'WARNING'])


def read_yaml(path):
    return yaml.safe_load(path.read_text())


def test_check_writes_one_report_per_axiom(tmp_path):
    assert run('check', '-c', 'mode_market', '--out', str(tmp_path)) == main.EXIT_OK
    out = tmp_path / 'mode_market'
    summary = read_yaml(out / 'summary.yaml')
    assert summary['tool'] == 'scoring_markets'
    assert summary['seed'] == 0
    assert summary['verdicts']['WN'] == 'fails'
    assert summary['verdicts']['ARB'] == 'holds'
    assert summary['mismatches'] == []
    wn = read_yaml(out / 'WN.yaml')
    assert wn['report']['verdict'] == 'fails'
    assert wn['report']['witness']


def test_reruns_are_byte_identical(tmp_path):
    assert run('check', '-c', 'mode_market', '--out', str(tmp_path / 'a')) == main.EXIT_OK
    assert run('check', '-c', 'mode_market', '--out', str(tmp_path / 'b'), '--jobs', '3') == main.EXIT_OK
    first, second = tmp_path / 'a' / 'mode_market', tmp_path / 'b' / 'mode_market'
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_seed_changes_config_hash(tmp_path):
    run('check', '-c', 'mode_market', '--out', str(tmp_path / 'a'))
    run('check', '-c', 'mode_market', '--out', str(tmp_path / 'b'), '--seed', '3')
    a = read_yaml(tmp_path / 'a' / 'mode_market' / 'summary.yaml')
    b = read_yaml(tmp_path / 'b' / 'mode_market' / 'summary.yaml')
    assert a['config_hash'] != b['config_hash']
    assert b['seed'] == 3


def test_expected_verdict_mismatch_exits_one(tmp_path):
    expect = tmp_path / 'expect.yaml'
    expect.write_text('WN: holds\n')
    code = run('check', '-c', 'mode_market', '--out', str(tmp_path), '--expect', str(expect))
    assert code == main.EXIT_MISMATCH
    summary = read_yaml(tmp_path / 'mode_market' / 'summary.yaml')
    assert summary['mismatches'] == [{'axiom': 'WN', 'expected': 'holds', 'actual': 'fails'}]


def test_invalid_config_exits_two(tmp_path):
    config = tmp_path / 'bad.yaml'
    config.write_text('name: bad\nmarket:\n  family: lottery\n')
    assert run('check', '-c', str(config), '--out', str(tmp_path)) == main.EXIT_CONFIG


def test_inconsistent_market_exits_two(tmp_path):
    config = tmp_path / 'finite_quantile.yaml'
    config.write_text('name: finite_quantile\nmarket:\n  family: quantile\n  outcomes: [0, 1]\n  alpha: 0.5\n')
    assert run('check', '-c', str(config), '--out', str(tmp_path)) == main.EXIT_CONFIG


def test_missing_section_exits_two(tmp_path):
    assert run('session', '-c', 'mode_market', '--out', str(tmp_path)) == main.EXIT_CONFIG


def test_check_config_flag():
    with pytest.raises(SystemExit):
        run('check', '-c', 'mode_market', '--check-config')


def test_session(tmp_path):
    assert run('session', '-c', 'mean_market', '--out', str(tmp_path)) == main.EXIT_OK
    out = tmp_path / 'mean_market'
    document = read_yaml(out / 'session.yaml')
    assert document['final_state'] == pytest.approx(0.5, abs=1e-6)
    assert document['settlement']['maker_loss'] == pytest.approx(0.15, abs=1e-6)
    assert document['path_independence']['verdict'] == 'holds'
    ledger = [json.loads(line) for line in (out / 'ledger.jsonl').read_text().splitlines()]
    assert [record['trader'] for record in ledger] == ['low', 'high', 'even']


def test_quantile_session(tmp_path):
    assert run('session', '-c', 'session_quantile', '--out', str(tmp_path)) == main.EXIT_OK
    document = read_yaml(tmp_path / 'session_quantile' / 'session.yaml')
    assert document['final_state'] == pytest.approx(-0.375, abs=1e-6)
    assert document['settlement']['maker_loss'] == pytest.approx(-0.1875, abs=1e-6)


def test_extract(tmp_path):
    assert run('extract', '-c', 'extract_binary_entropy', '--out', str(tmp_path)) == main.EXIT_OK
    document = read_yaml(tmp_path / 'extract_binary_entropy' / 'extraction.yaml')
    assert document['status'] == 'extracted'
    assert document['roundtrip_residual'] < 1e-8


def test_extract_expected_failure(tmp_path):
    assert run('extract', '-c', 'extract_mode', '--out', str(tmp_path)) == main.EXIT_OK
    document = read_yaml(tmp_path / 'extract_mode' / 'extraction.yaml')
    assert document['status'] == 'failed'
    assert document['step'] == 'subgroup'


def test_figures(tmp_path):
    assert run('figure', '--out', str(tmp_path)) == main.EXIT_OK
    names = sorted(p.name for p in (tmp_path / 'figures').iterdir())
    assert names == ['figure_1_mode.tsv', 'figure_2_mean.tsv', 'figure_3_median.tsv', 'figure_4_lmsr.tsv']


@pytest.mark.asyncio
async def test_runner_keeps_config_order(experiment):
    exp = experiment('mode_market')
    run_ = await ExperimentRunner(exp, jobs=4).check()
    assert [report.axiom for report in run_.reports] == [Axiom(a) for a in exp.axioms]
    assert run_.ok
    assert run_.implications == []
