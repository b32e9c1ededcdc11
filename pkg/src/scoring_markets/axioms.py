"""
Falsifiers for the market axioms of a scoring rule market.

Every checker searches a deterministic budget of reports, trade scenarios
or beliefs and returns an AxiomReport. A search that covered every case of
a finite report set says ``holds``; a search that ran out of budget without
a counterexample says ``holds-at-budget``; a counterexample gives ``fails``
with a witness that ``replay_witness`` re-evaluates.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .convex import coordinate_polish, interior_classifier
from .core import FINITE, REAL_LINE, combine, expected_payoff
from .errors import InvalidReport, MarketError
from .report import Axiom, AxiomReport, Verdict
from .scoring import DEFAULT_REPORT_SPAN, DEFAULT_REPORT_STEP, is_constant_contract

logger = logging.getLogger(__name__)


DEFAULT_MARGIN = 1e-9
DIVERGENCE_THRESHOLD = 1e6
PROBE_STEPS = 40
SHRINK_STEPS = 60
REPLAY_FACTOR = 10.0
GAIN_TOL = 1e-14
CONSTANT_TOL = 1e-9
REPORT_RESOLUTION = 1e-9  # relative; closer reports are the same report to the search
REFINE_STEPS = 24
UNREACHABLE = 1e300


@dataclass(frozen=True)
class SearchConfig:
    report_step: float = DEFAULT_REPORT_STEP
    report_span: float = DEFAULT_REPORT_SPAN
    reports: tuple = None
    margin: float = DEFAULT_MARGIN
    lattice_bound: int = 8
    scenarios: int = 200
    fixed_scenarios: tuple = ()
    portfolios: int = 50
    portfolio_size: int = 3
    candidate_limit: int = 101
    pair_budget: int = 20000
    samples: int = 200
    seed: int = 0

    def __post_init__(self):
        if not self.margin > 0:
            raise ValueError("Search margin must be positive, got {}".format(self.margin))
        if not self.report_step > 0:
            raise ValueError("Report step must be positive, got {}".format(self.report_step))
        if self.scenarios < 1 or self.portfolio_size < 1:
            raise ValueError("Need at least one scenario and one trade per portfolio")

    def rng(self, stream=0):
        return np.random.default_rng([self.seed, stream])

    def report_grid(self, rule):
        if self.reports is not None:
            return [rule.validate_report(r) for r in self.reports]
        return rule.report_grid(self.report_step, self.report_span)

    def candidate_grid(self, rule):
        """Report grid thinned to ``candidate_limit`` points when outcomes are continuous"""
        grid = self.report_grid(rule)
        if rule.space.kind == FINITE or len(grid) <= self.candidate_limit:
            return grid
        index = np.unique(np.linspace(0, len(grid) - 1, self.candidate_limit).round().astype(int))
        return [grid[i] for i in index]


class ScoreTable:
    """Score contracts of one rule, computed once per report"""

    def __init__(self, rule):
        self.rule = rule
        self._contracts = {}

    def key(self, r):
        if self.rule.finite_reports:
            return r
        return tuple(np.atleast_1d(r).tolist())

    def __call__(self, r):
        key = self.key(r)
        if key not in self._contracts:
            self._contracts[key] = self.rule.score_contract(r)
        return self._contracts[key]

    def trade(self, r_old, r_new):
        """F(r_new | r_old)"""
        return self(r_new) - self(r_old)

    def position(self, trades):
        contracts = [self(r_new) for _, r_new in trades] + [self(r_old) for r_old, _ in trades]
        return combine(contracts, [1.0] * len(trades) + [-1.0] * len(trades))

    def unique(self, reports):
        seen, kept = set(), []
        for r in reports:
            key = self.key(r)
            if key not in seen:
                seen.add(key)
                kept.append(r)
        return kept


def _worst_outcome(d):
    return min(d.space.evaluation_points(d.breakpoints()), key=d.evaluate)


def _grid_resolution(rule, grid):
    if rule.finite_reports or len(grid) < 2:
        return 0.0
    points = np.array([np.atleast_1d(r) for r in grid], dtype=float)
    gaps = [np.diff(np.unique(axis)) for axis in points.T]
    return max((float(g.max()) for g in gaps if len(g)), default=0.0)


# Scenario generation

def make_scenarios(rule, config, grid=None):
    """(r1, r1_new, r2) triples with r1 != r1_new, and whether they cover every triple of the grid"""
    grid = config.report_grid(rule) if grid is None else grid
    if len(grid) < 2:
        raise MarketError("Need at least two reports to build trade scenarios")
    fixed = [tuple(rule.validate_report(r) for r in triple) for triple in config.fixed_scenarios]
    total = len(grid) * (len(grid) - 1) * len(grid)
    if total <= config.scenarios:
        return fixed + [(a, b, c) for a, b in itertools.permutations(grid, 2) for c in grid], True
    rng = config.rng(1)
    scenarios = list(fixed)
    while len(scenarios) < config.scenarios + len(fixed):
        i, j, k = rng.integers(len(grid), size=3)
        if i != j:
            scenarios.append((grid[i], grid[j], grid[k]))
    return scenarios, False


def make_portfolios(rule, config, grid=None):
    """Positions of one to ``portfolio_size`` trades, each with the market state to neutralise from"""
    grid = config.report_grid(rule) if grid is None else grid
    rng = config.rng(2)
    portfolios = []
    for _ in range(config.portfolios):
        size = int(rng.integers(1, config.portfolio_size + 1))
        pairs = rng.integers(len(grid), size=(size, 2))
        trades = [(grid[i], grid[j]) for i, j in pairs]
        portfolios.append((trades, grid[int(rng.integers(len(grid)))]))
    return portfolios


# Incentive compatibility

def check_ic(rule, beliefs, config):
    """Grid argmax of E_p F(r | h) against the property value, for several histories h"""
    table = ScoreTable(rule)
    grid = config.report_grid(rule)
    resolution = _grid_resolution(rule, grid)
    histories = table.unique([grid[0], grid[len(grid) // 2], grid[-1]])
    worst = 0.0
    for count, p in enumerate(beliefs, 1):
        value = rule.property_value(p)
        target = rule.property_report(p)
        expected = np.array([expected_payoff(table(r), p) for r in grid])
        nearest = 0.0 if rule.finite_reports else min(rule.distance(r, target) for r in grid)
        tolerance = nearest + resolution * (1.0 + 1e-9)
        picks = [(h, grid[int(np.argmax(expected - expected_payoff(table(h), p)))]) for h in histories]
        picks.append((None, rule.best_response(p, config.report_step)))
        for h, best in picks:
            if isinstance(value, frozenset):
                miss = 0.0 if best in value else 1.0
                ok = best in value
            else:
                miss = rule.distance(best, target)
                ok = miss <= tolerance
            worst = max(worst, miss)
            if not ok:
                witness = {'belief': p, 'history': h, 'argmax': best, 'property': target,
                           'tolerance': tolerance,
                           'gain_at_argmax': expected_payoff(table(best), p),
                           'gain_at_property': expected_payoff(table(target), p)}
                return AxiomReport.failing(Axiom.IC, witness, margin=-miss, budget=count, subject=str(rule))
    logger.info("IC holds for %s on %s beliefs", rule, len(beliefs))
    return AxiomReport.holding(Axiom.IC, False, margin=-worst, budget=len(beliefs), subject=str(rule))


# No arbitrage

def check_arb(rule, config):
    """inf_y F(r' | r) <= margin for every pair of grid reports"""
    table = ScoreTable(rule)
    grid = config.report_grid(rule)
    m = len(grid)
    subject = str(rule)
    if rule.space.kind == FINITE:
        values = np.array([table(r).values for r in grid])
        best, where = -math.inf, None
        for i in range(m):
            infs = (values - values[i]).min(axis=1)
            infs[i] = -math.inf
            j = int(np.argmax(infs))
            if infs[j] > best:
                best, where = float(infs[j]), (i, j)
        pairs, exhaustive = m * (m - 1), rule.finite_reports
    else:
        index_pairs = list(itertools.permutations(range(m), 2))
        exhaustive = len(index_pairs) <= config.pair_budget
        if not exhaustive:
            rng = config.rng(3)
            index_pairs = [index_pairs[k] for k in rng.choice(len(index_pairs), config.pair_budget, replace=False)]
        best, where = -math.inf, None
        for i, j in index_pairs:
            inf = table.trade(grid[i], grid[j]).bounds()[0]
            if inf > best:
                best, where = inf, (i, j)
        pairs, exhaustive = len(index_pairs), False
    if where is not None and best > config.margin:
        i, j = where
        witness = {'r_old': grid[i], 'r_new': grid[j], 'inf': best}
        return AxiomReport.failing(Axiom.ARB, witness, margin=-best, budget=pairs, subject=subject)
    logger.info("No arbitrage in %s over %s report pairs", rule, pairs)
    return AxiomReport.holding(Axiom.ARB, exhaustive, margin=-best, budget=pairs, subject=subject)


# Worst-case loss

def _valid_report(rule, r):
    try:
        return rule.validate_report(r)
    except InvalidReport:
        return None


def _probe_sequences(rule, r0):
    """Candidate (report, outcome) pairs per step, along geometric outcome and report sequences"""
    x0 = None if rule.finite_reports else np.atleast_1d(np.asarray(r0, dtype=float))
    if rule.space.kind == REAL_LINE:
        centre = float(x0[0]) if x0 is not None and len(x0) == 1 else 0.0
        for sign in (1.0, -1.0):
            nudged = _valid_report(rule, rule._report(x0 + sign)) if x0 is not None else None
            steps = []
            for i in range(PROBE_STEPS):
                y = centre + sign * 2.0 ** i
                if not rule.space.contains(y):
                    break
                reports = [r for r in (nudged, _valid_report(rule, y)) if r is not None]
                steps.append([(r, y) for r in reports])
            yield 'outcome', steps
    if x0 is None:
        return
    for axis, sign in itertools.product(range(len(x0)), (1.0, -1.0)):
        steps = []
        for i in range(PROBE_STEPS):
            x = x0.copy()
            x[axis] += sign * 2.0 ** i
            r = _valid_report(rule, rule._report(x))
            if r is None:
                break
            breaks = [float(x[axis])] if rule.space.kind == REAL_LINE else ()
            steps.append([(r, y) for y in rule.space.evaluation_points(breaks)])
        yield 'report', steps


def _divergence_probe(rule, table, r0):
    """Longest geometric sequence along which F(r | r0)(y) keeps growing past the threshold"""
    start = table(r0)
    found = None
    for kind, steps in _probe_sequences(rule, r0):
        sequence = []
        for options in steps:
            losses = [(table(r).evaluate(y) - start.evaluate(y), r, y) for r, y in options]
            if not losses:
                break
            loss, r, y = max(losses, key=lambda item: item[0])
            sequence.append({'report': r, 'outcome': y, 'loss': loss})
        tail = [entry['loss'] for entry in sequence[-3:]]
        if len(tail) == 3 and tail[-1] >= DIVERGENCE_THRESHOLD and tail[0] <= tail[1] <= tail[2]:
            if found is None or tail[-1] > found['sequence'][-1]['loss']:
                found = {'r0': r0, 'kind': kind, 'sequence': sequence[-8:]}
    return found


def check_wcl(rule, r0, config):
    """sup over reports and outcomes of F(r | r0), the market maker's worst-case loss"""
    r0 = rule.validate_report(r0)
    table = ScoreTable(rule)
    start = table(r0)
    subject = str(rule)
    envelope = rule.score_envelope()
    if envelope is not None:
        bound_contract = envelope - start
        bound = bound_contract.bounds()[1]
        if math.isfinite(bound):
            y = max(bound_contract.space.evaluation_points(bound_contract.breakpoints()),
                    key=bound_contract.evaluate)
            logger.info("Worst-case loss of %s from %s is %s", rule, r0, bound)
            return AxiomReport.holding(Axiom.WCL, True, witness={'r0': r0, 'bound': bound, 'outcome': y},
                                       margin=bound, budget=0, subject=subject, notes=['closed form'])
        witness = _divergence_probe(rule, table, r0) or {'r0': r0, 'bound': bound}
        return AxiomReport.failing(Axiom.WCL, witness, margin=-math.inf, budget=PROBE_STEPS, subject=subject,
                                   notes=['closed form'])

    grid = config.candidate_grid(rule)
    bound = max((table(r) - start).bounds()[1] for r in grid)
    witness = _divergence_probe(rule, table, r0)
    if witness is not None or not math.isfinite(bound):
        witness = witness or {'r0': r0, 'bound': bound}
        return AxiomReport.failing(Axiom.WCL, witness, margin=-math.inf, budget=len(grid) + PROBE_STEPS,
                                   subject=subject)
    return AxiomReport.holding(Axiom.WCL, False, witness={'r0': r0, 'bound': bound}, margin=bound,
                               budget=len(grid) + PROBE_STEPS, subject=subject)


# Neutralisation

def _offsets(table, position, state, candidates):
    """(candidate, inf of position + F(candidate | state), constant?) per candidate"""
    start = table(state)
    if position.space.kind == FINITE:
        totals = np.array([table(c).values for c in candidates]) + (position.values - start.values)
        infs = totals.min(axis=1)
        spread = np.max(np.abs(totals - totals.mean(axis=1, keepdims=True)), axis=1)
        return [(c, float(inf), bool(s <= CONSTANT_TOL)) for c, inf, s in zip(candidates, infs, spread)]
    results = []
    for c in candidates:
        total = combine([position, table(c), start], [1.0, 1.0, -1.0])
        results.append((c, total.bounds()[0], is_constant_contract(total, CONSTANT_TOL)))
    return results


def _refine_sell_back(rule, table, position, state, seeds):
    """
    Local search for a sell-back between grid points.

    Reports on the segments from ``state`` toward each seed and its mirror
    image are tried at halving distances; the best one is then polished
    coordinate-wise. Returns (candidate, inf, constant) or None.
    """
    x = np.atleast_1d(np.asarray(state, dtype=float))
    points = []
    for seed in seeds:
        s = np.atleast_1d(np.asarray(seed, dtype=float))
        if s.shape != x.shape or np.array_equal(s, x):
            continue
        for end in (s, 2.0 * x - s):
            for k in range(1, REFINE_STEPS + 1):
                p = x + 0.5 ** k * (end - x)
                if rule.report_domain.contains(p):
                    points.append(rule._report(p))
    if not points:
        return None

    def inf_at(p):
        if not rule.report_domain.contains(p):
            return -math.inf
        try:
            value = _offsets(table, position, state, [rule._report(p)])[0][1]
        except MarketError:
            return -math.inf
        return -math.inf if math.isnan(value) else value

    start = max(table.unique(points), key=inf_at)
    x, _ = coordinate_polish(lambda p: max(inf_at(p), -UNREACHABLE), np.atleast_1d(start), rule.report_domain)
    c = rule._report(x) if inf_at(x) > inf_at(start) else start
    return _offsets(table, position, state, [c])[0]


def _neutralization_search(rule, axiom, portfolios, exhaustive, config, need_constant):
    table = ScoreTable(rule)
    grid = config.candidate_grid(rule)
    subject = str(rule)
    refine = not (need_constant or rule.finite_reports or getattr(rule.report_domain, 'discrete', False))
    worst = math.inf
    searched = degenerate = 0
    for trades, state in portfolios:
        position = table.position(trades)
        if is_constant_contract(position, CONSTANT_TOL):
            degenerate += 1
            continue
        searched += 1
        base = position.bounds()[0]
        candidates = table.unique(list(grid) + rule.neutralizer_candidates(trades, state)
                                  + [state] + [r for trade in trades for r in trade])
        best, best_margin, closest = None, -math.inf, None
        for c, inf, constant in _offsets(table, position, state, candidates):
            if closest is None or inf > closest[1]:
                closest = (c, inf, constant)
            if need_constant and not constant:
                continue
            gain = inf - base
            if gain > best_margin:
                best, best_margin = (c, inf, constant), gain
        if refine and not best_margin > config.margin:
            seeds = [closest[0]] + list(rule.neutralizer_candidates(trades, state))
            seeds += [r for trade in trades for r in trade]
            refined = _refine_sell_back(rule, table, position, state, seeds)
            if refined is not None and refined[1] - base > best_margin:
                best, best_margin = refined, refined[1] - base
        if not best_margin > config.margin:
            c, inf, constant = best or closest
            total = combine([position, table(c), table(state)], [1.0, 1.0, -1.0])
            witness = {'trades': trades, 'state': state, 'position_inf': base, 'candidate': c,
                       'candidate_inf': inf, 'constant': constant, 'outcome': _worst_outcome(total)}
            logger.info("%s fails for %s at %s", axiom.value, rule, trades)
            return AxiomReport.failing(axiom, witness, margin=best_margin, budget=searched, subject=subject)
        worst = min(worst, best_margin)
    notes = ['{} degenerate positions skipped'.format(degenerate)] if degenerate else []
    logger.info("%s holds for %s on %s positions", axiom.value, rule, searched)
    return AxiomReport.holding(axiom, exhaustive and searched > 0, margin=worst, budget=searched, subject=subject,
                               notes=notes)


def check_wn(rule, config):
    """Every single trade can be followed by a trade that strictly raises its worst payoff"""
    scenarios, exhaustive = make_scenarios(rule, config)
    portfolios = [([(r1, r1_new)], r2) for r1, r1_new, r2 in scenarios]
    return _neutralization_search(rule, Axiom.WN, portfolios, exhaustive and rule.finite_reports, config, False)


def check_tn(rule, config):
    """Every single trade can be turned into a constant payoff above its worst case"""
    scenarios, exhaustive = make_scenarios(rule, config)
    portfolios = [([(r1, r1_new)], r2) for r1, r1_new, r2 in scenarios]
    return _neutralization_search(rule, Axiom.TN, portfolios, exhaustive and rule.finite_reports, config, True)


def check_pn(rule, config):
    """A portfolio of trades can be turned into a constant payoff by one trade"""
    return _neutralization_search(rule, Axiom.PN, make_portfolios(rule, config), False, config, True)


def implication_violations(reports):
    """Pairs contradicting PN => TN => WN among reports on one subject"""
    verdicts = {report.axiom: report.holds for report in reports}
    violations = []
    for strong, weak in ((Axiom.PN, Axiom.TN), (Axiom.TN, Axiom.WN), (Axiom.PN, Axiom.WN)):
        if verdicts.get(strong) and verdicts.get(weak) is False:
            violations.append((strong, weak))
    return violations


# Bounded trader budget

def check_btb(rule, belief, state, epsilons, config):
    """For each budget eps a trade losing less than eps that strictly gains in expectation under belief"""
    state = rule.validate_report(state)
    subject = str(rule)
    value = rule.property_value(belief)
    if (state in value) if isinstance(value, frozenset) else rule.same_report(state, value):
        return AxiomReport.holding(Axiom.BTB, True, margin=0.0, budget=0, subject=subject,
                                   notes=['belief already agrees with the market state'])
    table = ScoreTable(rule)
    target = rule.property_report(belief)
    if rule.finite_reports or getattr(rule.report_domain, 'discrete', False):
        candidates = [r for r in config.report_grid(rule) if not rule.same_report(r, state)]
    else:
        x, direction = np.atleast_1d(state), np.atleast_1d(target) - np.atleast_1d(state)
        resolution = REPORT_RESOLUTION * max(1.0, float(np.max(np.abs(x))))
        candidates = [rule._report(x + direction)]
        for k in range(1, SHRINK_STEPS + 1):
            step = 0.5 ** k * direction
            if np.max(np.abs(step)) < resolution:
                break
            candidates.append(rule._report(x + step))
    moves = []
    for r in candidates:
        d = table.trade(state, r)
        moves.append((r, d.bounds()[0], expected_payoff(d, belief)))
    scale = max(1.0, abs(expected_payoff(table(state), belief)))
    worst = math.inf
    for eps in sorted(epsilons, reverse=True):
        affordable = [move for move in moves if move[1] > -eps]
        winning = [move for move in affordable if move[2] > GAIN_TOL * scale]
        if not winning:
            r, inf, gain = max(affordable, key=lambda m: m[2]) if affordable else max(moves, key=lambda m: m[1])
            witness = {'epsilon': eps, 'belief': belief, 'state': state, 'attempt': r, 'inf': inf, 'gain': gain}
            return AxiomReport.failing(Axiom.BTB, witness, margin=inf + eps, budget=len(moves), subject=subject)
        worst = min(worst, max(inf + eps for _, inf, _ in winning))
    logger.info("BTB holds for %s at %s budgets", rule, len(epsilons))
    return AxiomReport.holding(Axiom.BTB, False, margin=worst, budget=len(moves), subject=subject)


# Replaying witnesses

def _close(a, b, slack):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= slack * max(1.0, abs(a), abs(b))


def replay_witness(report, subject, margin=DEFAULT_MARGIN):
    """
    Re-evaluate the violating inequality recorded in a failing report.

    ``subject`` is the scoring rule for market axioms, the session for PI,
    the cost market for OPEN, QUASI_OPEN and PRICE_BOUND, the convex function
    for CONVEX and a rule or the contract sample for SUBGROUP.
    """
    if report.verdict is not Verdict.FAILS:
        raise ValueError("Only failing reports carry a witness to replay")
    w = report.witness
    slack = REPLAY_FACTOR * margin
    axiom = report.axiom

    if axiom is Axiom.IC:
        rule, p = subject, w['belief']
        value = rule.property_value(p)
        if isinstance(value, frozenset):
            return w['argmax'] not in value
        gain = expected_payoff(rule.score_contract(w['argmax']), p)
        return rule.distance(w['argmax'], value) > w['tolerance'] and _close(gain, w['gain_at_argmax'], slack)
    if axiom is Axiom.ARB:
        inf = (subject.score_contract(w['r_new']) - subject.score_contract(w['r_old'])).bounds()[0]
        return inf > 0.0 and _close(inf, w['inf'], slack)
    if axiom is Axiom.WCL:
        rule = subject
        if 'sequence' not in w:
            return not math.isfinite((rule.score_envelope() - rule.score_contract(w['r0'])).bounds()[1])
        last = w['sequence'][-1]
        loss = rule.score(last['report'], last['outcome']) - rule.score(w['r0'], last['outcome'])
        return loss >= DIVERGENCE_THRESHOLD and _close(loss, last['loss'], slack)
    if axiom in (Axiom.WN, Axiom.TN, Axiom.PN):
        table = ScoreTable(subject)
        position = table.position(w['trades'])
        total = combine([position, table(w['candidate']), table(w['state'])], [1.0, 1.0, -1.0])
        base, inf = position.bounds()[0], total.bounds()[0]
        if not (_close(base, w['position_inf'], slack) and _close(inf, w['candidate_inf'], slack)):
            return False
        improves = inf > base + margin
        if axiom is Axiom.WN:
            return not improves
        return not (improves and is_constant_contract(total, CONSTANT_TOL))
    if axiom is Axiom.BTB:
        d = subject.score_contract(w['attempt']) - subject.score_contract(w['state'])
        inf, gain = d.bounds()[0], expected_payoff(d, w['belief'])
        return _close(inf, w['inf'], slack) and not (inf > -w['epsilon'] and gain > 0.0)
    if axiom is Axiom.PI:
        session = subject
        first, second = (session.ledger[i - 1] for i in w['trades'])
        direct = session.rule.score_contract(second.r_new) - session.rule.score_contract(first.r_old)
        chained = first.contract + second.contract
        y = w['outcome']
        return abs(direct.evaluate(y) - chained.evaluate(y)) > slack * max(1.0, abs(direct.evaluate(y)))
    if axiom is Axiom.CONVEX:
        G, x, x2 = subject, np.asarray(w['x']), np.asarray(w['x2'])
        if w['kind'] == 'midpoint':
            value = 0.5 * (G.value(x) + G.value(x2)) - G.value(0.5 * (x + x2))
        elif w['kind'] == 'subgradient':
            value = G.value(x2) - G.value(x) - float(G.gradient(x) @ (x2 - x))
        else:
            value = float((G.gradient(x2) - G.gradient(x)) @ (x2 - x))
        return value < 0.0 and _close(value, w['slack'], slack)
    if axiom is Axiom.QUASI_OPEN:
        v = np.asarray(w['v'])
        value = float(np.max(subject.phi @ v) - np.asarray(w['subgradient']) @ v)
        return value <= slack
    if axiom is Axiom.PRICE_BOUND:
        q, v = np.asarray(w['q']), np.asarray(w['v'])
        cost = subject.C.value(q + v) - subject.C.value(q)
        return float(np.max((subject.phi @ v) / subject.b)) - cost <= slack
    if axiom is Axiom.OPEN:
        if w['kind'] == 'gradient-on-boundary':
            return not interior_classifier(subject.phi, tol=0.0)(w['gradient'])
        return w['q'] is None or float(np.max(np.abs(subject.C.gradient(w['q']) - w['target']))) > 1e-6
    if axiom is Axiom.SUBGROUP:
        if 'point' in w:
            if subject.finite_reports:
                target = np.asarray(w['target'])
                return all(subject.nearest_report(subject.cashless_scores(r) + target) is None
                           for r in subject.report_labels)
            return subject.nearest_report(w['point']) is None
        sample = np.atleast_2d(np.asarray(subject, dtype=float))
        target = np.asarray(w['target'])
        return bool(np.min(np.max(np.abs(sample - target), axis=1)) > slack * (1.0 + np.max(np.abs(target))))
    raise ValueError("No replay for {}".format(axiom))
