"""
Generalised cost-function market makers.

Sign convention: a trader buying bundle v at share state q pays
C(q + v) - C(q) units of the denomination security b (cash when b = 1)
and receives v . phi(y). ``CostMarket.mirrored`` gives the same contracts
under the opposite orientation of share vectors.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.spatial import Delaunay, cKDTree

from .convex import Box, LogPartition, Polyhedral, Reflected, conjugate, interior_classifier
from .core import FINITE, FiniteContract, OutcomeSpace
from .errors import ConjugateError, ExtractionError, LatticeViolation, MarketError, OutcomeSpaceMismatch
from .report import Axiom, AxiomReport
from .scoring import DEFAULT_REPORT_STEP, ExpectationRule, ScoringRule

logger = logging.getLogger(__name__)


DEFAULT_LATTICE_BOUND = 8
MEMBERSHIP_TOL = 1e-9
RANK_TOL = 1e-9
SAMPLE_SPAN = 5.0


class ShareSpace:
    """All of R^k, or the integer lattice spanned by the rows of ``basis``"""

    def __init__(self, dim, basis=None, bound=DEFAULT_LATTICE_BOUND):
        self.dim = int(dim)
        self.bound = int(bound)
        if basis is not None:
            basis = np.array(basis, dtype=float)
            if basis.ndim == 1:
                basis = basis[:, None]
            if basis.shape[1] != self.dim or np.linalg.matrix_rank(basis) != len(basis):
                raise ValueError("Lattice basis must be linearly independent rows in R^{}".format(self.dim))
            basis.setflags(write=False)
        self.basis = basis

    @classmethod
    def full(cls, dim):
        return cls(dim)

    @classmethod
    def lattice(cls, basis, bound=DEFAULT_LATTICE_BOUND):
        basis = np.array(basis, dtype=float)
        if basis.ndim == 1:
            basis = basis[:, None]
        return cls(basis.shape[1], basis, bound)

    @property
    def kind(self):
        return 'full' if self.basis is None else 'lattice'

    def coefficients(self, v):
        coefficients, *_ = np.linalg.lstsq(self.basis.T, np.atleast_1d(v), rcond=None)
        return coefficients

    def contains(self, v, tol=MEMBERSHIP_TOL):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if v.shape != (self.dim,) or not np.all(np.isfinite(v)):
            return False
        if self.basis is None:
            return True
        c = self.coefficients(v)
        return bool(np.max(np.abs(c @ self.basis - v)) <= tol and np.max(np.abs(c - np.round(c))) <= tol)

    def enumerate(self, bound=None):
        """Lattice points with integer coefficients in [-bound, bound]"""
        if self.basis is None:
            raise LatticeViolation("A full share space has no lattice to enumerate")
        bound = self.bound if bound is None else bound
        axis = np.arange(-bound, bound + 1)
        coefficients = np.array(list(itertools.product(axis, repeat=len(self.basis))), dtype=float)
        return coefficients @ self.basis

    def sample(self, rng, size, span=SAMPLE_SPAN):
        if self.basis is None:
            return rng.uniform(-span, span, size=(size, self.dim))
        coefficients = rng.integers(-self.bound, self.bound + 1, size=(size, len(self.basis)))
        return coefficients @ self.basis

    def __str__(self):
        if self.basis is None:
            return 'R^{}'.format(self.dim)
        return 'Z-span{}'.format(self.basis.tolist())


@dataclass
class Neutralization:
    bundle: np.ndarray
    cost: float
    cash: float
    net_contract: FiniteContract
    position_inf: float

    @property
    def margin(self):
        return self.net_contract.bounds()[0] - self.position_inf

    @property
    def constant(self):
        lo, hi = self.net_contract.bounds()
        return hi - lo <= MEMBERSHIP_TOL * max(1.0, abs(lo))

    def to_dict(self):
        return {'bundle': self.bundle, 'cost': self.cost, 'cash': self.cash,
                'net_contract': self.net_contract, 'position_inf': self.position_inf,
                'margin': self.margin}


class CostMarket:

    def __init__(self, space, C, phi, shares=None, q0=None, denomination=None):
        if space.kind != FINITE:
            raise OutcomeSpaceMismatch("Cost markets need a finite outcome space")
        phi = np.array(phi, dtype=float)
        if phi.ndim == 1:
            phi = phi[:, None]
        if phi.shape != (space.n, C.dim):
            raise OutcomeSpaceMismatch("phi must be {} x {}, got {}".format(space.n, C.dim, phi.shape))
        if np.linalg.matrix_rank(phi[1:] - phi[0]) != C.dim:
            raise ValueError("Security payoffs must be affinely independent")
        b = np.ones(space.n) if denomination is None else np.array(denomination, dtype=float)
        if b.shape != (space.n,) or b.min() <= 0:
            raise ValueError("Denomination security must be positive on every outcome")
        phi.setflags(write=False)
        b.setflags(write=False)
        self.space = space
        self.C = C
        self.phi = phi
        self.b = b
        self.shares = shares or ShareSpace.full(C.dim)
        self.q = self._validate_bundle(np.zeros(C.dim) if q0 is None else q0)

    @property
    def dim(self):
        return self.C.dim

    @property
    def cash_denominated(self):
        return bool(np.all(self.b == 1.0))

    def __str__(self):
        return "CostMarket({}, {}, {})".format(self.C.name, self.space, self.shares)

    def _validate_bundle(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if not self.shares.contains(v):
            raise LatticeViolation("Bundle {} not in {}".format(v.tolist(), self.shares))
        return v

    def quote(self, v, q=None):
        """(cost, contract) of buying v at state q, without trading"""
        v = self._validate_bundle(v)
        q = self.q if q is None else np.atleast_1d(np.asarray(q, dtype=float))
        cost = self.C.value(q + v) - self.C.value(q)
        return cost, FiniteContract(self.space, self.phi @ v - cost * self.b)

    def trade(self, v):
        cost, contract = self.quote(v)
        self.q = self.q + np.atleast_1d(np.asarray(v, dtype=float))
        logger.debug("%s traded %s for %s", self, np.atleast_1d(v).tolist(), cost)
        return cost, contract

    def price(self, q=None):
        return self.C.strict_gradient(self.q if q is None else q)

    def position(self, bundles, q=None):
        """(bundle, cost) pairs for bundles bought one after another from state q"""
        q = np.array(self.q if q is None else q, dtype=float)
        held = []
        for v in bundles:
            cost, _ = self.quote(v, q)
            held.append((np.atleast_1d(np.asarray(v, dtype=float)), cost))
            q = q + held[-1][0]
        return held

    def neutralizing_bundle(self, position, q=None):
        """Sell the summed position back: v* = -sum(v_i), leaving only denomination units"""
        if not position:
            raise MarketError("Cannot neutralize an empty position")
        bundles = [np.atleast_1d(np.asarray(v, dtype=float)) for v, _ in position]
        paid = sum(cost for _, cost in position)
        held = FiniteContract(self.space, sum(self.phi @ v for v in bundles) - paid * self.b)
        v_star = -sum(bundles)
        cost, contract = self.quote(v_star, q)
        net = held + contract
        return Neutralization(v_star, cost, -(paid + cost), net, held.bounds()[0])

    def mirrored(self):
        """Same market with share vectors negated: C'(q) = C(-q), phi' = -phi"""
        shares = self.shares if self.shares.basis is None else ShareSpace.lattice(-self.shares.basis,
                                                                                  self.shares.bound)
        return CostMarket(self.space, Reflected(self.C), -self.phi, shares, -self.q, self.b)


def discretized_lmsr(bound=DEFAULT_LATTICE_BOUND, labels=(0, 1)):
    """Binary LMSR C(q) = log(1 + e^q) restricted to integer trades"""
    return CostMarket(OutcomeSpace.finite(labels), LogPartition([[0.0], [1.0]]), [[0.0], [1.0]],
                      ShareSpace.lattice([[1.0]], bound))


def binary_lmsr(labels=(0, 1)):
    return CostMarket(OutcomeSpace.finite(labels), LogPartition([[0.0], [1.0]]), [[0.0], [1.0]])


class _LatticeReports:
    """Report domain of a cost rule over a lattice share space"""

    discrete = True

    def __init__(self, shares):
        self.shares = shares
        self.dim = shares.dim
        self.bounded = False
        self.closed = True

    def contains(self, x):
        return self.shares.contains(x)

    def grid(self, step=None, span=None):
        return self.shares.enumerate()

    def center(self):
        return np.zeros(self.dim)


class CostFunctionRule(ScoringRule):
    """A cost market seen as a scoring rule over share states: S(q, y) = q . phi(y) - C(q) b(y)"""
    family = 'cost'

    def __init__(self, market):
        super().__init__(market.space)
        self.market = market
        self.report_domain = (Box.full(market.dim) if market.shares.basis is None
                              else _LatticeReports(market.shares))

    def __str__(self):
        return 'cost[{}]({})'.format(self.market.C.name, self.space)

    def score_contract(self, q):
        q = np.atleast_1d(self.validate_report(q))
        return FiniteContract(self.space, self.market.phi @ q - self.market.C.value(q) * self.market.b)

    def report_grid(self, step=DEFAULT_REPORT_STEP, span=SAMPLE_SPAN):
        if self.market.shares.basis is not None:
            return [self._report(q) for q in self.market.shares.enumerate()]
        return super().report_grid(step, span)

    def score_envelope(self):
        values = []
        for point, b in zip(self.market.phi, self.market.b):
            try:
                value, _ = conjugate(self.market.C, point / b)
            except ConjugateError:
                return None
            values.append(b * value)
        if not all(map(math.isfinite, values)):
            return None
        return FiniteContract(self.space, values)

    def property_value(self, p):
        self._check_belief(p)
        target = (p.probabilities @ self.market.phi) / float(p.probabilities @ self.market.b)
        if self.market.shares.basis is not None:
            return self.best_response(p)
        return self._report(self.market.C.gradient_inverse(target))

    def best_response(self, p, step=DEFAULT_REPORT_STEP):
        if self.market.shares.basis is None:
            return super().best_response(p, step)
        self._check_belief(p)
        grid = self.report_grid()
        return grid[int(np.argmax([self.expected_score(q, p) for q in grid]))]

    def neutralizer_candidates(self, trades, state):
        candidate = self._offset_target(np.atleast_1d, trades, state)
        return [self._report(candidate)] if self.market.shares.contains(candidate) else []

    def nearest_report(self, h, tol=MEMBERSHIP_TOL, step=DEFAULT_REPORT_STEP):
        if not self.market.cash_denominated:
            return super().nearest_report(h, tol, step)
        basis = self.market.phi - self.market.phi.mean(axis=0)
        q, *_ = np.linalg.lstsq(basis, np.asarray(h, dtype=float), rcond=None)
        if np.max(np.abs(basis @ q - h)) > tol or not self.market.shares.contains(q):
            return None
        return self._report(q)


# Structural checks

def _gradient_extremes(C, q):
    return C.subdifferential(q) if not C.differentiable else [C.gradient(q)]


def _interior_targets(phi, count, rng):
    if phi.shape[1] == 1:
        lo, hi = phi.min(), phi.max()
        return [np.array([z]) for z in np.linspace(lo, hi, count + 2)[1:-1]]
    weights = rng.dirichlet(np.ones(len(phi)), size=count)
    return list(weights @ phi)


def check_open(market, budget, rng, tol=1e-6):
    """Sampled gradients strictly inside conv(phi(Y)), and interior prices reached by inversion"""
    subject = str(market)
    inside = interior_classifier(market.phi, tol=0.0)
    checked = 0
    for q in rng.uniform(-SAMPLE_SPAN, SAMPLE_SPAN, size=(budget, market.dim)):
        checked += 1
        for x in _gradient_extremes(market.C, q):
            if not inside(x):
                return AxiomReport.failing(Axiom.OPEN, {'kind': 'gradient-on-boundary', 'q': q, 'gradient': x},
                                           margin=0.0, budget=checked, subject=subject)
    worst = 0.0
    for z in _interior_targets(market.phi, max(1, budget // 10), rng):
        checked += 1
        try:
            q = market.C.gradient_inverse(z)
            miss = float(np.max(np.abs(market.C.gradient(q) - z)))
        except ConjugateError:
            q, miss = None, math.inf
        worst = max(worst, miss)
        if miss > tol:
            return AxiomReport.failing(Axiom.OPEN, {'kind': 'price-unreached', 'target': z, 'q': q, 'miss': miss},
                                       margin=-miss, budget=checked, subject=subject)
    logger.info("%s is open on %s samples", market, checked)
    return AxiomReport.holding(Axiom.OPEN, False, margin=-worst, budget=checked, subject=subject)


def check_quasi_open(market, bound=None, samples=200, rng=None):
    """
    x . v < max_y v . phi(y) for share states q, nonzero bundles v and x in dC(q).

    Lattice share spaces are enumerated within the coefficient bound; full
    share spaces are sampled.
    """
    subject = str(market)
    shares = market.shares
    if shares.basis is not None:
        points = shares.enumerate(bound)
        notes = ['exhaustive within coefficient bound {}'.format(bound or shares.bound)]
    else:
        points = shares.sample(rng or np.random.default_rng(0), samples)
        notes = []
    bundles = points[np.max(np.abs(points), axis=1) > 0]
    budget = len(points) * len(bundles)
    if len(bundles) == 0:
        return AxiomReport.holding(Axiom.QUASI_OPEN, True, margin=math.inf, budget=0, subject=subject,
                                   notes=['no nonzero bundles'])
    ceiling = np.max(bundles @ market.phi.T, axis=1)
    worst = math.inf
    for q in points:
        for x in _gradient_extremes(market.C, q):
            slack = ceiling - bundles @ x
            i = int(np.argmin(slack))
            worst = min(worst, float(slack[i]))
            if slack[i] <= 0:
                witness = {'q': q, 'v': bundles[i], 'subgradient': x, 'slack': slack[i]}
                return AxiomReport.failing(Axiom.QUASI_OPEN, witness, margin=float(slack[i]), budget=budget,
                                           subject=subject)
    logger.info("%s is quasi-open, minimum slack %s", market, worst)
    return AxiomReport.holding(Axiom.QUASI_OPEN, False, margin=worst, budget=budget, subject=subject, notes=notes)


def _span_coordinates(sample):
    """Coordinates of the sample in an orthonormal basis of its span"""
    u, s, _ = np.linalg.svd(sample.T, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * max(1.0, s.max() if len(s) else 0.0)))
    return u[:, :rank]


def check_subgroup(sample, budget=5000, complete=False, member=None, tol=MEMBERSHIP_TOL):
    """
    Falsifier for additive-subgroup structure of a set of cashless contracts.

    Looks for d, d' with -d or d + d' outside the set. Membership is decided by
    ``member`` when given, by lookup when the sample is the whole set
    (``complete``), and otherwise only for targets inside the sample's hull.
    """
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    subject = 'sample of {} contracts'.format(len(sample))
    tree = cKDTree(sample)
    basis = _span_coordinates(sample)
    coordinates = sample @ basis if basis.shape[1] else np.zeros((len(sample), 0))
    hull = None
    if basis.shape[1] >= 2 and len(sample) > basis.shape[1]:
        hull = Delaunay(coordinates)

    def inside_hull(x):
        if basis.shape[1] == 0:
            return bool(np.max(np.abs(x)) <= tol)
        if np.max(np.abs(x - basis @ (basis.T @ x))) > tol:
            return False
        c = basis.T @ x
        if hull is None:
            return bool(coordinates.min() - tol <= c[0] <= coordinates.max() + tol)
        return bool(hull.find_simplex(c, tol=tol) >= 0)

    def present(x):
        if member is not None:
            return member(x)
        if complete or inside_hull(x):
            distance, _ = tree.query(x, p=np.inf, distance_upper_bound=tol * (1.0 + np.max(np.abs(x))))
            return bool(np.isfinite(distance))
        return None

    tested = 0
    candidates = [('negation', (i,), -d) for i, d in enumerate(sample)]
    candidates += [('sum', (i, j), sample[i] + sample[j])
                   for i, j in itertools.combinations_with_replacement(range(len(sample)), 2)]
    for kind, indices, target in candidates:
        if tested >= budget:
            break
        found = present(target)
        if found is None:
            continue
        tested += 1
        if not found:
            witness = {'kind': kind, 'indices': list(indices), 'target': target}
            logger.info("Subgroup closure fails on %s: %s %s", subject, kind, indices)
            return AxiomReport.failing(Axiom.SUBGROUP, witness, margin=0.0, budget=tested, subject=subject)
    return AxiomReport.holding(Axiom.SUBGROUP, False, margin=0.0, budget=tested, subject=subject)


def trade_contracts(rule, reports):
    """
    Cashless scores h(r) of the reports, the projected trade contracts
    h(r') - h(r) between them, and a membership oracle for that set of trades.
    """
    cashless = np.array([rule.cashless_scores(r) for r in reports])
    differences = np.array([cashless[j] - cashless[i]
                            for i, j in itertools.permutations(range(len(reports)), 2)])

    def member(x):
        return any(rule.nearest_report(h + x) is not None for h in cashless)

    return cashless, differences, member


def price_bound_check(market, trials, rng, span=SAMPLE_SPAN):
    """max_y v . phi(y) / b(y) > C(q + v) - C(q) on random (q, v) with v != 0"""
    subject = str(market)
    worst = math.inf
    used = 0
    for _ in range(trials):
        q = rng.uniform(-span, span, size=market.dim)
        v = rng.uniform(-span, span, size=market.dim)
        if np.max(np.abs(v)) < 1e-6:
            continue
        used += 1
        ceiling = float(np.max((market.phi @ v) / market.b))
        cost = market.C.value(q + v) - market.C.value(q)
        slack = ceiling - cost
        worst = min(worst, slack)
        if slack <= 0:
            return AxiomReport.failing(Axiom.PRICE_BOUND, {'q': q, 'v': v, 'ceiling': ceiling, 'cost': cost},
                                       margin=slack, budget=used, subject=subject)
    logger.info("Price bound holds for %s on %s trials, minimum margin %s", market, used, worst)
    return AxiomReport.holding(Axiom.PRICE_BOUND, False, margin=worst, budget=used, subject=subject)


# Extraction of a cost function from a scoring rule market

@dataclass
class Extraction:
    rule: ScoringRule
    reports: list
    phi: np.ndarray
    shares: np.ndarray
    cash: np.ndarray
    offset: np.ndarray
    market: CostMarket
    solve_residual: float
    roundtrip_residual: float = math.nan
    subgroup: AxiomReport = None
    notes: list = field(default_factory=list)

    def payoffs(self, i, j):
        """Payoff vector for moving from reports[i] to reports[j] in the extracted market"""
        v = self.shares[j] - self.shares[i]
        cost = self.market.C.value(self.shares[j]) - self.market.C.value(self.shares[i])
        return self.phi @ v - cost

    def compare_to_conjugate(self):
        """Max deviation between extracted C and the conjugate of the rule's potential, up to affine terms"""
        if not isinstance(self.rule, ExpectationRule):
            return None
        natural = np.array([self.rule.shares(r) for r in self.reports])
        reference = np.array([conjugate(self.rule.G, q)[0] for q in natural])
        extracted = np.array([self.market.C.value(v) for v in self.shares])
        design = np.column_stack([natural, np.ones(len(natural))])
        coefficients, *_ = np.linalg.lstsq(design, extracted - reference, rcond=None)
        return float(np.max(np.abs(extracted - reference - design @ coefficients)))

    def to_dict(self):
        return {
            'rule': str(self.rule),
            'phi': self.phi,
            'shares': [{'report': r, 'v': v} for r, v in zip(self.reports, self.shares)],
            'cost_samples': [{'v': v, 'C': self.market.C.value(v)} for v in self.shares],
            'solve_residual': self.solve_residual,
            'roundtrip_residual': self.roundtrip_residual,
            'conjugate_deviation': self.compare_to_conjugate(),
            'subgroup': self.subgroup,
            'notes': self.notes,
        }


def extract_cost_market(rule, grid, subgroup_budget=2000):
    """
    Rebuild a cost-function market from a scoring rule market over finite outcomes.

    Steps: subgroup closure of the projected score differences, a basis of
    their span (the securities), shares and cash per report, injectivity of
    the share map, and convexity of the cost points C(v(r)) = -cash(r).
    """
    if rule.space.kind != FINITE:
        raise OutcomeSpaceMismatch("Extraction needs a finite outcome space")
    reports = [rule.validate_report(r) for r in grid]
    if len(reports) < 2:
        raise ExtractionError('rank', "need at least two reports")
    logger.info("Extracting a cost function from %s on %s reports", rule, len(reports))
    scores = np.array([rule.score_contract(r).values for r in reports])

    # subgroup
    cashless, trades, member = trade_contracts(rule, reports)
    subgroup = check_subgroup(trades, subgroup_budget, complete=rule.finite_reports, member=member)
    subgroup.subject = str(rule)
    if not subgroup.holds:
        witness = dict(subgroup.witness, point=cashless[0] + subgroup.witness['target'])
        raise ExtractionError('subgroup', "projected trade contracts are not closed under "
                              + subgroup.witness['kind'], witness)

    # rank
    differences = cashless - cashless[0]
    q_factor, r_factor, _ = linalg.qr(differences.T, mode='economic', pivoting=True)
    diagonal = np.abs(np.diag(r_factor))
    k = int(np.sum(diagonal > RANK_TOL * max(1.0, diagonal.max() if len(diagonal) else 0.0)))
    if k == 0:
        raise ExtractionError('rank', "degenerate rule: every score difference is cash")
    phi = q_factor[:, :k]

    # solve S(r) = phi v(r) + g(r) 1 + offset
    offset = cashless[0]
    design = np.column_stack([phi, np.ones(rule.space.n)])
    solution, *_ = np.linalg.lstsq(design, (scores - offset).T, rcond=None)
    shares, cash = solution[:k].T, solution[k]
    solve_residual = float(np.max(np.abs(design @ solution - (scores - offset).T)))
    if solve_residual > 1e-8:
        raise ExtractionError('solve', "scores leave the span of the securities (residual {})".format(solve_residual))

    # injectivity
    for i, j in itertools.combinations(range(len(reports)), 2):
        if np.max(np.abs(shares[i] - shares[j])) <= RANK_TOL and abs(cash[i] - cash[j]) > 1e-8:
            raise ExtractionError('injectivity', "reports share a bundle but differ in cash",
                                  {'reports': [reports[i], reports[j]], 'v': shares[i]})

    # convexity: each cost point must carry a supporting affine minorant
    costs = -cash
    m = len(reports)
    slack = 1e-9 * max(1.0, float(np.max(np.abs(costs))))
    slopes, intercepts = [], []
    for j in range(m):
        a_ub = np.column_stack([shares, np.ones(m)])
        result = optimize.linprog(-a_ub.sum(axis=0), A_ub=a_ub, b_ub=costs + slack,
                                  A_eq=a_ub[j:j + 1], b_eq=costs[j:j + 1],
                                  bounds=[(None, None)] * (k + 1), method='highs')
        if result.status != 0:
            raise ExtractionError('convexity', "cost point lies above the convex hull of the others",
                                  {'report': reports[j], 'v': shares[j], 'C': costs[j]})
        slopes.append(result.x[:k])
        intercepts.append(result.x[k])

    market = CostMarket(rule.space, Polyhedral(slopes, intercepts), phi)
    extraction = Extraction(rule, reports, phi, shares, cash, offset, market, solve_residual, subgroup=subgroup)
    worst = 0.0
    for i, j in itertools.product(range(m), repeat=2):
        worst = max(worst, float(np.max(np.abs(extraction.payoffs(i, j) - (scores[j] - scores[i])))))
    extraction.roundtrip_residual = worst
    logger.info("Extraction of %s done, k=%s, round-trip residual %s", rule, k, worst)
    return extraction
