"""
Scoring rules for the finite, expectation, quantile, expectile and ratio families.

Every rule exposes ``score``, ``score_contract`` (the payoff S(r, .) as a
Contract), ``property_value`` (the statistic the rule elicits) and
``best_response`` (a numerical maximiser of expected score, kept independent
of ``property_value`` so the two can be compared).
"""
import logging

import numpy as np
from scipy import integrate, optimize

from .convex import Box, coordinate_polish, as_point
from .core import (
    FINITE,
    IDENTITY,
    REAL_LINE,
    Contract,
    FiniteBelief,
    FiniteContract,
    PiecewiseContract,
    PiecewiseLinearCDF,
    expected_payoff,
    project_cashless,
)
from .errors import BeliefMismatch, InvalidReport, InvalidRule, OutcomeSpaceMismatch, UnsupportedContract

logger = logging.getLogger(__name__)


DEFAULT_REPORT_STEP = 1e-2
DEFAULT_REPORT_SPAN = 5.0
EXPECTILE_XTOL = 1e-10
TIE_TOL = 1e-12


class ScoringRule:
    family = None
    report_labels = None
    report_domain = None

    def __init__(self, space):
        self.space = space

    # reports

    @property
    def finite_reports(self):
        return self.report_labels is not None

    @property
    def report_dim(self):
        return None if self.finite_reports else self.report_domain.dim

    def validate_report(self, r):
        """Normalised report; out-of-space reports are rejected, never clamped"""
        if self.finite_reports:
            if r not in self.report_labels:
                raise InvalidReport("Report {!r} not in {}".format(r, self.report_labels))
            return r
        try:
            x = as_point(r, self.report_dim)
        except (TypeError, ValueError):
            raise InvalidReport("Report {!r} is not a point".format(r)) from None
        if not self.report_domain.contains(x):
            raise InvalidReport("Report {!r} outside {}".format(r, self.report_domain))
        return self._report(x)

    def _report(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(x[0]) if len(x) == 1 else x

    def report_grid(self, step=DEFAULT_REPORT_STEP, span=DEFAULT_REPORT_SPAN):
        if self.finite_reports:
            return list(self.report_labels)
        return [self._report(x) for x in self.report_domain.grid(step, span)]

    def distance(self, r, r2):
        if self.finite_reports:
            return 0.0 if r == r2 else 1.0
        return float(np.max(np.abs(np.atleast_1d(r) - np.atleast_1d(r2))))

    def same_report(self, r, r2):
        return self.distance(r, r2) == 0.0

    # scores

    def score(self, r, y):
        return self.score_contract(r).evaluate(self.space.validate(y))

    def score_contract(self, r):
        raise NotImplementedError(self)

    def expected_score(self, r, p):
        return expected_payoff(self.score_contract(r), p)

    def score_envelope(self):
        """Contract y -> sup_r S(r, y), or None when no closed form is known"""
        return None

    def score_range_sup(self):
        envelope = self.score_envelope()
        return None if envelope is None else envelope.bounds()[1]

    # elicitation

    def _check_belief(self, p):
        if self.space.kind == FINITE:
            if not isinstance(p, FiniteBelief) or p.n != self.space.n:
                raise BeliefMismatch("{} needs a pmf over {} outcomes, got {!r}".format(self, self.space.n, p))
        elif not isinstance(p, PiecewiseLinearCDF):
            raise BeliefMismatch("{} needs a piecewise-linear CDF, got {!r}".format(self, p))
        elif p.support[0] < self.space.lo or p.support[1] > self.space.hi:
            raise BeliefMismatch("Belief support {} leaves {}".format(p.support, self.space))
        return p

    def property_value(self, p):
        raise NotImplementedError(self)

    def property_report(self, p):
        """A single report from property_value, smallest label for set values"""
        value = self.property_value(p)
        if isinstance(value, frozenset):
            return min(value, key=self.report_labels.index)
        return value

    def best_response(self, p, step=DEFAULT_REPORT_STEP):
        self._check_belief(p)
        if self.finite_reports:
            expected = [self.expected_score(r, p) for r in self.report_labels]
            return self.report_labels[int(np.argmax(expected))]
        grid = self._search_grid(p, step)

        def objective(x):
            return self.expected_score(self._report(x), p)

        values = [objective(x) for x in grid]
        start = grid[int(np.argmax(values))]
        x, _ = coordinate_polish(objective, start, self.report_domain)
        return self._report(x)

    def _search_grid(self, p, step):
        if self.space.kind == REAL_LINE:
            lo, hi = p.support
            axis = np.linspace(lo, hi, max(3, int(round((hi - lo) / step)) + 1))
            grid = [np.array([x]) for x in axis if self.report_domain.contains(x)]
            if grid:
                return grid
        return [x for x in self.report_domain.grid(step, DEFAULT_REPORT_SPAN) if self.report_domain.contains(x)]

    # neutralisation and cashless geometry

    def neutralizer_candidates(self, trades, state):
        """Closed-form reports that offset the (r_old, r_new) trades when bought from state"""
        return []

    def _offset_target(self, slope, trades, state):
        target = np.array(slope(state), dtype=float)
        for r_old, r_new in trades:
            target = target - (slope(r_new) - slope(r_old))
        return target

    def cashless_scores(self, r):
        return project_cashless(self.score_contract(r))[0].values

    def nearest_report(self, h, tol=1e-9, step=DEFAULT_REPORT_STEP):
        """Report whose cashless score vector equals h within tol, or None"""
        h = np.asarray(h, dtype=float)

        def miss(x):
            return float(np.max(np.abs(self.cashless_scores(self._report(x)) - h)))

        if self.finite_reports:
            for r in self.report_labels:
                if np.max(np.abs(self.cashless_scores(r) - h)) <= tol:
                    return r
            return None
        grid = [x for x in self.report_domain.grid(step * 10, DEFAULT_REPORT_SPAN) if self.report_domain.contains(x)]
        start = min(grid, key=miss)
        if getattr(self.report_domain, 'discrete', False):
            return self._report(start) if miss(start) <= tol else None
        x, best = coordinate_polish(lambda x: -miss(x), start, self.report_domain)
        return self._report(x) if -best <= tol else None

    def __str__(self):
        return '{}({})'.format(self.family, self.space)


class FiniteRule(ScoringRule):
    """Explicit payoff matrix S(r, y) over finite reports and outcomes"""
    family = 'finite'

    def __init__(self, space, matrix, report_labels=None):
        super().__init__(space)
        if space.kind != FINITE:
            raise OutcomeSpaceMismatch("Finite rules need a finite outcome space")
        matrix = np.array(matrix, dtype=float)
        labels = tuple(report_labels) if report_labels is not None else space.labels
        if matrix.shape != (len(labels), space.n):
            raise InvalidReport("Payoff matrix shape {} does not match {} reports x {} outcomes".format(
                matrix.shape, len(labels), space.n))
        if len(set(labels)) != len(labels):
            raise InvalidReport("Report labels must be distinct")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.report_labels = labels

    @classmethod
    def mode_rule(cls, space):
        """$1 if the reported outcome happens"""
        return cls(space, np.eye(space.n), space.labels)

    def score_contract(self, r):
        r = self.validate_report(r)
        return FiniteContract(self.space, self.matrix[self.report_labels.index(r)])

    def score_envelope(self):
        return FiniteContract(self.space, self.matrix.max(axis=0))

    def property_value(self, p):
        self._check_belief(p)
        expected = self.matrix @ p.probabilities
        top = expected.max()
        return frozenset(label for label, e in zip(self.report_labels, expected) if e >= top - TIE_TOL)

    def neutralizer_candidates(self, trades, state):
        return list(self.report_labels)


class ExpectationRule(ScoringRule):
    """S(r, y) = G(r) + dG_r . (phi(y) - r)"""
    family = 'expectation'

    def __init__(self, space, G, phi=None):
        super().__init__(space)
        self.G = G
        self.report_domain = G.domain
        if space.kind == FINITE:
            if phi is None:
                phi = [[float(label)] for label in space.labels]
            phi = np.array(phi, dtype=float)
            if phi.ndim == 1:
                phi = phi[:, None]
            if phi.shape != (space.n, G.dim):
                raise OutcomeSpaceMismatch("phi must be {} x {}, got {}".format(space.n, G.dim, phi.shape))
            phi.setflags(write=False)
        elif phi is not None or G.dim != 1:
            raise OutcomeSpaceMismatch("Real-line expectation rules use phi = identity with a 1-d potential")
        self.phi = phi

    def shares(self, r):
        return self.G.gradient(self.validate_report(r))

    def score_contract(self, r):
        r = self.validate_report(r)
        x = as_point(r, self.G.dim)
        slope = self.G.gradient(x)
        cash = self.G.value(x) - float(slope @ x)
        if self.space.kind == FINITE:
            return FiniteContract(self.space, cash + self.phi @ slope)
        return PiecewiseContract(self.space, [(self.space.lo, self.space.hi, (cash, float(slope[0]), 0.0))])

    def score_envelope(self):
        if self.space.kind == FINITE:
            values = []
            for point in self.phi:
                if isinstance(self.G.domain, Box):
                    point = np.clip(point, self.G.domain.lo, self.G.domain.hi)
                values.append(self.G.value(point))
            return FiniteContract(self.space, values)
        coefficients = self.G.quadratic_coefficients()
        if coefficients is None or not isinstance(self.G.domain, Box) or self.G.domain.lo[0] > self.space.lo \
                or self.G.domain.hi[0] < self.space.hi:
            return None
        a, b, c = coefficients
        return PiecewiseContract(self.space, [(self.space.lo, self.space.hi, (c, b, a))])

    def property_value(self, p):
        self._check_belief(p)
        if self.space.kind == FINITE:
            value = p.probabilities @ self.phi
        else:
            value = np.array([p.mean()])
        if not self.report_domain.contains(value):
            raise BeliefMismatch("Expected value {} outside the report space {}".format(value, self.report_domain))
        return self._report(value)

    def neutralizer_candidates(self, trades, state):
        return _invert_shares(self.G, self._offset_target(self.shares, trades, state), self)

    def nearest_report(self, h, tol=1e-9, step=DEFAULT_REPORT_STEP):
        if self.space.kind != FINITE:
            return super().nearest_report(h, tol, step)
        # cashless scores are proj(phi) . dG_r, so invert the linear part first
        basis = self.phi - self.phi.mean(axis=0)
        shares, *_ = np.linalg.lstsq(basis, np.asarray(h, dtype=float), rcond=None)
        if np.max(np.abs(basis @ shares - h)) > tol:
            return None
        candidates = _invert_shares(self.G, shares, self)
        return candidates[0] if candidates else None


class QuantileRule(ScoringRule):
    """S(r, y) = (alpha - 1{r >= y}) (g(r) - g(y))"""
    family = 'quantile'

    def __init__(self, space, alpha, transform=IDENTITY):
        super().__init__(space)
        if space.kind != REAL_LINE:
            raise OutcomeSpaceMismatch("Quantile rules live on the real line")
        if not 0.0 < alpha < 1.0:
            raise InvalidRule("Quantile level must be in (0, 1), got {}".format(alpha))
        self.alpha = float(alpha)
        self.transform = transform
        self.report_domain = Box((space.lo,), (space.hi,), closed=True)

    def score_contract(self, r):
        r = self.validate_report(r)
        a, u = self.alpha, float(self.transform(r))
        return PiecewiseContract.from_breakpoints(
            self.space, [r], [((a - 1.0) * u, 1.0 - a, 0.0), (a * u, -a, 0.0)], self.transform)

    def score(self, r, y):
        r, y = self.validate_report(r), self.space.validate(y)
        return (self.alpha - (1.0 if r >= y else 0.0)) * (float(self.transform(r)) - float(self.transform(y)))

    def score_envelope(self):
        # zero, in the rule's own coordinate
        return PiecewiseContract(self.space, [(self.space.lo, self.space.hi, (0.0, 0.0, 0.0))], self.transform)

    def property_value(self, p):
        self._check_belief(p)
        return float(p.quantile(self.alpha))

    def __str__(self):
        return 'quantile[{}, {}]({})'.format(self.alpha, self.transform.name, self.space)


class ExpectileRule(ScoringRule):
    """S(r, y) = -|1{y <= r} - tau| D_g(y, r)"""
    family = 'expectile'

    def __init__(self, space, tau, g):
        super().__init__(space)
        if space.kind != REAL_LINE:
            raise OutcomeSpaceMismatch("Expectile rules live on the real line")
        if not 0.0 < tau < 1.0:
            raise InvalidRule("Expectile level must be in (0, 1), got {}".format(tau))
        if g.dim != 1 or not (g.differentiable and g.strictly_convex):
            raise InvalidRule("Expectile kernel must be a strictly convex differentiable function on R")
        self.tau = float(tau)
        self.g = g
        self.report_domain = Box((max(space.lo, g.domain.lo[0]),), (min(space.hi, g.domain.hi[0]),),
                                 closed=True)

    def _weight(self, r, y):
        return 1.0 - self.tau if y <= r else self.tau

    def score(self, r, y):
        r, y = self.validate_report(r), self.space.validate(y)
        return -self._weight(r, y) * _bregman_1d(self.g, y, r)

    def score_contract(self, r):
        r = self.validate_report(r)
        coefficients = self.g.quadratic_coefficients()
        if coefficients is None:
            raise UnsupportedContract("Exact expectile contracts need a quadratic kernel, got {}".format(self.g))
        a = coefficients[0]

        def piece(w):
            # -w a (y - r)^2
            return (-w * a * r * r, 2.0 * w * a * r, -w * a)
        return PiecewiseContract.from_breakpoints(
            self.space, [r], [piece(1.0 - self.tau), piece(self.tau)], IDENTITY)

    def expected_score(self, r, p):
        if self.g.quadratic_coefficients() is not None:
            return super().expected_score(r, p)
        r = self.validate_report(r)
        total = 0.0
        for a, b, mass in p.segments():
            edges = [a] + ([r] if a < r < b else []) + [b]
            for s, t in zip(edges, edges[1:]):
                value, _ = integrate.quad(lambda y: self.score(r, y), s, t, epsabs=1e-13, epsrel=1e-12)
                total += mass / (b - a) * value
        return total

    def identification(self, x, p):
        """E_p |1{x >= Y} - tau| (x - Y), strictly increasing in x"""
        tau = self.tau
        d = PiecewiseContract.from_breakpoints(
            self.space, [x], [((1.0 - tau) * x, -(1.0 - tau), 0.0), (tau * x, -tau, 0.0)], IDENTITY)
        return expected_payoff(d, p)

    def property_value(self, p):
        self._check_belief(p)
        lo, hi = p.support
        h_lo, h_hi = self.identification(lo, p), self.identification(hi, p)
        if h_lo >= 0:
            return lo
        if h_hi <= 0:
            return hi
        return float(optimize.bisect(lambda x: self.identification(x, p), lo, hi, xtol=EXPECTILE_XTOL))

    def score_envelope(self):
        return Contract.constant(self.space, 0.0)

    def neutralizer_candidates(self, trades, state):
        target = self._offset_target(lambda r: self.g.gradient(self.validate_report(r)), trades, state)
        return _invert_shares(self.g, target, self)

    def __str__(self):
        return 'expectile[{}, {}]({})'.format(self.tau, self.g.name, self.space)


class RatioRule(ScoringRule):
    """S(r, y) = b(y) G(r) + dG_r . (phi(y) - r b(y)), eliciting E phi / E b"""
    family = 'ratio'

    def __init__(self, space, G, phi, b):
        super().__init__(space)
        if space.kind != FINITE:
            raise OutcomeSpaceMismatch("Ratio rules need a finite outcome space")
        if not (G.differentiable and G.strictly_convex):
            raise InvalidRule("Ratio rules need a differentiable strictly convex potential")
        phi = np.array(phi, dtype=float)
        if phi.ndim == 1:
            phi = phi[:, None]
        b = np.array(b, dtype=float)
        if phi.shape != (space.n, G.dim) or b.shape != (space.n,):
            raise OutcomeSpaceMismatch("phi must be {} x {} and b of length {}".format(space.n, G.dim, space.n))
        if b.min() <= 0:
            raise InvalidRule("Denominator security must be positive, got {}".format(b))
        phi.setflags(write=False)
        b.setflags(write=False)
        self.G, self.phi, self.b = G, phi, b
        self.report_domain = G.domain

    def shares(self, r):
        return self.G.gradient(self.validate_report(r))

    def score_contract(self, r):
        r = self.validate_report(r)
        x = as_point(r, self.G.dim)
        slope = self.G.gradient(x)
        return FiniteContract(self.space, self.b * (self.G.value(x) - float(slope @ x)) + self.phi @ slope)

    def score_envelope(self):
        return FiniteContract(self.space, [bi * self.G.value(p / bi) for p, bi in zip(self.phi, self.b)])

    def property_value(self, p):
        self._check_belief(p)
        value = (p.probabilities @ self.phi) / float(p.probabilities @ self.b)
        if not self.report_domain.contains(value):
            raise BeliefMismatch("Ratio {} outside the report space {}".format(value, self.report_domain))
        return self._report(value)

    def neutralizer_candidates(self, trades, state):
        return _invert_shares(self.G, self._offset_target(self.shares, trades, state), self)


def _bregman_1d(g, y, x):
    return g.value(y) - g.value(x) - float(g.gradient(x)[0]) * (y - x)


def _invert_shares(G, target, rule):
    try:
        x = G.gradient_inverse(target)
    except Exception as e:
        logger.debug("No report with shares %s: %s", target, e)
        return []
    if not rule.report_domain.contains(x):
        return []
    report = rule._report(x)
    # gradient inversion is numeric for some potentials; keep only exact matches
    if np.max(np.abs(G.gradient(x) - target)) > 1e-8 * max(1.0, float(np.max(np.abs(target)))):
        return []
    return [report]


def is_constant_contract(d, tol=1e-9):
    """Constant payoff, judged on the cashless part for finite outcome spaces"""
    if d.space.kind == FINITE:
        d0, _ = project_cashless(d)
        return float(np.max(np.abs(d0.values))) <= tol
    return d.is_constant(tol)
