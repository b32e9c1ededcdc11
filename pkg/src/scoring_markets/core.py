"""
Outcome spaces, contracts and beliefs.

A contract is a payoff as a function of the outcome. Over a finite outcome
space it is a vector indexed by outcome; over (an interval of) the real line
it is a list of pieces, each a polynomial of degree <= 2 in a monotone
coordinate u = T(y) shared by the whole contract. That representation is
closed under weighted sums and gives exact infima, suprema and expectations
against piecewise-linear CDFs.
"""
import bisect
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit, logit

from .errors import (
    BeliefMismatch,
    InvalidBelief,
    InvalidOutcome,
    OutcomeSpaceMismatch,
    UnsupportedContract,
)

logger = logging.getLogger(__name__)


STRUCTURAL_TOL = 1e-12   # telescoping, projection, coefficient cancellation
NUMERIC_TOL = 1e-8       # comparisons involving iterative numerics
MATERIAL_TOL = 1e-6      # constants this small next to their terms are not a cancelled trade
PMF_TOL = 1e-12

FINITE = 'finite'
REAL_LINE = 'real-line'


@dataclass(frozen=True)
class OutcomeSpace:
    labels: tuple = None
    lo: float = -math.inf
    hi: float = math.inf
    probe_spread: float = 1.0

    @classmethod
    def finite(cls, labels):
        labels = tuple(labels)
        if len(labels) < 2:
            raise InvalidOutcome("Finite outcome space needs at least 2 outcomes, got {}".format(labels))
        if len(set(labels)) != len(labels):
            raise InvalidOutcome("Outcome labels must be distinct: {}".format(labels))
        return cls(labels=labels)

    @classmethod
    def real_line(cls, lo=-math.inf, hi=math.inf, probe_spread=1.0):
        if not lo < hi:
            raise InvalidOutcome("Empty outcome interval [{}, {}]".format(lo, hi))
        return cls(lo=float(lo), hi=float(hi), probe_spread=float(probe_spread))

    @property
    def kind(self):
        return FINITE if self.labels is not None else REAL_LINE

    @property
    def n(self):
        if self.labels is None:
            raise OutcomeSpaceMismatch("Real-line outcome space has no finite size")
        return len(self.labels)

    @property
    def bounded(self):
        return self.kind == FINITE or (math.isfinite(self.lo) and math.isfinite(self.hi))

    def index(self, y):
        try:
            return self.labels.index(y)
        except (ValueError, AttributeError):
            raise InvalidOutcome("Outcome {!r} not in {}".format(y, self)) from None

    def contains(self, y):
        if self.kind == FINITE:
            return y in self.labels
        return isinstance(y, (int, float, np.floating, np.integer)) and self.lo <= y <= self.hi

    def validate(self, y):
        if not self.contains(y):
            raise InvalidOutcome("Outcome {!r} not in {}".format(y, self))
        return y

    def evaluation_points(self, breakpoints=()):
        """Outcomes that witness every piece of a contract with the given breakpoints"""
        if self.kind == FINITE:
            return list(self.labels)
        points = set()
        for b in breakpoints:
            for y in (b - self.probe_spread, b, b + self.probe_spread):
                if self.lo <= y <= self.hi:
                    points.add(float(y))
        for end in (self.lo, self.hi):
            if math.isfinite(end):
                points.add(end)
        if not points:
            points.add(0.0 if self.lo <= 0.0 <= self.hi else self.lo if math.isfinite(self.lo) else self.hi)
        return sorted(points)

    def __str__(self):
        if self.kind == FINITE:
            return "Y{{{}}}".format(", ".join(str(label) for label in self.labels))
        return "Y[{}, {}]".format(self.lo, self.hi)


# Monotone coordinates for real-line contracts

@dataclass(frozen=True)
class IdentityTransform:
    name = 'identity'
    limits = (-math.inf, math.inf)

    def __call__(self, y):
        return y

    def inverse(self, u):
        return u

    def derivative(self, y):
        return 1.0

    def integrate_power(self, k, a, b):
        return (b ** (k + 1) - a ** (k + 1)) / (k + 1)


@dataclass(frozen=True)
class SigmoidTransform:
    name = 'sigmoid'
    limits = (0.0, 1.0)

    def __call__(self, y):
        return expit(y)

    def inverse(self, u):
        return logit(u)

    def derivative(self, y):
        s = expit(y)
        return s * (1.0 - s)

    def integrate_power(self, k, a, b):
        if k == 0:
            return b - a
        softplus = np.logaddexp(0.0, [a, b])
        if k == 1:
            return float(softplus[1] - softplus[0])
        if k == 2:
            # d/dy (softplus - sigmoid) = sigmoid^2
            return float((softplus[1] - expit(b)) - (softplus[0] - expit(a)))
        raise UnsupportedContract("Sigmoid integrals implemented up to power 2")


@dataclass(frozen=True)
class PiecewiseLinearTransform:
    """Strictly increasing piecewise-linear map, linearly extrapolated past its knots"""
    knots: tuple
    values: tuple
    name = 'piecewise-linear'
    limits = (-math.inf, math.inf)

    def __post_init__(self):
        x, u = np.asarray(self.knots, float), np.asarray(self.values, float)
        if len(x) < 2 or len(x) != len(u):
            raise UnsupportedContract("Piecewise-linear transform needs >= 2 matching knots and values")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(u) <= 0):
            raise UnsupportedContract("Piecewise-linear transform must be strictly increasing")

    def _map(self, y, xs, us):
        xs, us = np.asarray(xs, float), np.asarray(us, float)
        y_arr = np.asarray(y, dtype=float)
        lo_slope = (us[1] - us[0]) / (xs[1] - xs[0])
        hi_slope = (us[-1] - us[-2]) / (xs[-1] - xs[-2])
        with np.errstate(invalid='ignore'):
            out = np.interp(y_arr, xs, us)
            out = np.where(y_arr < xs[0], us[0] + lo_slope * (y_arr - xs[0]), out)
            out = np.where(y_arr > xs[-1], us[-1] + hi_slope * (y_arr - xs[-1]), out)
        return out if out.ndim else float(out)

    def __call__(self, y):
        return self._map(y, self.knots, self.values)

    def inverse(self, u):
        return self._map(u, self.values, self.knots)

    def derivative(self, y):
        x, u = self.knots, self.values
        i = min(max(bisect.bisect_right(x, y) - 1, 0), len(x) - 2)
        return (u[i + 1] - u[i]) / (x[i + 1] - x[i])

    def integrate_power(self, k, a, b):
        edges = [a] + [x for x in self.knots if a < x < b] + [b]
        total = 0.0
        for s, t in zip(edges, edges[1:]):
            us, ut = self(s), self(t)
            slope = (ut - us) / (t - s)
            total += (ut ** (k + 1) - us ** (k + 1)) / (slope * (k + 1))
        return total


IDENTITY = IdentityTransform()
SIGMOID = SigmoidTransform()


def make_transform(name, knots=None, values=None):
    if name == 'identity':
        return IDENTITY
    if name == 'sigmoid':
        return SIGMOID
    if name == 'piecewise-linear':
        return PiecewiseLinearTransform(tuple(knots), tuple(values))
    raise UnsupportedContract("Unknown transform {!r}".format(name))


# Contracts

def _poly(coeffs, u):
    c0, c1, c2 = coeffs
    return c0 + c1 * u + c2 * u * u


def _poly_limit(coeffs, u):
    if math.isfinite(u):
        return _poly(coeffs, u)
    c0, c1, c2 = coeffs
    if c2 != 0.0:
        return math.copysign(math.inf, c2)
    if c1 != 0.0:
        return math.copysign(math.inf, c1 * u)
    return c0


class Piece(NamedTuple):
    lo: float
    hi: float
    coeffs: tuple


class Contract:
    """Outcome-contingent payoff; subclasses are immutable after construction"""

    space = None

    def evaluate(self, y):
        raise NotImplementedError(self)

    def bounds(self):
        raise NotImplementedError(self)

    def breakpoints(self):
        return ()

    def is_constant(self, tol=1e-9):
        inf, sup = self.bounds()
        return math.isfinite(inf) and math.isfinite(sup) and sup - inf <= tol

    def __add__(self, other):
        return combine([self, other], [1.0, 1.0])

    def __sub__(self, other):
        return combine([self, other], [1.0, -1.0])

    def __neg__(self):
        return combine([self], [-1.0])

    def __mul__(self, weight):
        return combine([self], [float(weight)])

    __rmul__ = __mul__

    @staticmethod
    def constant(space, value):
        if space.kind == FINITE:
            return FiniteContract(space, np.full(space.n, float(value)))
        return PiecewiseContract(space, [Piece(space.lo, space.hi, (float(value), 0.0, 0.0))])


class FiniteContract(Contract):

    def __init__(self, space, values):
        if space.kind != FINITE:
            raise OutcomeSpaceMismatch("Vector contract needs a finite outcome space, got {}".format(space))
        values = np.array(values, dtype=float)
        if values.shape != (space.n,):
            raise OutcomeSpaceMismatch("Expected {} payoffs, got shape {}".format(space.n, values.shape))
        values.setflags(write=False)
        self.space = space
        self.values = values

    def evaluate(self, y):
        return float(self.values[self.space.index(y)])

    def bounds(self):
        return float(self.values.min()), float(self.values.max())

    def to_dict(self):
        return {'kind': FINITE, 'values': self.values.tolist()}

    def __repr__(self):
        return "FiniteContract({})".format(np.array2string(self.values, precision=6))


class PiecewiseContract(Contract):

    def __init__(self, space, pieces, transform=IDENTITY):
        if space.kind != REAL_LINE:
            raise OutcomeSpaceMismatch("Piecewise contract needs a real-line outcome space, got {}".format(space))
        pieces = tuple(Piece(float(lo), float(hi), tuple(float(c) for c in coeffs)) for lo, hi, coeffs in pieces)
        if not pieces or pieces[0].lo != space.lo or pieces[-1].hi != space.hi:
            raise UnsupportedContract("Pieces must cover [{}, {}]".format(space.lo, space.hi))
        for left, right in zip(pieces, pieces[1:]):
            if left.hi != right.lo:
                raise UnsupportedContract("Pieces leave a gap or overlap at {} / {}".format(left.hi, right.lo))
        if any(not p.lo < p.hi for p in pieces):
            raise UnsupportedContract("Empty piece in {}".format(pieces))
        self.space = space
        self.pieces = pieces
        self.transform = transform
        self._his = [p.hi for p in pieces]

    @classmethod
    def from_breakpoints(cls, space, breaks, coeffs, transform=IDENTITY):
        """Pieces split at ``breaks`` (sorted), clipped to the outcome interval"""
        if len(coeffs) != len(breaks) + 1:
            raise UnsupportedContract("Need one coefficient triple per piece")
        edges = [-math.inf] + [float(b) for b in breaks] + [math.inf]
        pieces = []
        for (lo, hi), c in zip(zip(edges, edges[1:]), coeffs):
            lo, hi = max(lo, space.lo), min(hi, space.hi)
            if lo < hi:
                pieces.append(Piece(lo, hi, tuple(c)))
        return cls(space, pieces, transform)

    def breakpoints(self):
        return tuple(p.lo for p in self.pieces[1:])

    def piece_at(self, y):
        i = min(bisect.bisect_left(self._his, y), len(self.pieces) - 1)
        return self.pieces[i]

    def evaluate(self, y):
        self.space.validate(y)
        return float(_poly(self.piece_at(y).coeffs, self.transform(y)))

    def bounds(self):
        t_lo, t_hi = self.transform.limits
        inf, sup = math.inf, -math.inf
        for piece in self.pieces:
            ua = t_lo if piece.lo == -math.inf else float(self.transform(piece.lo))
            ub = t_hi if piece.hi == math.inf else float(self.transform(piece.hi))
            candidates = [_poly_limit(piece.coeffs, ua), _poly_limit(piece.coeffs, ub)]
            c0, c1, c2 = piece.coeffs
            if c2 != 0.0:
                vertex = -c1 / (2.0 * c2)
                if ua < vertex < ub:
                    candidates.append(_poly(piece.coeffs, vertex))
            inf = min(inf, *candidates)
            sup = max(sup, *candidates)
        return inf, sup

    def to_dict(self):
        return {
            'kind': 'piecewise',
            'transform': self.transform.name,
            'pieces': [{'lo': p.lo, 'hi': p.hi, 'coeffs': list(p.coeffs)} for p in self.pieces],
        }

    def __repr__(self):
        return "PiecewiseContract({}, {})".format(self.transform.name, list(self.pieces))


def _representative(lo, hi):
    if lo == -math.inf and hi == math.inf:
        return 0.0
    if lo == -math.inf:
        return hi - 1.0
    if hi == math.inf:
        return lo + 1.0
    return 0.5 * (lo + hi)


def _clean(total, magnitude):
    return 0.0 if abs(total) <= STRUCTURAL_TOL * magnitude else total


def _clean_piece(totals, magnitudes):
    """
    Round cancellation residue of a summed piece to zero.

    Slope residue goes only together with a constant that is either residue
    too or clearly material; a tiny genuine trade keeps its slope, so its
    unbounded side survives.
    """
    c0, c1, c2 = (_clean(t, m) for t, m in zip(totals, magnitudes))
    if (c1, c2) == (0.0, 0.0) and (totals[1], totals[2]) != (0.0, 0.0):
        if c0 != 0.0 and abs(c0) <= MATERIAL_TOL * max(magnitudes):
            return tuple(totals)
    return c0, c1, c2


def _coordinate_free(d):
    return all(p.coeffs[1] == 0.0 and p.coeffs[2] == 0.0 for p in d.pieces)


def contract_bounds(d):
    """Exact (inf, sup) of the payoff over the outcome space; unbounded pieces give +-inf"""
    return d.bounds()


def combine(contracts, weights):
    """Pointwise weighted sum of contracts over one outcome space"""
    contracts, weights = list(contracts), [float(w) for w in weights]
    if not contracts or len(contracts) != len(weights):
        raise OutcomeSpaceMismatch("combine needs one weight per contract")
    space = contracts[0].space
    if any(d.space != space for d in contracts):
        raise OutcomeSpaceMismatch("Contracts live on different outcome spaces")

    if space.kind == FINITE:
        values = sum(w * d.values for d, w in zip(contracts, weights))
        return FiniteContract(space, values)

    # constants read the same in every coordinate
    transforms = {d.transform for d in contracts if not _coordinate_free(d)}
    if len(transforms) > 1:
        raise UnsupportedContract("Cannot combine contracts in different coordinates")
    transform = transforms.pop() if transforms else contracts[0].transform
    edges = sorted({b for d in contracts for b in d.breakpoints()})
    bounds = [space.lo] + edges + [space.hi]
    pieces = []
    for lo, hi in zip(bounds, bounds[1:]):
        y = _representative(lo, hi)
        totals, magnitudes = [0.0] * 3, [0.0] * 3
        for d, w in zip(contracts, weights):
            for j, c in enumerate(d.piece_at(y).coeffs):
                totals[j] += w * c
                magnitudes[j] += abs(w * c)
        coeffs = _clean_piece(totals, magnitudes)
        if pieces and pieces[-1].coeffs == coeffs:
            pieces[-1] = Piece(pieces[-1].lo, hi, coeffs)
        else:
            pieces.append(Piece(lo, hi, coeffs))
    return PiecewiseContract(space, pieces, transform)


def project_cashless(d):
    """Split d = d0 + cash * 1 with d0 orthogonal to the all-ones contract"""
    if d.space.kind != FINITE:
        raise UnsupportedContract("Cashless projection is defined for finite outcome spaces only")
    cash = float(d.values.sum()) / d.space.n
    d0 = d.values - cash
    return FiniteContract(d.space, d0), cash


# Beliefs

class FiniteBelief:
    kind = 'finite-pmf'

    def __init__(self, pmf):
        p = np.array(pmf, dtype=float)
        if p.ndim != 1 or len(p) < 2:
            raise InvalidBelief("pmf must be a vector over >= 2 outcomes, got {}".format(pmf))
        if np.any(p < 0) or abs(p.sum() - 1.0) > PMF_TOL:
            raise InvalidBelief("pmf must be nonnegative and sum to 1, got {}".format(pmf))
        p.setflags(write=False)
        self.probabilities = p

    @property
    def n(self):
        return len(self.probabilities)

    def expect(self, values):
        return np.tensordot(self.probabilities, np.asarray(values, dtype=float), axes=1)

    def to_dict(self):
        return {'kind': self.kind, 'pmf': self.probabilities.tolist()}

    def __repr__(self):
        return "FiniteBelief({})".format(np.array2string(self.probabilities, precision=4))


class PiecewiseLinearCDF:
    """Continuous CDF, linear between breakpoints and strictly increasing on its support"""
    kind = 'piecewise-linear-cdf'

    def __init__(self, points, values):
        x, F = np.array(points, dtype=float), np.array(values, dtype=float)
        if x.ndim != 1 or len(x) < 2 or len(x) != len(F):
            raise InvalidBelief("CDF needs >= 2 matching breakpoints and values")
        if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
            raise InvalidBelief("CDF breakpoints must be finite and strictly increasing: {}".format(points))
        if abs(F[0]) > PMF_TOL or abs(F[-1] - 1.0) > PMF_TOL:
            raise InvalidBelief("CDF must start at 0 and end at 1: {}".format(values))
        F[0], F[-1] = 0.0, 1.0
        if np.any(np.diff(F) <= 0):
            raise InvalidBelief("CDF must be strictly increasing on its support: {}".format(values))
        x.setflags(write=False)
        F.setflags(write=False)
        self.points = x
        self.values = F

    @classmethod
    def uniform(cls, a, b):
        return cls([a, b], [0.0, 1.0])

    @property
    def support(self):
        return float(self.points[0]), float(self.points[-1])

    def cdf(self, x):
        return np.interp(x, self.points, self.values, left=0.0, right=1.0)

    def quantile(self, alpha):
        return np.interp(alpha, self.values, self.points)

    def segments(self):
        for a, b, fa, fb in zip(self.points, self.points[1:], self.values, self.values[1:]):
            yield float(a), float(b), float(fb - fa)

    def mean(self):
        return sum(mass * 0.5 * (a + b) for a, b, mass in self.segments())

    def sample(self, rng, size):
        return self.quantile(rng.uniform(size=size))

    def to_dict(self):
        return {'kind': self.kind, 'points': self.points.tolist(), 'values': self.values.tolist()}

    def __repr__(self):
        return "PiecewiseLinearCDF({}, {})".format(list(self.points), list(self.values))


def expected_payoff(d, p):
    """E_p d(Y), exact for vector contracts and piecewise contracts against piecewise-linear CDFs"""
    if d.space.kind == FINITE:
        if not isinstance(p, FiniteBelief) or p.n != d.space.n:
            raise BeliefMismatch("Need a pmf over {} outcomes, got {!r}".format(d.space.n, p))
        return float(np.dot(p.probabilities, d.values))

    if not isinstance(p, PiecewiseLinearCDF):
        raise BeliefMismatch("Need a piecewise-linear CDF on the real line, got {!r}".format(p))
    lo, hi = p.support
    if lo < d.space.lo or hi > d.space.hi:
        raise BeliefMismatch("Belief support [{}, {}] leaves {}".format(lo, hi, d.space))
    integrate = d.transform.integrate_power
    total = 0.0
    for a, b, mass in p.segments():
        density = mass / (b - a)
        for piece in d.pieces:
            s, t = max(a, piece.lo), min(b, piece.hi)
            if s < t:
                c0, c1, c2 = piece.coeffs
                value = c0 * (t - s)
                if c1:
                    value += c1 * integrate(1, s, t)
                if c2:
                    value += c2 * integrate(2, s, t)
                total += density * value
    return float(total)
