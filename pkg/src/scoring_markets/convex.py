"""
Convex potentials, their conjugates and gradient maps.

Points are 1-d numpy arrays of length ``dim``; scalar inputs are promoted
with ``np.atleast_1d``. Each potential carries flags used by the rule and
market layers (differentiable, strictly convex, bounded on its domain,
coercive) and, where one is known, a closed-form conjugate.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull
from scipy.special import expit, logsumexp, softmax, xlogy

from .core import NUMERIC_TOL
from .errors import ConjugateError, InvalidReport, NondifferentiablePoint
from .report import Axiom, AxiomReport

logger = logging.getLogger(__name__)


POLISH_XTOL = 1e-10
POLISH_SWEEPS = 8
GRID_POINTS = 401


def as_point(x, dim=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or (dim is not None and len(x) != dim):
        raise InvalidReport("Expected a point in R^{}, got {!r}".format(dim, x))
    return x


# Domains

@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple
    closed: bool = False

    @classmethod
    def full(cls, dim=1):
        return cls((-math.inf,) * dim, (math.inf,) * dim)

    @classmethod
    def interval(cls, lo, hi, closed=False):
        return cls((float(lo),), (float(hi),), closed)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def bounded(self):
        return all(map(math.isfinite, self.lo + self.hi))

    def contains(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        lo, hi = np.array(self.lo), np.array(self.hi)
        if self.closed:
            return bool(np.all(lo <= x) and np.all(x <= hi))
        return bool(np.all(lo < x) and np.all(x < hi))

    def segment(self, x, i):
        return self.lo[i], self.hi[i]

    def center(self):
        return np.array([_interval_center(lo, hi) for lo, hi in zip(self.lo, self.hi)])

    def sample(self, rng, size, spread=5.0):
        columns = []
        for lo, hi in zip(self.lo, self.hi):
            a = lo if math.isfinite(lo) else (hi - 2 * spread if math.isfinite(hi) else -spread)
            b = hi if math.isfinite(hi) else (lo + 2 * spread if math.isfinite(lo) else spread)
            columns.append(rng.uniform(a, b, size=size))
        points = np.column_stack(columns)
        if not self.closed:
            keep = [self.contains(p) for p in points]
            points = points[keep]
        return points

    def axis_grid(self, i, step, span=None):
        lo, hi = self.lo[i], self.hi[i]
        if not math.isfinite(lo):
            lo = -span if span is not None else None
        if not math.isfinite(hi):
            hi = span if span is not None else None
        if lo is None or hi is None:
            raise InvalidReport("Unbounded coordinate {} needs an explicit grid span".format(i))
        count = int(round((hi - lo) / step))
        axis = lo + step * np.arange(count + 1)
        if not self.closed:
            axis = axis[(axis > self.lo[i]) & (axis < self.hi[i])]
        return axis

    def grid(self, step, span=None):
        axes = [self.axis_grid(i, step, span) for i in range(self.dim)]
        return np.array(list(itertools.product(*axes)), dtype=float)

    def __str__(self):
        brackets = '[]' if self.closed else '()'
        return ' x '.join('{}{}, {}{}'.format(brackets[0], lo, hi, brackets[1])
                          for lo, hi in zip(self.lo, self.hi))


@dataclass(frozen=True)
class Simplex:
    """Open probability simplex in the coordinates x_1..x_k, with x_0 = 1 - sum(x)"""
    dim: int
    bounded = True
    closed = False

    def contains(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return x.shape == (self.dim,) and bool(np.all(x > 0)) and x.sum() < 1.0

    def segment(self, x, i):
        return 0.0, 1.0 - (np.sum(x) - x[i])

    def center(self):
        return np.full(self.dim, 1.0 / (self.dim + 1))

    def sample(self, rng, size, spread=None):
        return rng.dirichlet(np.ones(self.dim + 1), size=size)[:, 1:]

    def grid(self, step, span=None):
        axis = step * np.arange(1, int(round(1.0 / step)))
        points = [p for p in itertools.product(axis, repeat=self.dim) if sum(p) < 1.0 - step / 2]
        return np.array(points, dtype=float)

    def __str__(self):
        return 'simplex({})'.format(self.dim)


def _interval_center(lo, hi):
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    if math.isfinite(lo):
        return lo + 1.0
    if math.isfinite(hi):
        return hi - 1.0
    return 0.0


# Potentials

class ConvexFn:
    name = 'convex'
    differentiable = True
    strictly_convex = False
    coercive = False

    def __init__(self, domain):
        self.domain = domain

    @property
    def dim(self):
        return self.domain.dim

    @property
    def bounded(self):
        return False

    def value(self, x):
        raise NotImplementedError(self)

    def gradient(self, x):
        raise NotImplementedError(self)

    def subdifferential(self, x):
        """Extreme points of the subdifferential at x"""
        return [self.gradient(x)]

    def strict_gradient(self, x):
        """Gradient, refusing points where the subdifferential is not a singleton"""
        subgradients = self.subdifferential(x)
        if len(subgradients) > 1:
            raise NondifferentiablePoint(as_point(x), subgradients)
        return subgradients[0]

    def conjugate_closed(self, q):
        return None

    def quadratic_coefficients(self):
        """(a, b, c) when G(x) = a x^2 + b x + c on the real line, else None"""
        return None

    def gradient_inverse(self, z):
        """A point x with gradient(x) = z, i.e. an argmax of the conjugate at z"""
        z = as_point(z, self.dim)
        closed = self.conjugate_closed(z)
        if closed is not None and closed[1] is not None:
            return closed[1]
        if self.dim == 1:
            return np.array([_invert_monotone(lambda t: self.gradient(t)[0], z[0], self.domain)])
        x0 = self.domain.center()
        result = optimize.minimize(lambda x: self.value(x) - z @ x, x0,
                                   jac=lambda x: self.gradient(x) - z, method='BFGS',
                                   options={'gtol': 1e-12, 'maxiter': 2000})
        if np.max(np.abs(self.gradient(result.x) - z)) > 1e-6:
            raise ConjugateError("Gradient {} not attained by {}".format(z, self))
        return result.x

    def __call__(self, x):
        return self.value(x)

    def __str__(self):
        return '{}({})'.format(self.name, self.domain)


class Quadratic(ConvexFn):
    name = 'quadratic'
    strictly_convex = True
    coercive = True

    def __init__(self, scale=1.0, domain=None):
        super().__init__(domain or Box.full(1))
        if scale <= 0:
            raise ValueError("Quadratic scale must be positive, got {}".format(scale))
        self.scale = float(scale)

    @property
    def bounded(self):
        return self.domain.bounded

    def value(self, x):
        x = as_point(x, self.dim)
        return float(self.scale * x @ x)

    def gradient(self, x):
        return 2.0 * self.scale * as_point(x, self.dim)

    def conjugate_closed(self, q):
        if not isinstance(self.domain, Box):
            return None
        # separable, so the box-constrained maximiser is the clipped one
        x = np.clip(as_point(q, self.dim) / (2.0 * self.scale), self.domain.lo, self.domain.hi)
        return float(q @ x - self.value(x)), x

    def quadratic_coefficients(self):
        return (self.scale, 0.0, 0.0) if self.dim == 1 else None


class BinaryNegEntropy(ConvexFn):
    name = 'binary-neg-entropy'
    strictly_convex = True

    def __init__(self):
        super().__init__(Box.interval(0.0, 1.0))

    @property
    def bounded(self):
        return True

    def value(self, x):
        p = as_point(x, 1)[0]
        return float(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))

    def gradient(self, x):
        p = as_point(x, 1)[0]
        return np.array([math.log(p) - math.log1p(-p)])

    def conjugate_closed(self, q):
        q = as_point(q, 1)[0]
        return float(np.logaddexp(0.0, q)), np.array([expit(q)])


class NegEntropy(ConvexFn):
    name = 'neg-entropy'
    strictly_convex = True

    def __init__(self, dim):
        super().__init__(Simplex(int(dim)))

    @property
    def bounded(self):
        return True

    def value(self, x):
        x = as_point(x, self.dim)
        x0 = 1.0 - x.sum()
        return float(xlogy(x, x).sum() + xlogy(x0, x0))

    def gradient(self, x):
        x = as_point(x, self.dim)
        return np.log(x) - math.log(1.0 - x.sum())

    def conjugate_closed(self, q):
        q = np.r_[0.0, as_point(q, self.dim)]
        return float(logsumexp(q)), softmax(q)[1:]


class LogPartition(ConvexFn):
    """C(q) = log sum_y exp(q . phi(y)); the binary LMSR is phi = [[0], [1]]"""
    name = 'log-partition'

    def __init__(self, phi):
        phi = np.array(phi, dtype=float)
        if phi.ndim != 2 or len(phi) < 2:
            raise ValueError("phi must be an n x k table with n >= 2")
        phi.setflags(write=False)
        self.phi = phi
        super().__init__(Box.full(phi.shape[1]))

    def value(self, q):
        return float(logsumexp(self.phi @ as_point(q, self.dim)))

    def weights(self, q):
        return softmax(self.phi @ as_point(q, self.dim))

    def gradient(self, q):
        return self.weights(q) @ self.phi

    def _standard_basis(self):
        rows = sorted(map(tuple, self.phi))
        k = self.dim
        expected = sorted([tuple(np.zeros(k))] + [tuple(np.eye(k)[i]) for i in range(k)])
        return len(rows) == k + 1 and rows == expected

    def conjugate_closed(self, z):
        if not self._standard_basis():
            return None
        z = as_point(z, self.dim)
        dual = BinaryNegEntropy() if self.dim == 1 else NegEntropy(self.dim)
        if dual.domain.contains(z):
            return dual.value(z), dual.gradient(z)
        if np.all(z >= -1e-15) and z.sum() <= 1.0 + 1e-15:
            # boundary of the simplex: finite value, supremum not attained
            z = np.clip(z, 0.0, 1.0)
            z0 = max(0.0, 1.0 - z.sum())
            return float(xlogy(z, z).sum() + xlogy(z0, z0)), None
        return math.inf, None


class Exponential(ConvexFn):
    name = 'exponential'
    strictly_convex = True

    def __init__(self, dim=1):
        super().__init__(Box.full(dim))

    def value(self, x):
        return float(np.exp(as_point(x, self.dim)).sum())

    def gradient(self, x):
        return np.exp(as_point(x, self.dim))

    def conjugate_closed(self, z):
        z = as_point(z, self.dim)
        if np.any(z <= 0):
            return None
        return float((xlogy(z, z) - z).sum()), np.log(z)


class HuberHinge(ConvexFn):
    """Smoothed max(0, q): differentiable, gradient range the closed interval [0, 1]"""
    name = 'huber-hinge'

    def __init__(self, width=1.0):
        super().__init__(Box.full(1))
        self.width = float(width)

    def value(self, q):
        q = as_point(q, 1)[0]
        if q <= 0:
            return 0.0
        if q < self.width:
            return q * q / (2.0 * self.width)
        return q - self.width / 2.0

    def gradient(self, q):
        q = as_point(q, 1)[0]
        return np.array([min(max(q / self.width, 0.0), 1.0)])


class Hinge(ConvexFn):
    name = 'hinge'
    differentiable = False

    def __init__(self):
        super().__init__(Box.full(1))

    def value(self, q):
        return max(0.0, float(as_point(q, 1)[0]))

    def subdifferential(self, q):
        q = as_point(q, 1)[0]
        if q > 0:
            return [np.array([1.0])]
        if q < 0:
            return [np.array([0.0])]
        return [np.array([0.0]), np.array([1.0])]

    def gradient(self, q):
        return min(self.subdifferential(q), key=lambda g: abs(g[0]))


class Polyhedral(ConvexFn):
    """max_i (a_i . x + c_i)"""
    name = 'polyhedral'
    differentiable = False

    def __init__(self, slopes, intercepts, domain=None):
        slopes = np.array(slopes, dtype=float)
        if slopes.ndim == 1:
            slopes = slopes[:, None]
        intercepts = np.array(intercepts, dtype=float)
        if len(slopes) != len(intercepts) or len(slopes) == 0:
            raise ValueError("Need one intercept per slope")
        self.slopes, self.intercepts = slopes, intercepts
        super().__init__(domain or Box.full(slopes.shape[1]))

    def affine_values(self, x):
        return self.slopes @ as_point(x, self.dim) + self.intercepts

    def value(self, x):
        return float(self.affine_values(x).max())

    def subdifferential(self, x):
        values = self.affine_values(x)
        top = values.max()
        active = np.flatnonzero(values >= top - 1e-12 * max(1.0, abs(top)))
        unique = {tuple(self.slopes[i]) for i in active}
        return [np.array(s) for s in sorted(unique)]

    def gradient(self, x):
        candidates = self.subdifferential(x)
        if len(candidates) == 1:
            return candidates[0]
        return _min_norm_point(np.array(candidates))

    def conjugate_closed(self, z):
        # sup_x z.x - max_i(a_i.x + c_i) = min { -c.lam : A^T lam = z, lam in simplex }
        z = as_point(z, self.dim)
        m = len(self.slopes)
        a_eq = np.vstack([self.slopes.T, np.ones(m)])
        result = optimize.linprog(-self.intercepts, A_eq=a_eq, b_eq=np.r_[z, 1.0],
                                  bounds=[(0, None)] * m, method='highs')
        if result.status == 2:
            return math.inf, None
        if result.status != 0:
            raise ConjugateError("LP for polyhedral conjugate failed: {}".format(result.message))
        return float(result.fun), np.asarray(result.eqlin.marginals[:self.dim])


class Reflected(ConvexFn):
    """x -> G(-x)"""

    def __init__(self, base):
        self.base = base
        self.name = 'reflected-' + base.name
        self.differentiable = base.differentiable
        self.strictly_convex = base.strictly_convex
        self.coercive = base.coercive
        lo, hi = base.domain.lo, base.domain.hi
        super().__init__(Box(tuple(-h for h in hi), tuple(-l for l in lo), base.domain.closed))

    @property
    def bounded(self):
        return self.base.bounded

    def value(self, x):
        return self.base.value(-as_point(x, self.dim))

    def gradient(self, x):
        return -self.base.gradient(-as_point(x, self.dim))

    def subdifferential(self, x):
        return [-g for g in self.base.subdifferential(-as_point(x, self.dim))]

    def conjugate_closed(self, z):
        closed = self.base.conjugate_closed(-as_point(z, self.dim))
        if closed is None:
            return None
        value, argmax = closed
        return value, None if argmax is None else -argmax


class FunctionPotential(ConvexFn):
    """User supplied value and subgradient selection, flags taken on trust"""

    def __init__(self, value_fn, gradient_fn, domain=None, name='function', differentiable=True,
                 strictly_convex=False, bounded=False, coercive=False, quadratic=None):
        super().__init__(domain or Box.full(1))
        self._value, self._gradient = value_fn, gradient_fn
        self.name = name
        self.differentiable = differentiable
        self.strictly_convex = strictly_convex
        self.coercive = coercive
        self._bounded = bounded
        self._quadratic = quadratic

    @property
    def bounded(self):
        return self._bounded

    def value(self, x):
        return float(self._value(as_point(x, self.dim)))

    def gradient(self, x):
        return as_point(self._gradient(as_point(x, self.dim)), self.dim)

    def quadratic_coefficients(self):
        return self._quadratic


def _min_norm_point(points):
    """Minimal-norm element of conv(points)"""
    m = len(points)
    result = optimize.minimize(lambda lam: np.sum((lam @ points) ** 2), np.full(m, 1.0 / m),
                               jac=lambda lam: 2.0 * points @ (lam @ points),
                               bounds=[(0.0, 1.0)] * m,
                               constraints=[{'type': 'eq', 'fun': lambda lam: lam.sum() - 1.0}],
                               method='SLSQP', options={'ftol': 1e-15})
    return result.x @ points


def _invert_monotone(fn, target, domain, max_doublings=80):
    """Root of fn(t) = target for nondecreasing fn on a 1-d domain"""
    lo, hi = domain.lo[0], domain.hi[0]
    center = _interval_center(lo, hi)

    def walk(end, sign):
        # toward ``end`` until sign * (fn - target) >= 0; halve toward finite ends, double otherwise
        t, step = center, 1.0
        for _ in range(max_doublings):
            if sign * (fn(t) - target) >= 0:
                break
            t = center + sign * step if not math.isfinite(end) else 0.5 * (t + end)
            step *= 2
        return t

    a, b = walk(lo, -1.0), walk(hi, 1.0)
    fa, fb = fn(a) - target, fn(b) - target
    if fa > 0 or fb < 0:
        raise ConjugateError("Gradient value {} not attained on {}".format(target, domain))
    if fa == 0:
        return a
    if fb == 0:
        return b
    return optimize.bisect(lambda t: fn(t) - target, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                           maxiter=400)


def coordinate_polish(objective, x, domain, sweeps=POLISH_SWEEPS):
    """Coordinate-wise bounded maximisation of objective starting at x"""
    x = np.array(x, dtype=float)
    best = objective(x)
    for _ in range(sweeps):
        start = best
        for i in range(len(x)):
            lo, hi = domain.segment(x, i)
            if not (math.isfinite(lo) and math.isfinite(hi)):
                span = max(1.0, abs(x[i]))
                lo = x[i] - span if not math.isfinite(lo) else lo
                hi = x[i] + span if not math.isfinite(hi) else hi

            def negated(t, i=i):
                trial = x.copy()
                trial[i] = t
                return -objective(trial)

            result = optimize.minimize_scalar(negated, bounds=(lo, hi), method='bounded',
                                              options={'xatol': POLISH_XTOL})
            if -result.fun > best:
                x[i] = result.x
                best = -result.fun
        if best - start <= 1e-15 * max(1.0, abs(best)):
            break
    return x, best


def conjugate(G, q, method='auto'):
    """(sup_x q.x - G(x), argmax); closed form when registered, otherwise grid search plus polish"""
    q = as_point(q, G.dim)
    if method == 'auto':
        closed = G.conjugate_closed(q)
        if closed is not None:
            return closed
    elif method != 'numeric':
        raise ValueError("Unknown conjugate method {!r}".format(method))

    def objective(x):
        return float(q @ x) - G.value(x)

    if G.domain.bounded:
        per_axis = max(5, int(round(GRID_POINTS ** (1.0 / G.dim))))
        grid = G.domain.grid(1.0 / per_axis if isinstance(G.domain, Simplex) else
                             min(h - l for l, h in zip(G.domain.lo, G.domain.hi)) / per_axis)
        grid = [x for x in grid if G.domain.contains(x)]
        if not grid:
            grid = [G.domain.center()]
        values = [objective(x) for x in grid]
        start = grid[int(np.argmax(values))]
        x, value = coordinate_polish(objective, start, G.domain)
        logger.debug("Numeric conjugate of %s at %s: %s", G, q, value)
        return value, x

    if G.coercive:
        result = optimize.minimize(lambda x: -objective(x), G.domain.center(),
                                   jac=lambda x: G.gradient(x) - q, method='BFGS',
                                   options={'gtol': 1e-12})
        x, value = coordinate_polish(objective, result.x, G.domain)
        return value, x

    raise ConjugateError("Conjugate of {} is not safely computable on an unbounded domain".format(G))


def bregman(g, y, x):
    """D_g(y, x) = g(y) - g(x) - dg(x).(y - x)"""
    y, x = as_point(y, g.dim), as_point(x, g.dim)
    for point in (y, x):
        if not g.domain.contains(point):
            raise InvalidReport("{} outside the domain of {}".format(point, g))
    return g.value(y) - g.value(x) - float(g.gradient(x) @ (y - x))


def check_convexity(G, samples, rng, tol=1e-9):
    """Midpoint convexity, subgradient inequality and directional monotonicity on random pairs"""
    points = G.domain.sample(rng, 2 * samples)
    worst = math.inf
    checked = 0
    for x, x2 in zip(points[::2], points[1::2]):
        checked += 1
        gx, g2 = G.value(x), G.value(x2)
        mid = 0.5 * (x + x2)
        if G.domain.contains(mid):
            slack = 0.5 * (gx + g2) - G.value(mid)
            worst = min(worst, slack)
            if slack < -tol:
                return AxiomReport.failing(Axiom.CONVEX, {'kind': 'midpoint', 'x': x, 'x2': x2, 'slack': slack},
                                           margin=slack, budget=checked, subject=str(G))
        slack = g2 - gx - float(G.gradient(x) @ (x2 - x))
        worst = min(worst, slack)
        if slack < -tol:
            return AxiomReport.failing(Axiom.CONVEX, {'kind': 'subgradient', 'x': x, 'x2': x2, 'slack': slack},
                                       margin=slack, budget=checked, subject=str(G))
        direction = x2 - x
        slack = float((G.gradient(x2) - G.gradient(x)) @ direction)
        if slack < -tol:
            return AxiomReport.failing(Axiom.CONVEX, {'kind': 'monotone', 'x': x, 'x2': x2, 'slack': slack},
                                       margin=slack, budget=checked, subject=str(G))
    logger.info("Convexity of %s holds on %s sampled pairs", G, checked)
    return AxiomReport.holding(Axiom.CONVEX, False, margin=worst, budget=checked, subject=str(G))


@dataclass
class GradientRange:
    gradients: np.ndarray
    inside: np.ndarray

    @property
    def fraction_inside(self):
        return float(np.mean(self.inside)) if len(self.inside) else 1.0

    @property
    def outside(self):
        return self.gradients[~self.inside]


def interior_classifier(vertices, tol=NUMERIC_TOL):
    """Membership test for int conv(vertices), strict by ``tol``"""
    vertices = np.array(vertices, dtype=float)
    if vertices.ndim == 1:
        vertices = vertices[:, None]
    if vertices.shape[1] == 1:
        lo, hi = vertices.min(), vertices.max()
        return lambda z: bool(lo + tol < np.atleast_1d(z)[0] < hi - tol)
    hull = ConvexHull(vertices)
    equations = hull.equations

    def inside(z):
        return bool(np.all(equations[:, :-1] @ np.atleast_1d(z) + equations[:, -1] < -tol))
    return inside


def gradient_range(G, grid, vertices, tol=NUMERIC_TOL):
    """Gradient images of grid points, classified against int conv(vertices)"""
    inside = interior_classifier(vertices, tol)
    gradients = np.array([G.gradient(x) for x in grid])
    mask = np.array([inside(g) for g in gradients], dtype=bool)
    return GradientRange(gradients, mask)
