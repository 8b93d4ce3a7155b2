"""Doubly twisted product metrics on a product chart.

Two factor charts with metrics g1, g2 and two positive scaling functions
sigma1, sigma2 on the product assemble into

    g = sigma2^2 * g1  (+)  sigma1^2 * g2,

block-diagonal over the concatenated coordinates. sigma2 == 1 gives a
twisted product, sigma2 == 1 with sigma1 depending only on factor-1
coordinates gives a warped product, both constant gives a direct product.
"""

from __future__ import annotations

import numpy as np

from . import expr
from .expr import Mul, parse
from .geometry import (
    ChartDomain, MetricField, ScalarField, TangentVector, VectorField,
    christoffel, metric_at,
)
from .report import CheckRecord, finish_report

__all__ = [
    "DoublyTwistedProduct", "NonPositiveTwist", "MixedBlockField",
    "build_doubly_twisted", "lift", "predicted_connection",
    "verify_proposition1",
]


class NonPositiveTwist(ArithmeticError):
    """A scaling function failed to be positive on the probe grid."""

    def __init__(self, which, value, point):
        super().__init__(
            f"sigma{which} evaluates to {value:.6g} <= 0 at {tuple(point)}")
        self.which = which
        self.point = tuple(point)


class MixedBlockField(ValueError):
    """A field handed to the split connection straddles both blocks."""


def _zero_component(expression):
    return expression.is_constant() and expression.constant_value() == 0.0


class DoublyTwistedProduct:
    """Product chart, assembled twisted metric, and the direct comparison
    metric obtained by dropping both scalings."""

    def __init__(self, chart1, metric1, chart2, metric2, sigma1, sigma2,
                 spd_tol=None):
        shared = set(chart1.coords) & set(chart2.coords)
        if shared:
            raise ValueError(
                f"factor charts must use disjoint coordinate names; "
                f"shared: {sorted(shared)}")
        self.chart1, self.metric1 = chart1, metric1
        self.chart2, self.metric2 = chart2, metric2
        self.chart = ChartDomain(
            chart1.coords + chart2.coords, chart1.box + chart2.box)
        self.sigma1 = ScalarField(self.chart, parse(str(sigma1), self.chart.coords)
                                  if isinstance(sigma1, str) else sigma1.expression)
        self.sigma2 = ScalarField(self.chart, parse(str(sigma2), self.chart.coords)
                                  if isinstance(sigma2, str) else sigma2.expression)
        kwargs = {} if spd_tol is None else {"spd_tol": spd_tol}
        self.assembled = MetricField(
            self.chart,
            _block_components(self.chart, metric1, metric2,
                              self.sigma1.expression, self.sigma2.expression),
            **kwargs)
        one = parse("1", self.chart.coords)
        self.direct = MetricField(
            self.chart,
            _block_components(self.chart, metric1, metric2, one, one),
            **kwargs)

    @property
    def n1(self):
        return self.chart1.dimension

    @property
    def n2(self):
        return self.chart2.dimension

    @property
    def split(self):
        return (self.n1, self.n2)

    def block_of(self, index):
        return 1 if index < self.n1 else 2

    # ---- specialization flags (variable-occurrence analysis) ----

    @property
    def is_direct(self):
        return (self.sigma1.expression.is_constant()
                and self.sigma2.expression.is_constant())

    @property
    def is_twisted(self):
        s2 = self.sigma2.expression
        return s2.is_constant() and s2.constant_value() == 1.0

    @property
    def is_warped(self):
        return (self.is_twisted
                and self.sigma1.expression.used_variables()
                <= set(self.chart1.coords))

    @property
    def is_doubly_warped(self):
        return (self.sigma1.expression.used_variables()
                <= set(self.chart1.coords)
                and self.sigma2.expression.used_variables()
                <= set(self.chart2.coords))

    @property
    def classification(self):
        if self.is_direct:
            return "direct"
        if self.is_warped:
            return "warped"
        if self.is_twisted:
            return "twisted"
        if self.is_doubly_warped:
            return "doubly_warped"
        return "doubly_twisted"

    def factor_point(self, point, which):
        return tuple(point[:self.n1]) if which == 1 else tuple(point[self.n1:])

    def check_positive_twists(self, per_axis=3):
        """Probe both scalings on an interior grid; raise on a violation."""
        per_axis = max(2, per_axis)
        if self.chart.dimension > 4:
            per_axis = min(per_axis, 3)
        for point in self.chart.grid(per_axis=per_axis):
            for which, sigma in ((1, self.sigma1), (2, self.sigma2)):
                value = sigma(point)
                if value <= 0.0:
                    raise NonPositiveTwist(which, value, point)


def _block_components(chart, metric1, metric2, s1, s2):
    """Expression matrix [[s2^2 g1, 0], [0, s1^2 g2]] over product coords."""
    n1, n2 = metric1.dimension, metric2.dimension
    n = n1 + n2
    zero = parse("0", chart.coords).root
    rows = [[zero for _ in range(n)] for _ in range(n)]
    s1sq = Mul(s1.root, s1.root)
    s2sq = Mul(s2.root, s2.root)
    for i in range(n1):
        for j in range(n1):
            rows[i][j] = Mul(s2sq, metric1.components[i][j].root)
    for a in range(n2):
        for b in range(n2):
            rows[n1 + a][n1 + b] = Mul(s1sq, metric2.components[a][b].root)
    return [
        [expr.Expression(node, chart.coords) for node in row] for row in rows
    ]


def build_doubly_twisted(chart1, metric1, chart2, metric2, sigma1, sigma2,
                         probe_per_axis=3, spd_tol=None):
    """Assemble and validate a doubly twisted product."""
    product = DoublyTwistedProduct(
        chart1, metric1, chart2, metric2, sigma1, sigma2, spd_tol=spd_tol)
    product.check_positive_twists(per_axis=probe_per_axis)
    return product


def lift(product, vector, which, base):
    """Lift a factor tangent vector to the product at a product point."""
    base = tuple(float(c) for c in base)
    factor_base = product.factor_point(base, which)
    if not np.allclose(factor_base, vector.base, rtol=0.0, atol=1e-12):
        raise ValueError(
            f"vector is based at {vector.base}, not at the factor part "
            f"{factor_base} of {base}")
    comps = np.zeros(product.chart.dimension)
    if which == 1:
        comps[:product.n1] = vector.components
    else:
        comps[product.n1:] = vector.components
    return TangentVector(base, comps)


def _field_block(product, field):
    """Which block a pure-block field lives in; raises MixedBlockField."""
    n1 = product.n1
    nonzero = [k for k, c in enumerate(field.components) if not _zero_component(c)]
    if not nonzero:
        raise MixedBlockField("zero field has no block")
    in1 = [k for k in nonzero if k < n1]
    in2 = [k for k in nonzero if k >= n1]
    if in1 and in2:
        raise MixedBlockField(
            f"field has components in both blocks (indices {in1} and {in2})")
    which = 1 if in1 else 2
    own = set(product.chart1.coords if which == 1 else product.chart2.coords)
    for k in nonzero:
        leaked = field.components[k].used_variables() - own
        if leaked:
            raise MixedBlockField(
                f"component {k} of a block-{which} lift depends on "
                f"{sorted(leaked)}")
    return which


def _log_derivative(sigma, point):
    """Coordinate partials of ln(sigma) at the point."""
    jet = sigma.jet(point)
    return jet.grad / jet.value


def predicted_connection(product, A, B, point, convention="scaled"):
    """Closed-form Levi-Civita derivative of B along A for pure-block lifts.

    With L_i = ln(sigma_i), g the assembled metric and g0 the direct one:

      both block 1:  nabla0_A B + A(L2) B + B(L2) A - g(A,B) grad_g L2
      both block 2:  nabla0_A B + A(L1) B + B(L1) A - g(A,B) grad_g L1
      mixed X, V:    nabla0_A B + X(L1) V + V(L2) X

    convention="unscaled" instead uses the unscaled factor metric together
    with the g0-gradient in the rank-one term, and a four-term mixed rule
    X(L1)V - V(L1)X + V(L2)X - X(L2)V; it agrees with the scaled form only
    when both scalings are constant along the opposite factor, and is kept
    for side-by-side reporting.
    """
    if convention not in ("scaled", "unscaled"):
        raise ValueError(f"unknown convention {convention!r}")
    point = tuple(float(c) for c in point)
    blk_a = _field_block(product, A)
    blk_b = _field_block(product, B)
    from .geometry import covariant_derivative

    base = covariant_derivative(product.direct, A, B, point).components
    a = A(point)
    b = B(point)
    dlog1 = _log_derivative(product.sigma1, point)
    dlog2 = _log_derivative(product.sigma2, point)
    n1 = product.n1

    if blk_a == blk_b:
        dlog = dlog2 if blk_a == 1 else dlog1
        correction = (a @ dlog) * b + (b @ dlog) * a
        if convention == "scaled":
            g = metric_at(product.assembled, point)
            correction -= (a @ g @ b) * np.linalg.solve(g, dlog)
        else:
            block = slice(0, n1) if blk_a == 1 else slice(n1, None)
            factor_metric = product.metric1 if blk_a == 1 else product.metric2
            gf = metric_at(factor_metric, product.factor_point(point, blk_a))
            inner = a[block] @ gf @ b[block]
            g0 = metric_at(product.direct, point)
            correction -= inner * np.linalg.solve(g0, dlog)
        return TangentVector(point, base + correction)

    x, v = (a, b) if blk_a == 1 else (b, a)
    correction = (x @ dlog1) * v + (v @ dlog2) * x
    if convention == "unscaled":
        correction -= (v @ dlog1) * x + (x @ dlog2) * v
    return TangentVector(point, base + correction)


def verify_proposition1(product, samples=50, seed=42, tolerance=1e-8):
    """Compare Christoffel-based derivatives of the assembled metric with
    the closed-form prediction, over all coordinate-lift pairs.

    The verdict uses the scaled convention; the unscaled convention's
    residuals are reported alongside without affecting the verdict.
    """
    rng = np.random.default_rng(seed)
    points = product.chart.sample(rng, samples)
    n = product.chart.dimension
    n1 = product.n1
    fields = [VectorField.coordinate(product.chart, k) for k in range(n)]
    families = {"block1_pairs": [], "block2_pairs": [], "mixed_pairs": []}
    for i in range(n):
        for j in range(n):
            bi, bj = product.block_of(i), product.block_of(j)
            if bi == 1 and bj == 1:
                families["block1_pairs"].append((i, j))
            elif bi == 2 and bj == 2:
                families["block2_pairs"].append((i, j))
            else:
                families["mixed_pairs"].append((i, j))

    checks = []
    alt_worst = 0.0
    for point in points:
        gamma = christoffel(product.assembled, point)
        for family, pairs in families.items():
            if not pairs:
                continue
            worst = 0.0
            alt_family = 0.0
            for i, j in pairs:
                actual = gamma[:, i, j]
                predicted = predicted_connection(
                    product, fields[i], fields[j], point, convention="scaled")
                worst = max(worst, np.abs(actual - predicted.components).max())
                alt = predicted_connection(
                    product, fields[i], fields[j], point, convention="unscaled")
                alt_family = max(
                    alt_family, np.abs(actual - alt.components).max())
            alt_worst = max(alt_worst, alt_family)
            checks.append(CheckRecord(
                label=family, point=tuple(point), residual=worst,
                passed=worst <= tolerance,
                extras={"unscaled_convention_residual": alt_family}))

    details = {
        "classification": product.classification,
        "unscaled_convention_worst": alt_worst,
        "convention_for_verdict": "scaled",
    }
    return finish_report(
        "prop1", tolerance, seed, samples, checks, details=details)
