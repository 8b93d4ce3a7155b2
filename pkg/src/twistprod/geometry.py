"""Chart-level Riemannian primitives.

Everything is pointwise on a single named chart: metric evaluation with a
positivity check, Christoffel symbols from exact metric jets, gradients,
covariant derivatives of expression vector fields, and Gram-Schmidt
orthonormal frames built in coordinate order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Expression, parse

__all__ = [
    "ChartDomain", "ScalarField", "VectorField", "TangentVector",
    "MetricField", "NotPositiveDefinite", "metric_at", "christoffel",
    "gradient", "covariant_derivative", "orthonormal_frame",
]

SPD_PIVOT_TOL = 1e-12


class NotPositiveDefinite(ArithmeticError):
    """Metric factorization found a pivot at or below the tolerance."""

    def __init__(self, pivot, index, point):
        super().__init__(
            f"metric is not positive definite at {tuple(point)}: "
            f"pivot {pivot:.3e} at row {index}")
        self.pivot = pivot
        self.index = index


@dataclass(frozen=True)
class ChartDomain:
    """An open coordinate box with named coordinates."""

    coords: tuple
    box: tuple  # ((lo, hi), ...) per coordinate

    def __post_init__(self):
        if len(self.coords) != len(self.box):
            raise ValueError("one (lo, hi) interval per coordinate is required")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"duplicate coordinate names in {self.coords!r}")
        for lo, hi in self.box:
            if not (lo < hi):
                raise ValueError(f"empty interval ({lo}, {hi})")

    @property
    def dimension(self):
        return len(self.coords)

    def contains(self, point):
        return all(lo < c < hi for c, (lo, hi) in zip(point, self.box))

    def sample(self, rng, count, margin=0.05):
        """Uniform interior samples; margin shrinks the open box slightly."""
        lo = np.array([a + margin * (b - a) for a, b in self.box])
        hi = np.array([b - margin * (b - a) for a, b in self.box])
        return lo + (hi - lo) * rng.random((count, self.dimension))

    def grid(self, per_axis=5, margin=0.05):
        """Deterministic interior probe grid, per_axis points per coordinate."""
        axes = [
            np.linspace(a + margin * (b - a), b - margin * (b - a), per_axis)
            for a, b in self.box
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def _as_expression(source, chart):
    if isinstance(source, Expression):
        return source
    return parse(source, chart.coords)


@dataclass(frozen=True)
class ScalarField:
    """An expression-valued function on a chart."""

    chart: ChartDomain
    expression: Expression

    @classmethod
    def from_source(cls, chart, source):
        return cls(chart, _as_expression(source, chart))

    def __call__(self, point):
        return self.expression.evaluate(self._env(point))

    def jet(self, point):
        return self.expression.jet(point)

    def gradient_coeffs(self, point):
        """Coordinate partials (nothing metric about them)."""
        return self.jet(point).grad

    def _env(self, point):
        return dict(zip(self.chart.coords, (float(c) for c in point)))


@dataclass(frozen=True)
class VectorField:
    """Componentwise expression vector field on a chart."""

    chart: ChartDomain
    components: tuple  # of Expression

    @classmethod
    def from_sources(cls, chart, sources):
        return cls(chart, tuple(_as_expression(s, chart) for s in sources))

    @classmethod
    def coordinate(cls, chart, index):
        """The index-th coordinate basis field."""
        comps = ["1" if k == index else "0" for k in range(chart.dimension)]
        return cls.from_sources(chart, comps)

    def __post_init__(self):
        if len(self.components) != self.chart.dimension:
            raise ValueError("component count must match the chart dimension")

    def __call__(self, point):
        env = dict(zip(self.chart.coords, (float(c) for c in point)))
        return np.array([c.evaluate(env) for c in self.components])

    def jacobian(self, point):
        """partial_j of component k, as J[k, j]."""
        return np.array([c.jet(point).grad for c in self.components])


@dataclass(frozen=True)
class TangentVector:
    """A vector attached to a chart point."""

    base: tuple
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(float(c) for c in self.base))
        object.__setattr__(
            self, "components", np.asarray(self.components, dtype=float))


class MetricField:
    """Symmetric positive-definite expression matrix on a chart.

    Only the upper triangle is evaluated; the lower triangle is mirrored,
    so the numeric matrix is symmetric bit-for-bit.
    """

    def __init__(self, chart, components, spd_tol=SPD_PIVOT_TOL):
        self.chart = chart
        n = chart.dimension
        rows = [list(r) for r in components]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"metric needs a {n}x{n} component matrix")
        self.components = tuple(
            tuple(_as_expression(e, chart) for e in row) for row in rows
        )
        for i in range(n):
            for j in range(i + 1, n):
                if self.components[i][j].root != self.components[j][i].root:
                    raise ValueError(
                        f"metric entries ({i},{j}) and ({j},{i}) differ structurally")
        self.spd_tol = spd_tol

    @property
    def dimension(self):
        return self.chart.dimension

    def matrix(self, point):
        """Numeric matrix without the positivity check."""
        env = dict(zip(self.chart.coords, (float(c) for c in point)))
        n = self.dimension
        g = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                v = self.components[i][j].evaluate(env)
                g[i, j] = v
                g[j, i] = v
        return g

    def jets(self, point):
        """Values and coordinate partials: (g[i,j], dg[i,j,k] = partial_k g_ij)."""
        n = self.dimension
        g = np.empty((n, n))
        dg = np.empty((n, n, n))
        for i in range(n):
            for j in range(i, n):
                jet = self.components[i][j].jet(point)
                g[i, j] = g[j, i] = jet.value
                dg[i, j, :] = dg[j, i, :] = jet.grad
        return g, dg


def _cholesky_pivots(g, tol, point):
    """Lower Cholesky factor; raises on a pivot at or below tol."""
    n = g.shape[0]
    L = np.zeros((n, n))
    for i in range(n):
        d = g[i, i] - L[i, :i] @ L[i, :i]
        if d < tol:
            raise NotPositiveDefinite(d, i, point)
        L[i, i] = math.sqrt(d)
        for j in range(i + 1, n):
            L[j, i] = (g[j, i] - L[j, :i] @ L[i, :i]) / L[i, i]
    return L


def metric_at(metric, point):
    """Evaluate the metric matrix and verify positive definiteness."""
    g = metric.matrix(point)
    _cholesky_pivots(g, metric.spd_tol, point)
    return g


def christoffel(metric, point):
    """Levi-Civita symbols Gamma[k, i, j] from exact metric jets.

    Gamma^k_ij = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij); the (i, j)
    slot is filled for i <= j and mirrored, so torsion vanishes exactly.
    """
    g, dg = metric.jets(point)
    _cholesky_pivots(g, metric.spd_tol, point)
    ginv = np.linalg.inv(g)
    n = metric.dimension
    gamma = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            # bracket[l] = d_i g_jl + d_j g_il - d_l g_ij
            bracket = dg[j, :, i] + dg[i, :, j] - dg[i, j, :]
            gk = 0.5 * ginv @ bracket
            gamma[:, i, j] = gk
            gamma[:, j, i] = gk
    return gamma


def gradient(fn, metric, point):
    """Metric gradient: components g^{ij} d_j f at the point."""
    g = metric_at(metric, point)
    df = fn.jet(point).grad
    return TangentVector(point, np.linalg.solve(g, df))


def covariant_derivative(metric, X, Y, point):
    """Levi-Civita derivative of Y along X at a point.

    (nabla_X Y)^k = X^i d_i Y^k + Gamma^k_ij X^i Y^j.
    """
    gamma = christoffel(metric, point)
    x = X(point)
    y = Y(point)
    dy = Y.jacobian(point)
    comps = dy @ x + np.einsum("kij,i,j->k", gamma, x, y)
    return TangentVector(point, comps)


def orthonormal_frame(metric, point):
    """Gram-Schmidt over the coordinate basis, in coordinate order.

    For a block-diagonal metric the frame splits along the blocks: the
    first vectors span the leading coordinate block.
    """
    g = metric_at(metric, point)
    n = metric.dimension
    frame = []
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for u in frame:
            v = v - (u @ g @ v) * u
        norm_sq = v @ g @ v
        if norm_sq <= SPD_PIVOT_TOL:
            raise NotPositiveDefinite(norm_sq, i, point)
        frame.append(v / math.sqrt(norm_sq))
    return [TangentVector(point, v) for v in frame]
