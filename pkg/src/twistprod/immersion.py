"""Isometric immersions between charts: pushforwards, projectors, second
fundamental form, shape operator, mean curvature and its partial traces.

All operations are pointwise. A point context (ImmersionSetup.at) caches
the Jacobian, component Hessians, target metric data and the tangent and
normal projectors so suite code can reuse them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import parse
from .geometry import (
    ChartDomain, MetricField, ScalarField, TangentVector,
    christoffel, covariant_derivative, metric_at,
)

__all__ = [
    "SmoothMap", "ImmersionSetup", "NormalVector", "RankDeficient",
    "DegenerateSplit", "MissingTargetSplit", "GaussMismatch",
    "pushforward", "isometry_residual", "tangent_normal_projectors",
    "second_fundamental_form", "shape_operator", "mean_curvature",
    "partial_traces", "normal_gradient_split",
    "mixed_totally_geodesic_residual", "umbilicity_residual",
    "MeanCurvature", "PartialTraces", "GradientSplit", "UmbilicityResult",
]

NORMALITY_TOL = 1e-10
GAUSS_TOL = 1e-8


class RankDeficient(ArithmeticError):
    """The differential failed to have full column rank."""


class DegenerateSplit(ValueError):
    """A declared product split has an empty block."""


class MissingTargetSplit(ValueError):
    """The operation needs the target declared as a product."""


class GaussMismatch(ArithmeticError):
    """The two routes to the second fundamental form disagreed."""


@dataclass(frozen=True)
class SmoothMap:
    """Componentwise expression map between charts."""

    source: ChartDomain
    target: ChartDomain
    components: tuple  # of Expression over source coordinates

    @classmethod
    def from_sources(cls, source, target, sources):
        comps = tuple(parse(s, source.coords) for s in sources)
        return cls(source, target, comps)

    @classmethod
    def identity(cls, source, target=None):
        target = target or source
        return cls.from_sources(source, target, source.coords)

    def __post_init__(self):
        if len(self.components) != self.target.dimension:
            raise ValueError("one component per target coordinate is required")

    def __call__(self, point):
        env = dict(zip(self.source.coords, (float(c) for c in point)))
        return np.array([c.evaluate(env) for c in self.components])

    def jets(self, point):
        """(values, jacobian J[a, i], hessians H[a, i, j]) at the point."""
        jets = [c.jet(point) for c in self.components]
        values = np.array([j.value for j in jets])
        jac = np.array([j.grad for j in jets])
        hess = np.array([j.hess for j in jets])
        return values, jac, hess


@dataclass(frozen=True)
class NormalVector:
    """A vector at a target point, orthogonal to the immersed tangent space."""

    base: tuple
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(float(c) for c in self.base))
        object.__setattr__(
            self, "components", np.asarray(self.components, dtype=float))


@dataclass(frozen=True)
class MeanCurvature:
    vector: NormalVector
    norm_sq: float


@dataclass(frozen=True)
class PartialTraces:
    trace1: NormalVector
    trace2: NormalVector
    mean1: NormalVector  # trace1 / n1
    mean2: NormalVector
    split: tuple


@dataclass(frozen=True)
class GradientSplit:
    full: NormalVector
    part1: NormalVector
    part2: NormalVector
    residual: float


@dataclass(frozen=True)
class UmbilicityResult:
    residual: float
    coefficient: float  # None when H = 0 with h != 0


@dataclass(frozen=True)
class ImmersionSetup:
    """Source metric, target metric, the map, and optional product splits."""

    source_metric: MetricField
    target_metric: MetricField
    map: SmoothMap
    split: tuple = None         # (n1, n2) over source coordinates
    target_split: tuple = None  # (m1, m2) over target coordinates

    def __post_init__(self):
        if self.map.source is not self.source_metric.chart:
            if self.map.source.coords != self.source_metric.chart.coords:
                raise ValueError("map source chart does not match source metric")
        if self.map.target.coords != self.target_metric.chart.coords:
            raise ValueError("map target chart does not match target metric")
        for split, dim, what in (
            (self.split, self.map.source.dimension, "source"),
            (self.target_split, self.map.target.dimension, "target"),
        ):
            if split is not None:
                a, b = split
                if a < 0 or b < 0 or a + b != dim:
                    raise ValueError(f"bad {what} split {split} for dimension {dim}")

    def at(self, point):
        return _PointContext(self, tuple(float(c) for c in point))


class _PointContext:
    """Cached pointwise data for one immersion evaluation point."""

    def __init__(self, setup, point):
        self.setup = setup
        self.point = point
        self.image, self.jac, self.hessians = setup.map.jets(point)
        self.g_source = metric_at(setup.source_metric, point)
        self.g_target = metric_at(setup.target_metric, self.image)
        self.gamma_target = christoffel(setup.target_metric, self.image)
        jtg = self.jac.T @ self.g_target
        pullback = jtg @ self.jac
        try:
            np.linalg.cholesky(pullback)
        except np.linalg.LinAlgError:
            raise RankDeficient(
                f"differential is rank-deficient at {point}") from None
        # target-metric-orthogonal projector onto the image of the differential
        self.tangent_projector = self.jac @ np.linalg.solve(pullback, jtg)
        self.normal_projector = np.eye(self.jac.shape[0]) - self.tangent_projector
        self._frame = None

    # ---- basics ----

    def pushforward(self, v):
        return self.jac @ np.asarray(v, dtype=float)

    def target_inner(self, u, v):
        return float(u @ self.g_target @ v)

    def target_norm(self, u):
        return math.sqrt(max(self.target_inner(u, u), 0.0))

    def normal(self, components):
        """Wrap ambient components as a NormalVector, verifying normality."""
        comps = np.asarray(components, dtype=float)
        worst = 0.0
        for i in range(self.jac.shape[1]):
            worst = max(worst, abs(self.target_inner(comps, self.jac[:, i])))
        if worst > NORMALITY_TOL * max(1.0, self.target_norm(comps)):
            raise GaussMismatch(
                f"normal component fails tangency check ({worst:.3e}) "
                f"at {self.point}")
        return NormalVector(self.image, comps)

    def frame(self):
        """Source-metric orthonormal frame (coordinate Gram-Schmidt order)."""
        if self._frame is None:
            from .geometry import orthonormal_frame
            self._frame = [
                v.components
                for v in orthonormal_frame(self.setup.source_metric, self.point)
            ]
        return self._frame

    # ---- second fundamental form ----

    def ambient_acceleration(self, v, w):
        """Second-order term of the composed derivative, before projection:
        H[a,i,j] v^i w^j + Gamma^a_bc (Jv)^b (Jw)^c."""
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        jv, jw = self.jac @ v, self.jac @ w
        quad = np.einsum("aij,i,j->a", self.hessians, v, w)
        conn = np.einsum("abc,b,c->a", self.gamma_target, jv, jw)
        return quad + conn

    def sff(self, v, w):
        """Second fundamental form on tangent vectors (normal projection)."""
        return self.normal_projector @ self.ambient_acceleration(v, w)

    def sff_frame(self):
        """All frame pairs h(e_a, e_b), symmetric by construction."""
        frame = self.frame()
        n = len(frame)
        table = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(a, n):
                value = self.sff(frame[a], frame[b])
                table[a][b] = value
                table[b][a] = value
        return table

    def mean_curvature(self):
        frame = self.frame()
        n = len(frame)
        total = np.zeros(self.jac.shape[0])
        for v in frame:
            total += self.sff(v, v)
        h = total / n
        return MeanCurvature(self.normal(h), self.target_inner(h, h))

    def blocks(self):
        if self.setup.split is None:
            raise DegenerateSplit("setup has no declared source split")
        n1, n2 = self.setup.split
        if n1 == 0 or n2 == 0:
            raise DegenerateSplit(f"split {self.setup.split} has an empty block")
        return n1, n2

    def frame_blocks(self):
        """Frame indices per block; requires the frame to respect the split."""
        n1, _ = self.blocks()
        frame = self.frame()
        idx1, idx2 = [], []
        for k, v in enumerate(frame):
            pure1 = np.abs(v[n1:]).max() <= 1e-12
            pure2 = np.abs(v[:n1]).max() <= 1e-12
            if pure1:
                idx1.append(k)
            elif pure2:
                idx2.append(k)
            else:
                raise DegenerateSplit(
                    f"frame vector {k} straddles the declared split at "
                    f"{self.point}; the source metric is not block-diagonal")
        return idx1, idx2

    def partial_traces(self):
        n1, n2 = self.blocks()
        frame = self.frame()
        idx1, idx2 = self.frame_blocks()
        m = self.jac.shape[0]
        t1, t2 = np.zeros(m), np.zeros(m)
        for k in idx1:
            t1 += self.sff(frame[k], frame[k])
        for k in idx2:
            t2 += self.sff(frame[k], frame[k])
        return PartialTraces(
            trace1=self.normal(t1), trace2=self.normal(t2),
            mean1=self.normal(t1 / n1), mean2=self.normal(t2 / n2),
            split=(n1, n2))

    # ---- normal gradients ----

    def metric_gradient(self, fn):
        """Target-metric gradient of a scalar on the target, at the image."""
        df = fn.jet(self.image).grad
        return np.linalg.solve(self.g_target, df)

    def normal_gradient(self, fn):
        return self.normal(self.normal_projector @ self.metric_gradient(fn))

    def normal_gradient_split(self, fn):
        if self.setup.target_split is None:
            raise MissingTargetSplit(
                "normal gradient split needs a declared target product split")
        m1, m2 = self.setup.target_split
        if m1 == 0 or m2 == 0:
            raise DegenerateSplit(
                f"target split {self.setup.target_split} has an empty block")
        grad = self.metric_gradient(fn)
        g1 = np.concatenate([grad[:m1], np.zeros(m2)])
        g2 = np.concatenate([np.zeros(m1), grad[m1:]])
        full = self.normal_projector @ grad
        p1 = self.normal_projector @ g1
        p2 = self.normal_projector @ g2
        residual = self.target_norm(full - p1 - p2)
        return GradientSplit(
            full=self.normal(full), part1=self.normal(p1),
            part2=self.normal(p2), residual=residual)

    # ---- derived diagnostics ----

    def mixed_residual(self):
        """Largest norm of h over mixed coordinate-lift pairs."""
        n1, n2 = self.blocks()
        worst = 0.0
        n = n1 + n2
        for i in range(n1):
            ei = np.zeros(n)
            ei[i] = 1.0
            for a in range(n1, n):
                ea = np.zeros(n)
                ea[a] = 1.0
                worst = max(worst, self.target_norm(self.sff(ei, ea)))
        return worst

    def umbilicity(self):
        table = self.sff_frame()
        n = len(table)
        mean = self.mean_curvature()
        h_scale = max(
            (self.target_norm(table[a][b]) for a in range(n) for b in range(n)),
            default=0.0)
        if mean.norm_sq <= 1e-24:
            if h_scale <= 1e-12:
                return UmbilicityResult(0.0, 0.0)
            return UmbilicityResult(h_scale, None)
        coeff = sum(
            self.target_inner(table[a][a], mean.vector.components)
            for a in range(n)
        ) / (n * mean.norm_sq)
        worst = 0.0
        for a in range(n):
            for b in range(n):
                target = coeff * mean.vector.components if a == b else 0.0
                worst = max(worst, self.target_norm(table[a][b] - target))
        return UmbilicityResult(worst, coeff)


# ---------------------------------------------------------- module-level ops

def pushforward(setup, v, point):
    """Differential applied to a source tangent vector."""
    ctx = setup.at(point)
    comps = ctx.pushforward(v.components if isinstance(v, TangentVector) else v)
    return TangentVector(ctx.image, comps)


def isometry_residual(setup, samples=25, seed=42):
    """max |J^T gM J - gN| over sampled points (accept iff <= 1e-8)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for point in setup.map.source.sample(rng, samples):
        ctx = setup.at(point)
        pullback = ctx.jac.T @ ctx.g_target @ ctx.jac
        worst = max(worst, np.abs(pullback - ctx.g_source).max())
    return worst


def tangent_normal_projectors(setup, point):
    """(P_T, P_N): target-metric orthogonal projectors at the image point."""
    ctx = setup.at(point)
    return ctx.tangent_projector, ctx.normal_projector


def second_fundamental_form(setup, X, Y, point):
    """h(X, Y) for expression vector fields, with a two-route cross-check.

    Route one projects the ambient derivative of the pushed field normally;
    route two subtracts the pushforward of the source covariant derivative.
    They must agree within 1e-8 for an isometric setup.
    """
    ctx = setup.at(point)
    x, y = X(point), Y(point)
    ambient = ctx.ambient_acceleration(x, y) + ctx.jac @ (Y.jacobian(point) @ x)
    route_normal = ctx.normal_projector @ ambient
    nabla = covariant_derivative(setup.source_metric, X, Y, point)
    route_gauss = ambient - ctx.jac @ nabla.components
    mismatch = ctx.target_norm(route_normal - route_gauss)
    if mismatch > GAUSS_TOL:
        raise GaussMismatch(
            f"normal-projection and Gauss-difference routes disagree by "
            f"{mismatch:.3e} at {point}")
    return ctx.normal(route_normal)


def shape_operator(setup, eta, v, point):
    """A_eta v, defined by gN(A_eta v, w) = gM(h(v, w), eta) for all w."""
    ctx = setup.at(point)
    eta_comps = eta.components if isinstance(eta, NormalVector) else np.asarray(eta)
    v_comps = v.components if isinstance(v, TangentVector) else np.asarray(v)
    n = ctx.g_source.shape[0]
    rhs = np.empty(n)
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = 1.0
        rhs[j] = ctx.target_inner(ctx.sff(v_comps, ej), eta_comps)
    return TangentVector(point, np.linalg.solve(ctx.g_source, rhs))


def mean_curvature(setup, point):
    """Mean curvature vector (1/n . trace of h) and its squared norm."""
    return setup.at(point).mean_curvature()


def partial_traces(setup, point):
    """Blockwise traces of h over the adapted frame, and their means."""
    return setup.at(point).partial_traces()


def normal_gradient_split(setup, fn, point):
    """Normal gradient of a target scalar and its block decomposition."""
    return setup.at(point).normal_gradient_split(fn)


def mixed_totally_geodesic_residual(setup, samples=50, seed=42):
    """max over samples of the mixed-pair second fundamental form norm."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for point in setup.map.source.sample(rng, samples):
        worst = max(worst, setup.at(point).mixed_residual())
    return worst


def umbilicity_residual(setup, point):
    """Distance of h from c * g (x) H, with c fitted by least squares."""
    return setup.at(point).umbilicity()
