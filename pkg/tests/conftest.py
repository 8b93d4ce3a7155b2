"""Shared fixtures: product builders, curated scenarios, and the seeded
random expression corpus used by the finite-difference oracle tests."""

import numpy as np
import pytest

from twistprod import (
    ChartDomain, DoublyTwistedImmersionScenario, ImmersionSetup, MetricField,
    SmoothMap, build_doubly_twisted,
)
from twistprod.cli import load_scene, resolve_scene_path


def make_product(coords1, box1, g1, coords2, box2, g2, sigma1, sigma2):
    chart1 = ChartDomain(tuple(coords1), tuple(box1))
    chart2 = ChartDomain(tuple(coords2), tuple(box2))
    return build_doubly_twisted(
        chart1, MetricField(chart1, g1),
        chart2, MetricField(chart2, g2), sigma1, sigma2)


I2 = [["1", "0"], ["0", "1"]]
I3 = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]


@pytest.fixture(scope="session")
def sphere_scenario():
    """Warped 1+1 with identity maps; codimension zero."""
    src = make_product(("t",), ((0.35, 2.75),), [["1"]],
                       ("th",), ((0.3, 5.9),), [["1"]], "sin(t)", "1")
    tgt = make_product(("u",), ((0.35, 2.75),), [["1"]],
                       ("v",), ((0.3, 5.9),), [["1"]], "sin(u)", "1")
    return DoublyTwistedImmersionScenario(
        src, tgt,
        SmoothMap.from_sources(src.chart1, tgt.chart1, ["t"]),
        SmoothMap.from_sources(src.chart2, tgt.chart2, ["th"]))


@pytest.fixture(scope="session")
def twisted_scenario():
    """Genuinely twisted 1+1 (scaling uses both factors), identity maps."""
    src = make_product(("x",), ((-1.0, 1.0),), [["1"]],
                       ("y",), ((0.6, 1.8),), [["1"]], "exp(x) / y", "1")
    tgt = make_product(("a",), ((-1.0, 1.0),), [["1"]],
                       ("b",), ((0.6, 1.8),), [["1"]], "exp(a) / b", "1")
    return DoublyTwistedImmersionScenario(
        src, tgt,
        SmoothMap.from_sources(src.chart1, tgt.chart1, ["x"]),
        SmoothMap.from_sources(src.chart2, tgt.chart2, ["y"]))


@pytest.fixture(scope="session")
def circles_scenario():
    """Two unit circles in radially scaled planes; codimension two.

    The radial scalings equal 1 on the images, so the source scalings
    are the constant 1 while the normal gradients stay nonzero.
    """
    src = make_product(("s",), ((0.1, 6.18),), [["1"]],
                       ("t",), ((0.1, 6.18),), [["1"]], "1", "1")
    tgt = make_product(
        ("p1", "q1"), ((-1.6, 1.6), (-1.6, 1.6)), I2,
        ("p2", "q2"), ((-1.6, 1.6), (-1.6, 1.6)), I2,
        "exp(0.15 * (p1^2 + q1^2 - 1))", "exp(0.1 * (p2^2 + q2^2 - 1))")
    return DoublyTwistedImmersionScenario(
        src, tgt,
        SmoothMap.from_sources(src.chart1, tgt.chart1, ["cos(s)", "sin(s)"]),
        SmoothMap.from_sources(src.chart2, tgt.chart2, ["cos(t)", "sin(t)"]))


@pytest.fixture(scope="session")
def chen_negative_scenario():
    """Warped with nonconstant scaling and a circle second factor; the
    equality case of the warped inequality must break by at least 1/2."""
    src = make_product(("w",), ((-1.0, 1.0),), [["1"]],
                       ("t",), ((0.1, 6.18),), [["1"]], "exp(0.1 * w)", "1")
    tgt = make_product(("z",), ((-1.0, 1.0),), [["1"]],
                       ("p", "q"), ((-1.6, 1.6), (-1.6, 1.6)), I2,
                       "exp(0.1 * z)", "1")
    return DoublyTwistedImmersionScenario(
        src, tgt,
        SmoothMap.from_sources(src.chart1, tgt.chart1, ["w"]),
        SmoothMap.from_sources(src.chart2, tgt.chart2, ["cos(t)", "sin(t)"]))


@pytest.fixture(scope="session")
def minimality_negative_scenario():
    """Block-2 scaling with a radial gradient at the image: the block-1
    partial mean curvature must be nonzero through the opposite-block
    gradient clause alone."""
    src = make_product(("w",), ((-1.0, 1.0),), [["1"]],
                       ("t",), ((0.1, 6.18),), [["1"]],
                       "1", "exp(0.1)")
    tgt = make_product(("z",), ((-1.0, 1.0),), [["1"]],
                       ("p", "q"), ((-1.6, 1.6), (-1.6, 1.6)), I2,
                       "1", "exp(0.1 * (p^2 + q^2))")
    return DoublyTwistedImmersionScenario(
        src, tgt,
        SmoothMap.from_sources(src.chart1, tgt.chart1, ["w"]),
        SmoothMap.from_sources(src.chart2, tgt.chart2, ["cos(t)", "sin(t)"]))


@pytest.fixture(scope="session")
def saddle_setup():
    """Isometric graph immersion that is not a product map."""
    chart = ChartDomain(("s", "t"), ((-0.9, 0.9), (-0.9, 0.9)))
    induced = MetricField(
        chart, [["1 + t^2", "s * t"], ["s * t", "1 + s^2"]])
    e3 = ChartDomain(("X", "Y", "Z"), ((-2.0, 2.0),) * 3)
    flat = MetricField(e3, I3)
    saddle = SmoothMap.from_sources(chart, e3, ["s", "t", "s * t"])
    return ImmersionSetup(induced, flat, saddle, split=(1, 1))


_SCENE_CACHE = {}


def bundled_scene(name):
    if name not in _SCENE_CACHE:
        path, _ = resolve_scene_path(name)
        _SCENE_CACHE[name] = load_scene(path)
    return _SCENE_CACHE[name]


# ------------------------------------------------ random expression corpus

def _subexpr(rng, variables, depth):
    if depth <= 0 or rng.random() < 0.22:
        if rng.random() < 0.55:
            return str(rng.choice(variables))
        return repr(round(float(rng.uniform(-2.0, 2.0)), 3))
    kind = rng.choice([
        "add", "sub", "mul", "div", "neg", "sin", "cos", "tanh", "sinh",
        "exp", "ln", "sqrt", "tan", "powi", "powf", "powfn",
    ])
    a = _subexpr(rng, variables, depth - 1)
    if kind in ("add", "sub", "mul"):
        b = _subexpr(rng, variables, depth - 1)
        op = {"add": "+", "sub": "-", "mul": "*"}[kind]
        return f"({a} {op} {b})"
    if kind == "div":
        # denominator bounded away from zero
        b = _subexpr(rng, variables, depth - 1)
        return f"({a}) / (2.15 + tanh({b}))"
    if kind == "neg":
        return f"(-({a}))"
    if kind in ("sin", "cos", "tanh"):
        return f"{kind}({a})"
    if kind == "sinh":
        return f"sinh(tanh({a}))"
    if kind == "exp":
        return f"exp(0.75 * sin({a}))"
    if kind == "ln":
        return f"ln(2.5 + tanh({a}))"
    if kind == "sqrt":
        return f"sqrt(2.5 + tanh({a}))"
    if kind == "tan":
        return f"tan(0.8 * tanh({a}))"
    if kind == "powi":
        k = int(rng.integers(2, 4))
        return f"(0.5 * cos({a})) ^ {k}"
    if kind == "powf":
        return f"(2.5 + tanh({a})) ^ -1.5"
    # general exponent, positive base and a bounded exponent expression
    b = _subexpr(rng, variables, depth - 1)
    return f"pow(2.5 + tanh({a}), 0.5 * cos({b}))"


def random_expression_case(rng):
    """One (source, variables, point) triple, safe for finite differences."""
    n = int(rng.integers(2, 5))
    variables = tuple(f"x{i}" for i in range(1, n + 1))
    parts = [_subexpr(rng, variables, 3) for _ in range(int(rng.integers(1, 3)))]
    source = " + ".join(parts)
    point = tuple(float(c) for c in rng.uniform(-1.2, 1.2, n))
    return source, variables, point


def fd_gradient(fn, point, h=1e-5):
    point = np.asarray(point, dtype=float)
    grad = np.zeros(point.size)
    for i in range(point.size):
        up, dn = point.copy(), point.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fn(up) - fn(dn)) / (2.0 * h)
    return grad


def fd_hessian(fn, point, h=1e-4):
    point = np.asarray(point, dtype=float)
    n = point.size
    hess = np.zeros((n, n))
    f0 = fn(point)
    for i in range(n):
        up, dn = point.copy(), point.copy()
        up[i] += h
        dn[i] -= h
        hess[i, i] = (fn(up) - 2.0 * f0 + fn(dn)) / h**2
        for j in range(i + 1, n):
            pp, pm, mp, mm = (point.copy() for _ in range(4))
            pp[[i, j]] += h
            mm[[i, j]] -= h
            pm[i] += h
            pm[j] -= h
            mp[i] -= h
            mp[j] += h
            hess[i, j] = hess[j, i] = (
                fn(pp) - fn(pm) - fn(mp) + fn(mm)) / (4.0 * h**2)
    return hess
