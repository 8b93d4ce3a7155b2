"""Second-order forward-mode jets against central finite differences."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistprod.autodiff import Jet2, JetDomainError, seed_point
from twistprod.expr import EvalDomainError, parse

from conftest import fd_gradient, fd_hessian, random_expression_case

GRAD_H = 1e-5
GRAD_RTOL = 1e-6
HESS_H = 1e-4
HESS_RTOL = 1e-4

CORPUS_SEED = 987123
CORPUS_SIZE = 40


def jet_of(source, variables, point):
    return parse(source, variables).jet(point)


def _corpus():
    rng = np.random.default_rng(CORPUS_SEED)
    return [random_expression_case(rng) for _ in range(CORPUS_SIZE)]


@pytest.mark.parametrize("case", _corpus(), ids=lambda c: c[0][:48])
def test_gradient_matches_central_differences(case):
    source, variables, point = case
    expr = parse(source, variables)
    jet = expr.jet(point)
    fd = fd_gradient(lambda p: expr.evaluate(tuple(p)), point, h=GRAD_H)
    scale = np.maximum(1.0, np.abs(fd))
    assert (np.abs(jet.grad - fd) / scale).max() <= GRAD_RTOL


@pytest.mark.parametrize("case", _corpus(), ids=lambda c: c[0][:48])
def test_hessian_matches_central_differences(case):
    source, variables, point = case
    expr = parse(source, variables)
    jet = expr.jet(point)
    fd = fd_hessian(lambda p: expr.evaluate(tuple(p)), point, h=HESS_H)
    scale = np.maximum(1.0, np.abs(fd))
    assert (np.abs(jet.hess - fd) / scale).max() <= HESS_RTOL


def test_hessian_is_bitwise_symmetric_across_corpus():
    for source, variables, point in _corpus():
        hess = jet_of(source, variables, point).hess
        assert np.array_equal(hess, hess.T)


def test_seed_point_identity_structure():
    jets = seed_point((0.3, -1.2, 2.0))
    assert [j.value for j in jets] == [0.3, -1.2, 2.0]
    for i, j in enumerate(jets):
        expected = np.zeros(3)
        expected[i] = 1.0
        assert np.array_equal(j.grad, expected)
        assert not j.hess.any()


def test_constant_jet():
    c = Jet2.constant(4.5, 2)
    assert c.value == 4.5
    assert not c.grad.any() and not c.hess.any()


def test_polynomial_exact():
    # f = x^2 y + 3x at (2, 5)
    x, y = seed_point((2.0, 5.0))
    f = x.powc(2.0) * y + Jet2.constant(3.0, 2) * x
    assert f.value == 26.0
    assert np.array_equal(f.grad, [23.0, 4.0])
    assert np.array_equal(f.hess, [[10.0, 4.0], [4.0, 0.0]])


def test_power_edge_cases_at_zero():
    (x,) = seed_point((0.0,))
    one = x.powc(0.0)
    assert one.value == 1.0 and not one.grad.any() and not one.hess.any()
    ident = x.powc(1.0)
    assert ident.value == 0.0
    assert np.array_equal(ident.grad, [1.0]) and not ident.hess.any()
    sq = x.powc(2.0)
    assert sq.value == 0.0 and not sq.grad.any()
    assert np.array_equal(sq.hess, [[2.0]])


def test_division_quotient_rule():
    x, y = seed_point((1.5, 0.5))
    q = x / y
    assert q.value == pytest.approx(3.0)
    assert q.grad == pytest.approx([2.0, -6.0])
    # d2/dy2 (x/y) = 2x/y^3
    assert q.hess[1, 1] == pytest.approx(2 * 1.5 / 0.5**3)


def test_domain_errors():
    (x,) = seed_point((-1.0,))
    with pytest.raises(JetDomainError):
        x.ln()
    with pytest.raises(JetDomainError):
        x.sqrt()
    (z,) = seed_point((0.0,))
    with pytest.raises(JetDomainError):
        z.reciprocal()
    with pytest.raises(JetDomainError):
        x.pow_jet(Jet2.constant(0.5, 1))


def test_expression_jet_domain_error_surfaces_as_eval_error():
    # the expression layer rewraps jet failures with the offending source
    expr = parse("ln(x - 2)", ("x",))
    with pytest.raises(EvalDomainError) as err:
        expr.jet((1.0,))
    assert "ln(x - 2)" in str(err.value)


_COORD = st.floats(min_value=-2.0, max_value=2.0,
                   allow_nan=False, allow_infinity=False)


def _close(a, b, tol=1e-9):
    scale = max(1.0, abs(b))
    return abs(a - b) <= tol * scale


def _jets_agree(f, g, tol=1e-9):
    scale = max(
        1.0, abs(g.value), np.abs(g.grad).max(), np.abs(g.hess).max())
    return (
        abs(f.value - g.value) <= tol * scale
        and np.abs(f.grad - g.grad).max() <= tol * scale
        and np.abs(f.hess - g.hess).max() <= tol * scale)


@settings(max_examples=200, deadline=None)
@given(_COORD, _COORD)
def test_difference_of_squares_identity(a, b):
    left = jet_of("(x + y) * (x - y)", ("x", "y"), (a, b))
    right = jet_of("x^2 - y^2", ("x", "y"), (a, b))
    assert _jets_agree(left, right)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.1, max_value=5.0))
def test_exp_ln_inverse(a):
    jet = jet_of("exp(ln(x))", ("x",), (a,))
    assert _close(jet.value, a)
    assert _close(jet.grad[0], 1.0)
    assert _close(jet.hess[0, 0], 0.0)


@settings(max_examples=200, deadline=None)
@given(_COORD)
def test_pythagorean_identity_is_flat(a):
    jet = jet_of("sin(x)^2 + cos(x)^2", ("x",), (a,))
    assert _close(jet.value, 1.0)
    assert _close(jet.grad[0], 0.0)
    assert _close(jet.hess[0, 0], 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-1.4, max_value=1.4))
def test_tan_matches_sin_over_cos(a):
    left = jet_of("tan(x)", ("x",), (a,))
    right = jet_of("sin(x) / cos(x)", ("x",), (a,))
    assert _jets_agree(left, right, tol=1e-8)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.2, max_value=3.0),
       st.floats(min_value=-1.5, max_value=1.5))
def test_general_power_matches_exp_ln_form(a, b):
    left = jet_of("pow(x, y)", ("x", "y"), (a, b))
    right = jet_of("exp(y * ln(x))", ("x", "y"), (a, b))
    assert _jets_agree(left, right, tol=1e-8)


def test_hyperbolic_pythagorean():
    jet = jet_of("cosh(x)^2 - sinh(x)^2", ("x",), (0.8,))
    assert _close(jet.value, 1.0)
    assert _close(jet.grad[0], 0.0)
    assert _close(jet.hess[0, 0], 0.0)


def test_known_hessian_of_radial_log():
    # f = ln(x^2 + y^2) at (1, 2): grad = 2(x,y)/r^2, known Hessian
    expr = parse("ln(x^2 + y^2)", ("x", "y"))
    jet = expr.jet((1.0, 2.0))
    r2 = 5.0
    assert jet.value == pytest.approx(math.log(r2))
    assert jet.grad == pytest.approx([2 / 5, 4 / 5])
    expected = 2 / r2**2 * np.array([[r2 - 2 * 1, -2 * 2], [-2 * 2, r2 - 8]])
    assert jet.hess == pytest.approx(expected)
