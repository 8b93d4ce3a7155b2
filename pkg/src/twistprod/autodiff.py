"""Second-order forward-mode jets: value, gradient and Hessian in one pass.

A Jet2 carries f(x), grad f(x) and the symmetric Hessian of f at a point,
propagated exactly through arithmetic and a fixed set of analytic functions.
Dense storage; meant for small dimensions (charts of dimension <= 8).
"""

from __future__ import annotations

import math

import numpy as np


class JetDomainError(ArithmeticError):
    """Raised when an operation leaves its real domain (ln of a negative
    value, division by zero, fractional power of a negative base, ...)."""


def _as_jet(x, n):
    if isinstance(x, Jet2):
        return x
    return Jet2.constant(float(x), n)


class Jet2:
    """Truncated second-order Taylor coefficient triple (value, grad, hess).

    hess is kept exactly symmetric: every rule below builds it from
    symmetric ingredients, so hess[i, j] and hess[j, i] are bit-equal.
    """

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad, hess):
        self.value = float(value)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    @property
    def dim(self):
        return self.grad.shape[0]

    @classmethod
    def variable(cls, value, index, n):
        """Seed for the index-th coordinate: grad = e_index, hess = 0."""
        grad = np.zeros(n)
        grad[index] = 1.0
        return cls(value, grad, np.zeros((n, n)))

    @classmethod
    def constant(cls, value, n):
        return cls(value, np.zeros(n), np.zeros((n, n)))

    # ---- ring operations ----

    def __add__(self, other):
        o = _as_jet(other, self.dim)
        return Jet2(self.value + o.value, self.grad + o.grad, self.hess + o.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        o = _as_jet(other, self.dim)
        return Jet2(self.value - o.value, self.grad - o.grad, self.hess - o.hess)

    def __rsub__(self, other):
        return _as_jet(other, self.dim) - self

    def __mul__(self, other):
        o = _as_jet(other, self.dim)
        outer = np.outer(self.grad, o.grad)
        return Jet2(
            self.value * o.value,
            self.value * o.grad + o.value * self.grad,
            self.value * o.hess + o.value * self.hess + outer + outer.T,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        if self.value == 0.0:
            raise JetDomainError("division by zero")
        v = self.value
        outer = np.outer(self.grad, self.grad)
        return Jet2(1.0 / v, -self.grad / v**2, -self.hess / v**2 + 2.0 * outer / v**3)

    def __truediv__(self, other):
        return self * _as_jet(other, self.dim).reciprocal()

    def __rtruediv__(self, other):
        return _as_jet(other, self.dim) * self.reciprocal()

    # ---- analytic functions ----

    def _compose(self, f0, f1, f2):
        """Chain rule for a scalar function with derivatives f1, f2 at value."""
        outer = np.outer(self.grad, self.grad)
        return Jet2(f0, f1 * self.grad, f1 * self.hess + f2 * outer)

    def exp(self):
        e = math.exp(self.value)
        return self._compose(e, e, e)

    def ln(self):
        if self.value <= 0.0:
            raise JetDomainError("ln of a non-positive value")
        v = self.value
        return self._compose(math.log(v), 1.0 / v, -1.0 / v**2)

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._compose(c, -s, -c)

    def tan(self):
        t = math.tan(self.value)
        sec2 = 1.0 + t * t
        return self._compose(t, sec2, 2.0 * t * sec2)

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._compose(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._compose(c, s, c)

    def tanh(self):
        t = math.tanh(self.value)
        sech2 = 1.0 - t * t
        return self._compose(t, sech2, -2.0 * t * sech2)

    def sqrt(self):
        if self.value < 0.0:
            raise JetDomainError("sqrt of a negative value")
        if self.value == 0.0:
            raise JetDomainError("sqrt is not differentiable at zero")
        r = math.sqrt(self.value)
        return self._compose(r, 0.5 / r, -0.25 / (r * self.value))

    def powc(self, p):
        """Power with a constant real exponent p."""
        p = float(p)
        v = self.value
        if p == 0.0:
            return Jet2.constant(1.0, self.dim)
        if v == 0.0 and p < 2.0 and p != 1.0:
            raise JetDomainError("zero base with exponent below 2")
        if v < 0.0 and p != round(p):
            raise JetDomainError("negative base with a fractional exponent")
        f0 = v**p
        f1 = p * v ** (p - 1.0) if p != 0.0 else 0.0
        c2 = p * (p - 1.0)
        # guard: v**(p-2) can be singular at v = 0 even when its coefficient is 0
        f2 = c2 * v ** (p - 2.0) if c2 != 0.0 else 0.0
        return self._compose(f0, f1, f2)

    def pow_jet(self, other):
        """General power with a non-constant exponent: exp(other * ln(self))."""
        return (other * self.ln()).exp()

    def __repr__(self):
        return f"Jet2({self.value!r}, grad={self.grad!r})"


def seed_point(point):
    """Jets for the coordinates of a point: one variable seed per entry."""
    point = [float(c) for c in point]
    n = len(point)
    return [Jet2.variable(c, i, n) for i, c in enumerate(point)]
