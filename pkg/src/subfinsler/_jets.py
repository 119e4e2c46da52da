"""Truncated Taylor series ("jets") for exact higher derivatives.

A jet of order n stores c[0..n] with f(theta + t) = sum_k c[k] t**k + O(t**(n+1)).
Coefficients may carry trailing array dimensions, so one jet evaluates many
base points at once.
"""
from __future__ import annotations

from math import factorial

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        derivs = np.asarray(derivs, dtype=float)
        scale = np.array([1.0 / factorial(k) for k in range(derivs.shape[0])])
        return cls(derivs * scale.reshape((-1,) + (1,) * (derivs.ndim - 1)))

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    def derivatives(self) -> np.ndarray:
        scale = np.array([float(factorial(k)) for k in range(self.c.shape[0])])
        return self.c * scale.reshape((-1,) + (1,) * (self.c.ndim - 1))

    def value(self) -> np.ndarray:
        return self.c[0]

    def deriv(self) -> "Jet":
        k = np.arange(1, self.c.shape[0], dtype=float)
        return Jet(self.c[1:] * k.reshape((-1,) + (1,) * (self.c.ndim - 1)))

    def _coerce(self, other):
        if isinstance(other, Jet):
            n = min(self.c.shape[0], other.c.shape[0])
            return self.c[:n], other.c[:n]
        oc = np.zeros_like(self.c)
        oc[0] = other
        return self.c, oc

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(b - a)

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b = self._coerce(other)
        out = np.zeros_like(a)
        for k in range(a.shape[0]):
            for j in range(k + 1):
                out[k] = out[k] + a[j] * b[k - j]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for j in range(1, k + 1):
                acc = acc + a[j] * out[k - j]
            out[k] = -acc / a[0]
        return Jet(out)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def sqrt(self) -> "Jet":
        a = self.c
        out = np.zeros_like(a)
        out[0] = np.sqrt(a[0])
        for k in range(1, a.shape[0]):
            acc = np.zeros_like(a[0])
            for j in range(1, k):
                acc = acc + out[j] * out[k - j]
            out[k] = (a[k] - acc) / (2.0 * out[0])
        return Jet(out)
