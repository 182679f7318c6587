"""Truncated Laurent series in a small parameter eps.

Coefficients may be plain numbers, numpy arrays or :class:`~sdcalc.taylor.Taylor`
jets, so the same operator code that evaluates an exact operator also builds
its boundary-layer expansion when fed series instead of jets.
"""

import math

import numpy as np

from .taylor import Taylor


def _is_zero(c):
    if isinstance(c, Taylor):
        return not np.any(c.c)
    return not np.any(np.asarray(c))


def _scalar_like(x):
    return isinstance(x, (int, float, np.ndarray, np.floating, np.integer, Taylor))


class EpsSeries:
    """``sum_{k=m}^{kmax} c_k eps^k``, exact through ``eps^kmax``.

    ``cap`` bounds how many orders are carried at all; products never keep
    terms beyond ``cap`` even if they are known.
    """

    __array_ufunc__ = None

    def __init__(self, coeffs, min_order=0, kmax=None, cap=None):
        self.coeffs = list(coeffs)
        self.min_order = int(min_order)
        top = self.min_order + len(self.coeffs) - 1
        self.kmax = top if kmax is None else int(kmax)
        self.cap = self.kmax if cap is None else int(cap)
        self.kmax = min(self.kmax, self.cap)
        keep = self.kmax - self.min_order + 1
        self.coeffs = self.coeffs[: max(keep, 0)]

    @classmethod
    def constant(cls, c, cap):
        return cls([c], 0, kmax=cap, cap=cap)

    @classmethod
    def eps_times(cls, c, cap):
        """The series ``c * eps`` (known exactly to order ``cap``)."""
        return cls([0.0 * c, c], 0, kmax=cap, cap=cap)

    def coeff(self, k):
        if k < self.min_order or k > self.min_order + len(self.coeffs) - 1:
            return 0.0
        return self.coeffs[k - self.min_order]

    @property
    def orders(self):
        return range(self.min_order, self.kmax + 1)

    def __repr__(self):
        return f"EpsSeries(min_order={self.min_order}, kmax={self.kmax}, ncoef={len(self.coeffs)})"

    def _coerce(self, other):
        if isinstance(other, EpsSeries):
            return other
        if _scalar_like(other):
            return EpsSeries.constant(other, self.cap)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        lo = min(self.min_order, other.min_order)
        hi = min(self.kmax, other.kmax)
        return EpsSeries([self.coeff(k) + other.coeff(k) for k in range(lo, hi + 1)], lo,
                         kmax=hi, cap=min(self.cap, other.cap))

    __radd__ = __add__

    def __neg__(self):
        return EpsSeries([-c for c in self.coeffs], self.min_order, self.kmax, self.cap)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if _scalar_like(other):
            return EpsSeries([c * other for c in self.coeffs], self.min_order, self.kmax, self.cap)
        if not isinstance(other, EpsSeries):
            return NotImplemented
        m = self.min_order + other.min_order
        hi = min(self.kmax + other.min_order, other.kmax + self.min_order, min(self.cap, other.cap))
        out = []
        for k in range(m, hi + 1):
            acc = 0.0
            for i in range(self.min_order, k - other.min_order + 1):
                a = self.coeff(i)
                b = other.coeff(k - i)
                if _is_zero(a) or _is_zero(b):
                    continue
                acc = acc + a * b
            out.append(acc)
        return EpsSeries(out, m, kmax=hi, cap=min(self.cap, other.cap))

    def __rmul__(self, other):
        if _scalar_like(other):
            return EpsSeries([other * c for c in self.coeffs], self.min_order, self.kmax, self.cap)
        return NotImplemented

    def strip(self):
        """Drop exactly-zero leading coefficients."""
        k = 0
        while k < len(self.coeffs) - 1 and _is_zero(self.coeffs[k]):
            k += 1
        return EpsSeries(self.coeffs[k:], self.min_order + k, self.kmax, self.cap)

    def reciprocal(self):
        s = self.strip()
        m = s.min_order
        a0 = s.coeffs[0]
        if _is_zero(a0):
            raise ZeroDivisionError("reciprocal of a series with no known nonzero term")
        kmax = min(s.kmax - 2 * m, s.cap)
        n = kmax + m + 1
        inv0 = 1.0 / a0
        out = [inv0]
        for j in range(1, n):
            acc = 0.0
            for i in range(1, j + 1):
                a = s.coeff(m + i)
                if _is_zero(a):
                    continue
                acc = acc + a * out[j - i]
            out.append(-acc * inv0)
        return EpsSeries(out, -m, kmax=kmax, cap=s.cap)

    def __truediv__(self, other):
        if _scalar_like(other):
            return self * (1.0 / other)
        if isinstance(other, EpsSeries):
            return self * other.reciprocal()
        return NotImplemented

    def __rtruediv__(self, other):
        if _scalar_like(other):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("EpsSeries supports integer powers only")
        if n < 0:
            return (self ** (-n)).reciprocal()
        out = EpsSeries.constant(1.0, self.cap)
        for _ in range(n):
            out = out * self
        return out

    def map(self, fn):
        """Apply a linear map to every coefficient."""
        return EpsSeries([fn(c) for c in self.coeffs], self.min_order, self.kmax, self.cap)

    def shift(self, k):
        """Multiply by ``eps^k``."""
        return EpsSeries(self.coeffs, self.min_order + k, self.kmax + k, self.cap + k)

    def __getitem__(self, key):
        return self.map(lambda c: c[key])

    def sum(self, axis=-1):
        return self.map(lambda c: c.sum(axis) if hasattr(c, "sum") else c)

    def truncate(self, K):
        return EpsSeries(self.coeffs, self.min_order, min(K, self.kmax), min(K, self.cap))

    def values(self):
        """Numeric coefficient values (jets collapsed to their base value)."""
        return [c.value if isinstance(c, Taylor) else np.asarray(c, float) for c in self.coeffs]

    def evaluate(self, eps, K=None):
        top = self.kmax if K is None else min(K, self.kmax)
        total = 0.0
        for k in range(self.min_order, top + 1):
            c = self.coeff(k)
            c = c.value if isinstance(c, Taylor) else np.asarray(c, float)
            total = total + c * eps ** k
        return total

    # elementary functions through the Taylor composition of the leading term
    def _compose(self, derivs):
        s = self.strip()
        if s.min_order < 0:
            raise ValueError("elementary function of a singular series")
        if s.min_order > 0:
            a0 = 0.0 * s.coeffs[0]
            rest = s
        else:
            a0 = s.coeffs[0]
            rest = EpsSeries([0.0 * a0] + s.coeffs[1:], 0, s.kmax, s.cap)
        d = derivs(a0, max(s.kmax, 0))
        out = EpsSeries.constant(d[-1], s.cap)
        for k in range(len(d) - 2, -1, -1):
            out = out * rest + d[k]
        return EpsSeries(out.coeffs, out.min_order, min(out.kmax, s.kmax), s.cap)

    def sin(self):
        return self._compose(lambda a, n: [_generic(a, "sin", "cos", k) / math.factorial(k) for k in range(n + 1)])

    def cos(self):
        return self._compose(lambda a, n: [_generic(a, "cos", "sin", k) / math.factorial(k) for k in range(n + 1)])

    def exp(self):
        def d(a, n):
            e = _call(a, "exp")
            return [e / math.factorial(k) for k in range(n + 1)]
        return self._compose(d)


def _call(a, name):
    if isinstance(a, Taylor):
        return getattr(a, name)()
    return getattr(np, name)(a)


def _generic(a, first, second, k):
    if first == "sin":
        cyc = [(1, "sin"), (1, "cos"), (-1, "sin"), (-1, "cos")]
    else:
        cyc = [(1, "cos"), (-1, "sin"), (-1, "cos"), (1, "sin")]
    sign, name = cyc[k % 4]
    return sign * _call(a, name)
