"""Batched truncated multivariate Taylor polynomials ("jets").

A :class:`Taylor` carries the Taylor coefficients ``f^(a)(x0) / a!`` of a
function of ``nvars`` variables up to total degree ``order``, for a whole
batch of expansion points at once.  Coefficients live in an array of shape
``(ncoef, *batch)``; batch axes broadcast like numpy arrays, so a vector
field is simply a Taylor whose last batch axis has length 3.

Differentiation shifts coefficients and lowers the valid order by one; the
valid order is tracked so that no quantity is ever read beyond the degree
to which it is exact.
"""

import functools
import itertools
import math

import numpy as np

from . import _kernels


class OrderExhausted(ValueError):
    """Raised when a derivative is requested of a jet with no exact terms left."""


def _monomials(nvars, degree):
    # descending lexicographic so that (1,0,..) precedes (0,1,..)
    out = []
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        m = [0] * nvars
        for v in combo:
            m[v] += 1
        out.append(tuple(m))
    return out


class TaylorSpace:
    """Index bookkeeping for jets in ``nvars`` variables truncated at ``order``."""

    def __init__(self, nvars, order):
        self.nvars = nvars
        self.order = order
        monos = []
        for d in range(order + 1):
            monos.extend(_monomials(nvars, d))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.ncoef = len(monos)
        self.degree = np.array([sum(m) for m in monos])
        self.count_upto = np.array([int(np.sum(self.degree <= d)) for d in range(order + 1)])
        self.factorial = np.array([math.prod(math.factorial(k) for k in m) for m in monos], float)

        left, right, target = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                if sum(a) + sum(b) <= order:
                    left.append(i)
                    right.append(j)
                    target.append(self.index[tuple(x + y for x, y in zip(a, b))])
        perm = np.argsort(np.array(target), kind="stable")
        left = np.array(left, np.int64)[perm]
        right = np.array(right, np.int64)[perm]
        target = np.array(target, np.int64)[perm]
        starts = np.searchsorted(target, np.arange(self.ncoef))
        npairs = [int(np.sum(self.degree[target] <= d)) for d in range(order + 1)]
        starts_by = [starts[: self.count_upto[d]] for d in range(order + 1)]
        self.mul_tables = (left, right, target, starts_by, npairs)

        self._dsrc = []
        self._dfac = []
        self._isrc = []
        self._ifac = []
        for v in range(nvars):
            src = np.full(self.ncoef, -1, np.int64)
            fac = np.zeros(self.ncoef)
            isrc = np.full(self.ncoef, -1, np.int64)
            ifac = np.zeros(self.ncoef)
            for k, m in enumerate(monos):
                up = list(m)
                up[v] += 1
                up = tuple(up)
                if up in self.index:
                    src[k] = self.index[up]
                    fac[k] = up[v]
                if m[v] > 0:
                    down = list(m)
                    down[v] -= 1
                    isrc[k] = self.index[tuple(down)]
                    ifac[k] = 1.0 / m[v]
            self._dsrc.append(src)
            self._dfac.append(fac)
            self._isrc.append(isrc)
            self._ifac.append(ifac)

    @classmethod
    @functools.lru_cache(maxsize=None)
    def get(cls, nvars, order):
        return cls(nvars, order)

    def __repr__(self):
        return f"TaylorSpace(nvars={self.nvars}, order={self.order})"

    def constant(self, value, order=None):
        value = np.asarray(value, float)
        c = np.zeros((self.ncoef,) + value.shape)
        c[0] = value
        return Taylor(self, c, self.order if order is None else order)

    def variable(self, v, value):
        """The jet of ``x_v`` expanded about ``value`` (array over the batch)."""
        t = self.constant(value)
        if self.order >= 1:
            t.c[self.index[tuple(int(i == v) for i in range(self.nvars))]] = 1.0
        return t


def _is_const(x):
    return isinstance(x, (int, float, np.ndarray, np.floating, np.integer))


class Taylor:
    """A batch of truncated Taylor polynomials sharing one :class:`TaylorSpace`."""

    __array_ufunc__ = None
    __slots__ = ("space", "c", "order")

    def __init__(self, space, coeffs, order):
        self.space = space
        self.c = coeffs
        self.order = int(order)

    # -- basic accessors ---------------------------------------------------
    @property
    def value(self):
        return self.c[0]

    @property
    def shape(self):
        return self.c.shape[1:]

    def __repr__(self):
        return f"Taylor(order={self.order}, shape={self.shape}, value={self.value!r})"

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return Taylor(self.space, self.c[(slice(None),) + key], self.order)

    def coefficient(self, multi):
        return self.c[self.space.index[tuple(multi)]]

    def partial(self, multi):
        """Value of the mixed partial derivative ``d^multi f`` at the expansion point."""
        multi = tuple(multi)
        if sum(multi) > self.order:
            raise OrderExhausted(f"partial {multi} exceeds valid order {self.order}")
        k = self.space.index[multi]
        return self.c[k] * self.space.factorial[k]

    def sum(self, axis=-1):
        ax = axis + 1 if axis >= 0 else axis
        return Taylor(self.space, self.c.sum(axis=ax), self.order)

    def copy(self):
        return Taylor(self.space, self.c.copy(), self.order)

    def truncate(self, order):
        order = min(order, self.order)
        c = self.c.copy()
        c[self.space.count_upto[order]:] = 0.0
        return Taylor(self.space, c, order)

    # -- arithmetic --------------------------------------------------------
    def _const_add(self, other, sign=1.0):
        other = np.asarray(other, float)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.array(np.broadcast_to(sign * self.c, (self.c.shape[0],) + shape))
        c[0] = c[0] + other
        return Taylor(self.space, c, self.order)

    def __add__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.space, self.c + other.c, min(self.order, other.order))
        if _is_const(other):
            return self._const_add(other)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Taylor(self.space, -self.c, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.space, self.c - other.c, min(self.order, other.order))
        if _is_const(other):
            return self._const_add(-np.asarray(other, float))
        return NotImplemented

    def __rsub__(self, other):
        if _is_const(other):
            return self._const_add(other, sign=-1.0)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Taylor):
            return _mul(self, other)
        if _is_const(other):
            return Taylor(self.space, self.c * np.asarray(other, float)[None], self.order)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Taylor):
            return _mul(self, other.reciprocal())
        if _is_const(other):
            return Taylor(self.space, self.c / np.asarray(other, float)[None], self.order)
        return NotImplemented

    def __rtruediv__(self, other):
        if _is_const(other):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, p):
        if isinstance(p, Taylor):
            return (p * self.log()).exp()
        if isinstance(p, (int, np.integer)) or (isinstance(p, float) and p.is_integer() and abs(p) < 64):
            n = int(p)
            if n < 0:
                return (self ** (-n)).reciprocal()
            result = None
            base = self
            while n:
                if n & 1:
                    result = base if result is None else result * base
                n >>= 1
                if n:
                    base = base * base
            if result is None:
                return self.space.constant(np.ones(self.shape), self.order)
            return result
        return self._compose(_pow_coeffs(float(p)))

    def __rpow__(self, base):
        return (self * np.log(base)).exp()

    # -- elementary functions via Taylor composition -----------------------
    def _compose(self, coeff_fn):
        a0 = self.c[0]
        d = coeff_fn(a0, self.order)
        if self.order == 0:
            return Taylor(self.space, self.space.constant(d[0]).c, 0)
        shifted = Taylor(self.space, self.c.copy(), self.order)
        shifted.c[0] = 0.0
        r = self.space.constant(d[self.order], self.order)
        for k in range(self.order - 1, -1, -1):
            r = _mul(r, shifted)
            r.c[0] = r.c[0] + d[k]
        return r

    def reciprocal(self):
        return self._compose(_recip_coeffs)

    def exp(self):
        return self._compose(_exp_coeffs)

    def log(self):
        return self._compose(_log_coeffs)

    def sin(self):
        return self._compose(_sin_coeffs)

    def cos(self):
        return self._compose(_cos_coeffs)

    def tan(self):
        return self.sin() / self.cos()

    def sqrt(self):
        return self._compose(_pow_coeffs(0.5))

    # -- calculus ----------------------------------------------------------
    def deriv(self, v):
        if self.order < 1:
            raise OrderExhausted("derivative of an order-0 jet")
        src = self.space._dsrc[v]
        fac = self.space._dfac[v]
        ok = src >= 0
        c = np.zeros_like(self.c)
        shape = (-1,) + (1,) * (self.c.ndim - 1)
        c[ok] = self.c[src[ok]] * fac[ok].reshape(shape)
        out = Taylor(self.space, c, self.order - 1)
        c[self.space.count_upto[out.order]:] = 0.0
        return out

    def integ(self, v, const=0.0):
        """Antiderivative in variable ``v`` with value ``const`` at the base point."""
        src = self.space._isrc[v]
        fac = self.space._ifac[v]
        ok = src >= 0
        c = np.zeros_like(self.c)
        shape = (-1,) + (1,) * (self.c.ndim - 1)
        c[ok] = self.c[src[ok]] * fac[ok].reshape(shape)
        order = min(self.order + 1, self.space.order)
        c[self.space.count_upto[order]:] = 0.0
        out = Taylor(self.space, c, order)
        return out + const


def _mul(a, b):
    order = min(a.order, b.order)
    shape = np.broadcast_shapes(a.shape, b.shape)
    n = a.c.shape[0]
    ac = np.broadcast_to(a.c, (n,) + shape).reshape(n, -1)
    bc = np.broadcast_to(b.c, (n,) + shape).reshape(n, -1)
    out = _kernels.taylor_mul(ac, bc, a.space.mul_tables, order)
    return Taylor(a.space, out.reshape((n,) + shape), order)


def _exp_coeffs(a0, n):
    e = np.exp(a0)
    return [e / math.factorial(k) for k in range(n + 1)]


def _log_coeffs(a0, n):
    out = [np.log(a0)]
    for k in range(1, n + 1):
        out.append((-1.0) ** (k + 1) / (k * a0 ** k))
    return out


def _sin_coeffs(a0, n):
    cyc = [np.sin(a0), np.cos(a0), -np.sin(a0), -np.cos(a0)]
    return [cyc[k % 4] / math.factorial(k) for k in range(n + 1)]


def _cos_coeffs(a0, n):
    cyc = [np.cos(a0), -np.sin(a0), -np.cos(a0), np.sin(a0)]
    return [cyc[k % 4] / math.factorial(k) for k in range(n + 1)]


def _recip_coeffs(a0, n):
    inv = 1.0 / a0
    out = [inv]
    for _ in range(n):
        out.append(-out[-1] * inv)
    return out


def _pow_coeffs(p):
    def coeffs(a0, n):
        out = []
        binom = 1.0
        for k in range(n + 1):
            out.append(binom * a0 ** (p - k))
            binom *= (p - k) / (k + 1)
        return out

    return coeffs


def where(mask, a, b):
    """Batchwise select between two jets (or a jet and a constant)."""
    space = a.space if isinstance(a, Taylor) else b.space
    if not isinstance(a, Taylor):
        a = space.constant(np.broadcast_to(np.asarray(a, float), b.shape))
    if not isinstance(b, Taylor):
        b = space.constant(np.broadcast_to(np.asarray(b, float), a.shape))
    return Taylor(space, np.where(np.asarray(mask)[None], a.c, b.c), min(a.order, b.order))


def value(x):
    """Plain numeric value of a jet, series-free number or array."""
    if isinstance(x, Taylor):
        return x.c[0]
    return np.asarray(x, float)


# -- generic math that works on floats, arrays and jets --------------------
def _dispatch(name, npfunc):
    def fn(x):
        if hasattr(x, name) and not isinstance(x, np.ndarray):
            return getattr(x, name)()
        return npfunc(x)

    fn.__name__ = name
    return fn


sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)
tan = _dispatch("tan", np.tan)
exp = _dispatch("exp", np.exp)
log = _dispatch("log", np.log)
sqrt = _dispatch("sqrt", np.sqrt)


def stack(items, axis=-1):
    jets = [x for x in items if isinstance(x, Taylor)]
    if not jets:
        arrs = np.broadcast_arrays(*[np.asarray(x, float) for x in items])
        return np.stack(arrs, axis=axis)
    space = jets[0].space
    shape = np.broadcast_shapes(*[x.shape if isinstance(x, Taylor) else np.shape(x) for x in items])
    parts = []
    for x in items:
        if not isinstance(x, Taylor):
            x = space.constant(np.broadcast_to(np.asarray(x, float), shape))
        parts.append(np.broadcast_to(x.c, (space.ncoef,) + shape))
    ax = axis + 1 if axis >= 0 else axis
    return Taylor(space, np.stack(parts, axis=ax), min(x.order for x in jets))


def dot(a, b):
    return (a * b).sum(-1)


def cross(a, b):
    return stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ])


def norm(a):
    return sqrt(dot(a, a))
