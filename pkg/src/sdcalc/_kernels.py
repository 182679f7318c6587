"""Hot inner loops for truncated Taylor arithmetic.

Every differential operator in the package bottoms out in products of
truncated multivariate Taylor polynomials, batched over evaluation points.
The product is a sparse convolution driven by precomputed index tables.

Two implementations are provided: a numba ``@njit`` loop and a pure numpy
path (gather + ``np.add.reduceat``).  Numba is used when importable unless
``SDCALC_NUMBA=0`` is set in the environment.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None


def _env_wants_numba():
    return os.environ.get("SDCALC_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


HAVE_NUMBA = numba is not None
_use_numba = HAVE_NUMBA and _env_wants_numba()


def backend():
    return "numba" if _use_numba else "numpy"


def set_backend(name):
    """Switch between ``"numba"`` and ``"numpy"`` at runtime (benchmarks, tests)."""
    global _use_numba
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def _mul_numpy(a, b, left, right, starts, npairs):
    prod = a[left[:npairs]] * b[right[:npairs]]
    return np.add.reduceat(prod, starts, axis=0)


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _mul_loop(a, b, left, right, target, npairs, out):
        nb = a.shape[1]
        for p in range(npairs):
            i = left[p]
            j = right[p]
            k = target[p]
            for q in range(nb):
                out[k, q] += a[i, q] * b[j, q]
        return out


def taylor_mul(a, b, tables, order):
    """Truncated product of coefficient blocks ``a``, ``b`` of shape (ncoef, B).

    ``tables`` is the pair table of a :class:`~sdcalc.taylor.TaylorSpace`;
    coefficients above ``order`` are returned as zero.
    """
    left, right, target, starts_by_order, npairs_by_order = tables
    ncoef = a.shape[0]
    npairs = npairs_by_order[order]
    nk = starts_by_order[order].shape[0]
    if _use_numba:
        out = np.zeros((ncoef, a.shape[1]))
        return _mul_loop(np.ascontiguousarray(a), np.ascontiguousarray(b),
                         left, right, target, npairs, out)
    out = np.zeros((ncoef, a.shape[1]))
    out[:nk] = _mul_numpy(a, b, left, right, starts_by_order[order], npairs)
    return out
