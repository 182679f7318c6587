"""Curvature fault injection for the oracle's negative control.

Only the curvilinear operator path reads this offset; the oracle's own
projection and frame evaluation never do.
"""

from contextlib import contextmanager

OFFSET = {"kappa": 0.0}


def kappa_offset():
    return OFFSET["kappa"]


@contextmanager
def curvature_fault(delta=1e-3):
    """Add ``delta`` to kappa_1 (surfaces) and kappa (curves) inside the block."""
    old = OFFSET["kappa"]
    OFFSET["kappa"] = float(delta)
    try:
        yield
    finally:
        OFFSET["kappa"] = old
