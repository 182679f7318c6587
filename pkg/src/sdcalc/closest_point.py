"""Signed-distance coordinates: the map (s, sigma) -> x = p(s) + sigma n(s),
its inverse by closest-point projection, and collar radii.

Inside means sigma < 0, i.e. on the side opposite to the chart normal
``t1 x t2``.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import taylor as tm
from .surface_frames import shape_operator
from .taylor import TaylorSpace

GRID = 32
MAX_ITER = 50
MAX_SEEDS = 4
TIE_DIST = 1e-9
TIE_FOOT = 1e-6


class ProjectionError(ValueError):
    pass


class MultiplicityError(ProjectionError):
    pass


class NewtonError(ProjectionError):
    pass


@dataclass
class SdfCoordinates:
    s: np.ndarray
    sigma: np.ndarray
    foot: np.ndarray
    n: np.ndarray
    residual: np.ndarray
    status: np.ndarray  # 0 ok, 1 no convergence, 2 ambiguous, 3 outside domain

    STATUS = {0: "ok", 1: "newton did not converge", 2: "ambiguous closest point", 3: "foot outside chart domain"}


@dataclass
class CollarBounds:
    plus: float
    minus: float

    def contains(self, sigma):
        sigma = np.asarray(sigma)
        return (sigma < self.plus) & (sigma > -self.minus)


def _normal(t1, t2):
    cr = np.cross(t1, t2)
    return cr / np.linalg.norm(cr, axis=-1, keepdims=True)


def surface_point_frame(chart, s, tau=0.0):
    """``p``, ``t1``, ``t2``, second derivatives ``p_ij`` at numeric parameters."""
    space = TaylorSpace.get(2, 2)
    p = chart.jet(space.variable(0, s[..., 0]), space.variable(1, s[..., 1]), tau=tau)
    return (p.value, p.partial((1, 0)), p.partial((0, 1)),
            p.partial((2, 0)), p.partial((1, 1)), p.partial((0, 2)))


def to_cartesian(chart, s, sigma, tau=0.0):
    """``x = p(s) + sigma n(s)``."""
    s = np.asarray(s, float)
    sigma = np.asarray(sigma, float)
    space = TaylorSpace.get(2, 1)
    p = chart.jet(space.variable(0, s[..., 0]), space.variable(1, s[..., 1]), tau=tau)
    n = _normal(p.deriv(0).value, p.deriv(1).value)
    return p.value + sigma[..., None] * n


_grid_lock = threading.Lock()


def _seed_grid(chart, tau):
    key = float(tau) if np.ndim(tau) == 0 else None
    cache = chart.__dict__.setdefault("_seed_cache", {})
    if key is not None and key in cache:
        return cache[key]
    axes = []
    for k in range(2):
        lo, hi = chart.domain[k]
        axes.append(lo + (np.arange(GRID) + 0.5) * (hi - lo) / GRID)
    S = np.stack(np.meshgrid(axes[0], axes[1], indexing="ij"), -1)
    P = chart.point(S, tau=tau)
    P = np.broadcast_to(P, (GRID, GRID, 3)).copy()
    e1 = np.linalg.norm(np.diff(P, axis=0), axis=-1).max()
    e2 = np.linalg.norm(np.diff(P, axis=1), axis=-1).max()
    out = (S, P, max(e1, e2))
    if key is not None:
        with _grid_lock:
            cache[key] = out
    return out


def _seeds(chart, x, tau):
    S, P, spacing = _seed_grid(chart, tau)
    B = x.shape[0]
    d2 = np.sum((x[:, None, None, :] - P[None]) ** 2, axis=-1)  # (B, G, G)
    is_min = np.ones(d2.shape, bool)
    for ax in (1, 2):
        periodic = chart.periodic[ax - 1]
        for shift in (-1, 1):
            nb = np.roll(d2, shift, axis=ax)
            if not periodic:
                idx = [slice(None)] * 3
                idx[ax] = 0 if shift == 1 else -1
                nb[tuple(idx)] = np.inf
            is_min &= d2 <= nb
    for sh1 in (-1, 1):
        for sh2 in (-1, 1):
            nb = np.roll(np.roll(d2, sh1, axis=1), sh2, axis=2)
            if not chart.periodic[0]:
                nb[:, 0 if sh1 == 1 else -1, :] = np.inf
            if not chart.periodic[1]:
                nb[:, :, 0 if sh2 == 1 else -1] = np.inf
            is_min &= d2 <= nb
    dmin = np.sqrt(d2.reshape(B, -1).min(axis=1))
    limit = (dmin + spacing) ** 2
    score = np.where(is_min & (d2 <= limit[:, None, None]), d2, np.inf).reshape(B, -1)
    k = min(MAX_SEEDS, score.shape[1])
    order = np.argsort(score, axis=1, kind="stable")[:, :k]
    valid = np.isfinite(np.take_along_axis(score, order, axis=1))
    valid[:, 0] = True  # the global grid minimum is always a local minimum
    seeds = S.reshape(-1, 2)[order]
    return seeds, valid


def _newton(chart, x, s, tau, tol):
    """Batched damped Newton on ``F_i = (p - x) . t_i``; returns s, residual, converged."""
    M = len(s)
    s = s.copy()
    conv = np.zeros(M, bool)
    polished = np.zeros(M, bool)

    def resid(s_, x_):
        p, t1, t2 = surface_point_frame(chart, s_, tau)[:3]
        d = p - x_
        return np.maximum(np.abs(np.sum(d * t1, -1)) / np.linalg.norm(t1, axis=-1),
                          np.abs(np.sum(d * t2, -1)) / np.linalg.norm(t2, axis=-1))

    r = resid(s, x)
    for _ in range(MAX_ITER + 1):
        act = ~polished
        if not np.any(act):
            break
        sa, xa = s[act], x[act]
        p, t1, t2, p11, p12, p22 = surface_point_frame(chart, sa, tau)
        d = p - xa
        F = np.stack([np.sum(d * t1, -1), np.sum(d * t2, -1)], -1)
        G11, G12, G22 = np.sum(t1 * t1, -1), np.sum(t1 * t2, -1), np.sum(t2 * t2, -1)
        H11 = G11 + np.sum(d * p11, -1)
        H12 = G12 + np.sum(d * p12, -1)
        H22 = G22 + np.sum(d * p22, -1)
        det = H11 * H22 - H12 * H12
        gdet = G11 * G22 - G12 * G12
        indefinite = (H11 <= 0) | (det <= 1e-12 * gdet)
        H11 = np.where(indefinite, G11, H11)
        H12 = np.where(indefinite, G12, H12)
        H22 = np.where(indefinite, G22, H22)
        det = H11 * H22 - H12 * H12
        step = -np.stack([H22 * F[:, 0] - H12 * F[:, 1], -H12 * F[:, 0] + H11 * F[:, 1]], -1) / det[:, None]

        r_old = r[act]
        lam = np.ones(len(sa))
        trial = sa + step
        r_new = resid(trial, xa)
        bad = ~(r_new < r_old) & ~conv[act]
        for _ in range(30):
            if not np.any(bad):
                break
            lam[bad] *= 0.5
            trial[bad] = sa[bad] + lam[bad, None] * step[bad]
            r_new[bad] = resid(trial[bad], xa[bad])
            bad = bad & ~(r_new < r_old)
        # converged points take the full polishing step regardless; stalled ones are dropped
        idx = np.flatnonzero(act)
        s[idx] = trial
        r[idx] = r_new
        polished[idx] = conv[idx] | bad
        conv[idx] = conv[idx] | (r_new <= tol[idx])
    return s, r, conv


def signed_distance(chart, x, tau=0.0, on_error="raise"):
    """Project ambient points ``x`` (shape (..., 3)) to signed-distance coordinates.

    Newton on the first-order conditions, seeded from up to four local minima
    of the squared distance over a 32 x 32 parameter grid.  ``on_error``
    is ``"raise"`` or ``"nan"`` (failed points get NaN and a status code).
    """
    x = np.asarray(x, float)
    shape = x.shape[:-1]
    x = x.reshape(-1, 3)
    B = len(x)
    seeds, valid = _seeds(chart, x, tau)
    k = seeds.shape[1]
    flat = valid.ravel()
    xs = np.repeat(x, k, axis=0)[flat]
    tol = 1e-12 * np.maximum(1.0, np.linalg.norm(xs, axis=-1))
    s_f, r_f, conv_f = _newton(chart, xs, seeds.reshape(-1, 2)[flat], tau, tol)
    p_f = np.broadcast_to(chart.point(s_f, tau=tau), xs.shape)

    S = np.full((B * k, 2), np.nan)
    P = np.full((B * k, 3), np.nan)
    R = np.full(B * k, np.inf)
    D = np.full(B * k, np.inf)
    S[flat], P[flat], R[flat] = s_f, p_f, r_f
    D[flat] = np.where(conv_f, np.linalg.norm(xs - p_f, axis=-1), np.inf)
    S, P, R, D = S.reshape(B, k, 2), P.reshape(B, k, 3), R.reshape(B, k), D.reshape(B, k)

    j = np.argmin(D, axis=1)
    rows = np.arange(B)
    dbest = D[rows, j]
    status = np.where(np.isfinite(dbest), 0, 1)
    tie = np.abs(D - dbest[:, None]) <= TIE_DIST * np.maximum(1.0, dbest)[:, None]
    apart = np.linalg.norm(P - P[rows, j][:, None, :], axis=-1) > TIE_FOOT
    status = np.where((status == 0) & np.any(tie & apart, axis=1), 2, status)
    s = S[rows, j]
    s = np.where(np.isfinite(s), s, seeds[:, 0])
    r = R[rows, j]
    best = rows
    sb = chart.wrap(s[best])
    for k in range(2):
        if not chart.periodic[k]:
            lo, hi = chart.domain[k]
            slack = 1e-9 * max(1.0, hi - lo)
            out = (sb[:, k] < lo - slack) | (sb[:, k] > hi + slack)
            status = np.where((status == 0) & out, 3, status)
    space = TaylorSpace.get(2, 1)
    pj = chart.jet(space.variable(0, sb[:, 0]), space.variable(1, sb[:, 1]), tau=tau)
    foot = pj.value
    n = _normal(pj.deriv(0).value, pj.deriv(1).value)
    sigma = np.sum((x - foot) * n, -1)
    res = r[best]
    if np.any(status != 0):
        if on_error == "raise":
            b = int(np.flatnonzero(status)[0])
            msg = f"point {x[b].tolist()}: {SdfCoordinates.STATUS[int(status[b])]}"
            raise {1: NewtonError, 2: MultiplicityError, 3: ProjectionError}[int(status[b])](msg)
        bad = status != 0
        sb[bad] = np.nan
        sigma = np.where(bad, np.nan, sigma)
        foot[bad] = np.nan
        n[bad] = np.nan
    return SdfCoordinates(sb.reshape(shape + (2,)), sigma.reshape(shape), foot.reshape(shape + (3,)),
                          n.reshape(shape + (3,)), res.reshape(shape), status.reshape(shape))


def grad_sigma(chart, x, tau=0.0, on_error="raise"):
    """Gradient of the signed distance: the unit normal at the foot point."""
    return signed_distance(chart, x, tau=tau, on_error=on_error).n


def collar_bounds(chart, region=None, n=32, tau=0.0, safety=0.9):
    """Safe |sigma| on each side from the focal distances ``1/kappa_i`` over a sample grid."""
    region = np.array(chart.domain if region is None else region, float)
    if region.shape != (2, 2) or np.any(region[:, 1] <= region[:, 0]):
        raise ValueError("empty region")
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in region]
    S = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2)
    c = shape_operator(chart, S, tau=tau)
    k = np.concatenate([c.k1, c.k2])
    pos = k[k > 0]
    neg = k[k < 0]
    plus = safety / pos.max() if pos.size and pos.max() > 0 else math.inf
    minus = safety / (-neg.min()) if neg.size and neg.min() < 0 else math.inf
    return CollarBounds(float(plus), float(minus))


def ambient_to_sdf_jacobian(chart, s, sigma, tau=0.0):
    """The 3x3 matrix with rows d x / d(sigma, s1, s2) (used for volume checks)."""
    space = TaylorSpace.get(3, 2)
    s = np.asarray(s, float)
    S1, S2 = space.variable(1, s[..., 0]), space.variable(2, s[..., 1])
    Sg = space.variable(0, np.asarray(sigma, float))
    p = chart.jet(S1, S2, tau=tau)
    t1, t2 = p.deriv(1), p.deriv(2)
    cr = tm.cross(t1, t2)
    nrm = cr / tm.norm(cr)[..., None]
    X = p + Sg[..., None] * nrm
    return np.stack([X.deriv(0).value, X.deriv(1).value, X.deriv(2).value], -2)
