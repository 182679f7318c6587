"""Frenet frames, the Bishop rotation angle and orthogonal tube coordinates.

Tube coordinates around a curve ``p(s)`` are

    x(s, theta, sigma) = p + sigma (cos(theta + phi) n + sin(theta + phi) b)

with ``phi`` the Bishop angle, ``d phi/ds = -omega |t|``.  With that choice
the coordinate Jacobian has mutually orthogonal rows; with ``phi = 0`` it
does not once the curve has torsion.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import taylor as tm
from .surface_frames import _vec
from .taylor import Taylor, TaylorSpace

STRAIGHT_TOL = 1e-12
N_MIN = 512
N_MAX = 1 << 17
RICHARDSON_TOL = 1e-10
COARSE_TOL = 1e-8
SEED_GRID = 256
MAX_ITER = 50
MAX_SEEDS = 4
TIE_DIST = 1e-9
TIE_FOOT = 1e-6
AXIS_TOL = 1e-12
FALLBACK_REF = np.array([0.9, 0.4, 0.17]) / np.linalg.norm([0.9, 0.4, 0.17])


class CurveError(ValueError):
    pass


class BishopError(CurveError):
    pass


class CollarError(CurveError):
    pass


class TubeProjectionError(CurveError):
    pass


class TubeMultiplicityError(TubeProjectionError):
    pass


# -- Frenet-Serret ------------------------------------------------------------
@dataclass
class FrenetJets:
    p: Taylor
    t: Taylor
    speed: Taylor
    that: Taylor
    n: Taylor
    b: Taylor
    kappa: Taylor
    omega: Taylor
    straight: np.ndarray
    svar: int

    def ds(self, F):
        """Arclength derivative ``|t|^{-1} d/ds``."""
        d = F.deriv(self.svar)
        return d / (_vec(self.speed) if d.c.ndim == self.speed.c.ndim + 1 else self.speed)


def frenet_jets(curve, S, tau=0.0, svar=0):
    """Frenet jets from the curve jet at ``S`` (a jet in variable ``svar``).

    On straight stretches (``kappa < 1e-12``) the normal is the part of a
    fixed reference direction orthogonal to the tangent, ``kappa = omega = 0``.
    """
    p = curve.jet(S, tau=tau)
    t = p.deriv(svar)
    speed = tm.norm(t)
    if np.any(speed.value <= 0.0):
        raise CurveError("curve has zero speed (|dp/ds| = 0)")
    that = t / _vec(speed)
    kv = that.deriv(svar) / _vec(speed)
    k2 = tm.dot(kv, kv)
    straight = np.sqrt(np.maximum(k2.value, 0.0)) < STRAIGHT_TOL
    kappa = tm.where(straight, 0.0, tm.where(straight, 1.0, k2).sqrt())
    n_frenet = kv / _vec(tm.where(straight, 1.0, kappa))
    if np.any(straight):
        ref = np.broadcast_to(FALLBACK_REF, that.shape)
        par = np.abs(np.sum(that.value * ref, -1)) > 0.99
        ref = np.where(par[..., None], np.array([0.0, 0.0, 1.0]), ref)
        ref = np.where(par[..., None] & (np.abs(that.value[..., 2]) > 0.99)[..., None], np.array([1.0, 0.0, 0.0]), ref)
        q = ref - _vec(tm.dot(that, ref)) * that
        n_ref = q / _vec(tm.norm(q))
        n = Taylor(n_frenet.space, np.where(straight[None, ..., None], n_ref.c, n_frenet.c),
                   min(n_ref.order, n_frenet.order))
    else:
        n = n_frenet
    b = tm.cross(that, n)
    fj = FrenetJets(p, t, speed, that, n, b, kappa, None, straight, svar)
    omega = tm.dot(fj.ds(n), b)
    fj.omega = tm.where(straight, 0.0, omega)
    return fj


@dataclass
class FrenetFrame:
    t: np.ndarray
    n: np.ndarray
    b: np.ndarray
    kappa: np.ndarray
    omega: np.ndarray
    speed: np.ndarray
    straight: np.ndarray


def _svals(curve, s):
    s = np.asarray(s, float)
    curve.check_domain(s)
    return s


def frenet(curve, s, tau=0.0):
    """Frenet frame, curvature, torsion and speed ``|dp/ds|`` at parameters ``s``."""
    s = _svals(curve, s)
    space = TaylorSpace.get(1, 3)
    fj = frenet_jets(curve, space.variable(0, s), tau=tau)
    return FrenetFrame(fj.that.value, fj.n.value, fj.b.value, fj.kappa.value, fj.omega.value,
                       fj.speed.value, fj.straight)


# -- Bishop angle ---------------------------------------------------------------
def _rates(curve, s, tau, timed):
    """``f = -omega |t|`` with ``df/ds`` and ``df/dtau`` (and ``d2f/ds dtau``)."""
    space = TaylorSpace.get(2, 5)
    S = space.variable(0, s)
    T = space.variable(1, np.full_like(s, float(tau))) if timed else tau
    fj = frenet_jets(curve, S, tau=T)
    f = -(fj.omega * fj.speed)
    if timed:
        return f.value, f.partial((1, 0)), f.partial((0, 1)), f.partial((1, 1))
    z = np.zeros_like(s)
    return f.value, f.partial((1, 0)), z, z


def _simpson(f, step):
    """Cumulative RK4 quadrature; ``f`` sampled at nodes and midpoints (2N + 1 values)."""
    inc = step / 6.0 * (f[:-1:2] + 4.0 * f[1::2] + f[2::2])
    return np.concatenate([[0.0], np.cumsum(inc)])


class BishopTable:
    """Tabulated Bishop angle ``phi(s)`` with quintic Hermite interpolation.

    ``phi_tau`` tabulates ``d phi/d tau`` at fixed ``s`` (zero for static
    curves); it is integrated from the same quadrature differentiated in
    ``tau``.  For closed curves ``mismatch`` is the angle by which the frame
    fails to close after one loop (not corrected).
    """

    def __init__(self, curve, tau=0.0, phi0=0.0, n_min=N_MIN):
        self.curve = curve
        self.tau = float(tau)
        self.phi0 = float(phi0)
        lo, hi = (float(v) for v in curve.domain[0])
        self.s0, self.s1 = lo, hi
        timed = bool(getattr(curve, "time_dependent", False))
        N = int(n_min)
        while True:
            grid = np.linspace(lo, hi, 4 * N + 1)
            f, fs, ft, fst = _rates(curve, grid, tau, timed)
            h = (hi - lo) / N
            fine = _simpson(f, h / 2)  # 2N steps, nodes grid[::2]
            crude = _simpson(f[::2], h)  # N steps, nodes grid[::4]
            err = np.max(np.abs(fine[::2] - crude)) / 15.0
            if err < RICHARDSON_TOL or 2 * N > N_MAX:
                break
            N *= 2
        if err > COARSE_TOL:
            raise BishopError(f"Bishop quadrature error estimate {err:.2e} exceeds {COARSE_TOL:g}")
        self.error = float(err)
        self.n = 2 * N
        self.h = (hi - lo) / self.n
        self.nodes = grid[::2]
        self.phi = self.phi0 + fine
        self.dphi = f[::2]
        self.d2phi = fs[::2]
        self.phi_tau = _simpson(ft, h / 2)
        self.dphi_tau = ft[::2]
        self.closed = bool(getattr(curve, "closed", False))
        total = self.phi[-1] - self.phi[0]
        self.mismatch = float(math.remainder(total, 2 * math.pi)) if self.closed else None

    def _locate(self, s, strict=True):
        s = np.asarray(s, float)
        if self.closed:
            s = self.s0 + np.mod(s - self.s0, self.s1 - self.s0)
        u = (s - self.s0) / self.h
        slack = 1e-9 * max(1.0, self.n) if strict else 1.0
        if np.any(u < -slack) or np.any(u > self.n + slack):
            raise CurveError("parameter outside the Bishop table")
        i = np.clip(np.floor(u).astype(int), 0, self.n - 1)
        return i, u - i

    def __call__(self, s, strict=True):
        i, t = self._locate(s, strict)
        h = self.h
        t2, t3 = t * t, t * t * t
        t4, t5 = t3 * t, t3 * t2
        H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
        H1 = t - 6 * t3 + 8 * t4 - 3 * t5
        H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
        H3 = 0.5 * (t3 - 2 * t4 + t5)
        H4 = -4 * t3 + 7 * t4 - 3 * t5
        H5 = 10 * t3 - 15 * t4 + 6 * t5
        return (H0 * self.phi[i] + h * H1 * self.dphi[i] + h * h * H2 * self.d2phi[i]
                + h * h * H3 * self.d2phi[i + 1] + h * H4 * self.dphi[i + 1] + H5 * self.phi[i + 1])

    def tau_rate(self, s):
        i, t = self._locate(s)
        h = self.h
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * self.phi_tau[i] + (t3 - 2 * t2 + t) * h * self.dphi_tau[i]
                + (-2 * t3 + 3 * t2) * self.phi_tau[i + 1] + (t3 - t2) * h * self.dphi_tau[i + 1])


_table_lock = threading.Lock()


def bishop_angle(curve, tau=0.0, phi0=0.0, n_min=N_MIN):
    """Bishop angle table for ``curve`` at time ``tau`` (cached per curve, tau, phi0)."""
    key = (float(tau), float(phi0), int(n_min))
    cache = curve.__dict__.setdefault("_bishop_cache", {})
    with _table_lock:
        if key in cache:
            return cache[key]
    table = BishopTable(curve, tau, phi0, n_min)
    with _table_lock:
        cache[key] = table
    return table


# -- tube coordinates -------------------------------------------------------------
@dataclass
class TubeJets:
    """Frenet jets plus Bishop angle, tube frame and position as jets."""

    fr: FrenetJets
    space: TaylorSpace
    S: Taylor
    TH: Taylor
    SG: Taylor
    T: object
    phi: Taylor
    cs: Taylor
    sn: Taylor
    ts: Taylor
    tsig: Taylor
    tth: Taylor
    hs: Taylor
    x: Taylor

    def ds(self, F):
        return self.fr.ds(F)


def tube_jets(curve, s, theta, sigma, tau=0.0, order=6, time=False, phi0=0.0, rotate=True):
    """Jets in ``(s, theta, sigma[, tau])`` (variables 0, 1, 2, 3).

    ``rotate=False`` drops the Bishop rotation (``phi = 0``): the
    Frenet-angle coordinates of the negative control.
    """
    s = _svals(curve, s)
    s, theta, sigma = np.broadcast_arrays(s, np.asarray(theta, float), np.asarray(sigma, float))
    space = TaylorSpace.get(4 if time else 3, order)
    S = space.variable(0, s)
    TH = space.variable(1, theta)
    SG = space.variable(2, sigma)
    T = space.variable(3, np.full(s.shape, float(tau))) if time else tau
    fr = frenet_jets(curve, S, tau=T)
    if rotate:
        table = bishop_angle(curve, tau=tau, phi0=phi0)
        phi = (-(fr.omega * fr.speed)).integ(0) + table(s)
        if time:
            phi = phi + table.tau_rate(s) * (T - float(tau))
    else:
        phi = space.constant(np.full(s.shape, float(phi0)))
    ang = TH + phi
    cs, sn = ang.cos(), ang.sin()
    tsig = _vec(cs) * fr.n + _vec(sn) * fr.b
    tth = -_vec(sn) * fr.n + _vec(cs) * fr.b
    hs = 1.0 - SG * fr.kappa * cs
    x = fr.p + _vec(SG) * tsig
    return TubeJets(fr, space, S, TH, SG, T, phi, cs, sn, fr.that, tsig, tth, hs, x)


def tube_to_cartesian(curve, s, theta, sigma, tau=0.0, phi0=0.0):
    """``x = p + sigma (cos(theta + phi) n + sin(theta + phi) b)``."""
    s = _svals(curve, s)
    s, theta, sigma = np.broadcast_arrays(s, np.asarray(theta, float), np.asarray(sigma, float))
    if np.any(sigma < 0):
        raise CollarError("sigma must be non-negative")
    fr = frenet(curve, s, tau=tau)
    phi = bishop_angle(curve, tau=tau, phi0=phi0)(s)
    cs, sn = np.cos(theta + phi), np.sin(theta + phi)
    if np.any(1.0 - sigma * fr.kappa * cs <= 0):
        raise CollarError("point beyond the focal distance (h_s <= 0)")
    space = TaylorSpace.get(1, 0)
    p = curve.jet(space.constant(s), tau=tau).value
    return p + sigma[..., None] * (cs[..., None] * fr.n + sn[..., None] * fr.b)


@dataclass
class TubeFrame:
    phi: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray
    t_s: np.ndarray
    t_sigma: np.ndarray
    t_theta: np.ndarray
    h_s: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    cs: np.ndarray
    sn: np.ndarray
    kappa: np.ndarray
    omega: np.ndarray
    on_axis: np.ndarray


def tube_frame(curve, s, theta, sigma, tau=0.0, phi0=0.0):
    """Coordinate frame, scale factor ``h_s`` and connection coefficients.

    ``A = kappa cs / h_s``, ``B = -kappa sn / h_s``, ``C = 1/sigma``; on the
    axis (``sigma = 0``) ``C`` is NaN and ``on_axis`` is set.
    """
    s = _svals(curve, s)
    s, theta, sigma = np.broadcast_arrays(s, np.asarray(theta, float), np.asarray(sigma, float))
    fr = frenet(curve, s, tau=tau)
    phi = bishop_angle(curve, tau=tau, phi0=phi0)(s)
    cs, sn = np.cos(theta + phi), np.sin(theta + phi)
    hs = 1.0 - sigma * fr.kappa * cs
    if np.any(hs <= 0):
        raise CollarError("point beyond the focal distance (h_s <= 0)")
    tsig = cs[..., None] * fr.n + sn[..., None] * fr.b
    tth = -sn[..., None] * fr.n + cs[..., None] * fr.b
    axis = np.abs(sigma) < AXIS_TOL
    with np.errstate(divide="ignore"):
        C = np.where(axis, np.nan, 1.0 / np.where(axis, 1.0, sigma))
    return TubeFrame(phi, theta, sigma, fr.t, tsig, tth, hs, fr.kappa * cs / hs, -fr.kappa * sn / hs, C,
                     cs, sn, fr.kappa, fr.omega, axis)


def jacobian_rows(curve, s, theta, sigma, tau=0.0, phi0=0.0, rotate=True, method="jet", h=1e-4):
    """Rows ``[nabla_s x; d_theta x; d_sigma x]`` of the coordinate Jacobian, shape (..., 3, 3).

    ``method="jet"`` differentiates the coordinate map exactly (with the
    Bishop angle's own derivative); ``method="fd"`` uses Richardson-extrapolated
    central differences of :func:`tube_to_cartesian` and so also exercises
    the tabulated angle.
    """
    if method == "jet":
        tj = tube_jets(curve, s, theta, sigma, tau=tau, order=3, phi0=phi0, rotate=rotate)
        return np.stack([tj.ds(tj.x).value, tj.x.deriv(1).value, tj.x.deriv(2).value], -2)
    if not rotate:
        raise ValueError("method='fd' needs the Bishop rotation")
    s = np.asarray(s, float)
    s, theta, sigma = np.broadcast_arrays(s, np.asarray(theta, float), np.asarray(sigma, float))

    table = bishop_angle(curve, tau=tau, phi0=phi0)
    space = TaylorSpace.get(1, 3)

    def X(ds=0.0, dth=0.0, dsg=0.0):
        fj = frenet_jets(curve, space.variable(0, s + ds), tau=tau)
        ang = theta + dth + table(s + ds, strict=False)
        sg = (sigma + dsg)[..., None]
        return fj.p.value + sg * (np.cos(ang)[..., None] * fj.n.value + np.sin(ang)[..., None] * fj.b.value)

    def central(k, step):
        e = [0.0, 0.0, 0.0]
        e[k] = step
        a = X(*e)
        e[k] = -step
        return (a - X(*e)) / (2 * step)

    rows = []
    for k in range(3):
        hk = h * max(1.0, float(np.max(np.abs((s, theta, sigma)[k]))))
        rows.append((4 * central(k, hk / 2) - central(k, hk)) / 3)
    speed = frenet(curve, s, tau=tau).speed
    rows[0] = rows[0] / speed[..., None]
    return np.stack(rows, -2)


def orthogonality_residual(rows):
    """Largest absolute off-diagonal entry of ``rows rows^T``."""
    G = np.einsum("...ik,...jk->...ij", rows, rows)
    off = G - np.einsum("...ii->...i", G)[..., None] * np.eye(3)
    return float(np.max(np.abs(off)))


# -- inverse map ---------------------------------------------------------------------
@dataclass
class TubeCoordinates:
    s: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray
    foot: np.ndarray
    residual: np.ndarray
    status: np.ndarray  # 0 ok, 1 no convergence, 2 ambiguous, 3 outside domain, 4 on axis

    STATUS = {0: "ok", 1: "newton did not converge", 2: "ambiguous closest point",
              3: "closest point at a curve end", 4: "on the axis (theta undefined)"}


def _curve_grid(curve, tau):
    key = float(tau)
    cache = curve.__dict__.setdefault("_seed_cache", {})
    if key in cache:
        return cache[key]
    lo, hi = curve.domain[0]
    if curve.closed:
        S = lo + np.arange(SEED_GRID) * (hi - lo) / SEED_GRID
    else:
        S = np.linspace(lo, hi, SEED_GRID)
    P = np.broadcast_to(curve.point(S, tau=tau), (SEED_GRID, 3)).copy()
    spacing = np.linalg.norm(np.diff(P, axis=0), axis=-1).max()
    cache[key] = (S, P, spacing)
    return cache[key]


def _curve_derivs(curve, s, tau):
    space = TaylorSpace.get(1, 2)
    p = curve.jet(space.variable(0, s), tau=tau)
    return p.value, p.partial((1,)), p.partial((2,))


def tube_from_cartesian(curve, x, tau=0.0, phi0=0.0, on_error="raise"):
    """Tube coordinates ``(s, theta, sigma)`` of ambient points.

    The foot point minimises ``|x - p(s)|``: 1-D Newton on ``(p - x) . t``
    seeded from local minima over a 256-point grid.  ``theta`` lies in
    ``[0, 2 pi)``.
    """
    x = np.asarray(x, float)
    shape = x.shape[:-1]
    x = x.reshape(-1, 3)
    B = len(x)
    S, P, spacing = _curve_grid(curve, tau)
    d2 = np.sum((x[:, None, :] - P[None]) ** 2, -1)
    is_min = np.ones(d2.shape, bool)
    for shift in (-1, 1):
        nb = np.roll(d2, shift, axis=1)
        if not curve.closed:
            nb[:, 0 if shift == 1 else -1] = np.inf
        is_min &= d2 <= nb
    dmin = np.sqrt(d2.min(axis=1))
    score = np.where(is_min & (d2 <= ((dmin + spacing) ** 2)[:, None]), d2, np.inf)
    k = min(MAX_SEEDS, score.shape[1])
    order = np.argsort(score, axis=1, kind="stable")[:, :k]
    valid = np.isfinite(np.take_along_axis(score, order, axis=1))
    valid[:, 0] = True
    flat = valid.ravel()
    xs = np.repeat(x, k, axis=0)[flat]
    s = S[order].ravel()[flat]
    lo, hi = curve.domain[0]
    tol = 1e-12 * np.maximum(1.0, np.linalg.norm(xs, axis=-1))
    conv = np.zeros(len(s), bool)
    done = np.zeros(len(s), bool)
    r = np.full(len(s), np.inf)
    for _ in range(MAX_ITER + 1):
        act = ~done
        if not np.any(act):
            break
        p, t, tt = _curve_derivs(curve, s[act], tau)
        d = p - xs[act]
        g = np.sum(d * t, -1)
        gp = np.sum(t * t, -1) + np.sum(d * tt, -1)
        gp = np.where(gp <= 1e-12 * np.sum(t * t, -1), np.sum(t * t, -1), gp)
        r_act = np.abs(g) / np.linalg.norm(t, axis=-1)
        step = -g / gp
        step = np.clip(step, -0.25 * (hi - lo), 0.25 * (hi - lo))
        new = s[act] + step
        if curve.closed:
            new = lo + np.mod(new - lo, hi - lo)
        else:
            at_end = ((new <= lo) & (step < 0)) | ((new >= hi) & (step > 0))
            new = np.clip(new, lo, hi)
        idx = np.flatnonzero(act)
        done[idx] = conv[idx]
        s[idx] = new
        conv[idx] = conv[idx] | (r_act <= tol[idx])
        if not curve.closed:
            stuck = at_end & (np.abs(new - s[idx]) == 0)
            done[idx[stuck]] = True
        r[idx] = r_act
    p, t, _ = _curve_derivs(curve, s, tau)
    dist = np.linalg.norm(xs - p, axis=-1)
    r = np.abs(np.sum((p - xs) * t, -1)) / np.linalg.norm(t, axis=-1)
    conv = r <= 1e-9 * np.maximum(1.0, np.linalg.norm(xs, axis=-1))
    end = np.zeros(len(s), bool)
    if not curve.closed:
        end = ((s <= lo) | (s >= hi)) & ~conv
    Sg = np.full(B * k, np.nan)
    D = np.full(B * k, np.inf)
    Pf = np.full((B * k, 3), np.nan)
    R = np.full(B * k, np.inf)
    E = np.zeros(B * k, bool)
    Sg[flat], Pf[flat], R[flat], E[flat] = s, p, r, end
    D[flat] = np.where(conv | end, dist, np.inf)
    Sg, D, Pf, R, E = Sg.reshape(B, k), D.reshape(B, k), Pf.reshape(B, k, 3), R.reshape(B, k), E.reshape(B, k)
    j = np.argmin(D, axis=1)
    rows = np.arange(B)
    dbest = D[rows, j]
    status = np.where(np.isfinite(dbest), 0, 1)
    status = np.where((status == 0) & E[rows, j], 3, status)
    tie = np.abs(D - dbest[:, None]) <= TIE_DIST * np.maximum(1.0, dbest)[:, None]
    apart = np.linalg.norm(Pf - Pf[rows, j][:, None, :], axis=-1) > TIE_FOOT
    status = np.where((status == 0) & np.any(tie & apart, axis=1), 2, status)
    sb = Sg[rows, j]
    sb = np.where(np.isfinite(sb), sb, S[order[:, 0]])
    fr = frenet(curve, sb, tau=tau)
    foot = Pf[rows, j]
    foot = np.where(np.isfinite(foot), foot, curve.point(sb, tau=tau))
    d = x - foot
    sigma = np.linalg.norm(d, axis=-1)
    status = np.where((status == 0) & (sigma < AXIS_TOL), 4, status)
    phi = bishop_angle(curve, tau=tau, phi0=phi0)(sb)
    ang = np.arctan2(np.sum(d * fr.b, -1), np.sum(d * fr.n, -1))
    theta = np.mod(ang - phi, 2 * math.pi)
    if np.any(status != 0):
        if on_error == "raise":
            b = int(np.flatnonzero(status)[0])
            msg = f"point {x[b].tolist()}: {TubeCoordinates.STATUS[int(status[b])]}"
            raise (TubeMultiplicityError if status[b] == 2 else TubeProjectionError)(msg)
        bad = status != 0
        theta = np.where(bad, np.nan, theta)
        sb = np.where(bad & (status != 4), np.nan, sb)
        sigma = np.where(bad & (status != 4), np.nan, sigma)
    return TubeCoordinates(sb.reshape(shape), theta.reshape(shape), sigma.reshape(shape),
                           foot.reshape(shape + (3,)), R[rows, j].reshape(shape), status.reshape(shape))
