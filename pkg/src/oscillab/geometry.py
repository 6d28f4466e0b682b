"""Limit cycles, asymptotic phase, and phase-map construction.

The deterministic flow is integrated with classic RK4.  A cycle is located by
a Poincare return map on a section through a relaxed point, with the crossing
time refined by bisection inside a single step, so the period is accurate to
roughly the integrator's local error rather than the step size.

Phase maps come in two backends.  "analytic" maps are closed forms: the angle
about a center (exact isochrons for the rotationally symmetric models) or the
angle reparametrized through the cycle's measured angle-vs-time table.
"numeric" maps evaluate by relaxing the point onto the cycle along the flow.
All expose eval/grad/hessian with a common convention: phases live in
[0, period), eval(anchor) = 0, and the gradient is of the local smooth branch
(the jump at the phase seam is ignored, which is what every downstream
quadrature wants).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (NoCycle, NotConverged, PhaseUndefined, SectionError,
                     StencilOutOfBasin)


# ---------------------------------------------------------------------------
# deterministic flow

def rk4_step(f, x, dt):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def flow(model, x, t, dt=1e-3):
    """Flow map of the drift field: x(0) = x -> x(t).  Vectorized over rows."""
    x = np.atleast_2d(np.asarray(x, float)).copy()
    if t == 0.0:
        return x
    n_steps = max(1, int(round(t / dt)))
    h = t / n_steps
    f = model.drift
    for _ in range(n_steps):
        x = rk4_step(f, x, h)
    return x


# ---------------------------------------------------------------------------
# limit cycle

@dataclass(frozen=True)
class LimitCycle:
    """One period of the attracting orbit, sampled uniformly in time.

    samples[k] = gamma(k T / m); samples[0] is the anchor (phase zero).
    `section` records the Poincare section (point, unit normal) the finder
    converged on.
    """

    samples: np.ndarray
    period: float
    floquet_multiplier: float
    section: tuple = None
    model_name: str = ""
    _interp: object = field(default=None, repr=False, compare=False)

    @property
    def n_samples(self):
        return len(self.samples)

    @property
    def times(self):
        return np.arange(self.n_samples) * (self.period / self.n_samples)

    def _spline(self):
        sp = self._interp
        if sp is None:
            t = np.append(self.times, self.period)
            pts = np.vstack([self.samples, self.samples[:1]])
            sp = CubicSpline(t, pts, bc_type="periodic", axis=0)
            object.__setattr__(self, "_interp", sp)
        return sp

    def point(self, s):
        """gamma(s) for any real s (periodic)."""
        return self._spline()(np.mod(s, self.period))

    def tangent(self, s):
        return self._spline()(np.mod(s, self.period), 1)

    def nearest_phase(self, x, newton_iters=8):
        """Arg min over s of |gamma(s) - x|, by grid seed plus Newton on the
        orthogonality condition (x - gamma(s)) . gamma'(s) = 0."""
        x = np.asarray(x, float)
        d2 = np.sum((self.samples - x) ** 2, axis=-1)
        s = self.times[int(np.argmin(d2))]
        sp = self._spline()
        for _ in range(newton_iters):
            sm = np.mod(s, self.period)
            g = sp(sm)
            g1 = sp(sm, 1)
            g2 = sp(sm, 2)
            r = x - g
            f = float(r @ g1)
            fp = float(-g1 @ g1 + r @ g2)
            if fp == 0.0:
                break
            step = f / fp
            s -= step
            if abs(step) < 1e-14 * self.period:
                break
        return float(np.mod(s, self.period))

    def distance(self, x):
        s = self.nearest_phase(x)
        return float(np.linalg.norm(np.asarray(x, float) - self.point(s)))

    def bounding_box(self):
        return self.samples.min(axis=0), self.samples.max(axis=0)


def _section_crossing_time(f, x, n, level, dt, max_time):
    """First time the scalar x . n - level crosses zero upward, after the
    path has first left the section's neighborhood.  Returns (t, x(t))."""
    t = 0.0
    val = float(x[0] @ n) - level
    armed = False
    while t < max_time:
        x_new = rk4_step(f, x, dt)
        val_new = float(x_new[0] @ n) - level
        if not armed and val_new < -1e-9:
            armed = True
        if armed and val <= 0.0 < val_new:
            lo, hi = 0.0, dt
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                xm = rk4_step(f, x, mid)
                if float(xm[0] @ n) - level > 0.0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-16 * max(dt, 1.0):
                    break
            tau = 0.5 * (lo + hi)
            return t + tau, rk4_step(f, x, tau)
        x, val = x_new, val_new
        t += dt
    raise SectionError(f"no section return within {max_time} time units")


def find_limit_cycle(model, x0=None, *, dt=2e-3, t_transient=30.0,
                     n_samples=2048, tol=1e-10, max_iter=40,
                     max_period=1000.0):
    """Locate the attracting limit cycle reachable from x0 (drift only; the
    model's sigma is ignored).

    Relaxes x0 onto the attractor, then iterates the Poincare return map on
    the hyperplane through the relaxed point normal to the local drift until
    the returned point converges.  Raises NoCycle if the returns fail to
    settle, the orbit is not attracting, or the flow lands on an equilibrium.
    """
    if x0 is None:
        x0 = _default_start(model)
    x = np.atleast_2d(np.asarray(x0, float))
    if not bool(np.all(model.basin.contains(x))):
        raise NoCycle(f"start {x0} is outside the basin")

    # transient accuracy is irrelevant (the return map converges the rest of
    # the way), so relax on a coarse grid
    x = flow(model, x, t_transient, 4 * dt)
    f = model.drift

    n = model.drift(x)[0]
    speed = float(np.linalg.norm(n))
    if speed < 1e-12:
        raise NoCycle("relaxed onto an equilibrium, not a cycle")
    n = n / speed
    level = float(x[0] @ n)

    period = None
    stalled = 0
    best = np.inf
    for _ in range(max_iter):
        t_ret, x_ret = _section_crossing_time(f, x, n, level, dt, max_period)
        shift = float(np.linalg.norm(x_ret[0] - x[0]))
        x, period = x_ret, t_ret
        if shift < tol:
            break
        # a shift that is tiny but stops halving has hit the integrator's
        # discretization floor; two flat iterations in a row means converged
        stalled = stalled + 1 if shift > 0.5 * best else 0
        best = min(best, shift)
        if shift < 1e-6 and stalled >= 2:
            break
    else:
        raise NoCycle(f"return map did not converge (last shift {shift:.2e})")

    section = (x[0].copy(), n.copy())
    mult = _floquet_multiplier(model, x[0], period, 2 * dt)
    if abs(mult) >= 1.0:
        raise NoCycle(f"orbit is not attracting (multiplier {mult:.4g})")

    samples = _sample_cycle(f, x[0], period, n_samples, dt)
    samples = _reanchor(model, samples, period, dt)
    return LimitCycle(samples=samples, period=period,
                      floquet_multiplier=mult, section=section,
                      model_name=model.name)


def _default_start(model):
    if model.singularity is not None:
        x = np.asarray(model.singularity, float) + 0.3
        if model.basin.contains_one(x):
            return x
    probes = np.array([[0.5, 0.5], [1.5, 0.3], [2.0, 0.1], [1.0, 9.0]])
    for p in probes:
        if model.basin.contains_one(p):
            return p
    raise NoCycle("no admissible start point; pass x0 explicitly")


def _sample_cycle(f, anchor, period, n_samples, dt):
    h_target = min(2 * dt, period / n_samples)
    sub = max(1, int(np.ceil(period / n_samples / h_target)))
    h = period / (n_samples * sub)
    out = np.empty((n_samples, len(anchor)))
    x = np.atleast_2d(anchor)
    for k in range(n_samples):
        out[k] = x[0]
        for _ in range(sub):
            x = rk4_step(f, x, h)
    return out


def _reanchor(model, samples, period, dt):
    """Shift time zero to the cycle's crossing of the positive-x ray from the
    center (singularity if known, else centroid), so the anchor is a
    reproducible geometric point rather than wherever iteration stopped."""
    center = (np.asarray(model.singularity, float)
              if model.singularity is not None else samples.mean(axis=0))

    def angle_of(pt):
        return float(np.arctan2(pt[1] - center[1], pt[0] - center[0]))

    rel = samples - center
    ang = np.arctan2(rel[:, 1], rel[:, 0])
    k = int(np.argmin(np.abs(np.mod(ang + np.pi, 2 * np.pi) - np.pi)))
    x = np.atleast_2d(samples[k])
    f = model.drift
    a = angle_of(x[0])
    h = dt
    guard = int(np.ceil(2 * period / h)) + 4
    for _ in range(guard):
        x_new = rk4_step(f, x, h)
        b = angle_of(x_new[0])
        if a <= 0.0 <= b and (b - a) < np.pi:
            lo, hi = 0.0, h
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if angle_of(rk4_step(f, x, mid)[0]) > 0.0:
                    hi = mid
                else:
                    lo = mid
            x = rk4_step(f, x, 0.5 * (lo + hi))
            break
        x, a = x_new, b
    else:
        # angle never wraps through zero (center off-axis); keep old anchor
        return samples
    return _sample_cycle(f, x[0], period, len(samples), dt)


def _floquet_multiplier(model, x_on_cycle, period, dt):
    """Largest nontrivial monodromy eigenvalue, by integrating the
    variational equation Phi' = J(gamma(t)) Phi around one period."""
    d = len(x_on_cycle)
    jac = model.jacobian if model.jacobian is not None else _fd_jac(model)

    def rhs(z):
        x = z[:d]
        phi = z[d:].reshape(d, d)
        j = jac(x[None])[0]
        return np.concatenate([model.drift(x[None])[0], (j @ phi).ravel()])

    z = np.concatenate([np.asarray(x_on_cycle, float), np.eye(d).ravel()])
    n_steps = max(1, int(round(period / dt)))
    h = period / n_steps
    for _ in range(n_steps):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * h * k1)
        k3 = rhs(z + 0.5 * h * k2)
        k4 = rhs(z + h * k3)
        z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    mono = z[d:].reshape(d, d)
    eig = np.linalg.eigvals(mono)
    trivial = np.argmin(np.abs(eig - 1.0))
    rest = np.delete(eig, trivial)
    return float(np.max(np.abs(rest))) if len(rest) else 0.0


def _fd_jac(model, h=1e-6):
    def jac(xs):
        xs = np.atleast_2d(xs)
        n, d = xs.shape
        out = np.empty((n, d, d))
        for k in range(d):
            e = np.zeros(d)
            e[k] = h
            out[:, :, k] = (model.drift(xs + e) - model.drift(xs - e)) / (2 * h)
        return out
    return jac


def cycle_closure_error(model, cycle, n_points=100, dt=1e-3):
    """max over sampled cycle points of |flow_T(x) - x|."""
    idx = np.linspace(0, cycle.n_samples, n_points, endpoint=False).astype(int)
    pts = cycle.samples[idx]
    ret = flow(model, pts, cycle.period, dt)
    return float(np.max(np.linalg.norm(ret - pts, axis=-1)))


# ---------------------------------------------------------------------------
# asymptotic phase (numeric)

def asymptotic_phase(cycle, model, x, horizon=None, *, dt=1e-3, target=1e-8):
    """Phase pi(x): flow x until it rides the cycle (in whole periods), read
    the cycle parameter there, subtract the elapsed time mod T.

    Converged means the endpoint sits within `target` of the cycle; if that
    has not happened after flowing for `horizon` (default 20 periods),
    NotConverged reports the residual distance.  Vectorized over rows of x.
    """
    x = np.asarray(x, float)
    single = x.ndim == 1
    pts = np.atleast_2d(x).copy()
    if not bool(np.all(model.basin.contains(pts))):
        raise PhaseUndefined("point outside the basin of the cycle")

    T = cycle.period
    if horizon is None:
        horizon = 20.0 * T
    max_chunks = max(1, int(np.ceil(horizon / T)))

    n = len(pts)
    phases = np.empty(n)
    elapsed = np.zeros(n)
    live = np.arange(n)
    worst = np.inf
    for _ in range(max_chunks):
        pts[live] = flow(model, pts[live], T, dt)
        elapsed[live] += T
        dists = np.array([cycle.distance(p) for p in pts[live]])
        done = dists <= target
        worst = float(dists.max())
        live = live[~done]
        if len(live) == 0:
            break
    if len(live):
        raise NotConverged(
            f"point did not settle onto the cycle within the horizon "
            f"(residual {worst:.3g})", residual=worst)

    for i in range(n):
        phases[i] = cycle.nearest_phase(pts[i])
    out = np.mod(phases - elapsed, T)
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# phase maps

@dataclass(frozen=True)
class PhaseMap:
    """Phase function with first and second derivatives.

    eval maps states to [0, period); grad and hessian differentiate the local
    branch.  `normalized` is False for this convention (eval would map to
    [0,1) if True; downstream rotation counts divide by period themselves).
    `is_isochron` declares whether grad . V = 1 holds off the cycle.
    """

    period: float
    eval: Callable
    grad: Callable
    hessian: Callable
    backend: str  # "analytic" | "numeric"
    detail: str = ""
    is_isochron: bool = False
    normalized: bool = False
    singularities: tuple = ()

    def __call__(self, x):
        return self.eval(x)


def angle_phase_map(center, period, anchor, is_isochron):
    """Phase proportional to the angle about `center`, zero at `anchor`.

    Exact isochrons for rotationally invariant dynamics; for merely
    star-shaped cycles traversed at constant angular speed it is correct on
    the cycle but not an isochron map off it.
    """
    center = np.asarray(center, float)
    anchor = np.asarray(anchor, float)
    theta0 = float(np.arctan2(anchor[1] - center[1], anchor[0] - center[0]))
    scale = period / (2.0 * np.pi)

    def _rel(x):
        x = np.asarray(x, float)
        return x[..., 0] - center[0], x[..., 1] - center[1]

    def eval_(x):
        rx, ry = _rel(x)
        th = np.arctan2(ry, rx)
        out = scale * np.mod(th - theta0, 2.0 * np.pi)
        r2 = rx * rx + ry * ry
        return np.where(r2 > 0.0, out, np.nan)

    def grad(x):
        rx, ry = _rel(x)
        r2 = rx * rx + ry * ry
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.stack([-ry / r2, rx / r2], axis=-1)
        return scale * g

    def hessian(x):
        rx, ry = _rel(x)
        r2 = rx * rx + ry * ry
        with np.errstate(divide="ignore", invalid="ignore"):
            r4 = r2 * r2
            hxx = 2.0 * rx * ry / r4
            hxy = (ry * ry - rx * rx) / r4
        h = np.stack([np.stack([hxx, hxy], axis=-1),
                      np.stack([hxy, -hxx], axis=-1)], axis=-2)
        return scale * h

    return PhaseMap(period=float(period), eval=eval_, grad=grad,
                    hessian=hessian, backend="analytic", detail="ray_angle",
                    is_isochron=bool(is_isochron),
                    singularities=(tuple(center),))


def calibrated_angle_phase_map(cycle, center):
    """Angle about `center`, reparametrized so that eval(gamma(s)) = s.

    Requires the cycle to wind monotonically about the center.  Level sets
    are rays, so this is generally not an isochron map; it is exact on the
    cycle, which is all the on-cycle frequency integrands need.
    """
    center = np.asarray(center, float)
    rel = cycle.samples - center
    ang = np.unwrap(np.arctan2(rel[:, 1], rel[:, 0]))
    d_ang = np.diff(np.append(ang, ang[0] + 2.0 * np.pi))
    if not (np.all(d_ang > 0) or np.all(d_ang < 0)):
        raise SectionError("cycle does not wind monotonically about center")
    orient = 1.0 if d_ang[0] > 0 else -1.0
    a = orient * ang
    theta0 = a[0]
    T = cycle.period
    t = cycle.times
    # t(alpha) minus its linear part is 2-pi periodic; spline that remainder
    lin = T * (a - theta0) / (2.0 * np.pi)
    h_nodes = np.append(t - lin, 0.0)
    a_nodes = np.append(a, theta0 + 2.0 * np.pi)
    h_spline = CubicSpline(a_nodes, h_nodes, bc_type="periodic")

    def _alpha(x):
        x = np.asarray(x, float)
        rx = x[..., 0] - center[0]
        ry = x[..., 1] - center[1]
        return rx, ry, orient * np.arctan2(ry, rx)

    def eval_(x):
        rx, ry, al = _alpha(x)
        rel_a = np.mod(al - theta0, 2.0 * np.pi)
        val = h_spline(theta0 + rel_a) + T * rel_a / (2.0 * np.pi)
        val = np.mod(val, T)
        return np.where(rx * rx + ry * ry > 0.0, val, np.nan)

    def g1(al):
        rel_a = np.mod(al - theta0, 2.0 * np.pi)
        return h_spline(theta0 + rel_a, 1) + T / (2.0 * np.pi)

    def g2(al):
        rel_a = np.mod(al - theta0, 2.0 * np.pi)
        return h_spline(theta0 + rel_a, 2)

    def grad(x):
        rx, ry, al = _alpha(x)
        r2 = rx * rx + ry * ry
        with np.errstate(divide="ignore", invalid="ignore"):
            ga = np.stack([-ry / r2, rx / r2], axis=-1)
        return g1(al)[..., None] * orient * ga

    def hessian(x):
        rx, ry, al = _alpha(x)
        r2 = rx * rx + ry * ry
        with np.errstate(divide="ignore", invalid="ignore"):
            r4 = r2 * r2
            ga = np.stack([-ry / r2, rx / r2], axis=-1) * orient
            hxx = 2.0 * rx * ry / r4
            hxy = (ry * ry - rx * rx) / r4
        ha = orient * np.stack([np.stack([hxx, hxy], axis=-1),
                                np.stack([hxy, -hxx], axis=-1)], axis=-2)
        outer = ga[..., :, None] * ga[..., None, :]
        return g2(al)[..., None, None] * outer + g1(al)[..., None, None] * ha

    return PhaseMap(period=float(T), eval=eval_, grad=grad, hessian=hessian,
                    backend="analytic", detail="calibrated_angle",
                    is_isochron=False, singularities=(tuple(center),))


def numeric_phase_map(model, cycle, *, dt=1e-3, horizon=None):
    """Relax-and-project phase map.

    Derivatives are central differences of eval with circular seam handling;
    slow, meant for models without a closed form and for cross-checks.
    """
    T = cycle.period

    def eval_(x):
        return asymptotic_phase(cycle, model, x, horizon, dt=dt)

    sing = ((tuple(np.asarray(model.singularity, float)),)
            if model.singularity is not None else ())
    pm = PhaseMap(period=float(T), eval=eval_, grad=None, hessian=None,
                  backend="numeric", detail="relax_project",
                  is_isochron=False, singularities=sing)
    grad, hessian = _fd_phase_derivative_fns(pm, model)
    object.__setattr__(pm, "grad", grad)
    object.__setattr__(pm, "hessian", hessian)
    return pm


def _wrap_half(diff, period):
    """Reduce a phase difference to the branch in (-T/2, T/2]."""
    return -((-diff + 0.5 * period) % period - 0.5 * period)


def _fd_phase_derivative_fns(pm, model=None):
    """Central-difference grad/hessian of pm.eval with seam unwrapping."""
    T = pm.period

    def _eval_checked(pts):
        if model is not None and not bool(np.all(model.basin.contains(pts))):
            raise StencilOutOfBasin("derivative stencil leaves the basin")
        try:
            return np.asarray(pm.eval(pts), float)
        except PhaseUndefined as e:
            raise StencilOutOfBasin(str(e)) from e

    def grad(x, h=None):
        x = np.asarray(x, float)
        if x.ndim > 1:
            return np.stack([grad(p, h) for p in x])
        hh = h if h is not None else 1e-4 * (1.0 + float(np.linalg.norm(x)))
        d = x.shape[-1]
        pts = np.stack([x + hh * e for e in _units(d, +1)]
                       + [x - hh * e for e in _units(d, +1)])
        ph = _eval_checked(pts)
        return np.array([_wrap_half(ph[k] - ph[d + k], T) / (2 * hh)
                         for k in range(d)])

    def hessian(x, h=None):
        x = np.asarray(x, float)
        if x.ndim > 1:
            return np.stack([hessian(p, h) for p in x])
        hh = h if h is not None else 1e-3 * (1.0 + float(np.linalg.norm(x)))
        d = x.shape[-1]
        base = float(_eval_checked(x[None])[0])
        out = np.empty((d, d))
        for i in range(d):
            ei = np.zeros(d); ei[i] = hh
            for j in range(i, d):
                ej = np.zeros(d); ej[j] = hh
                if i == j:
                    ph = _eval_checked(np.stack([x + ei, x - ei]))
                    out[i, i] = (_wrap_half(ph[0] - base, T)
                                 + _wrap_half(ph[1] - base, T)) / hh ** 2
                else:
                    ph = _eval_checked(np.stack([x + ei + ej, x + ei - ej,
                                                 x - ei + ej, x - ei - ej]))
                    val = (_wrap_half(ph[0] - base, T)
                           - _wrap_half(ph[1] - base, T)
                           - _wrap_half(ph[2] - base, T)
                           + _wrap_half(ph[3] - base, T))
                    out[i, j] = out[j, i] = val / (4 * hh ** 2)
        return out

    return grad, hessian


def _units(d, sign):
    for k in range(d):
        e = np.zeros(d)
        e[k] = sign
        yield e


def phase_derivatives(pm, x, h=None, model=None):
    """(gradient, hessian) of a phase map at x.

    Analytic backends return their closed forms; numeric backends (or any map
    without derivative callables) get seam-aware central differences of eval,
    step h defaulting to 1e-4 (1+|x|).  A stencil that leaves the basin (when
    the model is supplied, or that the map itself rejects) raises
    StencilOutOfBasin.
    """
    if pm.backend == "analytic":
        return pm.grad(x), pm.hessian(x)
    g_fn, h_fn = _fd_phase_derivative_fns(pm, model)
    return g_fn(x, h), h_fn(x, h * 10.0 if h is not None else None)


@dataclass(frozen=True)
class MonodromyReport:
    """Circular discrepancy |pi(x) - pi(flow_T(x))| mod period, per point."""

    discrepancies: np.ndarray
    max_discrepancy: float


def check_isochron_invariance(pm, model, points, *, dt=1e-3):
    """Invariance of the phase under the time-T deterministic flow.

    Exact for true asymptotic phase maps; a calibrated angle map that is not
    an isochron map reports a nonzero discrepancy off the cycle.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    before = np.asarray(pm.eval(pts), float)
    after = np.asarray(pm.eval(flow(model, pts, pm.period, dt)), float)
    disc = np.abs(_wrap_half(after - before, pm.period))
    return MonodromyReport(discrepancies=disc,
                           max_discrepancy=float(np.max(disc)))


def phase_speed_deviation(pm, model, points):
    """max |grad pi . V - 1| over points: the defining identity of isochron
    maps, and of any phase map restricted to the cycle."""
    pts = np.atleast_2d(np.asarray(points, float))
    g = pm.grad(pts)
    v = model.drift(pts)
    dev = np.abs(np.sum(g * v, axis=-1) - 1.0)
    return float(np.max(dev))


def build_phase_map(model, cycle, kind="auto"):
    """Pick the best available phase map for a model.

    kind="auto" uses the closed form when the model is one of the built-ins,
    numeric relaxation otherwise.  kind="numeric" forces relaxation.
    """
    if kind not in ("auto", "analytic", "numeric"):
        raise ValueError(f"unknown phase map kind {kind!r}")
    name = model.name
    if kind != "numeric":
        if name.startswith("hopf"):
            return angle_phase_map(center=np.zeros(2), period=cycle.period,
                                   anchor=cycle.samples[0], is_isochron=True)
        if name.startswith("three_cycles"):
            return angle_phase_map(center=np.zeros(2), period=cycle.period,
                                   anchor=cycle.samples[0], is_isochron=False)
        if name == "predator_prey":
            return calibrated_angle_phase_map(cycle, center=model.singularity)
    if kind == "analytic":
        raise PhaseUndefined(f"no closed-form phase map for {name!r}")
    return numeric_phase_map(model, cycle)
