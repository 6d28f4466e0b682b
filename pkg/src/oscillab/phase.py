"""Phase lifting, winding counts, pathwise frequency, Ito split.

The lift chooses, at every sample, the real-valued branch nearest the
previous value; wrapped increments therefore live in (-T/2, T/2], and an
increment hitting T/2 in magnitude is ambiguous - a hard error rather than a
silent wrap, since it usually means the sampling step is too coarse near the
phase singularity.

The Ito split writes phi(t) - phi(0) = I_t + II_t with I_t the left-point
quadrature of the generator applied to the phase (grad pi . V plus the
second-order diffusion term) and II_t defined by subtraction, so the identity
with the lifted phase is exact by construction.  A direct quadrature of the
stochastic integral is provided as a cross-check diagnostic only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchAmbiguity, PhaseUndefined
from .geometry import _wrap_half


@dataclass(frozen=True)
class LiftedPhase:
    times: np.ndarray
    phi: np.ndarray
    winding: np.ndarray
    valid_until: int
    period: float

    @property
    def valid_times(self):
        return self.times[: self.valid_until + 1]

    @property
    def valid_phi(self):
        return self.phi[: self.valid_until + 1]


def lift_phase(traj, pm) -> LiftedPhase:
    """Lift the phase of a trajectory to the real line.

    phi[0] = pm.eval(x0) in [0, T); later samples pick the branch nearest the
    previous value.  The lift stops at the first sample where the phase is
    undefined (nan); earlier samples stay valid.
    """
    states = np.asarray(traj.states, float)
    times = np.asarray(traj.times, float)
    T = pm.period
    raw = np.asarray(pm.eval(states), float)

    bad = ~np.isfinite(raw)
    valid_until = len(raw) - 1
    if bad.any():
        first_bad = int(np.argmax(bad))
        if first_bad == 0:
            raise PhaseUndefined("phase undefined at the initial sample")
        valid_until = first_bad - 1

    head = raw[: valid_until + 1]
    d = _wrap_half(np.diff(head), T)
    half = 0.5 * T
    if d.size and float(np.max(np.abs(d))) >= half * (1.0 - 1e-12):
        k = int(np.argmax(np.abs(d)))
        raise BranchAmbiguity(
            f"phase increment {d[k]:+.6g} at t={times[k + 1]:.6g} is half a "
            "period; reduce dt or keep paths away from the singularity")
    phi = np.empty_like(raw)
    phi[: valid_until + 1] = head[0] + np.concatenate([[0.0], np.cumsum(d)])
    phi[valid_until + 1:] = np.nan

    winding = np.zeros(len(raw), dtype=np.int64)
    w = np.floor(phi[: valid_until + 1] / T) - np.floor(phi[0] / T)
    winding[: valid_until + 1] = w.astype(np.int64)
    return LiftedPhase(times=times, phi=phi, winding=winding,
                       valid_until=valid_until, period=T)


def lift_matrix(raw, period):
    """Branch-nearest lift of a (rows, n_paths) matrix of raw phases.

    Row 0 is the starting phase of each path.  Raises BranchAmbiguity if any
    increment of any path reaches half a period.
    """
    raw = np.asarray(raw, float)
    d = _wrap_half(np.diff(raw, axis=0), period)
    if d.size and float(np.max(np.abs(d))) >= 0.5 * period * (1.0 - 1e-12):
        raise BranchAmbiguity(
            "an ensemble member's phase moved half a period in one sample; "
            "reduce dt or the record stride")
    out = np.empty_like(raw)
    out[0] = raw[0]
    np.cumsum(d, axis=0, out=out[1:])
    out[1:] += raw[0]
    return out


def _index_at(lp: LiftedPhase, t: float) -> int:
    if t > lp.times[lp.valid_until] * (1.0 + 1e-12):
        raise PhaseUndefined(
            f"t={t} is past the lift's validity "
            f"(ends at t={lp.times[lp.valid_until]:.6g})")
    idx = int(np.searchsorted(lp.times, t * (1.0 + 1e-12), side="right")) - 1
    return max(idx, 0)


def winding_number(lp: LiftedPhase, t: float) -> int:
    """Signed count of completed rotations at the last sample time <= t."""
    return int(lp.winding[_index_at(lp, t)])


def time_average_frequency(lp: LiftedPhase, t: float) -> float:
    """phi(t) / (T t) in rotations per unit time, at the last sample <= t."""
    if t <= 0.0:
        raise PhaseUndefined("time-average frequency needs t > 0")
    idx = _index_at(lp, t)
    if idx == 0:
        raise PhaseUndefined("no sample at positive time at or before t")
    return float(lp.phi[idx] / (lp.period * lp.times[idx]))


# ---------------------------------------------------------------------------
# generator integrand and the Ito split

def phase_rate_fields(model, pm, pts):
    """(f1, f2) with f1 = grad pi . V and f2 = Tr[hess pi B B^T] / 2.

    The generator applied to the phase is f1 + sigma^2 f2; dividing by the
    period converts to rotations per unit time.
    """
    pts = np.atleast_2d(np.asarray(pts, float))
    g = np.asarray(pm.grad(pts), float)
    h = np.asarray(pm.hessian(pts), float)
    v = model.drift(pts)
    b = model.diffusion(pts)
    f1 = np.sum(g * v, axis=-1)
    bbt = np.einsum("...dm,...em->...de", b, b)
    f2 = 0.5 * np.einsum("...de,...de->...", h, bbt)
    return f1, f2


@dataclass(frozen=True)
class ItoSplit:
    """phi(t) - phi(0) = I + II on the lift's valid time grid."""

    times: np.ndarray
    I: np.ndarray
    II: np.ndarray
    truncated: bool


def ito_decomposition(traj, pm, model) -> ItoSplit:
    """Split the lifted phase increment into its generator integral I_t
    (left-point quadrature on the record's grid) and the remainder II_t.

    For sigma = 0 and an exact phase map, II_t is the integrator's
    discretization residue; for sigma > 0 it converges to the martingale part
    as dt -> 0.  `truncated` reports whether the record extended past the
    lift's validity.
    """
    lp = lift_phase(traj, pm)
    times = lp.valid_times
    states = np.asarray(traj.states, float)[: lp.valid_until + 1]
    f1, f2 = phase_rate_fields(model, pm, states)
    rate = f1 + model.sigma ** 2 * f2
    dt = np.diff(times)
    I = np.concatenate([[0.0], np.cumsum(rate[:-1] * dt)])
    II = (lp.valid_phi - lp.valid_phi[0]) - I
    return ItoSplit(times=times, I=I, II=II,
                    truncated=lp.valid_until < len(traj.times) - 1)


def direct_noise_integral(traj, pm, model):
    """Cross-check quadrature of the stochastic integral sigma grad pi . B dW.

    Reconstructs the noise increments from the path residuals (needs a
    stride-1 record of a 1-column noise model) and accumulates the integrand
    directly.  Diagnostic only; the production II_t comes from subtraction.
    """
    if model.noise_dim != 1:
        raise ValueError("noise reconstruction implemented for 1 noise column")
    states = np.asarray(traj.states, float)
    times = np.asarray(traj.times, float)
    sigma = model.sigma
    if sigma == 0.0:
        return np.zeros(len(times))
    x = states[:-1]
    dt = np.diff(times)[:, None]
    resid = states[1:] - x - model.drift(x) * dt
    b = model.diffusion(x)[..., 0]
    b2 = np.sum(b * b, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dw = np.where(b2 > 0.0, np.sum(b * resid, axis=-1) / (sigma * b2), 0.0)
    g = np.asarray(pm.grad(x), float)
    incr = sigma * np.sum(g * b, axis=-1) * dw
    return np.concatenate([[0.0], np.cumsum(incr)])


def variance_decay_slope(times, II, t_min, t_max):
    """Log-log slope of Var[II_t / t] across an ensemble (II: rows x paths),
    restricted to t in [t_min, t_max].  A martingale II gives slope -1."""
    times = np.asarray(times, float)
    II = np.asarray(II, float)
    mask = (times >= t_min) & (times <= t_max) & (times > 0)
    if int(mask.sum()) < 4:
        raise ValueError("need at least 4 grid times inside the window")
    t = times[mask]
    v = np.var(II[mask] / t[:, None], axis=1, ddof=1)
    if np.any(v <= 0.0):
        raise ValueError("degenerate ensemble variance in the window")
    slope = np.polyfit(np.log(t), np.log(v), 1)[0]
    return float(slope)
