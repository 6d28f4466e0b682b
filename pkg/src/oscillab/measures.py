"""Occupation measures, frequency estimators, decomposition, sweeps.

Histograms are time-occupation counts on a rectangular window, normalized to
unit mass.  Three estimators: `long_path` pools every in-basin sample;
`discard_on_exit` (default) keeps only paths that never exit, each weighted
equally; `fleming_viot` respawns an exiting particle at a uniformly chosen
surviving particle's state and pools late-time occupation.

The frequency formula is a bin-center quadrature of
(grad pi . V + (sigma^2/2) Tr[hess pi B B^T]) / T against the histogram.
Bins inside an exclusion ball around each declared phase singularity are
skipped and their mass reported alongside the estimate rather than silently
renormalized away.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (BranchAmbiguity, GridTooCoarse, NoSurvivors,
                     SingularityDominated, SpecError)
from .geometry import _default_start, flow
from .phase import _wrap_half, phase_rate_fields
from .rng import NoiseBlocks
from .sde import integrate_batch

ESTIMATORS = ("long_path", "discard_on_exit", "fleming_viot")


# ---------------------------------------------------------------------------
# histograms

@dataclass
class MeasureHistogram:
    edges_x: np.ndarray
    edges_y: np.ndarray
    weights: np.ndarray  # (nx, ny), sums to 1
    kind: str  # "ergodic" | "quasi_ergodic"
    estimator: str
    total_samples: int
    burn_in: float
    sigma: float
    model_name: str = ""
    clipped_mass: float = 0.0
    n_paths: int = 0
    t_end: float = 0.0
    survivor_fraction: float = 1.0
    survivor_curve: Optional[tuple] = None  # (times, alive fraction)
    respawns: int = 0

    @property
    def nx(self):
        return len(self.edges_x) - 1

    @property
    def ny(self):
        return len(self.edges_y) - 1

    @property
    def centers_x(self):
        return 0.5 * (self.edges_x[:-1] + self.edges_x[1:])

    @property
    def centers_y(self):
        return 0.5 * (self.edges_y[:-1] + self.edges_y[1:])

    @property
    def window(self):
        return (float(self.edges_x[0]), float(self.edges_x[-1]),
                float(self.edges_y[0]), float(self.edges_y[-1]))

    @property
    def bin_diagonal(self):
        hx = self.edges_x[1] - self.edges_x[0]
        hy = self.edges_y[1] - self.edges_y[0]
        return float(np.hypot(hx, hy))

    def coarsen(self, factor=2):
        """Merge factor x factor blocks of bins (same samples, coarser grid)."""
        if self.nx % factor or self.ny % factor:
            raise ValueError("grid not divisible by the coarsening factor")
        w = self.weights.reshape(self.nx // factor, factor,
                                 self.ny // factor, factor).sum(axis=(1, 3))
        out = MeasureHistogram(
            edges_x=self.edges_x[::factor], edges_y=self.edges_y[::factor],
            weights=w, kind=self.kind, estimator=self.estimator,
            total_samples=self.total_samples, burn_in=self.burn_in,
            sigma=self.sigma, model_name=self.model_name,
            clipped_mass=self.clipped_mass, n_paths=self.n_paths,
            t_end=self.t_end, survivor_fraction=self.survivor_fraction,
            survivor_curve=self.survivor_curve, respawns=self.respawns)
        return out


def window_around(cycle, pad=0.8):
    """Rectangular window: cycle bounding box inflated by `pad` of its
    half-extent on each side."""
    lo, hi = cycle.bounding_box()
    c = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * (1.0 + pad)
    half = np.maximum(half, 1e-6)
    return (float(c[0] - half[0]), float(c[0] + half[0]),
            float(c[1] - half[1]), float(c[1] + half[1]))


def starts_on_cycle(cycle, n):
    """n start points uniform in phase along the cycle (phase 0 first)."""
    s = np.arange(n) * (cycle.period / n)
    return np.atleast_2d(cycle.point(s))


def _grid(window, nx, ny):
    xlo, xhi, ylo, yhi = window
    if not (xhi > xlo and yhi > ylo):
        raise SpecError(f"degenerate window {window}")
    return np.linspace(xlo, xhi, nx + 1), np.linspace(ylo, yhi, ny + 1)


def _bin_flat(states, edges_x, edges_y):
    """Flat bin index per state, -1 if outside the window."""
    nx, ny = len(edges_x) - 1, len(edges_y) - 1
    ix = np.searchsorted(edges_x, states[..., 0], side="right") - 1
    iy = np.searchsorted(edges_y, states[..., 1], side="right") - 1
    ok = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    return np.where(ok, ix * ny + iy, -1)


def _survivor_curve(times, exit_step, blow_step, dt, max_points=256):
    death = np.where(exit_step > 0, exit_step, np.iinfo(np.int64).max)
    death = np.minimum(death, np.where(blow_step > 0, blow_step,
                                       np.iinfo(np.int64).max))
    steps = np.round(times / dt).astype(np.int64)
    frac = (death[None, :] > steps[:, None]).mean(axis=1)
    if len(times) > max_points:
        idx = np.linspace(0, len(times) - 1, max_points).astype(int)
        return times[idx], frac[idx]
    return times.copy(), frac


def estimate_measure(model, window, cfg, estimator="discard_on_exit",
                     n_paths=100, *, nx=64, ny=64, burn_in_fraction=0.1,
                     x0s=None):
    """Occupation histogram of the model's law on a rectangular window.

    Samples are the recorded states on cfg's stride grid, after a burn-in of
    burn_in_fraction * t_end.  Post-exit (frozen) rows never land in the
    basin, so masking on basin membership drops them exactly.  Raises
    NoSurvivors (with the survivor curve attached) when no admissible sample
    remains.
    """
    if estimator not in ESTIMATORS:
        raise SpecError(f"unknown estimator {estimator!r}; one of {ESTIMATORS}")
    edges_x, edges_y = _grid(window, nx, ny)
    if x0s is None:
        x0 = flow(model, _default_start(model), 50.0)[0]
        x0s = np.tile(x0, (n_paths, 1))
    else:
        x0s = np.atleast_2d(np.asarray(x0s, float))
        n_paths = len(x0s)

    if estimator == "fleming_viot":
        return _fleming_viot_measure(model, (edges_x, edges_y), cfg, x0s,
                                     burn_in_fraction)

    burn_in = burn_in_fraction * cfg.t_end
    n = len(x0s)
    counts = np.zeros(n * nx * ny, dtype=np.int64)
    in_basin_total = np.zeros(n, dtype=np.int64)
    in_window_total = np.zeros(n, dtype=np.int64)
    check_basin = not model.basin.all_states
    path_offset = np.arange(n, dtype=np.int64) * (nx * ny)

    def observe(done, rec, row_steps):
        keep = row_steps * cfg.dt > burn_in
        if not keep.any():
            return
        rows = rec[keep]
        if check_basin:
            basin_mask = model.basin.contains(rows)
        else:
            basin_mask = np.all(np.isfinite(rows), axis=-1)
        flat = _bin_flat(rows, edges_x, edges_y)
        ok = (flat >= 0) & basin_mask
        in_basin_total[:] += basin_mask.sum(axis=0)
        in_window_total[:] += ok.sum(axis=0)
        sel = flat + path_offset[None, :]
        np.add.at(counts, sel[ok], 1)

    result = integrate_batch(model, x0s, cfg, chunk_observer=observe,
                             record=False)
    curve = _survivor_curve(result.times, result.exit_step, result.blow_step,
                            cfg.dt)
    survivors = result.survivors()
    per_path = counts.reshape(n, nx, ny)

    if estimator == "discard_on_exit":
        keep_paths = survivors & (in_window_total > 0)
    else:  # long_path: every path's in-basin occupation counts
        keep_paths = in_window_total > 0
    if not keep_paths.any() or per_path[keep_paths].sum() == 0:
        raise NoSurvivors(survivor_curve=curve)

    # each kept path's occupation enters with equal weight
    denom = in_window_total[keep_paths].astype(float)
    w = (per_path[keep_paths] / denom[:, None, None]).mean(axis=0)
    w = w / w.sum()

    basin_n = int(in_basin_total[keep_paths].sum())
    window_n = int(in_window_total[keep_paths].sum())
    clipped = 0.0 if basin_n == 0 else 1.0 - window_n / basin_n
    kind = "ergodic" if model.basin.all_states else "quasi_ergodic"
    return MeasureHistogram(
        edges_x=edges_x, edges_y=edges_y, weights=w, kind=kind,
        estimator=estimator, total_samples=window_n, burn_in=burn_in,
        sigma=float(model.sigma), model_name=model.name, clipped_mass=clipped,
        n_paths=n, t_end=cfg.t_end,
        survivor_fraction=float(survivors.mean()), survivor_curve=curve)


def _fleming_viot_measure(model, grid, cfg, x0s, burn_in_fraction):
    """Branching estimator: an exiting particle respawns at the state of a
    uniformly chosen surviving particle (extra randomness on its own
    dedicated stream, so path streams stay aligned with the other
    estimators)."""
    edges_x, edges_y = grid
    nx, ny = len(edges_x) - 1, len(edges_y) - 1
    n = len(x0s)
    states = np.array(x0s, float)
    if not bool(np.all(model.basin.contains(states))):
        raise SpecError("fleming_viot starts must lie inside the basin")
    blocks = NoiseBlocks(cfg.seed, n, model.noise_dim)
    respawn = np.random.Generator(np.random.Philox(
        key=np.array([cfg.seed, 1 << 32], dtype=np.uint64)))
    sqdt = np.sqrt(cfg.dt)
    burn_in = burn_in_fraction * cfg.t_end
    stride = cfg.record_stride
    counts = np.zeros(nx * ny, dtype=np.int64)
    total = 0
    clipped = 0
    respawn_count = 0
    n_steps = cfg.n_steps
    sigma = model.sigma
    done = 0
    alive_frac = []
    while done < n_steps:
        L = min(4096, n_steps - done)
        dW = blocks.draw(L) * sqdt
        for k in range(L):
            step = done + k + 1
            v = model.drift(states)
            b = model.diffusion(states)
            noise = np.einsum("ndm,nm->nd", b, sigma * dW[k])
            states = states + cfg.dt * v + noise
            inside = model.basin.contains(states) & np.all(
                np.isfinite(states), axis=-1)
            if not inside.any():
                times = np.arange(1, len(alive_frac) + 1) * cfg.dt
                raise NoSurvivors(survivor_curve=(
                    times, np.asarray(alive_frac)))
            dead = np.flatnonzero(~inside)
            if len(dead):
                donors = np.flatnonzero(inside)
                pick = respawn.integers(0, len(donors), size=len(dead))
                states[dead] = states[donors[pick]]
                respawn_count += len(dead)
            alive_frac.append(inside.mean())
            if step % stride == 0 and step * cfg.dt > burn_in:
                flat = _bin_flat(states, edges_x, edges_y)
                ok = flat >= 0
                counts += np.bincount(flat[ok], minlength=nx * ny)
                total += int(ok.sum())
                clipped += int((~ok).sum())
        done += L
    if total == 0:
        raise NoSurvivors(survivor_curve=(
            np.arange(1, n_steps + 1) * cfg.dt, np.asarray(alive_frac)))
    w = counts.reshape(nx, ny).astype(float)
    w /= w.sum()
    times = np.arange(1, n_steps + 1) * cfg.dt
    idx = np.linspace(0, n_steps - 1, min(256, n_steps)).astype(int)
    return MeasureHistogram(
        edges_x=edges_x, edges_y=edges_y, weights=w, kind="quasi_ergodic",
        estimator="fleming_viot", total_samples=total, burn_in=burn_in,
        sigma=float(sigma), model_name=model.name,
        clipped_mass=clipped / max(total + clipped, 1), n_paths=n,
        t_end=cfg.t_end, survivor_fraction=1.0,
        survivor_curve=(times[idx], np.asarray(alive_frac)[idx]),
        respawns=respawn_count)


# ---------------------------------------------------------------------------
# frequency estimators

@dataclass(frozen=True)
class FrequencyEstimate:
    value: float  # rotations per unit time
    method: str  # path_average | formula_quadrature | fp_oracle
    std_error: Optional[float]
    t_used: float
    n_paths: int
    survivor_fraction: float
    excluded_mass: float = 0.0
    quadrature_error: Optional[float] = None


def _quadrature_fields(hist, pm, model):
    """Integrand pieces at bin centers plus the singularity-exclusion mask."""
    cx, cy = np.meshgrid(hist.centers_x, hist.centers_y, indexing="ij")
    centers = np.stack([cx.ravel(), cy.ravel()], axis=-1)
    f1, f2 = phase_rate_fields(model, pm, centers)
    f1 = f1.reshape(hist.nx, hist.ny)
    f2 = f2.reshape(hist.nx, hist.ny)
    excl = np.zeros((hist.nx, hist.ny), dtype=bool)
    radius = 2.0 * hist.bin_diagonal
    for s in pm.singularities:
        d2 = (cx - s[0]) ** 2 + (cy - s[1]) ** 2
        excl |= d2 <= radius ** 2
    excl |= ~np.isfinite(f1) | ~np.isfinite(f2)
    return f1, f2, excl


def frequency_from_formula(hist, pm, model,
                           excluded_warn_threshold=0.01) -> FrequencyEstimate:
    """Quadrature of the generator-rate integrand against the histogram.

    Mass in excluded bins (singularity ball, non-finite integrand) is NOT
    renormalized away; it is reported, and when it crosses the threshold a
    SingularityDominated warning is emitted with the estimate still returned.
    """
    f1, f2, excl = _quadrature_fields(hist, pm, model)
    sigma = model.sigma
    w = hist.weights
    inc = ~excl
    value = float(np.sum(w[inc] * (f1[inc] + sigma**2 * f2[inc])) / pm.period)
    excluded_mass = float(np.sum(w[excl]))

    # crude upper proxy for the quadrature error: excluded mass times the
    # largest kept integrand, plus measure-displacement within a bin
    f_inc = np.abs(f1[inc] + sigma**2 * f2[inc])
    fmax = float(f_inc.max()) if f_inc.size else 0.0
    hx = hist.edges_x[1] - hist.edges_x[0]
    hy = hist.edges_y[1] - hist.edges_y[0]
    with np.errstate(invalid="ignore"):
        gx, gy = np.gradient(f1 + sigma**2 * f2, hist.centers_x,
                             hist.centers_y)
        grad_mag = np.hypot(gx, gy)
    fin = inc & np.isfinite(grad_mag)
    disp = float(np.sum(w[fin] * grad_mag[fin]) * 0.5 * np.hypot(hx, hy))
    err = (excluded_mass * fmax + disp) / pm.period

    if excluded_mass > excluded_warn_threshold:
        warnings.warn(
            f"{excluded_mass:.3g} of the measure sits inside the "
            "singularity-exclusion ball; the quadrature may be dominated by it",
            SingularityDominated, stacklevel=2)
    return FrequencyEstimate(
        value=value, method="fp_oracle" if hist.estimator == "fp_oracle"
        else "formula_quadrature",
        std_error=None, t_used=hist.t_end, n_paths=hist.n_paths,
        survivor_fraction=hist.survivor_fraction,
        excluded_mass=excluded_mass, quadrature_error=err)


def frequency_from_paths(lifts, t_eval, conditioning="none") -> FrequencyEstimate:
    """Ensemble mean and standard error of phi(t)/(T t).

    conditioning="survivors_only" keeps lifts valid through t_eval;
    "none" evaluates each lift at its last valid sample at or before t_eval
    (paths that exited contribute their value at exit).
    """
    if conditioning not in ("none", "survivors_only"):
        raise SpecError(f"unknown conditioning {conditioning!r}")
    if not lifts:
        raise SpecError("empty ensemble")
    T = lifts[0].period
    values = []
    survived = 0
    for lp in lifts:
        t_last = lp.times[lp.valid_until]
        alive = t_last >= t_eval * (1.0 - 1e-12)
        survived += alive
        if conditioning == "survivors_only" and not alive:
            continue
        t_use = min(t_eval, t_last)
        idx = int(np.searchsorted(lp.times, t_use * (1 + 1e-12), "right")) - 1
        if idx <= 0:
            continue
        values.append(lp.phi[idx] / (T * lp.times[idx]))
    if not values:
        raise NoSurvivors()
    values = np.asarray(values)
    se = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return FrequencyEstimate(
        value=float(values.mean()), method="path_average", std_error=se,
        t_used=float(t_eval), n_paths=len(values),
        survivor_fraction=survived / len(lifts))


# ---------------------------------------------------------------------------
# decomposition and the small-noise line prediction

@dataclass(frozen=True)
class DecompositionReport:
    c0: float
    a_sigma: float
    b0: float
    b_sigma: float
    sigma: float
    phase_map_kind: str  # "isochron" | "other"
    quadrature_value: float = 0.0  # c0 + a_sigma + sigma^2 (b0 + b_sigma)

    @property
    def total(self):
        return self.c0 + self.a_sigma + self.sigma**2 * (self.b0 + self.b_sigma)


def decompose_frequency(hist, cycle, pm, model) -> DecompositionReport:
    """Split the quadrature frequency into cycle-line and measure-deformation
    parts.

    The cycle-line measure is the atomic measure on the cycle's uniform-time
    samples; grouping those atoms by histogram bin (and applying the same
    exclusion mask as the grid quadrature) makes the regrouping
    c0 + a_sigma + sigma^2 (b0 + b_sigma) agree with frequency_from_formula
    to floating-point rounding, not just to quadrature order.
    """
    f1, f2, excl = _quadrature_fields(hist, pm, model)
    T = pm.period
    sigma = model.sigma

    flat = _bin_flat(cycle.samples, hist.edges_x, hist.edges_y)
    if len(np.unique(flat[flat >= 0])) < 32:
        raise GridTooCoarse(
            "cycle crosses fewer than 32 bins; refine the grid or widen it")
    keep = flat >= 0
    keep &= ~excl.ravel()[np.maximum(flat, 0)]
    u = 1.0 / cycle.n_samples
    g1, g2 = phase_rate_fields(model, pm, cycle.samples)

    L1 = float(np.sum(g1[keep]) * u)
    L2 = float(np.sum(g2[keep]) * u)
    inc = ~excl
    w = hist.weights
    S1 = float(np.sum(w[inc] * f1[inc]))
    S2 = float(np.sum(w[inc] * f2[inc]))

    c0 = L1 / T
    b0 = L2 / T
    a_sigma = (S1 - L1) / T
    b_sigma = (S2 - L2) / T
    kind = "isochron" if pm.is_isochron else "other"
    return DecompositionReport(
        c0=c0, a_sigma=a_sigma, b0=b0, b_sigma=b_sigma, sigma=float(sigma),
        phase_map_kind=kind,
        quadrature_value=(S1 + sigma**2 * S2) / T)


def cycle_line_prediction(cycle, pm, model, sigma) -> float:
    """Small-noise frequency prediction c0 + sigma^2 b0 from cycle-line
    quadrature alone (no occupation measure; ignores measure deformation)."""
    f1, f2 = phase_rate_fields(model, pm, cycle.samples)
    T = pm.period
    c0 = float(f1.mean()) / T
    b0 = float(f2.mean()) / T
    return c0 + float(sigma) ** 2 * b0


# spelled-out public alias: the prediction is exactly c0 + sigma^2 b0
gps_prediction = cycle_line_prediction


# ---------------------------------------------------------------------------
# sigma sweeps

@dataclass(frozen=True)
class SweepFit:
    m: Optional[float]  # radians per unit time per sigma^2
    p_free: Optional[float]
    residuals: np.ndarray  # radians, per fitted point
    c0: float  # rotations per unit time (measured sigma=0 baseline)
    units: str = "m: radians/time per sigma^2; c columns: rotations/time"


@dataclass(frozen=True)
class SweepResult:
    sigmas: np.ndarray
    c_sigma: np.ndarray
    std_error: np.ndarray
    n_survivors: np.ndarray
    n_paths: int
    fit: SweepFit
    dropped: tuple = ()

    def rows(self):
        for j in range(len(self.sigmas)):
            yield (float(self.sigmas[j]), float(self.c_sigma[j]),
                   float(self.std_error[j]), int(self.n_survivors[j]))


def sweep_sigma_fit(model, pm, cycle, sigmas, cfg, n_paths=16,
                    conditioning="none") -> SweepResult:
    """Pathwise frequency across a sigma grid plus the quadratic law fit.

    All (sigma, path) pairs integrate in one lockstep batch - column
    j*n_paths+i uses noise stream (seed, j*n_paths+i) - so the sweep is one
    reproducible ensemble, and a measured sigma=0 baseline is always included
    as the fit's origin.  Fit: weighted least squares of
    2 pi (c_sigma - c0) = m sigma^2 through the origin, weights 1/std_error^2,
    plus a free-exponent diagnostic.  Sigma points whose paths all exit are
    dropped from the fit and listed in `dropped`.
    """
    sig_in = [float(s) for s in sigmas]
    if any(s < 0 for s in sig_in):
        raise SpecError("sigma grid must be nonnegative")
    if sorted(sig_in) != sig_in:
        raise SpecError("sigma grid must be ascending")
    sig_all = ([0.0] if 0.0 not in sig_in else []) + sig_in
    k = len(sig_all)
    N = k * n_paths
    sigma_vec = np.repeat(sig_all, n_paths)
    x0s = np.tile(cycle.samples[0], (N, 1))
    T = pm.period

    # running branch-nearest lift per column, anchored at the t=0 phase
    phi = np.asarray(pm.eval(x0s), float)
    prev = phi.copy()

    half = 0.5 * T * (1.0 - 1e-12)

    def observe(done, rec, row_steps):
        nonlocal prev
        raw = np.asarray(pm.eval(rec), float)
        for r in range(len(raw)):
            d = _wrap_half(raw[r] - prev, T)
            if float(np.max(np.abs(d))) >= half:
                raise BranchAmbiguity(
                    "a sweep path's phase moved half a period between "
                    "records; reduce dt or the record stride")
            phi[:] += d
            prev = raw[r]

    result = integrate_batch(model, x0s, cfg, sigma=sigma_vec,
                             chunk_observer=observe, record=False)

    death = np.where(result.exit_step > 0, result.exit_step, 0)
    blow = np.where(result.blow_step > 0, result.blow_step, 0)
    death = np.where((blow > 0) & ((death == 0) | (blow < death)), blow, death)
    t_per_col = np.where(death > 0, death * cfg.dt, cfg.t_end)

    c = np.empty(k)
    se = np.empty(k)
    n_surv = np.empty(k, dtype=int)
    for j in range(k):
        cols = slice(j * n_paths, (j + 1) * n_paths)
        vals = phi[cols] / (T * t_per_col[cols])
        alive = death[cols] == 0
        n_surv[j] = int(alive.sum())
        if conditioning == "survivors_only":
            vals = vals[alive]
        if len(vals) == 0:
            c[j] = np.nan
            se[j] = np.nan
            continue
        c[j] = vals.mean()
        se[j] = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0

    c0 = float(c[0])
    fit_mask = np.array([j > 0 and np.isfinite(c[j]) and n_surv[j] > 0
                         for j in range(k)])
    dropped = tuple(float(sig_all[j]) for j in range(1, k)
                    if not fit_mask[j])

    m = p_free = None
    residuals = np.array([])
    if fit_mask.any():
        s2 = np.asarray(sig_all)[fit_mask] ** 2
        y = 2.0 * np.pi * (c[fit_mask] - c0)
        wts = 1.0 / np.maximum(se[fit_mask], 1e-15) ** 2
        m = float(np.sum(wts * s2 * y) / np.sum(wts * s2 * s2))
        residuals = y - m * s2
        dev = np.abs(c[fit_mask] - c0)
        pos = dev > 0
        if pos.sum() >= 2:
            p_free = float(np.polyfit(
                np.log(np.asarray(sig_all)[fit_mask][pos]),
                np.log(dev[pos]), 1)[0])

    keep = [j for j in range(k) if sig_all[j] in sig_in or sig_all[j] == 0.0]
    return SweepResult(
        sigmas=np.asarray([sig_all[j] for j in keep]),
        c_sigma=c[keep], std_error=se[keep], n_survivors=n_surv[keep],
        n_paths=n_paths,
        fit=SweepFit(m=m, p_free=p_free, residuals=residuals, c0=c0),
        dropped=dropped)
