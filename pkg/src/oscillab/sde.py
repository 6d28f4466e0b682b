"""Euler-Maruyama integration of dX = V(X) dt + sigma B(X) dW with exit detection.

Drift and diffusion callables are vectorized over a batch of states: drift maps
(n, d) -> (n, d), diffusion maps (n, d) -> (n, d, m) with m the noise dimension.
Single states (d,) are accepted by the public entry points and promoted.

Trajectory i of an ensemble consumes the counter-based stream (seed, i), so the
result is bit-identical however the batch is split across workers.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CoarseStepWarning, InvalidStart, NumericalBlowup
from .rng import NoiseBlocks

CHUNK_STEPS = 16384


@dataclass(frozen=True)
class BasinSpec:
    """Open set the process lives in, with a (lower bound on) boundary distance.

    `contains` and `boundary_distance` are vectorized over (n, d) batches.
    `all_states` marks basins equal to the whole space so the integrator can
    skip per-step membership tests.
    """

    contains: Callable[[np.ndarray], np.ndarray]
    boundary_distance: Callable[[np.ndarray], np.ndarray]
    description: str = ""
    all_states: bool = False

    def contains_one(self, x):
        return bool(np.asarray(self.contains(np.asarray(x, float)[None, :]))[0])


def whole_space_basin(description="all of state space"):
    return BasinSpec(
        contains=lambda x: np.ones(len(x), dtype=bool),
        boundary_distance=lambda x: np.full(len(x), np.inf),
        description=description,
        all_states=True,
    )


@dataclass(frozen=True)
class SdeModel:
    """Drift, diffusion, noise amplitude and basin for one SDE system.

    Optional fields carry closed-form structure the estimators can exploit;
    user-supplied models may leave them None and everything still works
    through generic (finite-difference / sampling) fallbacks.
    """

    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    noise_dim: int
    sigma: float
    basin: BasinSpec
    dim: int = 2
    name: str = ""
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    singularity: Optional[np.ndarray] = None
    boundary_sampler: Optional[Callable[[int], np.ndarray]] = None
    # native alternate-coordinate stepping (used by three_cycles); see models.py
    polar_form: Optional[object] = None
    preferred_coords: str = "cartesian"
    # consumed by kernels.lookup for the fused fast paths
    kernel_params: Optional[tuple] = None

    def drift_one(self, x):
        return np.asarray(self.drift(np.asarray(x, float)[None, :]))[0]

    def diffusion_one(self, x):
        return np.asarray(self.diffusion(np.asarray(x, float)[None, :]))[0]

    def with_sigma(self, sigma):
        from dataclasses import replace

        return replace(self, sigma=float(sigma))


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    seed: int = 0
    record_stride: int = 1
    stop_on_exit: bool = True
    coords: str = "auto"  # auto | cartesian | polar
    blowup_bound: float = 1e6
    exit_refine_levels: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt exceeds t_end")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.record_stride * self.dt > self.t_end:
            raise ValueError("record_stride*dt exceeds t_end")
        if self.coords not in ("auto", "cartesian", "polar"):
            raise ValueError(f"unknown coords mode {self.coords!r}")

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray
    exited: bool
    exit_time: Optional[float]
    seed_used: int
    error: Optional[str] = None

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_time(self):
        return float(self.times[-1])


def euler_maruyama_step(model, x, dt, dw):
    """One explicit step x + V(x) dt + sigma B(x) dw; deterministic in its inputs."""
    x = np.asarray(x, float)
    dw = np.atleast_1d(np.asarray(dw, float))
    v = model.drift_one(x)
    b = model.diffusion_one(x)
    if b.ndim == 1:
        b = b[:, None]
    out = x + dt * v + model.sigma * (b @ dw)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup(f"non-finite state after one step from {x}", t=dt)
    return out


def _maybe_warn_coarse(model, cfg):
    if model.sigma > 0 and cfg.dt > model.sigma**2:
        warnings.warn(
            f"dt={cfg.dt} exceeds sigma^2={model.sigma**2:g}; multiplicative-noise "
            "bias may be underresolved",
            CoarseStepWarning,
            stacklevel=3,
        )


class _BatchState:
    """Mutable per-batch bookkeeping shared by the numpy and fused kernels.

    exit_step[i] / blow_step[i] hold the first step index (1-based) at which
    path i was found outside the basin / beyond the guard ball, or 0 while
    the path is alive.  last_in holds the most recent in-basin state.
    """

    def __init__(self, x0s):
        n = len(x0s)
        self.states = np.array(x0s, float, copy=True)
        self.alive = np.ones(n, dtype=bool)
        self.exit_step = np.zeros(n, dtype=np.int64)
        self.blow_step = np.zeros(n, dtype=np.int64)
        self.last_in = np.array(x0s, float, copy=True)
        self.last_in_step = np.zeros(n, dtype=np.int64)


def _numpy_chunk(model, bs, dW, dt, sigma_vec, first_step, stop_on_exit, bound,
                 rec, rec_stride):
    """Advance a chunk of steps with generic numpy ops. Fills strided rows of rec."""
    states = bs.states
    alive = bs.alive
    check_basin = stop_on_exit and not model.basin.all_states
    m = model.noise_dim
    for k in range(len(dW)):
        step = first_step + k + 1  # state after this update sits at time step*dt
        v = model.drift(states)
        b = model.diffusion(states)
        if m == 1:
            noise = b[:, :, 0] * (sigma_vec * dW[k, :, 0])[:, None]
        else:
            noise = np.einsum("ndm,nm->nd", b, sigma_vec[:, None] * dW[k])
        new = states + dt * v + noise
        np.copyto(states, new, where=alive[:, None])

        with np.errstate(invalid="ignore"):
            bad = alive & (~np.all(np.isfinite(states), axis=1)
                           | (np.max(np.abs(states), axis=1) > bound))
        if bad.any():
            bs.blow_step[bad] = step
            alive &= ~bad
        if check_basin:
            out = alive & ~model.basin.contains(states)
            if out.any():
                bs.exit_step[out] = step
                alive &= ~out
        still = alive
        if still.any():
            bs.last_in[still] = states[still]
            bs.last_in_step[still] = step
        # chunks start on stride multiples, so (k+1) indexes rows chunk-locally
        if rec is not None and step % rec_stride == 0:
            rec[(k + 1) // rec_stride - 1] = states


def _lookup_fused(model, coords):
    try:
        from . import kernels
    except ImportError:
        return None
    return kernels.lookup(model, coords)


def _resolve_coords(model, cfg):
    if cfg.coords != "auto":
        return cfg.coords
    return model.preferred_coords


class BatchResult:
    """Dense strided states for a lockstep batch plus exit/blowup bookkeeping.

    states has shape (n_rows, n_paths, d) on the recorded grid
    times[j] = (j+1) * record_stride * dt; row j of a dead path is frozen
    garbage past its exit and must be masked with `alive_at_row`.
    """

    def __init__(self, times, states, x0s, bs, dt, final_states):
        self.times = times
        self.states = states
        self.x0s = x0s
        self.dt = dt
        self.exit_step = bs.exit_step
        self.blow_step = bs.blow_step
        self.last_in = bs.last_in
        self.last_in_step = bs.last_in_step
        self.final_states = final_states

    @property
    def n_paths(self):
        return self.states.shape[1]

    def alive_at_row(self, j):
        step = int(round(self.times[j] / self.dt))
        dead = ((self.exit_step > 0) & (self.exit_step <= step)) | (
            (self.blow_step > 0) & (self.blow_step <= step))
        return ~dead

    def survivors(self):
        return (self.exit_step == 0) & (self.blow_step == 0)


def integrate_batch(model, x0s, cfg, *, sigma=None, chunk_observer=None,
                    record=True, first_stream_index=0):
    """Lockstep integration of a batch with per-trajectory noise streams.

    sigma may be a scalar or per-path vector overriding model.sigma (used by
    sweeps to batch several noise amplitudes together).  chunk_observer, if
    given, is called after every chunk with (chunk_first_step, chunk_rows,
    row_steps) where chunk_rows are the strided recorded states of that chunk;
    with record=False rows are not retained between chunks.
    """
    x0s = np.atleast_2d(np.asarray(x0s, float))
    n, d = x0s.shape
    if sigma is None:
        sigma = model.sigma
    sigma_vec = np.ascontiguousarray(np.broadcast_to(np.asarray(sigma, float), (n,)))
    coords = _resolve_coords(model, cfg)
    work_model = model
    to_work = from_work = None
    if coords == "polar":
        if model.polar_form is None:
            raise ValueError(f"model {model.name!r} has no polar form")
        work_model = model.polar_form.model
        to_work = model.polar_form.to_polar
        from_work = model.polar_form.from_polar

    n_steps = cfg.n_steps
    stride = cfg.record_stride
    n_rows = n_steps // stride
    work0 = to_work(x0s) if to_work else x0s
    bs = _BatchState(work0)
    blocks = NoiseBlocks(cfg.seed, n, work_model.noise_dim, first_stream_index)
    sqdt = np.sqrt(cfg.dt)
    fused = _lookup_fused(work_model, "native")
    rows_out = np.empty((n_rows, n, d)) if record else None

    done = 0
    row_done = 0
    while done < n_steps:
        L = min(CHUNK_STEPS, n_steps - done)
        # keep chunk boundaries on stride multiples so row indexing stays simple
        if stride > 1 and done + L < n_steps:
            L -= (done + L) % stride
            if L <= 0:
                L = stride
        dW = blocks.draw(L) * sqdt
        rows_in_chunk = (done + L) // stride - done // stride
        want_rows = record or chunk_observer is not None
        rec = (np.empty((rows_in_chunk, n, work0.shape[1]))
               if want_rows and rows_in_chunk else None)
        if fused is not None:
            fused(bs, dW, cfg.dt, sigma_vec, done, cfg.stop_on_exit,
                  cfg.blowup_bound, rec, stride)
        else:
            _numpy_chunk(work_model, bs, dW, cfg.dt, sigma_vec, done,
                         cfg.stop_on_exit, cfg.blowup_bound, rec, stride)
        if rec is not None and from_work is not None:
            rec = from_work(rec)
        if chunk_observer is not None and rec is not None:
            row_steps = (np.arange(rows_in_chunk) + done // stride + 1) * stride
            chunk_observer(done, rec, row_steps)
        if record and rec is not None:
            rows_out[row_done:row_done + rows_in_chunk] = rec
            row_done += rows_in_chunk
        done += L
        if not bs.alive.any() and done < n_steps:
            # nothing left to integrate; later rows stay frozen copies
            if record:
                rows_out[row_done:] = (from_work(bs.states[None])
                                       if from_work else bs.states[None])
                row_done = n_rows
            break

    final_states = bs.states
    if from_work is not None:
        bs.last_in = from_work(bs.last_in[None])[0]
        final_states = from_work(bs.states[None])[0]
    times = (np.arange(n_rows) + 1) * (stride * cfg.dt)
    return BatchResult(times, rows_out, x0s, bs, cfg.dt, final_states)


def _refine_exit_time(model, x_in, x_out, t_in, dt, levels):
    """Bisect the straight segment between the straddling states.

    Ignores the Brownian bridge, so the refined time carries an O(dt) model
    bias; it only sharpens the grid bracket.
    """
    lo, hi = 0.0, 1.0
    for _ in range(levels):
        mid = 0.5 * (lo + hi)
        x_mid = x_in + mid * (x_out - x_in)
        if model.basin.contains_one(x_mid):
            lo = mid
        else:
            hi = mid
    return t_in + hi * dt


def _assemble_record(model, result, i, cfg, x0):
    """Build one TrajectoryRecord out of a BatchResult column."""
    exit_step = int(result.exit_step[i])
    blow_step = int(result.blow_step[i])
    last_step = int(result.last_in_step[i])
    stride = cfg.record_stride
    n_rows_valid = min(last_step // stride, len(result.times))
    times = [0.0]
    states = [x0]
    if result.states is not None and n_rows_valid > 0:
        times.extend(result.times[:n_rows_valid])
        states.extend(result.states[:n_rows_valid, i])
    if last_step > 0 and last_step % stride != 0:
        times.append(last_step * cfg.dt)
        states.append(result.last_in[i])
    times = np.asarray(times)
    states = np.asarray(states)

    exited = exit_step > 0
    error = None
    exit_time = None
    if exited:
        exit_time = exit_step * cfg.dt
        if cfg.exit_refine_levels > 0:
            # bisect between the last in-basin state and the frozen first
            # outside state (both already in output coordinates)
            exit_time = _refine_exit_time(
                model, result.last_in[i], result.final_states[i],
                (exit_step - 1) * cfg.dt, cfg.dt, cfg.exit_refine_levels)
    if blow_step > 0:
        error = f"numerical blowup at t={blow_step * cfg.dt:g}"
    return TrajectoryRecord(times=times, states=states, exited=exited,
                            exit_time=exit_time, seed_used=cfg.seed, error=error)


def simulate_path(model, x0, cfg):
    """Integrate one trajectory; raises for out-of-basin starts unless exiting
    gracefully is the requested behavior (stop_on_exit=True)."""
    x0 = np.asarray(x0, float)
    inside = model.basin.contains_one(x0)
    if not inside:
        if cfg.stop_on_exit:
            return TrajectoryRecord(
                times=np.array([0.0]), states=x0[None].copy(), exited=True,
                exit_time=0.0, seed_used=cfg.seed)
        raise InvalidStart(f"start {x0} outside basin {model.basin.description!r}")
    _maybe_warn_coarse(model, cfg)
    result = integrate_batch(model, x0[None], cfg)
    rec = _assemble_record(model, result, 0, cfg, x0)
    if rec.error is not None:
        raise NumericalBlowup(rec.error, record=rec,
                              t=float(result.blow_step[0]) * cfg.dt)
    return rec


def simulate_ensemble(model, x0s, cfg, workers=1):
    """Independent trajectories i = 0..n-1 on streams (seed, i).

    Bit-identical output for every workers value; per-trajectory blowups are
    reported on the record's error field instead of aborting siblings.
    """
    x0s = np.atleast_2d(np.asarray(x0s, float))
    n = len(x0s)
    inside = model.basin.contains(x0s)
    if not cfg.stop_on_exit and not np.all(inside):
        bad = int(np.argmin(inside))
        raise InvalidStart(f"start #{bad} {x0s[bad]} outside basin")
    _maybe_warn_coarse(model, cfg)

    def run_span(lo, hi):
        live = np.arange(lo, hi)[inside[lo:hi]]
        out = {}
        if len(live):
            sub = integrate_batch(model, x0s[live], cfg,
                                  first_stream_index=int(live[0]))
            # contiguous spans keep live indices contiguous too
            for j, i in enumerate(live):
                out[int(i)] = _assemble_record(model, _column_view(sub, j), 0,
                                               cfg, x0s[i])
        return out

    spans = _split_spans(n, workers)
    records = {}
    if len(spans) == 1:
        records.update(run_span(*spans[0]))
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            for out in pool.map(lambda s: run_span(*s), spans):
                records.update(out)
    full = []
    for i in range(n):
        if i in records:
            full.append(records[i])
        else:
            full.append(TrajectoryRecord(
                times=np.array([0.0]), states=x0s[i][None].copy(), exited=True,
                exit_time=0.0, seed_used=cfg.seed))
    return full


def _split_spans(n, workers):
    workers = max(1, min(int(workers), n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


class _column_view:
    """Single-path view over a BatchResult (keeps _assemble_record one-shaped)."""

    def __init__(self, result, j):
        self.times = result.times
        self.states = result.states[:, j:j + 1] if result.states is not None else None
        self.exit_step = result.exit_step[j:j + 1]
        self.blow_step = result.blow_step[j:j + 1]
        self.last_in = result.last_in[j:j + 1]
        self.last_in_step = result.last_in_step[j:j + 1]
        self.final_states = result.final_states[j:j + 1]
