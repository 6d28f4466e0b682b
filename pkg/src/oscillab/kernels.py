"""Fused stepping kernels for the hot zoo models.

These replicate sde._numpy_chunk term by term (same expression order, same
noise blocks), so a numba-compiled run is bit-identical to the numpy path;
tests assert that.  Everything here is an optional speedup: lookup() returns
None when numba is unavailable or OSCILLAB_NO_NUMBA is set, and the generic
numpy path takes over.
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via OSCILLAB_NO_NUMBA instead
    HAVE_NUMBA = False

    def njit(*a, **k):
        def wrap(f):
            return f
        return wrap


@njit(cache=True)
def _hopf_chunk(states, alive, exit_step, blow_step, last_in, last_in_step,
                dW, dt, sig, first_step, bound, rec, stride, do_rec, check_exit,
                noise_code):
    L = dW.shape[0]
    n = states.shape[0]
    for k in range(L):
        step = first_step + k + 1
        for i in range(n):
            if not alive[i]:
                continue
            x = states[i, 0]
            y = states[i, 1]
            r2 = x * x + y * y
            if noise_code == 0:
                bx = x * (2.0 - r2)
                by = y * (2.0 - r2)
            elif noise_code == 1:
                bx = x
                by = y
            else:
                bx = 2.0 - r2
                by = 2.0 - r2
            t2 = sig[i] * dW[k, i, 0]
            nx = (x + dt * (x - y - x * r2)) + bx * t2
            ny = (y + dt * (x + y - y * r2)) + by * t2
            states[i, 0] = nx
            states[i, 1] = ny
            bad = not (np.isfinite(nx) and np.isfinite(ny))
            if not bad:
                ax = abs(nx)
                ay = abs(ny)
                if (ax if ax > ay else ay) > bound:
                    bad = True
            if bad:
                blow_step[i] = step
                alive[i] = False
                continue
            # only the punctured-plane variant has a boundary to hit (the origin)
            if check_exit and nx == 0.0 and ny == 0.0:
                exit_step[i] = step
                alive[i] = False
                continue
            last_in[i, 0] = nx
            last_in[i, 1] = ny
            last_in_step[i] = step
        if do_rec and step % stride == 0:
            row = (k + 1) // stride - 1
            for i in range(n):
                rec[row, i, 0] = states[i, 0]
                rec[row, i, 1] = states[i, 1]


@njit(cache=True)
def _three_cycles_polar_chunk(states, alive, exit_step, blow_step, last_in,
                              last_in_step, dW, dt, sig, first_step, bound,
                              rec, stride, do_rec, check_exit, a, b, c):
    L = dW.shape[0]
    n = states.shape[0]
    for k in range(L):
        step = first_step + k + 1
        for i in range(n):
            if not alive[i]:
                continue
            r = states[i, 0]
            th = states[i, 1]
            t2 = sig[i] * dW[k, i, 0]
            nr = (r + dt * (r * ((r - a) * (r - b) * (r - c)))) + r * t2
            nth = (th + dt * (1.0 / (r * r))) + 0.0 * t2
            states[i, 0] = nr
            states[i, 1] = nth
            bad = not (np.isfinite(nr) and np.isfinite(nth))
            if not bad:
                ar = abs(nr)
                at = abs(nth)
                if (ar if ar > at else at) > bound:
                    bad = True
            if bad:
                blow_step[i] = step
                alive[i] = False
                continue
            if check_exit and (nr <= a or nr >= c):
                exit_step[i] = step
                alive[i] = False
                continue
            last_in[i, 0] = nr
            last_in[i, 1] = nth
            last_in_step[i] = step
        if do_rec and step % stride == 0:
            row = (k + 1) // stride - 1
            for i in range(n):
                rec[row, i, 0] = states[i, 0]
                rec[row, i, 1] = states[i, 1]


@njit(cache=True)
def _predator_prey_chunk(states, alive, exit_step, blow_step, last_in,
                         last_in_step, dW, dt, sig, first_step, bound,
                         rec, stride, do_rec, check_exit, a, b, c, d, vstar,
                         noise_code):
    L = dW.shape[0]
    n = states.shape[0]
    for k in range(L):
        step = first_step + k + 1
        for i in range(n):
            if not alive[i]:
                continue
            u = states[i, 0]
            v = states[i, 1]
            w = (u * u) / (1.0 + u * u)
            if noise_code == 0:
                bv = 1.0
            else:
                bv = v - vstar
            t2 = sig[i] * dW[k, i, 0]
            nu = (u + dt * (u * (a - u) - b * (w * v))) + 0.0 * t2
            nv = (v + dt * (c * (w * v) - d * v)) + bv * t2
            states[i, 0] = nu
            states[i, 1] = nv
            bad = not (np.isfinite(nu) and np.isfinite(nv))
            if not bad:
                au = abs(nu)
                av = abs(nv)
                if (au if au > av else av) > bound:
                    bad = True
            if bad:
                blow_step[i] = step
                alive[i] = False
                continue
            if check_exit and (nu <= 0.0 or nv <= 0.0):
                exit_step[i] = step
                alive[i] = False
                continue
            last_in[i, 0] = nu
            last_in[i, 1] = nv
            last_in_step[i] = step
        if do_rec and step % stride == 0:
            row = (k + 1) // stride - 1
            for i in range(n):
                rec[row, i, 0] = states[i, 0]
                rec[row, i, 1] = states[i, 1]


_DUMMY = np.empty((0, 0, 0))
_HOPF_CODES = {"hopf_bounded": 0, "hopf_linear": 1, "hopf_asym": 2}


def lookup(model, coords="native"):
    """Fused chunk stepper for this model, or None to use the numpy path."""
    if not HAVE_NUMBA or os.environ.get("OSCILLAB_NO_NUMBA"):
        return None

    name = model.name
    if name in _HOPF_CODES:
        code = _HOPF_CODES[name]
        has_boundary = not model.basin.all_states

        def run(bs, dW, dt, sigma_vec, first_step, stop_on_exit, bound, rec, stride):
            do_rec = rec is not None
            _hopf_chunk(bs.states, bs.alive, bs.exit_step, bs.blow_step,
                        bs.last_in, bs.last_in_step, dW, dt, sigma_vec,
                        first_step, bound, rec if do_rec else _DUMMY, stride,
                        do_rec, stop_on_exit and has_boundary, code)
        return run

    if name == "three_cycles_polar":
        a, b, c = model.kernel_params

        def run(bs, dW, dt, sigma_vec, first_step, stop_on_exit, bound, rec, stride):
            do_rec = rec is not None
            _three_cycles_polar_chunk(
                bs.states, bs.alive, bs.exit_step, bs.blow_step, bs.last_in,
                bs.last_in_step, dW, dt, sigma_vec, first_step, bound,
                rec if do_rec else _DUMMY, stride, do_rec, stop_on_exit, a, b, c)
        return run

    if name == "predator_prey":
        a, b, c, d, vstar, code = model.kernel_params

        def run(bs, dW, dt, sigma_vec, first_step, stop_on_exit, bound, rec, stride):
            do_rec = rec is not None
            _predator_prey_chunk(
                bs.states, bs.alive, bs.exit_step, bs.blow_step, bs.last_in,
                bs.last_in_step, dW, dt, sigma_vec, first_step, bound,
                rec if do_rec else _DUMMY, stride, do_rec, stop_on_exit,
                a, b, c, d, vstar, code)
        return run

    return None
