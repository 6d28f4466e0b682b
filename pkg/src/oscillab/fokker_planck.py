"""Stationary Fokker-Planck solve on a rectangular window (d = 2).

Finite-volume discretization of

    0 = -div(V rho) + sum_ij d_i d_j (D_ij rho),   D = (sigma^2/2) B B^T + eps I

with Scharfetter-Gummel per-axis face fluxes and a centered four-corner
stencil for the mixed second derivative.  `eps` keeps the operator uniformly
elliptic where B loses rank.

Boundary handling:
  reflecting_at_window  zero normal flux through the window edges; the
                        density is the null vector of the discrete operator,
                        obtained by replacing one row with the normalization
                        equation and checking the residual afterwards.
  absorbing             mass leaks through the window edges; the leading
                        eigenpair of the operator gives the decay rate and
                        the quasi-stationary profile.

This route shares nothing with the path integrator, which is what makes the
histogram comparison meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import OracleFailed, SpecError, Unsupported
from .measures import MeasureHistogram, _grid

BOUNDARIES = ("reflecting_at_window", "absorbing")


@dataclass(frozen=True)
class FpSolution:
    edges_x: np.ndarray
    edges_y: np.ndarray
    density: np.ndarray  # (nx, ny), integrates to 1 against cell area
    boundary: str
    residual: float  # max |A rho| off the normalization row (reflecting)
    decay_rate: float  # 0 for reflecting; -Re(lambda_1) for absorbing
    eps: float
    sigma: float
    model_name: str = ""

    @property
    def centers_x(self):
        return 0.5 * (self.edges_x[:-1] + self.edges_x[1:])

    @property
    def centers_y(self):
        return 0.5 * (self.edges_y[:-1] + self.edges_y[1:])

    @property
    def cell_area(self):
        return float((self.edges_x[1] - self.edges_x[0])
                     * (self.edges_y[1] - self.edges_y[0]))


def _bernoulli(p):
    """B(p) = p / (e^p - 1), the Scharfetter-Gummel weight.

    Branches: series below 1e-8 (cancellation), closed form in the middle,
    asymptotics beyond |p| = 35 (expm1 overflow)."""
    p = np.asarray(p, float)
    out = np.empty_like(p)
    small = np.abs(p) < 1e-8
    big_pos = p > 35.0
    big_neg = p < -35.0
    mid = ~(small | big_pos | big_neg)
    out[small] = 1.0 - 0.5 * p[small]
    out[big_pos] = 0.0
    out[big_neg] = -p[big_neg]
    out[mid] = p[mid] / np.expm1(p[mid])
    return out


def _coefficients(model, window, nx, ny, eps, sigma):
    ex, ey = _grid(window, nx, ny)
    hx = float(ex[1] - ex[0])
    hy = float(ey[1] - ey[0])
    X, Y = np.meshgrid(0.5 * (ex[:-1] + ex[1:]), 0.5 * (ey[:-1] + ey[1:]),
                       indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    v = np.asarray(model.drift(pts), float)
    b = np.asarray(model.diffusion(pts), float)
    bbt = np.einsum("ndm,nem->nde", b, b)
    dmat = 0.5 * sigma * sigma * bbt
    Dxx = dmat[:, 0, 0].reshape(nx, ny) + eps
    Dyy = dmat[:, 1, 1].reshape(nx, ny) + eps
    Dxy = dmat[:, 0, 1].reshape(nx, ny)
    Vx = v[:, 0].reshape(nx, ny)
    Vy = v[:, 1].reshape(nx, ny)
    if not (np.all(np.isfinite(Dxx)) and np.all(np.isfinite(Vx))
            and np.all(np.isfinite(Vy)) and np.all(np.isfinite(Dyy))):
        raise SpecError("non-finite drift or diffusion on the window; "
                        "shrink the window away from singularities")
    return ex, ey, hx, hy, Dxx, Dxy, Dyy, Vx, Vy


def _assemble(nx, ny, hx, hy, Dxx, Dxy, Dyy, Vx, Vy, absorbing):
    """Sparse generator A with A rho = d rho/dt (row = receiving cell)."""
    row_id = (np.arange(nx)[:, None] * ny + np.arange(ny)[None, :])
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(np.asarray(r).ravel())
        cols.append(np.asarray(c).ravel())
        vals.append(np.asarray(v).ravel())

    # x-faces between (i, j) and (i+1, j):
    # F = (D/hx) (B(-P) rho_L - B(P) rho_R), P = U hx / D,
    # U = face drift corrected by the diffusion gradient
    Df = 0.5 * (Dxx[:-1] + Dxx[1:])
    U = 0.5 * (Vx[:-1] + Vx[1:]) - (Dxx[1:] - Dxx[:-1]) / hx
    P = U * hx / Df
    cL = (Df / hx) * _bernoulli(-P)
    cR = (Df / hx) * _bernoulli(P)
    L, R = row_id[:-1], row_id[1:]
    add(L, L, -cL / hx); add(L, R, +cR / hx)
    add(R, L, +cL / hx); add(R, R, -cR / hx)

    # y-faces between (i, j) and (i, j+1)
    Df = 0.5 * (Dyy[:, :-1] + Dyy[:, 1:])
    U = 0.5 * (Vy[:, :-1] + Vy[:, 1:]) - (Dyy[:, 1:] - Dyy[:, :-1]) / hy
    P = U * hy / Df
    cL = (Df / hy) * _bernoulli(-P)
    cR = (Df / hy) * _bernoulli(P)
    L, R = row_id[:, :-1], row_id[:, 1:]
    add(L, L, -cL / hy); add(L, R, +cR / hy)
    add(R, L, +cL / hy); add(R, R, -cR / hy)

    # mixed term 2 dxdy(Dxy rho): centered four-corner stencil, ghost cells
    # carry zero (consistent with both boundary treatments)
    scale = 1.0 / (2.0 * hx * hy)
    for di, dj, s in ((1, 1, +1.0), (1, -1, -1.0), (-1, 1, -1.0),
                      (-1, -1, +1.0)):
        rsl = (slice(max(0, -di), nx - max(0, di)),
               slice(max(0, -dj), ny - max(0, dj)))
        csl = (slice(max(0, di), nx - max(0, -di)),
               slice(max(0, dj), ny - max(0, -dj)))
        add(row_id[rsl], row_id[csl], s * scale * Dxy[csl])

    if absorbing:
        # ghost cells beyond each edge hold rho = 0; keep only the loss
        # entries of the edge faces (one-sided face coefficients)
        for edge, h, Dn, Un in (
                ("x_lo", hx, Dxx[0], -Vx[0]), ("x_hi", hx, Dxx[-1], Vx[-1]),
                ("y_lo", hy, Dyy[:, 0], -Vy[:, 0]),
                ("y_hi", hy, Dyy[:, -1], Vy[:, -1])):
            # outward Peclet; B(P_out) weights the outflow of the edge cell
            P = Un * h / Dn
            c_out = (Dn / h) * _bernoulli(-P) / h
            cells = {"x_lo": row_id[0], "x_hi": row_id[-1],
                     "y_lo": row_id[:, 0], "y_hi": row_id[:, -1]}[edge]
            add(cells, cells, -c_out)

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    n = nx * ny
    return sp.csr_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


def solve_stationary_fp_2d(model, window, grid=(64, 64),
                           boundary="reflecting_at_window", *,
                           eps=1e-4, sigma=None,
                           residual_tol=1e-8) -> FpSolution:
    """Stationary (or quasi-stationary) density of the model on a window.

    grid: (nx, ny) cell counts.  sigma overrides model.sigma if given.
    residual_tol gates the reflecting solve; the absorbing eigensolve is
    gated by its own convergence."""
    if boundary not in BOUNDARIES:
        raise SpecError(f"boundary must be one of {BOUNDARIES}")
    if model.dim != 2:
        raise Unsupported("finite-volume oracle is two-dimensional")
    nx, ny = int(grid[0]), int(grid[1])
    if nx < 8 or ny < 8:
        raise SpecError("grid too small for the interior stencils")
    sig = float(model.sigma if sigma is None else sigma)
    ex, ey, hx, hy, Dxx, Dxy, Dyy, Vx, Vy = _coefficients(
        model, window, nx, ny, eps, sig)
    A = _assemble(nx, ny, hx, hy, Dxx, Dxy, Dyy, Vx, Vy,
                  absorbing=(boundary == "absorbing"))
    n = nx * ny

    if boundary == "reflecting_at_window":
        # null vector via row replacement: overwrite the best-conditioned row
        # (largest Dxx cell) with sum(rho) * cellarea = 1
        k = int(np.argmax(Dxx.ravel()))
        A_norm = A.tolil()
        A_norm[k, :] = hx * hy
        rhs = np.zeros(n)
        rhs[k] = 1.0
        rho = spla.spsolve(sp.csr_matrix(A_norm), rhs)
        resid = np.abs(A @ rho)
        resid[k] = 0.0
        # residual relative to the operator scale acting on this solution
        scale = float(np.max(np.abs(A).sum(axis=1))) * float(
            np.max(np.abs(rho)))
        resid_max = float(np.max(resid))
        if not np.all(np.isfinite(rho)) or resid_max > residual_tol * max(
                1.0, scale):
            raise OracleFailed("stationary solve residual too large",
                               residual=resid_max)
        decay = 0.0
    else:
        try:
            w, vec = spla.eigs(A, k=1, sigma=0.0, which="LM", tol=1e-10,
                               maxiter=5000)
        except (spla.ArpackNoConvergence, RuntimeError) as exc:
            raise OracleFailed("eigensolve did not converge",
                               residual=float("nan")) from exc
        lam = complex(w[0])
        rho = np.real(vec[:, 0])
        if abs(lam.imag) > 1e-6 * max(1.0, abs(lam.real)):
            raise OracleFailed("leading eigenvalue is not real",
                               residual=abs(lam.imag))
        resid_max = float(np.max(np.abs(A @ rho - lam.real * rho)))
        if rho.sum() < 0:
            rho = -rho
        decay = -lam.real

    rho = np.clip(rho, 0.0, None)
    total = rho.sum() * hx * hy
    if total <= 0:
        raise OracleFailed("solution carries no positive mass",
                           residual=float("nan"))
    rho /= total
    return FpSolution(edges_x=ex, edges_y=ey, density=rho.reshape(nx, ny),
                      boundary=boundary, residual=resid_max,
                      decay_rate=float(decay), eps=eps, sigma=sig,
                      model_name=model.name)


def histogram_from_density(sol: FpSolution) -> MeasureHistogram:
    """Package an FP density as a histogram (per-bin mass) so the frequency
    and decomposition routines can consume it unchanged."""
    w = sol.density * sol.cell_area
    w = w / w.sum()
    kind = "ergodic" if sol.boundary == "reflecting_at_window" \
        else "quasi_ergodic"
    return MeasureHistogram(
        edges_x=sol.edges_x, edges_y=sol.edges_y, weights=w, kind=kind,
        estimator="fp_oracle", total_samples=0, burn_in=0.0, sigma=sol.sigma,
        model_name=sol.model_name)


def total_variation(a: MeasureHistogram, b: MeasureHistogram) -> float:
    """TV distance between two histograms on the same grid."""
    if a.weights.shape != b.weights.shape:
        raise SpecError("histograms live on different grids")
    if (not np.allclose(a.edges_x, b.edges_x)
            or not np.allclose(a.edges_y, b.edges_y)):
        raise SpecError("histograms live on different windows")
    return float(0.5 * np.abs(a.weights - b.weights).sum())
