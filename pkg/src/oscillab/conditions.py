"""Sufficient-condition checks for existence of the asymptotic frequency.

Four conditions are evaluated at the interior equilibrium x0:

    (i)   V and B vanish at x0 at least linearly,
    (ii)  the symmetric part of V'(x0) is positive definite,
    (iii) the diffusion does not vanish inside the basin (away from x0),
    (iv)  the diffusion vanishes on the basin boundary,

plus the noise threshold sigma_star = Tr V'(x0) / (2 d): the trace condition
holds for sigma <= sigma_star.  (Read as a threshold on sigma itself; the
worked Hopf example has sigma_star = 1/2 with d = 2, which fixes this
reading.)

These are sufficient, not necessary: a failed trace or definiteness check is
a definitive "violated", but a failed structural condition only makes the
result inapplicable, so the verdict is "inconclusive".  "satisfied" needs
every condition to hold with closed-form backing; for the built-in models a
registry carries those facts, and the numeric ray probes double-check them.
For unknown models only numeric evidence exists, which caps the verdict at
"inconclusive"/"violated".
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError

# closed-form facts about the built-in models' coefficients:
# order_ok: V and B both vanish at x0 (at least linearly)
# interior_positive: B nonzero on the basin interior away from x0
# boundary_vanishes: B = 0 on the (effective) basin boundary
_ANALYTIC_FACTS = {
    "hopf_bounded": dict(order_ok=True, interior_positive=True,
                         boundary_vanishes=True),
    "hopf_linear": dict(order_ok=True, interior_positive=True,
                        boundary_vanishes=True),
    "hopf_asym": dict(order_ok=False, interior_positive=True,
                      boundary_vanishes=True),
    "predator_prey_B0": dict(order_ok=False, interior_positive=True,
                             boundary_vanishes=False),
    "predator_prey_B1": dict(order_ok=True, interior_positive=False,
                             boundary_vanishes=False),
}


@dataclass(frozen=True)
class ConditionReport:
    sigma_star: float
    trace_condition: bool
    positive_definite: bool
    diffusion_positive_interior: bool
    diffusion_vanishes_boundary: object  # bool or "not_applicable"
    verdict: str  # satisfied | violated | inconclusive
    sigma: float = 0.0
    evidence: dict = field(default_factory=dict)
    notes: tuple = ()


def _vanishing_order(fn, x0, scale=1.0, n_dirs=16):
    """Log-log slope of max-over-directions |fn(x0 + r e)| for small r.
    Slope ~1 means linear vanishing; ~0 means the coefficient does not
    vanish at x0."""
    radii = np.geomspace(1e-5, 1e-2, 7) * scale
    th = np.linspace(0.0, 2 * np.pi, n_dirs, endpoint=False)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    vals = []
    for r in radii:
        pts = x0 + r * dirs
        v = np.asarray(fn(pts), float).reshape(n_dirs, -1)
        vals.append(float(np.max(np.linalg.norm(v, axis=-1))))
    vals = np.asarray(vals)
    if np.any(vals <= 0.0):
        return np.inf  # vanishes identically along the probes
    return float(np.polyfit(np.log(radii), np.log(vals), 1)[0])


def check_sufficient_conditions(model, x0=None, *, n_dirs=16,
                                n_interior=256) -> ConditionReport:
    """Evaluate the sufficient conditions at the interior equilibrium.

    Always returns a report; a missing or out-of-basin equilibrium yields an
    inconclusive verdict with a note rather than an exception.
    """
    sigma = float(model.sigma)
    notes = []
    if x0 is None:
        x0 = model.singularity
    if x0 is None:
        return ConditionReport(
            sigma_star=float("nan"), trace_condition=False,
            positive_definite=False, diffusion_positive_interior=False,
            diffusion_vanishes_boundary="not_applicable",
            verdict="inconclusive", sigma=sigma,
            notes=("no interior equilibrium declared",))
    x0 = np.asarray(x0, float)
    # the equilibrium is usually the puncture of the basin (the phase
    # singularity), so basin membership is not required; well-defined
    # coefficients at x0 are
    with np.errstate(all="ignore"):
        v_at = np.asarray(model.drift(x0[None]), float)
    if not np.all(np.isfinite(v_at)):
        return ConditionReport(
            sigma_star=float("nan"), trace_condition=False,
            positive_definite=False, diffusion_positive_interior=False,
            diffusion_vanishes_boundary="not_applicable",
            verdict="inconclusive", sigma=sigma,
            notes=("drift is singular at the equilibrium; the linearization "
                   "does not exist",))

    if model.jacobian is not None:
        jac = np.asarray(model.jacobian(x0[None]))[0]
    else:
        jac = _fd_jacobian(model, x0)
        notes.append("jacobian by finite differences")
    d = model.dim
    sigma_star = float(np.trace(jac)) / (2.0 * d)
    trace_condition = bool(sigma <= sigma_star)
    sym = 0.5 * (jac + jac.T)
    eigs = np.linalg.eigvalsh(sym)
    positive_definite = bool(np.all(eigs > 0.0))

    v_order = _vanishing_order(model.drift, x0)
    b_order = _vanishing_order(
        lambda p: model.diffusion(p).reshape(len(p), -1), x0)
    order_ok_numeric = v_order >= 0.9 and b_order >= 0.9

    interior_min, interior_max = _interior_diffusion_range(
        model, x0, n_interior)
    interior_numeric = interior_min > 1e-12 * max(interior_max, 1.0)

    if model.boundary_sampler is not None:
        bpts = np.atleast_2d(model.boundary_sampler(64))
        bmax = float(np.max(np.linalg.norm(
            model.diffusion(bpts).reshape(len(bpts), -1), axis=-1)))
        boundary_numeric = bmax <= 1e-9 * max(interior_max, 1.0)
    else:
        boundary_numeric = None

    key = model.name
    if key == "predator_prey":
        # noise variant changes the facts; recover it from the noise column
        probe = model.diffusion(x0[None] + np.array([[0.0, 0.5]]))[0]
        key = "predator_prey_B1" if abs(float(probe[1, 0]) - 0.5) < 1e-9 \
            else "predator_prey_B0"
    facts = _ANALYTIC_FACTS.get(key)

    if facts is not None:
        order_ok = facts["order_ok"]
        interior_ok = facts["interior_positive"]
        boundary_ok = facts["boundary_vanishes"]
        analytic = True
        if order_ok != order_ok_numeric:
            notes.append(
                f"numeric vanishing order (V {v_order:.2f}, B {b_order:.2f}) "
                "disagrees with the registered closed form")
    else:
        order_ok = order_ok_numeric
        interior_ok = interior_numeric
        boundary_ok = boundary_numeric
        analytic = False
        notes.append("only numeric evidence available")

    vanishes_field = ("not_applicable" if boundary_ok is None
                      else bool(boundary_ok))

    if not trace_condition or not positive_definite:
        verdict = "violated"
    elif (analytic and order_ok and interior_ok
          and vanishes_field in (True, "not_applicable")):
        verdict = "satisfied"
    else:
        verdict = "inconclusive"
        if facts is not None and not order_ok:
            notes.append("coefficients do not vanish at the equilibrium; the "
                         "sufficient criterion does not apply")

    return ConditionReport(
        sigma_star=sigma_star, trace_condition=trace_condition,
        positive_definite=positive_definite,
        diffusion_positive_interior=bool(interior_ok),
        diffusion_vanishes_boundary=vanishes_field,
        verdict=verdict, sigma=sigma,
        evidence=dict(
            v_order=v_order, b_order=b_order,
            interior_min_B=interior_min, interior_max_B=interior_max,
            sym_jacobian_eigs=[float(e) for e in eigs],
            boundary_max_B=(None if model.boundary_sampler is None else bmax),
        ),
        notes=tuple(notes))


def _fd_jacobian(model, x, h=1e-6):
    d = len(x)
    j = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        j[:, k] = (model.drift_one(x + e) - model.drift_one(x - e)) / (2 * h)
    return j


def _interior_diffusion_range(model, x0, n):
    """min/max of |B| over ring samples between the equilibrium and the
    boundary (excluding a small ball at x0 where vanishing is expected)."""
    if model.boundary_sampler is not None:
        bpts = np.atleast_2d(model.boundary_sampler(64))
        r_max = 0.95 * float(np.min(np.linalg.norm(bpts - x0, axis=-1)))
    else:
        r_max = 1.0
    if r_max <= 0.0:
        r_max = 1.0
    k = max(4, int(np.sqrt(n)))
    radii = np.linspace(0.1 * r_max, r_max, k)
    th = np.linspace(0.0, 2 * np.pi, k, endpoint=False)
    pts = (x0 + radii[:, None, None]
           * np.stack([np.cos(th), np.sin(th)], axis=-1)[None]).reshape(-1, 2)
    pts = pts[model.basin.contains(pts)]
    if len(pts) == 0:
        raise SpecError("no interior sample points inside the basin")
    norms = np.linalg.norm(model.diffusion(pts).reshape(len(pts), -1), axis=-1)
    return float(norms.min()), float(norms.max())
