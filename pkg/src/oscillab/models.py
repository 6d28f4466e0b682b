"""The five built-in oscillator systems.

All are planar.  The Hopf family shares the drift

    Vx = x - y - x (x^2+y^2),   Vy = x + y - y (x^2+y^2)

and differs in the (single) noise column:

    hopf_bounded : B = (x (2-r^2), y (2-r^2))   radial, trapped in r <= sqrt 2
    hopf_linear  : B = (x, y)                   radial, basin punctured plane
    hopf_asym    : B = (2-r^2, 2-r^2)           fixed direction, breaks symmetry

three_cycles is radial dynamics dr = r (r-a)(r-b)(r-c) dt + sigma r dW with
angular speed r^-2; stable cycle at r=b, basin the open annulus a < r < c.
predator_prey is a Holling type III grazing system with noise on the predator
only, variant B0 (additive) or B1 (multiplicative in v - v*).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SpecError, Unsupported
from .sde import BasinSpec, SdeModel, whole_space_basin

MODEL_IDS = ("hopf_bounded", "hopf_linear", "hopf_asym", "three_cycles",
             "predator_prey")


@dataclass(frozen=True)
class ModelSpec:
    id: str
    sigma: float = 0.0
    params: dict = field(default_factory=dict)
    noise_variant: str = "B0"

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise SpecError(f"unknown model id {self.id!r}; known: {MODEL_IDS}")
        if self.sigma < 0:
            raise SpecError("sigma must be nonnegative")
        if self.id == "three_cycles":
            a, b, c = self.abc
            if not (0 < a < b < c):
                raise SpecError("three_cycles requires 0 < a < b < c")
        if self.id == "predator_prey":
            a, b, c, d = self.abcd
            if min(a, b, c, d) <= 0:
                raise SpecError("predator_prey parameters must be positive")
            if not c > d:
                raise SpecError("predator_prey requires c > d (equilibrium exists)")
            if self.noise_variant not in ("B0", "B1"):
                raise SpecError(f"unknown noise_variant {self.noise_variant!r}")

    @property
    def abc(self):
        p = self.params
        return (float(p.get("a", 1.0)), float(p.get("b", 2.0)),
                float(p.get("c", 3.0)))

    @property
    def abcd(self):
        p = self.params
        return (float(p.get("a", 6.8)), float(p.get("b", 1.25)),
                float(p.get("c", 0.8)), float(p.get("d", 0.5)))


@dataclass(frozen=True)
class PolarForm:
    """Native (r, theta) stepping for radially driven models.

    `model` integrates the polar state; theta is kept as a real lift, never
    reduced mod 2 pi, so records convert back to cartesian losslessly.
    """

    model: SdeModel

    @staticmethod
    def to_polar(states):
        x, y = states[..., 0], states[..., 1]
        return np.stack([np.hypot(x, y), np.arctan2(y, x)], axis=-1)

    @staticmethod
    def from_polar(states):
        r, th = states[..., 0], states[..., 1]
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def _hopf_drift(s):
    x, y = s[..., 0], s[..., 1]
    r2 = x * x + y * y
    return np.stack([x - y - x * r2, x + y - y * r2], axis=-1)


def _hopf_jacobian(s):
    x, y = s[..., 0], s[..., 1]
    j = np.empty(s.shape[:-1] + (2, 2))
    j[..., 0, 0] = 1 - 3 * x * x - y * y
    j[..., 0, 1] = -1 - 2 * x * y
    j[..., 1, 0] = 1 - 2 * x * y
    j[..., 1, 1] = 1 - x * x - 3 * y * y
    return j


def _circle_sampler(radius):
    def sample(n):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return radius * np.stack([np.cos(t), np.sin(t)], axis=-1)
    return sample


def _punctured_plane_basin():
    return BasinSpec(
        contains=lambda s: (s[..., 0] != 0.0) | (s[..., 1] != 0.0),
        boundary_distance=lambda s: np.hypot(s[..., 0], s[..., 1]),
        description="plane with the origin removed",
    )


def _annulus_basin(a, c):
    def contains(s):
        r = np.hypot(s[..., 0], s[..., 1])
        return (r > a) & (r < c)

    def distance(s):
        r = np.hypot(s[..., 0], s[..., 1])
        return np.minimum(r - a, c - r)

    return BasinSpec(contains=contains, boundary_distance=distance,
                     description=f"annulus {a} < r < {c}")


def _quadrant_basin():
    def contains(s):
        return (s[..., 0] > 0.0) & (s[..., 1] > 0.0)

    def distance(s):
        return np.minimum(s[..., 0], s[..., 1])

    return BasinSpec(contains=contains, boundary_distance=distance,
                     description="open positive quadrant")


def build_model(spec: ModelSpec) -> SdeModel:
    sid = spec.id
    sigma = float(spec.sigma)

    if sid in ("hopf_bounded", "hopf_linear", "hopf_asym"):
        if sid == "hopf_bounded":
            def diffusion(s):
                x, y = s[..., 0], s[..., 1]
                g = 2.0 - (x * x + y * y)
                return np.stack([x * g, y * g], axis=-1)[..., None]
            basin = whole_space_basin("plane (paths trapped in r <= sqrt 2)")
            sampler = _circle_sampler(np.sqrt(2.0))
        elif sid == "hopf_linear":
            def diffusion(s):
                return np.stack([s[..., 0], s[..., 1]], axis=-1)[..., None]
            basin = _punctured_plane_basin()
            sampler = lambda n: np.zeros((n, 2))
        else:
            def diffusion(s):
                g = 2.0 - (s[..., 0] * s[..., 0] + s[..., 1] * s[..., 1])
                return np.stack([g, g], axis=-1)[..., None]
            basin = whole_space_basin("plane (paths trapped in r <= sqrt 2)")
            sampler = _circle_sampler(np.sqrt(2.0))
        return SdeModel(
            drift=_hopf_drift, diffusion=diffusion, noise_dim=1, sigma=sigma,
            basin=basin, dim=2, name=sid, jacobian=_hopf_jacobian,
            singularity=np.zeros(2), boundary_sampler=sampler)

    if sid == "three_cycles":
        a, b, c = spec.abc

        def drift(s):
            x, y = s[..., 0], s[..., 1]
            r = np.hypot(x, y)
            r2 = x * x + y * y
            p = (r - a) * (r - b) * (r - c)
            return np.stack([x * p - y / r2, y * p + x / r2], axis=-1)

        def diffusion(s):
            return np.stack([s[..., 0], s[..., 1]], axis=-1)[..., None]

        def polar_drift(s):
            r = s[..., 0]
            vr = r * ((r - a) * (r - b) * (r - c))
            return np.stack([vr, 1.0 / (r * r)], axis=-1)

        def polar_diffusion(s):
            r = s[..., 0]
            return np.stack([r, np.zeros_like(r)], axis=-1)[..., None]

        def jacobian(s):
            x, y = s[..., 0], s[..., 1]
            r2 = x * x + y * y
            r = np.sqrt(r2)
            r4 = r2 * r2
            p = (r - a) * (r - b) * (r - c)
            dp = ((r - b) * (r - c) + (r - a) * (r - c)
                  + (r - a) * (r - b))
            j = np.empty(s.shape[:-1] + (2, 2))
            j[..., 0, 0] = p + x * x * dp / r + 2 * x * y / r4
            j[..., 0, 1] = x * y * dp / r - 1.0 / r2 + 2 * y * y / r4
            j[..., 1, 0] = x * y * dp / r + 1.0 / r2 - 2 * x * x / r4
            j[..., 1, 1] = p + y * y * dp / r - 2 * x * y / r4
            return j

        def polar_contains(s):
            return (s[..., 0] > a) & (s[..., 0] < c)

        polar = PolarForm(model=SdeModel(
            drift=polar_drift, diffusion=polar_diffusion, noise_dim=1,
            sigma=sigma,
            basin=BasinSpec(contains=polar_contains,
                            boundary_distance=lambda s: np.minimum(
                                s[..., 0] - a, c - s[..., 0]),
                            description=f"annulus {a} < r < {c} (polar)"),
            dim=2, name="three_cycles_polar", kernel_params=(a, b, c)))

        return SdeModel(
            drift=drift, diffusion=diffusion, noise_dim=1, sigma=sigma,
            basin=_annulus_basin(a, c), dim=2, name=sid,
            jacobian=jacobian,
            singularity=np.zeros(2), polar_form=polar,
            preferred_coords="polar",
            boundary_sampler=lambda n: np.concatenate(
                [_circle_sampler(a)(n // 2), _circle_sampler(c)(n - n // 2)]))

    # predator_prey
    a, b, c, d = spec.abcd
    ustar = np.sqrt(d / (c - d))
    vstar = c * (a - ustar) / (b * ustar * (c - d))
    noise_code = 0 if spec.noise_variant == "B0" else 1

    def drift(s):
        u, v = s[..., 0], s[..., 1]
        w = (u * u) / (1.0 + u * u)
        return np.stack([u * (a - u) - b * (w * v), c * (w * v) - d * v], axis=-1)

    if noise_code == 0:
        def diffusion(s):
            u = s[..., 0]
            return np.stack([np.zeros_like(u), np.ones_like(u)], axis=-1)[..., None]
    else:
        def diffusion(s):
            u, v = s[..., 0], s[..., 1]
            return np.stack([np.zeros_like(u), v - vstar], axis=-1)[..., None]

    def jacobian(s):
        u, v = s[..., 0], s[..., 1]
        den = (1.0 + u * u)
        w = (u * u) / den
        dw = 2.0 * u / (den * den)
        j = np.empty(s.shape[:-1] + (2, 2))
        j[..., 0, 0] = a - 2 * u - b * v * dw
        j[..., 0, 1] = -b * w
        j[..., 1, 0] = c * v * dw
        j[..., 1, 1] = c * w - d
        return j

    def boundary_sampler(n):
        # both coordinate axes bound the quadrant; sample a box-sized stretch
        k = n // 2
        us = np.linspace(1e-3, 8.0, k)
        vs = np.linspace(1e-3, 25.0, n - k)
        return np.concatenate([
            np.stack([us, np.zeros(k)], axis=-1),
            np.stack([np.zeros(n - k), vs], axis=-1)])

    return SdeModel(
        drift=drift, diffusion=diffusion, noise_dim=1, sigma=sigma,
        basin=_quadrant_basin(), dim=2, name=sid, jacobian=jacobian,
        singularity=np.array([ustar, vstar]),
        boundary_sampler=boundary_sampler,
        kernel_params=(a, b, c, d, vstar, noise_code))


def sigma_star(spec: ModelSpec) -> float:
    """Noise threshold Tr V'(x0) / (2 d) at the interior equilibrium.

    The equilibrium may be the basin's puncture (hopf_linear); what the
    threshold needs is a linearization there, not membership."""
    model = build_model(spec)
    if model.singularity is None:
        raise Unsupported(f"{spec.id} has no distinguished equilibrium")
    with np.errstate(all="ignore"):
        v = model.drift_one(model.singularity)
    if not np.all(np.isfinite(v)):
        raise Unsupported(
            f"{spec.id} drift is singular at the equilibrium; "
            "the linearization does not exist")
    if model.jacobian is not None:
        j = model.jacobian(model.singularity[None])[0]
    else:
        j = _fd_jacobian(model, model.singularity)
    return float(np.trace(j)) / (2.0 * model.dim)


def _fd_jacobian(model, x, h=1e-6):
    d = len(x)
    j = np.empty((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = h
        j[:, k] = (model.drift_one(x + e) - model.drift_one(x - e)) / (2 * h)
    return j


def analytic_phase_map(spec: ModelSpec, cycle):
    """Closed-form phase map for models that have one.

    Hopf variants share the ray map (true isochrons: angular speed is
    radius-independent).  three_cycles gets the angle scaled by b^2 (constant
    angular speed on the cycle, but not an isochron off it).  predator_prey
    gets the angle about (u*, v*) calibrated through the cycle's angle-vs-time
    table.  The map is anchored so that eval(cycle start) = 0.
    """
    from .geometry import angle_phase_map, calibrated_angle_phase_map

    sid = spec.id
    if sid in ("hopf_bounded", "hopf_linear", "hopf_asym"):
        anchor = cycle.samples[0] if cycle is not None else np.array([1.0, 0.0])
        return angle_phase_map(
            center=np.zeros(2), period=2 * np.pi,
            anchor=anchor, is_isochron=True)
    if sid == "three_cycles":
        a, b, c = spec.abc
        anchor = cycle.samples[0] if cycle is not None else np.array([b, 0.0])
        return angle_phase_map(
            center=np.zeros(2), period=2 * np.pi * b * b,
            anchor=anchor, is_isochron=False)
    if sid == "predator_prey":
        if cycle is None:
            raise Unsupported("predator_prey phase map needs the found cycle")
        model = build_model(spec)
        return calibrated_angle_phase_map(cycle, center=model.singularity)
    raise Unsupported(f"no analytic phase map for {sid}")


def reference_drift_diffusion(spec: ModelSpec, x):
    """Independent re-derivation of drift/diffusion straight from the display
    equations, in scalar arithmetic; used only to cross-check build_model."""
    x = np.asarray(x, float)
    sid = spec.id
    if sid in ("hopf_bounded", "hopf_linear", "hopf_asym"):
        u, v = x
        r2 = u ** 2 + v ** 2
        drift = np.array([u - v - u * r2, u + v - v * r2])
        if sid == "hopf_bounded":
            col = np.array([u * (2 - r2), v * (2 - r2)])
        elif sid == "hopf_linear":
            col = np.array([u, v])
        else:
            col = np.array([2 - r2, 2 - r2])
        return drift, col[:, None]
    if sid == "three_cycles":
        a, b, c = spec.abc
        u, v = x
        r = np.sqrt(u ** 2 + v ** 2)
        radial = r * (r - a) * (r - b) * (r - c)
        angular = 1.0 / r ** 2
        # d(x,y) from dr along (u,v)/r and dtheta along (-v,u)
        drift = np.array([radial * u / r - v * angular,
                          radial * v / r + u * angular])
        col = np.array([u, v])  # sigma r dW along the radial direction
        return drift, col[:, None]
    a, b, c, d = spec.abcd
    u, v = x
    holling = u ** 2 / (1 + u ** 2)
    drift = np.array([u * (a - u) - b * holling * v, c * holling * v - d * v])
    if spec.noise_variant == "B0":
        col = np.array([0.0, 1.0])
    else:
        ustar = np.sqrt(d / (c - d))
        vstar = c * (a - ustar) / (b * ustar * (c - d))
        col = np.array([0.0, v - vstar])
    return drift, col[:, None]
