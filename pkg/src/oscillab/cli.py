"""Batch front-end: TOML experiment configs in, CSV/JSON artifacts out.

One experiment per invocation:

    oscillab <command> --config <file> [--out <dir>] [--threads N] [--seed S]

Commands: simulate, find-cycle, phase-lift, estimate-measure, frequency,
sweep, decompose, check-conditions, fp-oracle.  The command must agree with
the config's `experiment` key when both are present.

Exit codes: 0 success, 2 bad config (unknown keys are rejected, not
ignored), 3 every path exited (survivor_curve.csv still written), 4
numerical blowup, 5 stationary-solve failure.

Every run writes manifest.json echoing the fully resolved configuration,
defaults included.  CSV bodies are byte-identical across reruns of the same
config; the manifest alone carries timestamps.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import io as artifacts
from .conditions import check_sufficient_conditions
from .errors import (ConfigError, NoSurvivors, NumericalBlowup, OracleFailed,
                     SpecError)
from .fokker_planck import solve_stationary_fp_2d
from .geometry import _default_start, build_phase_map, find_limit_cycle
from .measures import (ESTIMATORS, decompose_frequency, estimate_measure,
                       frequency_from_formula, frequency_from_paths,
                       starts_on_cycle, sweep_sigma_fit, window_around)
from .models import ModelSpec, build_model
from .phase import lift_phase
from .sde import IntegratorConfig, simulate_ensemble, simulate_path

EXPERIMENTS = ("simulate", "find-cycle", "phase-lift", "estimate-measure",
               "frequency", "sweep", "decompose", "check-conditions",
               "fp-oracle")

# every key a config may set, by section; anything else is a typo and is
# rejected rather than silently ignored
_ALLOWED = {
    "": {"experiment", "threads"},
    "model": {"id", "sigma", "noise_variant", "params"},
    "model.params": {"a", "b", "c", "d"},
    "integrator": {"dt", "t_end", "seed", "record_stride", "stop_on_exit",
                   "coords", "blowup_bound", "exit_refine_levels"},
    "simulate": {"x0"},
    "phase": {"kind"},
    "measure": {"estimator", "n_paths", "nx", "ny", "burn_in_fraction",
                "window", "pad", "starts"},
    "frequency": {"method", "conditioning"},
    "sweep": {"sigmas", "n_paths", "conditioning"},
    "conditions": {"x0"},
    "fp": {"grid", "boundary", "eps"},
    "output": {"dir"},
}


@dataclass(frozen=True)
class MeasureOptions:
    estimator: str = "discard_on_exit"
    n_paths: int = 100
    nx: int = 64
    ny: int = 64
    burn_in_fraction: float = 0.1
    window: tuple = ()  # empty: derive from the cycle's bounding box
    pad: float = 0.8
    starts: str = "cycle"  # cycle | relaxed


@dataclass(frozen=True)
class SweepOptions:
    sigmas: tuple = ()
    n_paths: int = 16
    conditioning: str = "none"


@dataclass(frozen=True)
class FrequencyOptions:
    method: str = "formula"  # formula | paths
    conditioning: str = "none"


@dataclass(frozen=True)
class FpOptions:
    grid: tuple = (64, 64)
    boundary: str = "reflecting_at_window"
    eps: float = 1e-4


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    model: ModelSpec
    integrator: IntegratorConfig
    measure: MeasureOptions = field(default_factory=MeasureOptions)
    sweep: SweepOptions = field(default_factory=SweepOptions)
    frequency: FrequencyOptions = field(default_factory=FrequencyOptions)
    fp: FpOptions = field(default_factory=FpOptions)
    phase_kind: str = "auto"
    x0: tuple = ()  # simulate/phase-lift start; empty: model default
    conditions_x0: tuple = ()  # empty: the model's declared equilibrium
    out_dir: str = "out"
    threads: int = 0  # 0: use available parallelism

    def resolved(self):
        """Plain-dict echo of every effective setting, defaults included."""
        return {
            "experiment": self.experiment,
            "model": {"id": self.model.id, "sigma": self.model.sigma,
                      "noise_variant": self.model.noise_variant,
                      "params": dict(self.model.params)},
            "integrator": dataclasses.asdict(self.integrator),
            "measure": dataclasses.asdict(self.measure),
            "sweep": dataclasses.asdict(self.sweep),
            "frequency": dataclasses.asdict(self.frequency),
            "fp": dataclasses.asdict(self.fp),
            "phase": {"kind": self.phase_kind},
            "simulate": {"x0": list(self.x0)},
            "conditions": {"x0": list(self.conditions_x0)},
            "output": {"dir": self.out_dir},
            "threads": self.threads,
            "seed": self.integrator.seed,
        }


def _reject_unknown(doc):
    for key, val in doc.items():
        section = key if isinstance(val, dict) else ""
        if isinstance(val, dict):
            if section not in _ALLOWED:
                raise ConfigError(f"unknown section [{key}]")
            for k2, v2 in val.items():
                sub = f"{section}.{k2}"
                if isinstance(v2, dict):
                    if sub not in _ALLOWED:
                        raise ConfigError(f"unknown section [{sub}]")
                    for k3 in v2:
                        if k3 not in _ALLOWED[sub]:
                            raise ConfigError(f"unknown key '{sub}.{k3}'")
                elif k2 not in _ALLOWED[section]:
                    raise ConfigError(f"unknown key '{section}.{k2}'")
        elif key not in _ALLOWED[""]:
            raise ConfigError(f"unknown key '{key}'")


def _tuple_of_floats(val, key, length=None):
    try:
        out = tuple(float(v) for v in val)
    except (TypeError, ValueError):
        raise ConfigError(f"'{key}' must be a list of numbers") from None
    if length is not None and len(out) != length:
        raise ConfigError(f"'{key}' must have {length} entries")
    return out


def parse_config(text, experiment=None) -> ExperimentConfig:
    """Resolve a TOML config into a fully defaulted ExperimentConfig.

    `experiment` (from the CLI command) fills a missing `experiment` key and
    must match a present one.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    _reject_unknown(doc)

    exp = doc.get("experiment", experiment)
    if exp is None:
        raise ConfigError("no experiment named (config key or CLI command)")
    if experiment is not None and exp != experiment:
        raise ConfigError(
            f"config says experiment={exp!r} but the command is "
            f"{experiment!r}")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}; one of {EXPERIMENTS}")

    msec = doc.get("model", {})
    if "id" not in msec:
        raise ConfigError("model.id is required")
    model = ModelSpec(id=msec["id"], sigma=float(msec.get("sigma", 0.0)),
                      params={k: float(v) for k, v in
                              msec.get("params", {}).items()},
                      noise_variant=msec.get("noise_variant", "B0"))

    isec = doc.get("integrator", {})
    integ = IntegratorConfig(
        dt=float(isec.get("dt", 0.01)),
        t_end=float(isec.get("t_end", 100.0)),
        seed=int(isec.get("seed", 0)),
        record_stride=int(isec.get("record_stride", 1)),
        stop_on_exit=bool(isec.get("stop_on_exit", True)),
        coords=isec.get("coords", "auto"),
        blowup_bound=float(isec.get("blowup_bound", 1e6)),
        exit_refine_levels=int(isec.get("exit_refine_levels", 0)))

    mo = doc.get("measure", {})
    if "estimator" in mo and mo["estimator"] not in ESTIMATORS:
        raise ConfigError(
            f"measure.estimator must be one of {ESTIMATORS}")
    if "starts" in mo and mo["starts"] not in ("cycle", "relaxed"):
        raise ConfigError("measure.starts must be 'cycle' or 'relaxed'")
    measure = MeasureOptions(
        estimator=mo.get("estimator", "discard_on_exit"),
        n_paths=int(mo.get("n_paths", 100)),
        nx=int(mo.get("nx", 64)), ny=int(mo.get("ny", 64)),
        burn_in_fraction=float(mo.get("burn_in_fraction", 0.1)),
        window=(_tuple_of_floats(mo["window"], "measure.window", 4)
                if "window" in mo else ()),
        pad=float(mo.get("pad", 0.8)),
        starts=mo.get("starts", "cycle"))

    so = doc.get("sweep", {})
    sweep = SweepOptions(
        sigmas=_tuple_of_floats(so.get("sigmas", ()), "sweep.sigmas"),
        n_paths=int(so.get("n_paths", 16)),
        conditioning=so.get("conditioning", "none"))

    fo = doc.get("frequency", {})
    if "method" in fo and fo["method"] not in ("formula", "paths"):
        raise ConfigError("frequency.method must be 'formula' or 'paths'")
    freq = FrequencyOptions(method=fo.get("method", "formula"),
                            conditioning=fo.get("conditioning", "none"))

    fp = doc.get("fp", {})
    grid = fp.get("grid", (64, 64))
    try:
        grid = (int(grid[0]), int(grid[1]))
    except (TypeError, ValueError, IndexError):
        raise ConfigError("fp.grid must be [nx, ny]") from None
    fpo = FpOptions(grid=grid,
                    boundary=fp.get("boundary", "reflecting_at_window"),
                    eps=float(fp.get("eps", 1e-4)))

    return ExperimentConfig(
        experiment=exp, model=model, integrator=integ, measure=measure,
        sweep=sweep, frequency=freq, fp=fpo,
        phase_kind=doc.get("phase", {}).get("kind", "auto"),
        x0=(_tuple_of_floats(doc["simulate"]["x0"], "simulate.x0")
            if "x0" in doc.get("simulate", {}) else ()),
        conditions_x0=(_tuple_of_floats(doc["conditions"]["x0"],
                                        "conditions.x0")
                       if "x0" in doc.get("conditions", {}) else ()),
        out_dir=doc.get("output", {}).get("dir", "out"),
        threads=int(doc.get("threads", 0)))


# ---------------------------------------------------------------------------
# experiment dispatch

def _window_and_cycle(cfg, model):
    cycle = find_limit_cycle(model)
    if cfg.measure.window:
        window = cfg.measure.window
    else:
        window = window_around(cycle, pad=cfg.measure.pad)
    return window, cycle


def _measure_starts(cfg, cycle):
    if cfg.measure.starts == "cycle":
        return starts_on_cycle(cycle, cfg.measure.n_paths)
    return None  # estimate_measure relaxes a default start itself


def _estimate(cfg, model):
    window, cycle = _window_and_cycle(cfg, model)
    hist = estimate_measure(
        model, window, cfg.integrator, estimator=cfg.measure.estimator,
        n_paths=cfg.measure.n_paths, nx=cfg.measure.nx, ny=cfg.measure.ny,
        burn_in_fraction=cfg.measure.burn_in_fraction,
        x0s=_measure_starts(cfg, cycle))
    return hist, cycle


def _run_simulate(cfg, model, out):
    x0 = np.asarray(cfg.x0 if cfg.x0 else _default_start(model), float)
    rec = simulate_path(model, x0, cfg.integrator)
    artifacts.write_trajectory(out / "trajectory.csv", rec)
    return {"exited": rec.exited, "exit_time": rec.exit_time}


def _run_find_cycle(cfg, model, out):
    cycle = find_limit_cycle(model)
    artifacts.write_cycle(out / "cycle.csv", cycle)
    return {"period": cycle.period,
            "floquet_multiplier": cycle.floquet_multiplier}


def _run_phase_lift(cfg, model, out):
    cycle = find_limit_cycle(model)
    pm = build_phase_map(model, cycle, kind=cfg.phase_kind)
    x0 = np.asarray(cfg.x0 if cfg.x0 else cycle.samples[0], float)
    rec = simulate_path(model, x0, cfg.integrator)
    artifacts.write_trajectory(out / "trajectory.csv", rec)
    lp = lift_phase(rec, pm)
    artifacts.write_phase(out / "phase.csv", lp)
    return {"period": pm.period, "valid_until": lp.valid_until,
            "windings": int(lp.winding[lp.valid_until])}


def _run_estimate_measure(cfg, model, out):
    hist, _ = _estimate(cfg, model)
    artifacts.write_measure(out, hist)
    return {"survivor_fraction": hist.survivor_fraction,
            "clipped_mass": hist.clipped_mass}


def _run_frequency(cfg, model, out):
    window, cycle = _window_and_cycle(cfg, model)
    pm = build_phase_map(model, cycle, kind=cfg.phase_kind)
    if cfg.frequency.method == "formula":
        hist = estimate_measure(
            model, window, cfg.integrator, estimator=cfg.measure.estimator,
            n_paths=cfg.measure.n_paths, nx=cfg.measure.nx,
            ny=cfg.measure.ny,
            burn_in_fraction=cfg.measure.burn_in_fraction,
            x0s=_measure_starts(cfg, cycle))
        est = frequency_from_formula(hist, pm, model)
        artifacts.write_measure(out, hist)
        n_surv = int(round(hist.survivor_fraction * hist.n_paths))
    else:
        x0s = starts_on_cycle(cycle, cfg.measure.n_paths)
        recs = simulate_ensemble(model, x0s, cfg.integrator,
                                 workers=cfg.threads)
        lifts = [lift_phase(rec, pm) for rec in recs]
        est = frequency_from_paths(lifts, cfg.integrator.t_end,
                                   conditioning=cfg.frequency.conditioning)
        n_surv = int(round(est.survivor_fraction * len(x0s)))
    artifacts.write_frequency_table(
        out / "sweep.csv", [(model.sigma, est, n_surv)])
    return {"method": est.method, "value": est.value,
            "std_error": est.std_error}


def _run_sweep(cfg, model, out):
    if not cfg.sweep.sigmas:
        raise ConfigError("sweep.sigmas is required for a sweep")
    cycle = find_limit_cycle(model)
    pm = build_phase_map(model, cycle, kind=cfg.phase_kind)
    result = sweep_sigma_fit(model, pm, cycle, list(cfg.sweep.sigmas),
                             cfg.integrator, n_paths=cfg.sweep.n_paths,
                             conditioning=cfg.sweep.conditioning)
    artifacts.write_sweep(out, result)
    return {"m": result.fit.m, "p_free": result.fit.p_free,
            "c0": result.fit.c0, "dropped": list(result.dropped)}


def _run_decompose(cfg, model, out):
    hist, cycle = _estimate(cfg, model)
    pm = build_phase_map(model, cycle, kind=cfg.phase_kind)
    rep = decompose_frequency(hist, cycle, pm, model)
    payload = artifacts.jsonable(rep)
    payload["total"] = rep.total
    artifacts.write_json(out / "decomposition.json", payload)
    artifacts.write_measure(out, hist)
    return {"c0": rep.c0, "total": rep.total}


def _run_check_conditions(cfg, model, out):
    x0 = np.asarray(cfg.conditions_x0, float) if cfg.conditions_x0 else None
    rep = check_sufficient_conditions(model, x0)
    artifacts.write_json(out / "conditions.json", rep)
    return {"verdict": rep.verdict, "sigma_star": rep.sigma_star}


def _run_fp_oracle(cfg, model, out):
    if cfg.measure.window:
        window = cfg.measure.window
    else:
        window, _ = _window_and_cycle(cfg, model)
    sol = solve_stationary_fp_2d(model, window, grid=cfg.fp.grid,
                                 boundary=cfg.fp.boundary, eps=cfg.fp.eps)
    artifacts.write_fp_density(out / "fp_density.csv", sol)
    return {"residual": sol.residual, "decay_rate": sol.decay_rate}


_HANDLERS = {
    "simulate": _run_simulate,
    "find-cycle": _run_find_cycle,
    "phase-lift": _run_phase_lift,
    "estimate-measure": _run_estimate_measure,
    "frequency": _run_frequency,
    "sweep": _run_sweep,
    "decompose": _run_decompose,
    "check-conditions": _run_check_conditions,
    "fp-oracle": _run_fp_oracle,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Run one experiment, writing artifacts under cfg.out_dir."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = build_model(cfg.model)
    manifest = {
        "config": cfg.resolved(),
        "versions": _versions(),
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    try:
        manifest["result"] = _HANDLERS[cfg.experiment](cfg, model, out)
        code = 0
    except NoSurvivors as exc:
        if exc.survivor_curve is not None:
            artifacts.write_survivor_curve(out / "survivor_curve.csv",
                                           exc.survivor_curve)
        manifest["result"] = {"error": "no_survivors", "message": str(exc)}
        code = 3
    except NumericalBlowup as exc:
        if exc.record is not None:
            artifacts.write_trajectory(out / "trajectory.csv", exc.record)
        manifest["result"] = {"error": "numerical_blowup",
                              "message": str(exc), "t": exc.t}
        code = 4
    except OracleFailed as exc:
        manifest["result"] = {"error": "oracle_failed", "message": str(exc),
                              "residual": exc.residual}
        code = 5
    manifest["exit_code"] = code
    artifacts.write_json(out / "manifest.json", manifest)
    return code


def _versions():
    import scipy

    from . import __version__
    return {"python": sys.version.split()[0], "numpy": np.__version__,
            "scipy": scipy.__version__, "oscillab": __version__}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscillab",
        description="simulation and frequency estimation for stochastically "
                    "perturbed limit-cycle oscillators")
    parser.add_argument("command", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True,
                        help="TOML experiment configuration")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = parse_config(text, experiment=args.command)
        cfg = _apply_overrides(cfg, args)
        return run_experiment(cfg)
    except (ConfigError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _apply_overrides(cfg, args):
    """CLI flags beat the file; OSCILLAB_THREADS beats --threads."""
    threads = cfg.threads
    if args.threads is not None:
        threads = args.threads
    env = os.environ.get("OSCILLAB_THREADS")
    if env is not None:
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(
                f"OSCILLAB_THREADS must be an integer, got {env!r}") from None
    if threads < 0:
        raise ConfigError("thread count must be nonnegative")
    if threads == 0:
        threads = os.cpu_count() or 1
    seed = cfg.integrator.seed if args.seed is None else args.seed
    integ = dataclasses.replace(cfg.integrator, seed=seed)
    out_dir = cfg.out_dir if args.out is None else args.out
    return dataclasses.replace(cfg, integrator=integ, out_dir=out_dir,
                               threads=threads)


if __name__ == "__main__":
    sys.exit(main())
