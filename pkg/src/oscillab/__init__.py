"""Simulation and frequency estimation for stochastically perturbed
limit-cycle oscillators.

Layers, bottom to top: `sde` (Euler-Maruyama batches on counter-based noise
streams), `models` (the built-in oscillator zoo), `geometry` (limit cycles
and phase maps), `phase` (lifted phases and the drift/noise split),
`measures` (occupation histograms, frequency estimators, the small-noise
decomposition, sigma sweeps), `conditions` (existence checks),
`fokker_planck` (an independent stationary-density oracle), `cli` (batch
runs to flat-file artifacts).
"""

from .conditions import ConditionReport, check_sufficient_conditions
from .errors import (BranchAmbiguity, CoarseStepWarning, ConfigError,
                     GridTooCoarse, InvalidStart, NoCycle, NoSurvivors,
                     NotConverged, NumericalBlowup, OracleFailed,
                     OscillabError, PhaseUndefined, SectionError,
                     SingularityDominated, SpecError, StencilOutOfBasin,
                     Unsupported)
from .fokker_planck import (BOUNDARIES, FpSolution, histogram_from_density,
                            solve_stationary_fp_2d, total_variation)
from .geometry import (LimitCycle, MonodromyReport, PhaseMap, angle_phase_map,
                       asymptotic_phase, build_phase_map,
                       calibrated_angle_phase_map, check_isochron_invariance,
                       cycle_closure_error, find_limit_cycle, flow,
                       numeric_phase_map, phase_derivatives,
                       phase_speed_deviation)
from .measures import (ESTIMATORS, DecompositionReport, FrequencyEstimate,
                       MeasureHistogram, SweepFit, SweepResult,
                       cycle_line_prediction, decompose_frequency,
                       estimate_measure, frequency_from_formula,
                       frequency_from_paths, gps_prediction, starts_on_cycle,
                       sweep_sigma_fit, window_around)
from .models import (MODEL_IDS, ModelSpec, PolarForm, analytic_phase_map,
                     build_model, reference_drift_diffusion, sigma_star)
from .phase import (ItoSplit, LiftedPhase, direct_noise_integral,
                    ito_decomposition, lift_matrix, lift_phase,
                    phase_rate_fields,
                    time_average_frequency, variance_decay_slope,
                    winding_number)
from .rng import NoiseBlocks, trajectory_stream
from .sde import (BasinSpec, IntegratorConfig, SdeModel, TrajectoryRecord,
                  euler_maruyama_step, integrate_batch, simulate_ensemble,
                  simulate_path, whole_space_basin)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARIES", "BasinSpec", "BranchAmbiguity", "CoarseStepWarning",
    "ConditionReport", "ConfigError", "DecompositionReport", "ESTIMATORS",
    "FpSolution", "FrequencyEstimate", "GridTooCoarse", "IntegratorConfig",
    "InvalidStart", "ItoSplit", "LiftedPhase", "LimitCycle", "MODEL_IDS",
    "MeasureHistogram", "ModelSpec", "MonodromyReport", "NoCycle",
    "NoSurvivors", "NoiseBlocks", "NotConverged", "NumericalBlowup",
    "OracleFailed", "OscillabError", "PhaseMap", "PhaseUndefined",
    "PolarForm", "SdeModel", "SectionError", "SingularityDominated",
    "SpecError", "StencilOutOfBasin", "SweepFit", "SweepResult",
    "TrajectoryRecord", "Unsupported", "analytic_phase_map",
    "angle_phase_map", "asymptotic_phase", "build_model", "build_phase_map",
    "calibrated_angle_phase_map", "check_isochron_invariance",
    "check_sufficient_conditions", "cycle_closure_error",
    "cycle_line_prediction", "decompose_frequency", "direct_noise_integral",
    "estimate_measure", "euler_maruyama_step", "find_limit_cycle", "flow",
    "frequency_from_formula", "frequency_from_paths", "gps_prediction",
    "histogram_from_density", "integrate_batch", "ito_decomposition",
    "lift_matrix", "lift_phase", "numeric_phase_map", "phase_derivatives",
    "phase_rate_fields", "phase_speed_deviation", "reference_drift_diffusion",
    "sigma_star", "simulate_ensemble", "simulate_path",
    "solve_stationary_fp_2d", "starts_on_cycle", "sweep_sigma_fit",
    "time_average_frequency", "total_variation", "trajectory_stream",
    "variance_decay_slope", "whole_space_basin", "window_around",
    "winding_number",
]
