"""Finite-volume stationary solver against closed-form densities."""
import numpy as np
import pytest

from oscillab import ModelSpec, build_model
from oscillab.errors import OracleFailed, SpecError, Unsupported
from oscillab.fokker_planck import (histogram_from_density,
                                    solve_stationary_fp_2d, total_variation)

WIN = (-1.6, 1.6, -1.6, 1.6)


class _Const:
    """Identity-diffusion toy with linear drift -rate * x."""

    dim = 2
    name = "const_diffusion"

    def __init__(self, rate=0.0, sigma=1.0):
        self.rate = rate
        self.sigma = sigma

    def drift(self, s):
        return -self.rate * np.asarray(s, float)

    def diffusion(self, s):
        s = np.asarray(s, float)
        return np.eye(2)[None].repeat(s.shape[0], axis=0)


def test_zero_drift_gives_the_uniform_density():
    sol = solve_stationary_fp_2d(_Const(rate=0.0), (0.0, 1.0, 0.0, 2.0),
                                 grid=(16, 24))
    np.testing.assert_allclose(sol.density, 0.5, atol=1e-6)
    assert sol.decay_rate == 0.0
    assert sol.boundary == "reflecting_at_window"


def test_ou_matches_the_gaussian_within_two_percent():
    # dX = -X dt + dW is stationary N(0, I/2); the window is wide enough
    # that the reflecting walls are invisible at this tolerance
    sol = solve_stationary_fp_2d(_Const(rate=1.0), (-4.0, 4.0, -4.0, 4.0),
                                 grid=(64, 64))
    X, Y = np.meshgrid(sol.centers_x, sol.centers_y, indexing="ij")
    ref = np.exp(-(X ** 2 + Y ** 2)) / np.pi
    mask = ref > 1e-3 * ref.max()
    rel = np.abs(sol.density - ref)[mask] / ref[mask]
    assert rel.max() < 0.02


def test_ou_sharpens_as_regularization_is_removed():
    sol = solve_stationary_fp_2d(_Const(rate=1.0), (-4.0, 4.0, -4.0, 4.0),
                                 grid=(64, 64), eps=0.0)
    X, Y = np.meshgrid(sol.centers_x, sol.centers_y, indexing="ij")
    ref = np.exp(-(X ** 2 + Y ** 2)) / np.pi
    mask = ref > 1e-3 * ref.max()
    rel = np.abs(sol.density - ref)[mask] / ref[mask]
    assert rel.max() < 1e-6


def test_residual_gate_and_normalization(hopf):
    model = hopf.with_sigma(0.4) if hasattr(hopf, "with_sigma") else hopf
    sol = solve_stationary_fp_2d(model, WIN, grid=(64, 64), sigma=0.4)
    assert sol.residual < 1e-10
    mass = sol.density.sum() * sol.cell_area
    assert abs(mass - 1.0) < 1e-12
    assert sol.density.min() >= 0.0


def test_grid_refinement_is_consistent(hopf):
    coarse = solve_stationary_fp_2d(hopf, WIN, grid=(64, 64), sigma=0.4)
    fine = solve_stationary_fp_2d(hopf, WIN, grid=(128, 128), sigma=0.4)
    tv = total_variation(histogram_from_density(coarse),
                         histogram_from_density(fine).coarsen(2))
    assert tv < 0.03


def test_absorbing_window_leaks_mass():
    sol = solve_stationary_fp_2d(_Const(rate=1.0), (-2.5, 2.5, -2.5, 2.5),
                                 grid=(48, 48), boundary="absorbing")
    assert sol.decay_rate > 0.0
    assert sol.density.min() >= 0.0
    mass = sol.density.sum() * sol.cell_area
    assert abs(mass - 1.0) < 1e-12


def test_zero_residual_tolerance_is_unreachable(hopf):
    with pytest.raises(OracleFailed) as exc:
        solve_stationary_fp_2d(hopf, WIN, grid=(32, 32), sigma=0.4,
                               residual_tol=0.0)
    assert exc.value.residual > 0.0


def test_histogram_bridge_fields(hopf):
    sol = solve_stationary_fp_2d(hopf, WIN, grid=(32, 32), sigma=0.4)
    hist = histogram_from_density(sol)
    assert abs(hist.weights.sum() - 1.0) < 1e-12
    assert hist.estimator == "fp_oracle"
    assert hist.kind == "ergodic"
    assert hist.total_samples == 0
    quasi = solve_stationary_fp_2d(_Const(rate=1.0), (-2.5, 2.5, -2.5, 2.5),
                                   grid=(32, 32), boundary="absorbing")
    assert histogram_from_density(quasi).kind == "quasi_ergodic"


def test_input_validation(hopf):
    with pytest.raises(SpecError):
        solve_stationary_fp_2d(hopf, WIN, boundary="periodic")
    with pytest.raises(SpecError):
        solve_stationary_fp_2d(hopf, WIN, grid=(4, 64))
    bad = _Const()
    bad.dim = 3
    with pytest.raises(Unsupported):
        solve_stationary_fp_2d(bad, WIN)


def test_singular_coefficients_are_rejected():
    # 1/r^2 rotation blows up at the origin; an odd grid puts a cell
    # center exactly there
    model = build_model(ModelSpec("three_cycles", sigma=0.2))
    with np.errstate(invalid="ignore", divide="ignore"):
        with pytest.raises(SpecError):
            solve_stationary_fp_2d(model, (-1.0, 1.0, -1.0, 1.0), grid=(9, 9))


def test_total_variation_contract(hopf):
    sol = solve_stationary_fp_2d(hopf, WIN, grid=(32, 32), sigma=0.4)
    h = histogram_from_density(sol)
    assert total_variation(h, h) == 0.0
    other = histogram_from_density(
        solve_stationary_fp_2d(hopf, WIN, grid=(16, 16), sigma=0.4))
    with pytest.raises(SpecError):
        total_variation(h, other)
    shifted = histogram_from_density(
        solve_stationary_fp_2d(hopf, (-1.7, 1.7, -1.7, 1.7),
                               grid=(32, 32), sigma=0.4))
    with pytest.raises(SpecError):
        total_variation(h, shifted)
