"""Integrator determinism, recording grid, exits, blowups."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscillab import (IntegratorConfig, ModelSpec, build_model,
                      euler_maruyama_step, integrate_batch,
                      reference_drift_diffusion, simulate_ensemble,
                      simulate_path, whole_space_basin)
from oscillab.errors import CoarseStepWarning, InvalidStart, NumericalBlowup
from oscillab.sde import SdeModel


def _linear_model(rate=1.0, sigma=0.2):
    # dX = -rate X dt + sigma e1 dW; every EM moment is known in closed form
    return SdeModel(
        drift=lambda s: -rate * s,
        diffusion=lambda s: np.stack(
            [np.ones_like(s[..., 0]), np.zeros_like(s[..., 0])], axis=-1)[..., None],
        noise_dim=1, sigma=sigma, basin=whole_space_basin(), dim=2,
        name="linear_test")


def test_single_step_matches_reference():
    spec = ModelSpec("hopf_asym", sigma=0.3)
    model = build_model(spec)
    x = np.array([0.4, -0.3])
    dw = np.array([0.37])
    v, b = reference_drift_diffusion(spec, x)
    expect = x + 0.01 * v + 0.3 * (b @ dw)
    np.testing.assert_allclose(
        euler_maruyama_step(model, x, 0.01, dw), expect, atol=1e-15)


def test_step_raises_on_nonfinite():
    model = _linear_model()
    with np.errstate(invalid="ignore"):
        with pytest.raises(NumericalBlowup):
            euler_maruyama_step(model, np.array([np.inf, 0.0]), 0.01,
                                np.array([0.0]))


def test_record_grid_and_start_row():
    model = build_model(ModelSpec("hopf_bounded", sigma=0.3))
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, seed=3, record_stride=10)
    rec = simulate_path(model, [1.0, 0.0], cfg)
    np.testing.assert_allclose(rec.times, np.linspace(0.0, 1.0, 11), atol=1e-12)
    np.testing.assert_array_equal(rec.states[0], [1.0, 0.0])
    assert not rec.exited and rec.exit_time is None


def test_stride_does_not_change_the_dynamics():
    model = build_model(ModelSpec("hopf_bounded", sigma=0.4))
    dense = simulate_path(model, [1.0, 0.0],
                          IntegratorConfig(dt=0.01, t_end=2.0, seed=9))
    strided = simulate_path(model, [1.0, 0.0],
                            IntegratorConfig(dt=0.01, t_end=2.0, seed=9,
                                             record_stride=20))
    np.testing.assert_array_equal(dense.final_state, strided.final_state)
    np.testing.assert_array_equal(dense.states[::20], strided.states)


def test_ensemble_bit_identical_across_worker_counts():
    model = build_model(ModelSpec("three_cycles", sigma=0.3))
    x0s = np.array([[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0],
                    [1.5, 0.0], [0.0, 1.5], [-1.5, 0.0]])
    cfg = IntegratorConfig(dt=0.01, t_end=3.0, seed=11, record_stride=5)
    base = simulate_ensemble(model, x0s, cfg, workers=1)
    for workers in (2, 4, 8):
        alt = simulate_ensemble(model, x0s, cfg, workers=workers)
        for a, b in zip(base, alt):
            np.testing.assert_array_equal(a.states, b.states)
            assert a.exited == b.exited and a.exit_time == b.exit_time


def test_numba_and_numpy_paths_agree_exactly(monkeypatch):
    model = build_model(ModelSpec("hopf_bounded", sigma=0.35))
    cfg = IntegratorConfig(dt=0.01, t_end=5.0, seed=21)
    fast = simulate_path(model, [0.7, 0.2], cfg)
    monkeypatch.setenv("OSCILLAB_NO_NUMBA", "1")
    plain = simulate_path(model, [0.7, 0.2], cfg)
    np.testing.assert_array_equal(fast.states, plain.states)


def test_ensemble_mean_matches_em_closed_form():
    # EM on dX = -X dt has mean x0 (1 - dt)^n exactly, noise averages out
    model = _linear_model(rate=1.0, sigma=0.2)
    n, dt, t_end = 512, 0.01, 1.0
    cfg = IntegratorConfig(dt=dt, t_end=t_end, seed=17, record_stride=100)
    recs = simulate_ensemble(model, np.tile([1.0, 0.0], (n, 1)), cfg)
    finals = np.array([r.final_state for r in recs])
    exact = (1.0 - dt) ** int(round(t_end / dt))
    var = 0.2 ** 2 * (1 - np.exp(-2 * t_end)) / 2
    se = np.sqrt(var / n)
    assert abs(finals[:, 0].mean() - exact) < 3 * se
    # weak order one against the continuous-time mean
    assert abs(finals[:, 0].mean() - np.exp(-t_end)) < 3 * se + 5 * dt


def test_sigma_zero_is_deterministic_and_exact():
    model = _linear_model(rate=1.0, sigma=0.0)
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, seed=0)
    rec = simulate_path(model, [1.0, 1.0], cfg)
    np.testing.assert_allclose(rec.final_state,
                               [(0.99) ** 100, (0.99) ** 100], atol=1e-13)


def test_coarse_step_warning():
    model = build_model(ModelSpec("hopf_bounded", sigma=0.3))
    with pytest.warns(CoarseStepWarning):
        simulate_path(model, [1.0, 0.0], IntegratorConfig(dt=0.1, t_end=0.5, seed=0))


def test_blowup_raises_with_partial_record():
    model = build_model(ModelSpec("hopf_linear", sigma=5.0))
    cfg = IntegratorConfig(dt=0.1, t_end=50.0, seed=0, stop_on_exit=False)
    with pytest.raises(NumericalBlowup) as err:
        simulate_path(model, [1.0, 0.0], cfg)
    assert err.value.record is not None
    assert 0.0 < err.value.t <= 50.0
    assert "blowup" in str(err.value)


def test_ensemble_blowup_reported_per_path():
    model = build_model(ModelSpec("hopf_linear", sigma=5.0))
    cfg = IntegratorConfig(dt=0.1, t_end=50.0, seed=0, stop_on_exit=False)
    recs = simulate_ensemble(model, [[1.0, 0.0], [0.1, 0.0]], cfg)
    assert recs[0].error is not None and "blowup" in recs[0].error


def test_invalid_start():
    model = build_model(ModelSpec("three_cycles", sigma=0.1))
    cfg = IntegratorConfig(dt=0.01, t_end=1.0, stop_on_exit=False)
    with pytest.raises(InvalidStart):
        simulate_path(model, [0.5, 0.0], cfg)  # inside r = 1, outside the annulus
    graceful = simulate_path(
        model, [0.5, 0.0],
        IntegratorConfig(dt=0.01, t_end=1.0, stop_on_exit=True))
    assert graceful.exited and graceful.exit_time == 0.0


def test_exited_record_is_truncated_in_basin():
    model = build_model(ModelSpec("three_cycles", sigma=0.9))
    cfg = IntegratorConfig(dt=0.01, t_end=30.0, seed=4)
    recs = simulate_ensemble(model, np.tile([2.0, 0.0], (16, 1)), cfg)
    exiting = [r for r in recs if r.exited]
    assert exiting, "noise this strong should push some path out by t=30"
    for r in exiting:
        assert model.basin.contains(r.states).all()
        assert r.final_time <= r.exit_time <= cfg.t_end + 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_alive_mask_is_monotone(seed):
    model = build_model(ModelSpec("three_cycles", sigma=0.8))
    cfg = IntegratorConfig(dt=0.02, t_end=10.0, seed=seed, record_stride=10)
    res = integrate_batch(model, np.tile([2.0, 0.0], (8, 1)), cfg)
    prev = np.ones(res.n_paths, dtype=bool)
    for j in range(len(res.times)):
        alive = res.alive_at_row(j)
        assert not np.any(alive & ~prev), "a dead path came back to life"
        prev = alive


def test_exit_refinement_tightens_the_bracket():
    model = build_model(ModelSpec("three_cycles", sigma=0.9))
    coarse = IntegratorConfig(dt=0.02, t_end=10.0, seed=4)
    fine = IntegratorConfig(dt=0.02, t_end=10.0, seed=4, exit_refine_levels=6)
    a = simulate_path(model, [2.0, 0.0], coarse)
    b = simulate_path(model, [2.0, 0.0], fine)
    if a.exited:
        assert b.exited
        # refinement moves the estimate into the straddling step, never past it
        assert a.exit_time - coarse.dt <= b.exit_time <= a.exit_time
