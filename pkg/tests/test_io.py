"""Artifact writers: schemas, round trips, byte stability."""
import dataclasses
import json
import math

import numpy as np

from oscillab import IntegratorConfig, lift_phase, simulate_path
from oscillab.io import (fmt_float, jsonable, read_csv, write_csv,
                         write_fp_density, write_frequency_table, write_json,
                         write_measure, write_phase, write_survivor_curve,
                         write_sweep, write_trajectory)
from oscillab.measures import SweepFit, SweepResult, estimate_measure


def test_float_formatting_round_trips():
    values = [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, -0.0,
              math.pi, 5e-324, 1.7976931348623157e308]
    for v in values:
        assert float(fmt_float(v)) == v
    assert fmt_float(float("nan")) == "nan"
    assert fmt_float(float("inf")) == "inf"
    assert fmt_float(float("-inf")) == "-inf"


def test_csv_layout_and_bool_cells(tmp_path):
    path = tmp_path / "table.csv"
    rows = [(0, 0.1, True), (1, -2.75e-5, False)]
    write_csv(path, ["k", "v", "ok"], rows)
    text = path.read_bytes().decode()
    assert "\r" not in text and text.endswith("\n")
    lines = text.splitlines()
    assert lines[0] == "k,v,ok"
    assert lines[1].endswith(",true") and lines[2].endswith(",false")


def test_csv_numeric_round_trip(tmp_path):
    path = tmp_path / "nums.csv"
    write_csv(path, ["k", "v"],
              [(0, 0.1), (1, -2.75e-5), (2, float("nan"))])
    back = read_csv(path)
    assert back["k"].dtype == np.int64
    np.testing.assert_array_equal(back["k"], [0, 1, 2])
    assert back["v"][1] == -2.75e-5
    assert math.isnan(back["v"][2])


def test_rewrite_is_byte_identical(tmp_path):
    rows = [(s, s * math.pi) for s in range(5)]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    write_csv(a, ["i", "x"], rows)
    write_csv(b, ["i", "x"], rows)
    assert a.read_bytes() == b.read_bytes()


def test_jsonable_handles_nested_dataclasses():
    @dataclasses.dataclass
    class Inner:
        arr: np.ndarray
        flag: np.bool_

    @dataclasses.dataclass
    class Outer:
        inner: Inner
        count: np.int64
        pair: tuple

    obj = Outer(Inner(np.array([1.5, 2.5]), np.bool_(True)),
                np.int64(7), (1, "two"))
    out = jsonable(obj)
    assert out == {"inner": {"arr": [1.5, 2.5], "flag": True},
                   "count": 7, "pair": [1, "two"]}
    json.dumps(out)


def test_json_writer_is_stable(tmp_path):
    p = tmp_path / "x.json"
    write_json(p, {"b": 1, "a": np.float64(2.0)})
    assert p.read_text() == '{\n  "a": 2.0,\n  "b": 1\n}\n'


def test_trajectory_and_phase_tables(tmp_path, hopf, hopf_pm):
    rec = simulate_path(hopf, [1.0, 0.0],
                        IntegratorConfig(dt=0.01, t_end=0.5, seed=2,
                                         record_stride=10))
    tpath = write_trajectory(tmp_path / "traj.csv", rec)
    cols = read_csv(tpath)
    assert set(cols) == {"t", "x1", "x2"}
    np.testing.assert_array_equal(cols["t"], rec.times)
    np.testing.assert_array_equal(cols["x2"], rec.states[:, 1])

    lp = lift_phase(rec, hopf_pm)
    ppath = write_phase(tmp_path / "phase.csv", lp)
    pcols = read_csv(ppath)
    assert set(pcols) == {"t", "phi", "winding"}
    assert len(pcols["t"]) == lp.valid_until + 1
    np.testing.assert_array_equal(pcols["phi"], lp.phi[:lp.valid_until + 1])


def test_measure_artifacts(tmp_path, hopf):
    hist = estimate_measure(
        hopf, (-1.6, 1.6, -1.6, 1.6),
        IntegratorConfig(dt=0.01, t_end=5.0, seed=3),
        n_paths=2, nx=16, ny=16, x0s=[[1.0, 0.0], [0.0, 1.0]])
    csv_path, meta_path = write_measure(tmp_path, hist)
    cols = read_csv(csv_path)
    assert set(cols) == {"bin_x", "bin_y", "weight"}
    assert len(cols["weight"]) == hist.nx * hist.ny
    np.testing.assert_allclose(
        cols["weight"].reshape(hist.nx, hist.ny), hist.weights, atol=0)
    meta = json.loads(meta_path.read_text())
    assert meta["nx"] == 16 and meta["ny"] == 16
    assert meta["kind"] == "ergodic"
    assert meta["survivor_fraction"] == 1.0
    assert meta["model"] == hist.model_name
    assert len(meta["edges_x"]) == 17


def test_sweep_artifacts(tmp_path):
    fit = SweepFit(m=1.5e-3, p_free=2.1, residuals=np.array([0.0, 1e-5]),
                   c0=0.159)
    sweep = SweepResult(sigmas=np.array([0.0, 0.1, 0.2]),
                        c_sigma=np.array([0.159, 0.1591, 0.1594]),
                        std_error=np.array([0.0, 1e-5, 2e-5]),
                        n_survivors=np.array([8, 8, 7]),
                        n_paths=8, fit=fit, dropped=(0.4,))
    csv_path, fit_path = write_sweep(tmp_path, sweep)
    cols = read_csv(csv_path)
    assert list(cols) == ["sigma", "c_sigma", "std_error", "n_survivors"]
    assert cols["n_survivors"].tolist() == [8, 8, 7]
    payload = json.loads(fit_path.read_text())
    assert payload["m"] == 1.5e-3
    assert payload["p_free"] == 2.1
    assert payload["dropped_sigmas"] == [0.4]
    assert payload["n_paths"] == 8

    bare = dataclasses.replace(sweep, fit=None)
    _, bare_path = write_sweep(tmp_path, bare)
    bare_payload = json.loads(bare_path.read_text())
    assert bare_payload["m"] is None and bare_payload["residuals"] == []


def test_simple_tables(tmp_path):
    curve = (np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.5, 0.0]))
    cpath = write_survivor_curve(tmp_path / "curve.csv", curve)
    cols = read_csv(cpath)
    np.testing.assert_array_equal(cols["alive_fraction"], [1.0, 0.5, 0.0])

    class Est:
        value = 0.25
        std_error = None

    fpath = write_frequency_table(tmp_path / "freq.csv", [(0.0, Est(), 4)])
    fcols = read_csv(fpath)
    assert list(fcols) == ["sigma", "c_sigma", "std_error", "n_survivors"]
    assert fcols["std_error"][0] == 0.0


def test_fp_density_table(tmp_path, hopf):
    from oscillab.fokker_planck import solve_stationary_fp_2d
    sol = solve_stationary_fp_2d(hopf, (-1.6, 1.6, -1.6, 1.6),
                                 grid=(16, 16), sigma=0.4)
    path = write_fp_density(tmp_path / "rho.csv", sol)
    cols = read_csv(path)
    assert len(cols["rho"]) == 256
    np.testing.assert_allclose(cols["rho"].reshape(16, 16), sol.density,
                               atol=0)
