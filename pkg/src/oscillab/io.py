"""Flat-file artifact writers.

CSV: comma-separated, one header row, LF newlines, floats as their shortest
round-trip representation, no locale formatting.  JSON: two-space indent,
sorted keys.  Outputs are byte-identical across runs of the same inputs;
anything time-dependent (timestamps, host info) is confined to the manifest.
"""
from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return fmt_float(v)


def write_csv(path, header, rows):
    """rows: iterable of tuples matching the header."""
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Columns as arrays keyed by header name (floats; ints stay exact)."""
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, cell in zip(header, line.split(",")):
            cols[h].append(cell)
    out = {}
    for h, cells in cols.items():
        try:
            arr = np.array([int(c) for c in cells], dtype=np.int64)
        except ValueError:
            arr = np.array([float(c) for c in cells], dtype=float)
        out[h] = arr
    return out


def jsonable(obj):
    """Recursively convert dataclasses/numpy/tuples into JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True)
                    + "\n")
    return path


def write_trajectory(path, record):
    d = record.states.shape[1]
    header = ["t"] + [f"x{k + 1}" for k in range(d)]
    rows = ((record.times[i], *record.states[i]) for i in
            range(len(record.times)))
    return write_csv(path, header, rows)


def write_phase(path, lp):
    """Valid samples of a lifted phase: t, phi, winding."""
    n = lp.valid_until + 1
    rows = ((lp.times[i], lp.phi[i], int(lp.winding[i])) for i in range(n))
    return write_csv(path, ["t", "phi", "winding"], rows)


def write_cycle(path, cycle):
    d = cycle.samples.shape[1]
    header = ["s"] + [f"x{k + 1}" for k in range(d)]
    rows = ((cycle.times[i], *cycle.samples[i]) for i in
            range(cycle.n_samples))
    return write_csv(path, header, rows)


def write_measure(out_dir, hist, stem="measure"):
    """measure.csv (bin_x, bin_y, weight over the full grid, row-major) plus
    a JSON sidecar with the grid spec, estimator, and survivor stats."""
    out_dir = Path(out_dir)
    cx, cy = hist.centers_x, hist.centers_y
    rows = ((cx[i], cy[j], hist.weights[i, j])
            for i in range(hist.nx) for j in range(hist.ny))
    csv_path = write_csv(out_dir / f"{stem}.csv",
                         ["bin_x", "bin_y", "weight"], rows)
    curve = hist.survivor_curve
    meta = {
        "edges_x": list(hist.edges_x), "edges_y": list(hist.edges_y),
        "nx": hist.nx, "ny": hist.ny, "kind": hist.kind,
        "estimator": hist.estimator, "total_samples": hist.total_samples,
        "burn_in": hist.burn_in, "sigma": hist.sigma,
        "model": hist.model_name, "clipped_mass": hist.clipped_mass,
        "n_paths": hist.n_paths, "t_end": hist.t_end,
        "survivor_fraction": hist.survivor_fraction,
        "survivor_curve": (None if curve is None else
                           {"t": list(curve[0]), "alive": list(curve[1])}),
        "respawns": hist.respawns,
    }
    meta_path = write_json(out_dir / f"{stem}.meta.json", meta)
    return csv_path, meta_path


def write_sweep(out_dir, sweep):
    """sweep.csv (sigma, c_sigma, std_error, n_survivors) + fit.json."""
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / "sweep.csv",
                         ["sigma", "c_sigma", "std_error", "n_survivors"],
                         sweep.rows())
    fit = sweep.fit
    payload = {
        "m": None if fit is None else fit.m,
        "p_free": None if fit is None or fit.p_free is None else fit.p_free,
        "residuals": [] if fit is None else list(fit.residuals),
        "c0": None if fit is None else fit.c0,
        "units": None if fit is None else fit.units,
        "n_paths": sweep.n_paths,
        "dropped_sigmas": list(sweep.dropped),
    }
    fit_path = write_json(out_dir / "fit.json", payload)
    return csv_path, fit_path


def write_frequency_table(path, rows):
    """rows: (sigma, estimate, n_survivors); sweep.csv schema so the same
    readers apply to single-point frequency runs."""
    table = ((sigma, est.value,
              0.0 if est.std_error is None else est.std_error, n_survivors)
             for sigma, est, n_survivors in rows)
    return write_csv(path, ["sigma", "c_sigma", "std_error", "n_survivors"],
                     table)


def write_survivor_curve(path, curve):
    times, alive = curve
    rows = ((times[i], alive[i]) for i in range(len(times)))
    return write_csv(path, ["t", "alive_fraction"], rows)


def write_fp_density(path, sol):
    cx, cy = sol.centers_x, sol.centers_y
    nx, ny = len(cx), len(cy)
    rows = ((cx[i], cy[j], sol.density[i, j])
            for i in range(nx) for j in range(ny))
    return write_csv(path, ["x", "y", "rho"], rows)
