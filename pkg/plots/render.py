"""Draw figures from oscillab artifact directories.

Every figure is built from the CSV/JSON files alone: nothing is
resimulated and no statistic is recomputed here. If a number shown on a
plot disagrees with the artifact directory, the artifacts win by
construction.

Jobs:
  sweep_fit            sweep.csv + fit.json   frequency shift vs sigma
  measure_heatmap      measure.csv + meta     invariant-measure heatmap
  trajectory_portrait  trajectory.csv         phase-plane sample path
  survivor_curve       survivor_curve.csv     surviving fraction vs time
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

JOBS = ("sweep_fit", "measure_heatmap", "trajectory_portrait", "survivor_curve")


class ArtifactError(Exception):
    """The input directory does not hold what the job needs."""


def _read_table(path):
    """CSV file -> dict of float columns.

    The producing CLI writes purely numeric tables, so anything that does
    not parse as a float is a broken artifact, not a dialect to support.
    """
    if not path.is_file():
        raise ArtifactError(f"{path} not found")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArtifactError(f"{path} is empty") from None
        rows = [row for row in reader if row]
    if not rows:
        raise ArtifactError(f"{path} has no data rows")
    try:
        data = np.array(rows, dtype=float)
    except ValueError:
        raise ArtifactError(f"{path} has non-numeric cells") from None
    if data.shape[1] != len(header):
        raise ArtifactError(f"{path} rows do not match its header")
    return {name: data[:, i] for i, name in enumerate(header)}


def _require(cols, needed, path):
    for name in needed:
        if name not in cols:
            raise ArtifactError(f"{path} is missing column '{name}'")


def _read_json(path):
    if not path.is_file():
        raise ArtifactError(f"{path} not found")
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ArtifactError(f"{path} is not valid JSON: {exc}") from None


def _model_id(indir):
    # manifest.json rides along with every run; it only feeds titles, so
    # its absence is not an error.
    try:
        manifest = _read_json(indir / "manifest.json")
        return manifest["config"]["model"]["id"]
    except (ArtifactError, KeyError, TypeError):
        return None


def _save(fig, out):
    out = Path(out)
    if out.suffix == "":
        out = out.with_suffix(".svg")  # vector output unless told otherwise
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out


def render_sweep_fit(indir, out):
    """Scatter of c_sigma - c0 against sigma with the stored quadratic fit."""
    sweep_path = indir / "sweep.csv"
    cols = _read_table(sweep_path)
    _require(cols, ("sigma", "c_sigma", "std_error", "n_survivors"), sweep_path)
    fit = _read_json(indir / "fit.json")

    sigma = cols["sigma"]
    c = cols["c_sigma"]
    c0 = fit.get("c0")
    if c0 is None:
        # no stored baseline; a sigma=0 row is the same number by definition
        at_zero = np.flatnonzero(sigma == 0.0)
        c0 = float(c[at_zero[0]]) if at_zero.size else None

    fig, ax = plt.subplots(figsize=(5.2, 3.7))
    shift = c - c0 if c0 is not None else c
    ax.errorbar(sigma, shift, yerr=cols["std_error"], fmt="o", ms=4.5,
                capsize=3, lw=1, color="tab:blue", label="measured")

    m = fit.get("m")
    if m is not None and c0 is not None and np.unique(sigma).size >= 2:
        grid = np.linspace(0.0, float(sigma.max()), 200)
        # m is stored in radians/time per sigma^2 while the c columns are
        # rotations/time, hence the 2 pi
        ax.plot(grid, m * grid**2 / (2.0 * math.pi), "-", lw=1.3,
                color="tab:orange", label=f"fit: m = {m:.6g}")
    elif np.unique(sigma).size < 2:
        print("warning: single sigma value, fit curve suppressed",
              file=sys.stderr)
    else:
        print("warning: fit.json holds no slope, scatter only",
              file=sys.stderr)

    ax.set_xlabel("sigma")
    if c0 is not None:
        ax.set_ylabel("c_sigma - c0  (rotations/time)")
    else:
        ax.set_ylabel("c_sigma  (rotations/time)")
    model = _model_id(indir)
    ax.set_title("frequency shift" + (f"  ({model})" if model else ""))
    ax.grid(alpha=0.3)
    ax.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, out)


def _overlay_basin(ax, model):
    """Basin-of-attraction boundary for the bundled models.

    Pure geometry keyed on the model id; nothing here comes from data.
    Unknown ids simply get no overlay.
    """
    if model in ("hopf_bounded", "hopf_linear", "hopf_asym"):
        ax.plot([0.0], [0.0], "+", color="w", ms=9, mew=1.6)  # basin puncture
    elif model == "three_cycles":
        t = np.linspace(0.0, 2.0 * math.pi, 256)
        for r in (1.0, 3.0):
            ax.plot(r * np.cos(t), r * np.sin(t), "--", color="w", lw=1.0)
    elif model == "predator_prey":
        ax.axhline(0.0, color="w", ls="--", lw=1.0)
        ax.axvline(0.0, color="w", ls="--", lw=1.0)


def render_measure_heatmap(indir, out):
    """Heatmap of the binned measure in data coordinates."""
    meta_path = indir / "measure.meta.json"
    meta = _read_json(meta_path)
    nx, ny = meta.get("nx"), meta.get("ny")
    edges_x, edges_y = meta.get("edges_x"), meta.get("edges_y")
    if (not isinstance(nx, int) or not isinstance(ny, int)
            or nx < 2 or ny < 2
            or not isinstance(edges_x, list) or len(edges_x) != nx + 1
            or not isinstance(edges_y, list) or len(edges_y) != ny + 1):
        raise ArtifactError(
            f"{meta_path} does not describe a two-dimensional grid")

    csv_path = indir / "measure.csv"
    cols = _read_table(csv_path)
    _require(cols, ("bin_x", "bin_y", "weight"), csv_path)
    weight = cols["weight"]
    if weight.size != nx * ny:
        raise ArtifactError(
            f"{csv_path} has {weight.size} rows, the grid wants {nx * ny}")
    density = weight.reshape(nx, ny)  # rows run x-major, y fastest

    fig, ax = plt.subplots(figsize=(5.2, 4.3))
    mesh = ax.pcolormesh(edges_x, edges_y, density.T, cmap="magma",
                         shading="flat")
    fig.colorbar(mesh, ax=ax, label="bin mass")
    _overlay_basin(ax, meta.get("model"))
    ax.set_xlim(edges_x[0], edges_x[-1])
    ax.set_ylim(edges_y[0], edges_y[-1])
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")

    bits = [str(meta.get("model", "measure"))]
    if "sigma" in meta:
        bits.append(f"sigma = {meta['sigma']:g}")
    if meta.get("kind") == "quasi_ergodic":
        bits.append("survivor conditioned")
    ax.set_title(",  ".join(bits))
    fig.tight_layout()
    return _save(fig, out)


def render_trajectory_portrait(indir, out):
    path = indir / "trajectory.csv"
    cols = _read_table(path)
    _require(cols, ("t", "x1", "x2"), path)
    x, y = cols["x1"], cols["x2"]

    fig, ax = plt.subplots(figsize=(4.7, 4.3))
    ax.plot(x, y, lw=0.8, color="tab:blue")
    ax.plot(x[:1], y[:1], "o", color="tab:green", label="start")
    ax.plot(x[-1:], y[-1:], "s", color="tab:red", label="end")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    model = _model_id(indir)
    ax.set_title("sample path" + (f"  ({model})" if model else ""))
    ax.grid(alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    return _save(fig, out)


def render_survivor_curve(indir, out):
    path = indir / "survivor_curve.csv"
    cols = _read_table(path)
    _require(cols, ("t", "alive_fraction"), path)

    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.step(cols["t"], cols["alive_fraction"], where="post",
            color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel("surviving fraction")
    ax.set_ylim(-0.03, 1.05)
    model = _model_id(indir)
    ax.set_title("basin survival" + (f"  ({model})" if model else ""))
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, out)


_RENDERERS = {
    "sweep_fit": render_sweep_fit,
    "measure_heatmap": render_measure_heatmap,
    "trajectory_portrait": render_trajectory_portrait,
    "survivor_curve": render_survivor_curve,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="render.py",
        description="Draw one figure from an oscillab artifact directory.")
    parser.add_argument("--job", required=True, choices=JOBS)
    parser.add_argument("--in", dest="indir", required=True, type=Path,
                        help="artifact directory written by the oscillab CLI")
    parser.add_argument("--out", required=True, type=Path,
                        help="image path; a bare name gets an .svg suffix")
    args = parser.parse_args(argv)

    plt.rcParams["svg.fonttype"] = "none"  # labels stay text, not glyph paths

    try:
        written = _RENDERERS[args.job](args.indir, args.out)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {written}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
