import sys
from pathlib import Path

import pytest

pytest.importorskip("matplotlib")

PLOTS_DIR = Path(__file__).resolve().parents[1]
DESK = PLOTS_DIR.parent / "artifacts" / "desk"


@pytest.fixture(scope="session")
def render(tmp_path_factory):
    """Invoke render.py as a subprocess against an artifact directory."""
    import subprocess

    script = PLOTS_DIR / "render.py"

    def run(job, indir, out):
        return subprocess.run(
            [sys.executable, str(script), "--job", job,
             "--in", str(indir), "--out", str(out)],
            capture_output=True, text=True)

    return run


@pytest.fixture(scope="session")
def desk():
    if not DESK.is_dir():
        pytest.skip("desk artifacts not present")
    return DESK
