"""Shared fixtures: metric CSVs produced by the simulator CLI.

The simulator is exercised strictly through its command line and file
outputs — the file contract is the only coupling between the packages.
"""

import subprocess
import sys

import pytest

SIM = [sys.executable, "-m", "cpsotfs.cli"]

CFG = """
M = 16
N = 8
alpha_prime = 4
guard_set = 0-3,12-15
papr_trials = 60
psd_frames = 10
ber_target_errors = 50
ber_max_frames = 3
snr_db = 0,10
"""


@pytest.fixture(scope="session")
def sim_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    cfg = root / "run.cfg"
    cfg.write_text(CFG, encoding="utf-8")
    out = root / "out"
    for cmd in ("papr", "psd", "ber", "pulse-dump"):
        res = subprocess.run(
            SIM + ["--config", str(cfg), "--seed", "3", "--out", str(out), cmd],
            capture_output=True,
            text=True,
        )
        assert res.returncode == 0, f"{cmd} failed: {res.stderr}"
    return out
