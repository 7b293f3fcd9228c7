"""Regenerate the checked-in golden fixtures.

The feature fixture is computed with the extended-precision filter design and
a plain-Python DF2T loop from ``oracles.py``, not with the package code.
The run fixture is a recorded reference run of the CLI.
"""
import csv
import json
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracles import mp_butterworth2  # noqa: E402

FS = 200.0
N = 120


def raw_signal():
    rng = np.random.default_rng(20240601)
    t = np.arange(N) / FS
    tone = np.sin(2 * np.pi * np.array([3.0, 7.0, 11.0, 17.0]) * t[:, None])
    return np.round(tone * np.array([1.0, 0.5, 0.8, 0.3]) + 0.05 * rng.standard_normal((N, 4)), 6)


def df2t(b, a, x):
    s1 = s2 = 0.0
    out = []
    for v in x:
        y = b[0] * v + s1
        s1 = b[1] * v - a[1] * y + s2
        s2 = b[2] * v - a[2] * y
        out.append(y)
    return out


def write_features():
    x = raw_signal()
    with open(HERE / "raw_small.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"ch{i + 1}" for i in range(4)])
        w.writerows([[repr(float(v)) for v in row] for row in x])
    (HERE / "raw_small.json").write_text(json.dumps({"sample_rate_hz": FS, "motion_label": 2, "trial_id": 1}) + "\n")

    c = mp_butterworth2(1.0, FS)
    b = [float(c["b0"]), float(c["b1"]), float(c["b2"])]
    a = [1.0, float(c["a1"]), float(c["a2"])]
    cols = [df2t(b, a, np.abs(x[:, j])) for j in range(4)]
    drop = int(0.10 * N)
    with open(HERE / "features_small.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f1", "f2", "f3", "f4", "label"])
        for i in range(drop, N):
            w.writerow([repr(float(cols[j][i])) for j in range(4)] + ["2"])


def write_run():
    from ssbsl.cli import main

    out = HERE / "golden_run"
    assert main(["run", "--scenario", "preset:paper", "--seed", "0", "--out", str(out)]) == 0
    (out / "config.json").unlink()
    summary = json.loads((out / "summary.json").read_text())
    (HERE / "golden_summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    (out / "summary.json").unlink()


if __name__ == "__main__":
    write_features()
    write_run()
