"""CSV and JSON emission of simulation results."""
import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import BricError

PENDULUM_STATE_NAMES = ("theta1", "theta2", "omega1", "omega2")


def _fmt(v):
    return format(float(v), ".17g")


def column_names(traj, state_names=None):
    k, n = traj.meta["k"], traj.meta["n"]
    if state_names is None:
        state_names = [f"x{i + 1}_{j + 1}" for i in range(k) for j in range(n)]
    ch = range(1, n + 1)
    return (
        ["t", *state_names]
        + [f"e1_{j}" for j in ch]
        + [f"s{k}_{j}" for j in ch]
        + [f"zeta_{j}" for j in ch]
        + [f"chi_{j}" for j in ch]
        + [f"u_{j}" for j in ch]
        + ["d1hat"]
        + [f"d2hat_{j}" for j in ch]
        + [f"phi_{j}" for j in ch]
    )


def trajectory_rows(traj):
    for i in range(len(traj)):
        yield [
            traj.t[i], *traj.x[i], *traj.e[i, 0], *traj.s[i, -1], *traj.zeta[i], *traj.chi[i],
            *traj.u[i], traj.d1[i], *traj.d2[i], *traj.bound[i],
        ]


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def emit_csv(traj, metrics, csv_path, metrics_path, state_names=None):
    """Write the trajectory as CSV (17 significant digits) and the metrics as flat JSON.

    Nothing is written for an empty trajectory; files appear atomically.
    """
    if len(traj) == 0:
        raise BricError("refusing to write an empty trajectory")
    header = column_names(traj, state_names)

    def write_csv(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in trajectory_rows(traj):
            w.writerow([_fmt(v) for v in row])

    def write_json(fh):
        json.dump(metrics.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    try:
        _atomic_write(csv_path, write_csv)
        _atomic_write(metrics_path, write_json)
    except OSError as exc:
        raise BricError(f"cannot write results to {exc.filename or csv_path}: {exc.strerror}") from exc
    return Path(csv_path), Path(metrics_path)


def read_metrics(run_dir):
    path = Path(run_dir) / "metrics.json"
    with open(path) as fh:
        return json.load(fh)


def load_trajectory_csv(path):
    """Read an emitted CSV back as ``(header, array)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)
