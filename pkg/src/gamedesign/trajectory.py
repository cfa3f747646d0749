"""Time series produced by the simulators, and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Trajectory", "TrajectoryRecorder", "csv_header"]


def csv_header(n):
    return (
        ["t"]
        + [f"x_{i}" for i in range(1, n + 1)]
        + [f"alpha_{i}" for i in range(1, n + 1)]
        + ["welfare", "lyapunov"]
        + [f"metric_{i}" for i in range(1, n + 1)]
    )


@dataclass
class Trajectory:
    """One row per recorded sample.

    Columns are ``t, x_1..x_N, alpha_1..alpha_N, welfare, lyapunov,
    metric_1..metric_N``.  ``meta`` carries run diagnostics (mode, clamp
    counts, final errors) that are not part of the CSV.
    """

    t: np.ndarray
    x: np.ndarray
    alpha: np.ndarray
    welfare: np.ndarray
    lyapunov: np.ndarray
    metric: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.t.shape[0]
        for name in ("x", "alpha", "metric"):
            if getattr(self, name).shape[0] != k:
                raise ValueError(f"{name} has {getattr(self, name).shape[0]} rows, expected {k}")
        if k > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory time stamps must be strictly increasing")

    @property
    def n_players(self):
        return self.x.shape[1]

    def __len__(self):
        return self.t.shape[0]

    def final(self):
        return {
            "t": float(self.t[-1]),
            "x": self.x[-1].tolist(),
            "alpha": self.alpha[-1].tolist(),
            "welfare": float(self.welfare[-1]),
            "lyapunov": float(self.lyapunov[-1]),
            "metric": self.metric[-1].tolist(),
        }

    def table(self):
        return np.column_stack([self.t, self.x, self.alpha, self.welfare, self.lyapunov, self.metric])

    def to_csv(self, path=None):
        """Write RFC-4180 CSV with a header row and 15 significant digits.

        Returns the text when ``path`` is None.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(csv_header(self.n_players))
        for row in self.table():
            writer.writerow([format(float(v), ".15g") for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_text):
        if "\n" in str(path_or_text):
            text = str(path_or_text)
        else:
            with open(path_or_text, newline="") as fh:
                text = fh.read()
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        n = (len(header) - 3) // 3
        if header != csv_header(n):
            raise ValueError("unexpected trajectory header")
        if body.size == 0:
            body = body.reshape(0, len(header))
        return cls(
            t=body[:, 0],
            x=body[:, 1 : 1 + n],
            alpha=body[:, 1 + n : 1 + 2 * n],
            welfare=body[:, 1 + 2 * n],
            lyapunov=body[:, 2 + 2 * n],
            metric=body[:, 3 + 2 * n :],
        )


class TrajectoryRecorder:
    def __init__(self):
        self.rows = []

    def append(self, t, x, alpha, welfare, lyapunov, metric):
        self.rows.append(
            (float(t), np.array(x, dtype=float), np.array(alpha, dtype=float), float(welfare), float(lyapunov), np.array(metric, dtype=float))
        )

    def build(self, **meta):
        t, x, a, w, v, m = zip(*self.rows)
        return Trajectory(np.array(t), np.array(x), np.array(a), np.array(w), np.array(v), np.array(m), dict(meta))
