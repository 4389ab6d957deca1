"""Simulation traces: the column arrays every metric and certificate reads.

CSV schema (one row per step, '\\n' line endings, floats in shortest
round-trip form):

    t, mode, vis, tx, ty, tz, tvx, tvy, tvz, px, py, pz, pvx, pvy, pvz,
    ex, ey, ez, V, event
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from svt.common import DT, ConfigError, Mode

COLUMNS = [
    "t", "mode", "vis",
    "tx", "ty", "tz", "tvx", "tvy", "tvz",
    "px", "py", "pz", "pvx", "pvy", "pvz",
    "ex", "ey", "ez", "V", "event",
]


@dataclass
class Trace:
    t: np.ndarray
    mode: np.ndarray                  # int8, Mode values
    vis: np.ndarray                   # bool, noiseless geometric visibility
    target_pos: np.ndarray            # (n, 3)
    target_vel: np.ndarray
    pursuer_pos: np.ndarray
    pursuer_vel: np.ndarray
    estimate: np.ndarray              # (n, 3) estimated target position
    V: np.ndarray                     # Lyapunov value from ground truth
    events: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self) > 1 else DT

    @classmethod
    def empty(cls, n: int) -> "Trace":
        return cls(
            t=np.zeros(n), mode=np.zeros(n, dtype=np.int8), vis=np.zeros(n, dtype=bool),
            target_pos=np.zeros((n, 3)), target_vel=np.zeros((n, 3)),
            pursuer_pos=np.zeros((n, 3)), pursuer_vel=np.zeros((n, 3)),
            estimate=np.zeros((n, 3)), V=np.zeros(n), events=[""] * n,
        )

    @classmethod
    def from_series(cls, t, modes, V) -> "Trace":
        """Mode/V-only trace for analysis; geometry columns are zero."""
        t = np.asarray(t, dtype=float)
        tr = cls.empty(t.shape[0])
        tr.t = t
        tr.mode = np.asarray(modes, dtype=np.int8)
        tr.V = np.asarray(V, dtype=float)
        tr.vis = tr.mode == Mode.TRACKING
        return tr

    def is_tracking(self) -> np.ndarray:
        return self.mode == Mode.TRACKING

    def segments(self) -> list[tuple[int, int, Mode]]:
        """Maximal constant-mode runs as (start, end_exclusive, mode)."""
        if len(self) == 0:
            return []
        cuts = np.flatnonzero(np.diff(self.mode)) + 1
        starts = np.concatenate([[0], cuts])
        ends = np.concatenate([cuts, [len(self)]])
        return [(int(a), int(b), Mode(int(self.mode[a]))) for a, b in zip(starts, ends)]


def _fmt(x) -> str:
    return repr(float(x))


def write_trace(path: str, trace: Trace):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(len(trace)):
            w.writerow(
                [_fmt(trace.t[i]), Mode(int(trace.mode[i])).label, int(bool(trace.vis[i]))]
                + [_fmt(v) for v in trace.target_pos[i]]
                + [_fmt(v) for v in trace.target_vel[i]]
                + [_fmt(v) for v in trace.pursuer_pos[i]]
                + [_fmt(v) for v in trace.pursuer_vel[i]]
                + [_fmt(v) for v in trace.estimate[i]]
                + [_fmt(trace.V[i]), trace.events[i]]
            )


def read_trace(path: str) -> Trace:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != COLUMNS:
            raise ConfigError(f"{path}: line 1: expected trace header {','.join(COLUMNS)}")
        rows = list(reader)

    tr = Trace.empty(len(rows))
    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != len(COLUMNS):
            raise ConfigError(f"{path}: line {lineno}: expected {len(COLUMNS)} fields, got {len(row)}")
        try:
            tr.t[i] = float(row[0])
            tr.mode[i] = Mode.from_label(row[1])
            tr.vis[i] = row[2] == "1"
            nums = [float(v) for v in row[3:19]]
        except (ValueError, KeyError) as e:
            raise ConfigError(f"{path}: line {lineno}: {e}") from e
        tr.target_pos[i] = nums[0:3]
        tr.target_vel[i] = nums[3:6]
        tr.pursuer_pos[i] = nums[6:9]
        tr.pursuer_vel[i] = nums[9:12]
        tr.estimate[i] = nums[12:15]
        tr.V[i] = nums[15]
        tr.events[i] = row[19]
    return tr
