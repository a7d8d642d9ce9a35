"""Segment context, actions and reward shaping for the queue-limit bandit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SEGMENT_S = 120
H_MAX = 10
STATE_DIM = 2 * SEGMENT_S
ACTIONS_MS = (500, 600, 900, 2000)
COLLECTION_LIMITS_MS = (100, 200, 300, 400, 500, 600, 700, 800, 900, 1000,
                        1200, 1400, 1600, 1800, 2000)


class SegmentOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class SegmentState:
    h: np.ndarray
    t_norm: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float32).reshape(-1)
        t = np.asarray(self.t_norm, dtype=np.float32).reshape(-1)
        if h.size != SEGMENT_S or t.size != SEGMENT_S:
            raise ValueError(f"state halves must have length {SEGMENT_S}")
        if not np.all((h == 0) | (h == 1)):
            raise ValueError("h must be binary")
        if np.any(t != t[0]) or not 0.0 <= t[0] <= 1.0:
            raise ValueError("t_norm must be constant and within [0, 1]")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "t_norm", t)

    @classmethod
    def from_handovers(cls, h) -> "SegmentState":
        h = np.asarray(h, dtype=np.float32)
        total = float(h.sum())
        return cls(h, np.full(SEGMENT_S, min(total, H_MAX) / H_MAX, dtype=np.float32))

    @property
    def total(self) -> int:
        return int(self.h.sum())

    @property
    def frequency(self) -> float:
        """Handovers per minute over the segment."""
        return self.total / (SEGMENT_S / 60.0)

    def features(self) -> tuple[float, float]:
        return float(self.total), self.frequency

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.h, self.t_norm])

    def tokens(self) -> np.ndarray:
        """(120, 2) per-second tokens (h[t], t_norm[t])."""
        return np.stack([self.h, self.t_norm], axis=1)


def build_state(serving_sat_id, segment_start: int) -> SegmentState:
    """Context for the segment starting at ``segment_start``.

    ``serving_sat_id`` is the predicted per-second serving series (or any
    object with a ``serving_sat_id`` attribute).  h[t] marks a change
    between seconds start+t and start+t+1; a change into the first second
    after the window still counts for the last slot.
    """
    sid = np.asarray(getattr(serving_sat_id, "serving_sat_id", serving_sat_id))
    s0 = int(segment_start)
    if s0 < 0 or s0 + SEGMENT_S > sid.size:
        raise SegmentOutOfRange(f"segment [{s0}, {s0 + SEGMENT_S}) outside schedule of {sid.size} s")
    a = sid[s0:s0 + SEGMENT_S]
    if s0 + SEGMENT_S < sid.size:
        b = sid[s0 + 1:s0 + SEGMENT_S + 1]
    else:
        b = np.append(sid[s0 + 1:], sid[-1])
    h = ((a >= 0) & (b >= 0) & (a != b)).astype(np.float32)
    return SegmentState.from_handovers(h)


def action_index(limit_ms: float) -> int:
    """Nearest action to a queue limit in ms; ties go to the smaller limit."""
    d = [abs(float(limit_ms) - a) for a in ACTIONS_MS]
    return int(np.argmin(d))


def action_ms(index: int) -> int:
    return ACTIONS_MS[int(index)]


@dataclass(frozen=True)
class QoEWeights:
    alpha: float = 2.0
    beta: float = 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("QoE weights must be nonnegative")


def qoe(R: float, F: float, w: QoEWeights = QoEWeights()) -> float:
    if not (0.0 <= R <= 1.0 and 0.0 <= F <= 1.0):
        raise ValueError("R and F must be normalized into [0, 1]")
    return w.alpha * R - w.beta * F


@dataclass
class Experience:
    state: SegmentState
    action_ms: float
    raw_bitrate: float
    raw_freeze: float
    R: float = 0.0
    F: float = 0.0
    r: float = 0.0

    @property
    def action(self) -> int:
        return action_index(self.action_ms)


def _minmax(x: np.ndarray) -> tuple[np.ndarray, float, float]:
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        return np.zeros_like(x), lo, hi
    return (x - lo) / (hi - lo), lo, hi


def normalize_dataset(experiences: list[Experience], w: QoEWeights = QoEWeights()) -> dict:
    """Min-max normalize bitrate and freeze rate in place and fill r.

    Returns the scaling used so it can be stored alongside the dataset.
    """
    if not experiences:
        raise ValueError("empty dataset")
    br = np.array([e.raw_bitrate for e in experiences], dtype=float)
    fz = np.array([e.raw_freeze for e in experiences], dtype=float)
    R, blo, bhi = _minmax(br)
    F, flo, fhi = _minmax(fz)
    for e, r_, f_ in zip(experiences, R, F):
        e.R, e.F = float(r_), float(f_)
        e.r = qoe(e.R, e.F, w)
    return {"bitrate_min": blo, "bitrate_max": bhi, "freeze_min": flo, "freeze_max": fhi}
