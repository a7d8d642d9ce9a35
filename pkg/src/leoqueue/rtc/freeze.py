from __future__ import annotations

import numpy as np

MIN_FREEZE_MS = 150.0
FREEZE_FACTOR = 3.0
TRAILING_MS = 1000.0


def freeze_gaps(frame_times_ms) -> np.ndarray:
    """Indices ``i`` such that the gap ``t[i+1] - t[i]`` is a freeze.

    A gap freezes playback when it exceeds both 150 ms and three times the
    median inter-frame interval over the trailing second.  Each qualifying
    gap is one stall, however long it lasts.
    """
    t = np.asarray(frame_times_ms, dtype=float)
    if t.size < 2:
        return np.zeros(0, dtype=int)
    if np.any(np.diff(t) < 0):
        raise ValueError("frame times must be nondecreasing")
    gaps = np.diff(t)
    out = []
    for i in np.flatnonzero(gaps > MIN_FREEZE_MS):
        lo = np.searchsorted(t, t[i] - TRAILING_MS, side="left")
        trailing = gaps[lo:i]
        median = float(np.median(trailing)) if trailing.size else 0.0
        if gaps[i] > max(FREEZE_FACTOR * median, MIN_FREEZE_MS):
            out.append(i)
    return np.asarray(out, dtype=int)


def detect_freezes(frame_times_ms) -> int:
    return int(freeze_gaps(frame_times_ms).size)
