"""Per-second path traces synthesized from a serving schedule."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .orbital import ServingSchedule, handover_indices

OUTAGE_LOSS_BUMP = 0.10
OUTAGE_DELAY_SPIKE_MS = 100.0
CSV_COLUMNS = ("t", "serving_sat_id", "delay_ms", "capacity_kbps", "loss_prob", "outage")


@dataclass(frozen=True)
class LinkParams:
    access_capacity_mbps: float = 6.0
    capacity_jitter_frac: float = 0.15
    loss_rate: float = 0.01
    handover_outage_ms: float = 400.0
    isl_capacity_gbps: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.loss_rate < 1.0:
            raise ValueError("loss_rate must lie in [0, 1)")
        if self.access_capacity_mbps <= 0 or self.isl_capacity_gbps <= 0:
            raise ValueError("capacities must be positive")
        if not 0.0 <= self.capacity_jitter_frac < 1.0:
            raise ValueError("capacity_jitter_frac must lie in [0, 1)")
        if self.handover_outage_ms < 0:
            raise ValueError("handover_outage_ms must be nonnegative")


@dataclass
class LinkTrace:
    duration: int
    delay_ms: np.ndarray
    capacity_kbps: np.ndarray
    loss_prob: np.ndarray
    outage: np.ndarray
    serving_sat_id: np.ndarray
    handover_seconds: np.ndarray
    outage_ms: float = 400.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delay_ms = np.asarray(self.delay_ms, dtype=float)
        self.capacity_kbps = np.asarray(self.capacity_kbps, dtype=float)
        self.loss_prob = np.asarray(self.loss_prob, dtype=float)
        self.outage = np.asarray(self.outage, dtype=bool)
        self.serving_sat_id = np.asarray(self.serving_sat_id, dtype=np.int64)
        self.handover_seconds = np.asarray(self.handover_seconds, dtype=np.int64)
        for name in ("delay_ms", "capacity_kbps", "loss_prob", "outage", "serving_sat_id"):
            if len(getattr(self, name)) != self.duration:
                raise ValueError(f"{name} length differs from duration {self.duration}")

    @property
    def blackout_starts_ms(self) -> np.ndarray:
        """Start times of the link blackouts that accompany each handover."""
        return self.handover_seconds.astype(float) * 1000.0

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t in range(self.duration):
            w.writerow([t, int(self.serving_sat_id[t]), repr(float(self.delay_ms[t])),
                        repr(float(self.capacity_kbps[t])), repr(float(self.loss_prob[t])),
                        int(self.outage[t])])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, outage_ms: float = 400.0) -> "LinkTrace":
        text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
        rows = list(csv.DictReader(io.StringIO(text)))
        missing = set(CSV_COLUMNS) - set(rows[0].keys() if rows else ())
        if missing:
            raise ValueError(f"trace CSV missing columns: {sorted(missing)}")
        sid = np.array([int(r["serving_sat_id"]) for r in rows], dtype=np.int64)
        return cls(
            duration=len(rows),
            delay_ms=np.array([float(r["delay_ms"]) for r in rows]),
            capacity_kbps=np.array([float(r["capacity_kbps"]) for r in rows]),
            loss_prob=np.array([float(r["loss_prob"]) for r in rows]),
            outage=np.array([r["outage"] in ("1", "True", "true") for r in rows]),
            serving_sat_id=sid,
            handover_seconds=handover_indices(sid),
            outage_ms=outage_ms,
        )


def build_link_trace(schedule: ServingSchedule, params: LinkParams | None = None,
                     seed: int = 0) -> LinkTrace:
    params = params or LinkParams()
    T = int(schedule.duration)
    if T < 1:
        raise ValueError("schedule is empty")
    rng = np.random.default_rng(seed)
    j = params.capacity_jitter_frac
    jitter = rng.uniform(-j, j, size=T)
    access_kbps = params.access_capacity_mbps * 1000.0
    sid = np.asarray(schedule.serving_sat_id, dtype=np.int64)
    capacity = access_kbps * (1.0 + jitter)
    capacity[sid < 0] = 0.0

    ho = handover_indices(sid)
    outage = np.zeros(T, dtype=bool)
    width = math.ceil(params.handover_outage_ms / 1000.0)
    for s in ho:
        outage[s:s + width] = True

    delay = np.array(schedule.delay_ms, dtype=float)
    delay[outage] += OUTAGE_DELAY_SPIKE_MS
    loss = np.full(T, params.loss_rate)
    loss[outage] = min(1.0, params.loss_rate + OUTAGE_LOSS_BUMP)
    return LinkTrace(T, delay, capacity, loss, outage, sid, ho,
                     outage_ms=float(params.handover_outage_ms))
