"""One videoconferencing call over a link trace."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Protocol, Sequence

import numpy as np

from . import kernel
from .freeze import freeze_gaps
from .gcc import GccConfig

SEGMENT_S = 120


class TraceTooShort(ValueError):
    pass


@dataclass(frozen=True)
class RtcConfig:
    tick_ms: float = 5.0
    fps: float = 30.0
    mtu: int = 1200
    min_kbps: float = 150.0
    max_kbps: float = 8000.0
    start_kbps: float = 300.0
    pacing_multiplier: float = 2.5
    feedback_interval_ms: float = 50.0
    # congestion window = target * (min_rtt + window_ms)
    window_ms: float = 10.0
    # bottleneck buffer, in ms of current capacity (floored at min_buffer_bytes)
    buffer_ms: float = 500.0
    min_buffer_bytes: float = 30000.0
    pushback_high: float = 1.5
    pushback_low: float = 0.1
    rtt_window_ms: float = 10000.0
    cc_capture_ts: bool = False
    use_pushback: bool = False
    limit_mode: bool = True
    gcc: GccConfig = field(default_factory=GccConfig)

    def __post_init__(self):
        if self.pacing_multiplier < 1.0:
            raise ValueError("pacing_multiplier must be >= 1")
        if self.tick_ms <= 0 or self.fps <= 0 or self.mtu <= 0:
            raise ValueError("tick_ms, fps and mtu must be positive")
        if not 0 < self.min_kbps <= self.start_kbps <= self.max_kbps:
            raise ValueError("need 0 < min_kbps <= start_kbps <= max_kbps")

    def vector(self, outage_ms: float) -> list[float]:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "gcc"}
        d["outage_ms"] = outage_ms
        return [float(d[name]) for name in kernel.CFG_FIELDS]

    def gcc_config(self) -> GccConfig:
        return replace(self.gcc, min_bitrate_kbps=self.min_kbps, max_bitrate_kbps=self.max_kbps,
                       start_bitrate_kbps=self.start_kbps, packet_bits=self.mtu * 8.0)

    @classmethod
    def from_dict(cls, d: dict | None) -> "RtcConfig":
        d = dict(d or {})
        gcc = GccConfig(**d.pop("gcc", {}) or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown rtc config keys: {sorted(unknown)}")
        return cls(gcc=gcc, **d)

    def to_dict(self) -> dict:
        return asdict(self)


class QueuePolicy(Protocol):
    name: str

    def select(self, segment_index: int, trace) -> float:
        """Queue limit (ms) for the segment starting at segment_index * 120 s."""
        ...


@dataclass
class FixedQueuePolicy:
    limit_ms: float = 2000.0

    @property
    def name(self) -> str:
        return f"fixed{int(self.limit_ms)}"

    def select(self, segment_index: int, trace) -> float:
        return self.limit_ms


@dataclass
class SegmentRecord:
    segment_index: int
    action_queue_ms: float
    raw_bitrate_mbps: float
    raw_freeze_per_min: float
    e2e_delay_ms: float
    packet_loss_frac: float
    handover_total: int
    duration_s: int = SEGMENT_S
    R: float | None = None
    F: float | None = None
    state: object | None = None


@dataclass
class CallMetrics:
    avg_bitrate_mbps: float
    freeze_rate_per_min: float
    e2e_delay_ms: float
    packet_loss_frac: float
    per_segment: list[SegmentRecord]
    freezes: int = 0
    conservation_errors: int = 0
    target_kbps: np.ndarray | None = field(default=None, repr=False)
    queue_ms: np.ndarray | None = field(default=None, repr=False)

    @property
    def actions(self) -> list[float]:
        return [s.action_queue_ms for s in self.per_segment]


def _uniforms(duration_s: int, seed: int) -> np.ndarray:
    # one draw per packet crossing the link; sized for the bitrate ceiling
    return np.random.default_rng(seed).random(int(duration_s) * 1200 + 1024)


def run_call(trace, queue_policy: QueuePolicy, seed: int = 0,
             config: RtcConfig | None = None, simulate=None) -> CallMetrics:
    cfg = config or RtcConfig()
    T = int(trace.duration)
    if T < SEGMENT_S:
        raise TraceTooShort(f"trace of {T} s is shorter than one {SEGMENT_S} s segment")
    n_seg = T // SEGMENT_S
    limits = [float(queue_policy.select(j, trace)) for j in range(n_seg)]
    sim = simulate or kernel.simulate
    out = sim(trace.delay_ms, trace.capacity_kbps, trace.loss_prob, trace.blackout_starts_ms,
              limits, _uniforms(T, seed), cfg.vector(trace.outage_ms), cfg.gcc_config())
    return summarize(out, trace, limits)


def summarize(out: dict, trace, limits: Sequence[float]) -> CallMetrics:
    T = int(trace.duration)
    recv = out["p_recv"].astype(bool)
    lost = out["p_lost"].astype(bool)
    ok = recv & ~lost
    size = out["p_size"]
    enq = out["p_enq"]
    delay = out["p_arr"] - enq

    render = np.sort(out["f_render"][out["f_render"] >= 0])
    if render.size == 0:
        gap_start = np.array([0.0])
    else:
        gap_start = render[freeze_gaps(render)]

    ho = np.asarray(trace.handover_seconds)
    segs = []
    for j, lim in enumerate(limits):
        lo, hi = j * SEGMENT_S * 1000.0, (j + 1) * SEGMENT_S * 1000.0
        in_seg = (enq >= lo) & (enq < hi)
        seg_ok = ok & in_seg
        seg_recv = recv & in_seg
        n_frz = int(((gap_start >= lo) & (gap_start < hi)).sum())
        segs.append(SegmentRecord(
            segment_index=j,
            action_queue_ms=float(lim),
            raw_bitrate_mbps=float(size[seg_ok].sum() * 8.0 / (SEGMENT_S * 1e6)),
            raw_freeze_per_min=n_frz / (SEGMENT_S / 60.0),
            e2e_delay_ms=float(delay[seg_ok].mean()) if seg_ok.any() else 0.0,
            packet_loss_frac=float(lost[seg_recv].mean()) if seg_recv.any() else 0.0,
            handover_total=int(((ho >= j * SEGMENT_S) & (ho < (j + 1) * SEGMENT_S)).sum()),
        ))
    n_frz = int(gap_start.size)
    return CallMetrics(
        avg_bitrate_mbps=float(size[ok].sum() * 8.0 / (T * 1e6)),
        freeze_rate_per_min=n_frz / (T / 60.0),
        e2e_delay_ms=float(delay[ok].mean()) if ok.any() else 0.0,
        packet_loss_frac=float(lost[recv].mean()) if recv.any() else 0.0,
        per_segment=segs,
        freezes=n_frz,
        conservation_errors=int(out["conservation_errors"]),
        target_kbps=np.asarray(out["sec_target"]),
        queue_ms=np.asarray(out["sec_queue_ms"]),
    )


CALL_COLUMNS = ("call_id", "scenario", "policy", "avg_bitrate_mbps", "freeze_rate_per_min",
                "e2e_delay_ms", "loss_frac")
SEGMENT_COLUMNS = (("call_id", "segment_index", "action_queue_ms", "raw_bitrate_mbps",
                    "raw_freeze_per_min") + tuple(f"h{t}" for t in range(SEGMENT_S)) + ("handover_total",))


def _fmt(x: float) -> str:
    return repr(float(x))


def call_row(call_id, scenario: str, policy: str, m: CallMetrics) -> list:
    return [call_id, scenario, policy, _fmt(m.avg_bitrate_mbps), _fmt(m.freeze_rate_per_min),
            _fmt(m.e2e_delay_ms), _fmt(m.packet_loss_frac)]


def segment_rows(call_id, m: CallMetrics, trace) -> list[list]:
    from ..policy.state import build_state
    rows = []
    for s in m.per_segment:
        st = build_state(trace.serving_sat_id, s.segment_index * SEGMENT_S)
        s.state = st
        rows.append([call_id, s.segment_index, int(s.action_queue_ms), _fmt(s.raw_bitrate_mbps),
                     _fmt(s.raw_freeze_per_min)] + [int(v) for v in st.h] + [st.total])
    return rows


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
