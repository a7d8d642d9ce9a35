"""Delay-gradient congestion controller in the style of WebRTC's GoogCC.

The controller consumes transport feedback (per-packet send/receive times,
sizes and loss flags) and produces a target bitrate.  Three pieces:

* ``TrendlineEstimator`` turns inter-group delay variation into a slope.
* ``OveruseDetector`` compares the scaled slope against an adaptive
  threshold.
* ``AimdRateControl`` maps the detector signal to a target rate, with a
  loss-based overlay applied once per loss interval.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class BandwidthUsage(enum.IntEnum):
    NORMAL = 0
    UNDERUSING = 1
    OVERUSING = 2


class RateState(enum.IntEnum):
    INCREASE = 0
    HOLD = 1
    DECREASE = 2


@dataclass(frozen=True)
class GccConfig:
    min_bitrate_kbps: float = 150.0
    max_bitrate_kbps: float = 8000.0
    start_bitrate_kbps: float = 300.0
    burst_group_ms: float = 5.0
    trendline_window: int = 20
    trendline_smoothing: float = 0.9
    threshold_gain: float = 4.0
    max_group_count: int = 60
    initial_threshold_ms: float = 12.5
    k_up: float = 0.0087
    k_down: float = 0.039
    overuse_time_ms: float = 10.0
    beta: float = 0.85
    multiplicative_increase: float = 1.08
    rate_window_ms: float = 500.0
    loss_interval_ms: float = 1000.0
    loss_high: float = 0.10
    loss_low: float = 0.02
    packet_bits: float = 1200 * 8
    # no feedback for this long: cut the target (at most once per timeout)
    feedback_timeout_ms: float = 1500.0
    timeout_factor: float = 0.8


class PacketFeedback(NamedTuple):
    send_ms: float
    recv_ms: float
    size: int
    lost: bool


class TrendlineEstimator:
    """Least-squares slope of smoothed accumulated delay over packet groups."""

    def __init__(self, config: GccConfig):
        self.cfg = config
        self.points: deque[tuple[float, float]] = deque(maxlen=config.trendline_window)
        self.first_arrival = -1.0
        self.accumulated = 0.0
        self.smoothed = 0.0
        self.num_deltas = 0
        self.slope = 0.0
        self.prev_slope = 0.0
        # current (open) group and the last completed one
        self.group_first_send = -1.0
        self.group_last_send = 0.0
        self.group_last_recv = 0.0
        self.prev_last_send = -1.0
        self.prev_last_recv = 0.0

    def add(self, send_ms: float, recv_ms: float) -> bool:
        """Feed one received packet; returns True when a group delta was produced."""
        if self.group_first_send < 0:
            self.group_first_send = send_ms
            self.group_last_send = send_ms
            self.group_last_recv = recv_ms
            return False
        if send_ms - self.group_first_send <= self.cfg.burst_group_ms:
            self.group_last_send = max(self.group_last_send, send_ms)
            self.group_last_recv = max(self.group_last_recv, recv_ms)
            return False
        produced = False
        if self.prev_last_send >= 0:
            send_delta = self.group_last_send - self.prev_last_send
            recv_delta = self.group_last_recv - self.prev_last_recv
            self._update(recv_delta - send_delta, self.group_last_recv)
            produced = True
        self.prev_last_send = self.group_last_send
        self.prev_last_recv = self.group_last_recv
        self.group_first_send = send_ms
        self.group_last_send = send_ms
        self.group_last_recv = recv_ms
        return produced

    def _update(self, delay_delta: float, arrival_ms: float) -> None:
        cfg = self.cfg
        if self.first_arrival < 0:
            self.first_arrival = arrival_ms
        self.num_deltas = min(self.num_deltas + 1, cfg.max_group_count)
        self.accumulated += delay_delta
        self.smoothed = (cfg.trendline_smoothing * self.smoothed
                         + (1.0 - cfg.trendline_smoothing) * self.accumulated)
        self.points.append((arrival_ms - self.first_arrival, self.smoothed))
        self.prev_slope = self.slope
        if len(self.points) == cfg.trendline_window:
            self.slope = least_squares_slope(self.points)

    @property
    def modified_trend(self) -> float:
        return self.num_deltas * self.slope * self.cfg.threshold_gain


def least_squares_slope(points: Iterable[tuple[float, float]]) -> float:
    pts = list(points)
    n = len(pts)
    if n < 2:
        return 0.0
    mx = sum(p[0] for p in pts) / n
    my = sum(p[1] for p in pts) / n
    num = 0.0
    den = 0.0
    for x, y in pts:
        num += (x - mx) * (y - my)
        den += (x - mx) * (x - mx)
    if den == 0.0:
        return 0.0
    return num / den


class OveruseDetector:
    def __init__(self, config: GccConfig):
        self.cfg = config
        self.threshold = config.initial_threshold_ms
        self.time_over_using = -1.0
        self.overuse_counter = 0
        self.last_update_ms = -1.0
        self.state = BandwidthUsage.NORMAL

    def detect(self, trend: float, slope: float, prev_slope: float,
               group_delta_ms: float, now_ms: float) -> BandwidthUsage:
        cfg = self.cfg
        if trend > self.threshold:
            if self.time_over_using < 0:
                self.time_over_using = group_delta_ms / 2.0
            else:
                self.time_over_using += group_delta_ms
            self.overuse_counter += 1
            if (self.time_over_using > cfg.overuse_time_ms and self.overuse_counter > 1
                    and slope >= prev_slope):
                self.time_over_using = 0.0
                self.overuse_counter = 0
                self.state = BandwidthUsage.OVERUSING
        elif trend < -self.threshold:
            self.time_over_using = -1.0
            self.overuse_counter = 0
            self.state = BandwidthUsage.UNDERUSING
        else:
            self.time_over_using = -1.0
            self.overuse_counter = 0
            self.state = BandwidthUsage.NORMAL
        self._update_threshold(trend, now_ms)
        return self.state

    def _update_threshold(self, trend: float, now_ms: float) -> None:
        if self.last_update_ms < 0:
            self.last_update_ms = now_ms
        excess = abs(trend) - self.threshold
        if excess > 15.0:
            # outlier; don't let a single spike drag the threshold
            self.last_update_ms = now_ms
            return
        k = self.cfg.k_down if abs(trend) < self.threshold else self.cfg.k_up
        dt = min(now_ms - self.last_update_ms, 100.0)
        self.threshold += k * excess * dt
        self.threshold = min(max(self.threshold, 6.0), 600.0)
        self.last_update_ms = now_ms


@dataclass
class CongestionState:
    """Snapshot of controller state exposed to callers."""

    target_bitrate_kbps: float
    delay_gradient: float = 0.0
    overuse_threshold: float = 12.5
    state: RateState = RateState.INCREASE
    rtt_ms: float = 100.0


@dataclass
class _RateWindow:
    span_ms: float
    samples: deque = field(default_factory=deque)
    total_bytes: int = 0

    def add(self, t_ms: float, size: int) -> None:
        self.samples.append((t_ms, size))
        self.total_bytes += size

    def rate_kbps(self, now_ms: float) -> float:
        while self.samples and self.samples[0][0] <= now_ms - self.span_ms:
            self.total_bytes -= self.samples.popleft()[1]
        if not self.samples:
            return 0.0
        return self.total_bytes * 8.0 / self.span_ms


class CongestionController:
    """Delay- and loss-based rate controller.

    ``on_feedback`` is called with the packets covered by one feedback
    message, in sequence order, and returns the new target bitrate.
    """

    def __init__(self, config: GccConfig | None = None):
        self.cfg = config or GccConfig()
        self.trendline = TrendlineEstimator(self.cfg)
        self.detector = OveruseDetector(self.cfg)
        self.target_kbps = self.cfg.start_bitrate_kbps
        self.rate_state = RateState.INCREASE
        self.rtt_ms = 100.0
        self.last_change_ms = -1.0
        self.last_decrease_ms = -1.0
        self.received = _RateWindow(self.cfg.rate_window_ms)
        # link capacity estimate (kbps) and its normalized variance
        self.link_estimate = -1.0
        self.link_var = 0.4
        self.loss_window_start = -1.0
        self.loss_received = 0
        self.loss_lost = 0
        self.loss_hold = False
        self.last_recv_ms = 0.0

    @property
    def state(self) -> CongestionState:
        return CongestionState(
            target_bitrate_kbps=self.target_kbps,
            delay_gradient=self.trendline.slope,
            overuse_threshold=self.detector.threshold,
            state=self.rate_state,
            rtt_ms=self.rtt_ms,
        )

    def on_feedback(self, packets: Iterable[PacketFeedback], now_ms: float,
                    rtt_ms: float | None = None) -> float:
        if rtt_ms is not None:
            self.rtt_ms = rtt_ms
        usage = self.detector.state
        for p in packets:
            if p.lost:
                self.loss_lost += 1
                continue
            self.loss_received += 1
            self.received.add(p.recv_ms, p.size)
            self.last_recv_ms = max(self.last_recv_ms, p.recv_ms)
            prev_send = self.trendline.prev_last_send
            if self.trendline.add(p.send_ms, p.recv_ms):
                group_delta = self.trendline.prev_last_send - prev_send
                usage = self.detector.detect(
                    self.trendline.modified_trend, self.trendline.slope,
                    self.trendline.prev_slope, group_delta, p.recv_ms)
        self._apply_loss(now_ms)
        self._update_rate(usage, now_ms)
        return self.target_kbps

    def on_feedback_timeout(self) -> float:
        self.target_kbps *= self.cfg.timeout_factor
        self._clamp()
        return self.target_kbps

    def _apply_loss(self, now_ms: float) -> None:
        cfg = self.cfg
        if self.loss_window_start < 0:
            self.loss_window_start = now_ms
        if now_ms - self.loss_window_start < cfg.loss_interval_ms:
            return
        total = self.loss_received + self.loss_lost
        if total > 0:
            loss = self.loss_lost / total
            if loss > cfg.loss_high:
                self.target_kbps *= 1.0 - 0.5 * loss
                self.loss_hold = True
            elif loss >= cfg.loss_low:
                self.loss_hold = True
            else:
                self.loss_hold = False
        self.loss_window_start = now_ms
        self.loss_received = 0
        self.loss_lost = 0
        self._clamp()

    def _update_rate(self, usage: BandwidthUsage, now_ms: float) -> None:
        cfg = self.cfg
        if self.last_change_ms < 0:
            self.last_change_ms = now_ms
        received_kbps = self.received.rate_kbps(self.last_recv_ms)
        dt_ms = now_ms - self.last_change_ms
        if usage == BandwidthUsage.OVERUSING:
            self.rate_state = RateState.DECREASE
            spacing = min(max(self.rtt_ms, 10.0), 200.0)
            if received_kbps > 0 and (self.last_decrease_ms < 0
                                      or now_ms - self.last_decrease_ms >= spacing):
                decreased = cfg.beta * received_kbps
                if decreased < self.target_kbps:
                    self.target_kbps = decreased
                self._update_link_estimate(received_kbps)
                self.last_decrease_ms = now_ms
        elif usage == BandwidthUsage.UNDERUSING:
            self.rate_state = RateState.HOLD
        else:
            self.rate_state = RateState.INCREASE
        if self.rate_state == RateState.INCREASE and not self.loss_hold:
            if self.link_estimate > 0 and received_kbps > self.link_estimate + 3 * self._link_std():
                self.link_estimate = -1.0
            if self.link_estimate > 0:
                response_ms = self.rtt_ms + 100.0
                self.target_kbps += 0.5 * cfg.packet_bits * dt_ms / response_ms / 1000.0
            else:
                self.target_kbps *= cfg.multiplicative_increase ** min(dt_ms / 1000.0, 1.0)
            if received_kbps > 0:
                self.target_kbps = min(self.target_kbps, 1.5 * received_kbps + 10.0)
        self.last_change_ms = now_ms
        self._clamp()

    def _link_std(self) -> float:
        return math.sqrt(self.link_var * self.link_estimate)

    def _update_link_estimate(self, sample_kbps: float) -> None:
        if self.link_estimate < 0:
            self.link_estimate = sample_kbps
        else:
            self.link_estimate = 0.95 * self.link_estimate + 0.05 * sample_kbps
        norm = max(self.link_estimate, 1.0)
        err = self.link_estimate - sample_kbps
        self.link_var = 0.95 * self.link_var + 0.05 * err * err / norm
        self.link_var = min(max(self.link_var, 0.4), 2.5)

    def _clamp(self) -> None:
        self.target_kbps = min(max(self.target_kbps, self.cfg.min_bitrate_kbps),
                               self.cfg.max_bitrate_kbps)


def cc_on_feedback(controller: CongestionController,
                   feedback: Iterable[PacketFeedback], now_ms: float,
                   rtt_ms: float | None = None) -> CongestionState:
    """Functional wrapper: feed one batch and return the resulting state."""
    controller.on_feedback(feedback, now_ms, rtt_ms)
    return controller.state
