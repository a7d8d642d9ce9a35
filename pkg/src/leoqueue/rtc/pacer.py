"""Sender-side pacing queue with an adjustable queue-time limit."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple


@dataclass
class PacerConfig:
    max_queue_limit_ms: float = 2000.0
    pacing_multiplier: float = 2.5
    base_tick_ms: float = 5.0

    def __post_init__(self):
        if not 100.0 <= self.max_queue_limit_ms <= 2000.0:
            raise ValueError(f"queue limit {self.max_queue_limit_ms} ms outside [100, 2000]")
        if self.pacing_multiplier < 1.0:
            raise ValueError("pacing_multiplier must be >= 1")
        if self.base_tick_ms <= 0:
            raise ValueError("base_tick_ms must be positive")


class QueuedPacket(NamedTuple):
    packet_id: int
    size: int
    enqueue_ms: float


class Pacer:
    """FIFO pacer.

    Each tick releases ``rate * tick`` bytes.  The nominal rate is
    ``pacing_multiplier * media_rate``; when the projected drain time of the
    queue at that rate exceeds the queue limit, the rate for the tick is
    raised to ``queued_bytes / limit``.  Packets are never dropped.

    ``window_bytes`` (optional per drain) models the congestion window:
    normal pacing stops once ``in_flight + size`` would exceed it, but a
    tick running at the raised rate ignores the window so the limit holds.
    """

    def __init__(self, config: PacerConfig | None = None, media_rate_kbps: float = 300.0):
        self.config = config or PacerConfig()
        self.queue: deque[QueuedPacket] = deque()
        self.queued_bytes = 0
        self.media_rate_kbps = media_rate_kbps
        self.budget = 0.0
        self.last_rate_kbps = 0.0
        self.limit_active = False

    def set_queue_limit(self, limit_ms: float) -> None:
        if not 100.0 <= limit_ms <= 2000.0:
            raise ValueError(f"queue limit {limit_ms} ms outside [100, 2000]")
        self.config.max_queue_limit_ms = float(limit_ms)

    def set_media_rate(self, kbps: float) -> None:
        self.media_rate_kbps = kbps

    @property
    def pacing_rate_kbps(self) -> float:
        return self.config.pacing_multiplier * self.media_rate_kbps

    def expected_queue_ms(self, rate_kbps: float | None = None) -> float:
        rate = self.pacing_rate_kbps if rate_kbps is None else rate_kbps
        if self.queued_bytes == 0:
            return 0.0
        return self.queued_bytes * 8.0 / rate

    def enqueue(self, packet: QueuedPacket) -> None:
        self.queue.append(packet)
        self.queued_bytes += packet.size

    def drain_rate_kbps(self, window_rate_kbps: float = float("inf")) -> float:
        """Rate the queue is expected to drain at: the pacing rate, or the
        congestion-window rate when that is lower."""
        return min(self.pacing_rate_kbps, window_rate_kbps)

    def tick_rate_kbps(self, window_rate_kbps: float = float("inf")) -> float:
        rate = self.pacing_rate_kbps
        limit = self.config.max_queue_limit_ms
        if self.queued_bytes * 8.0 / self.drain_rate_kbps(window_rate_kbps) > limit:
            return max(rate, self.queued_bytes * 8.0 / limit)
        return rate

    def drain(self, now_ms: float, in_flight: float = 0.0,
              window_bytes: float = float("inf"),
              window_rate_kbps: float = float("inf")) -> list[QueuedPacket]:
        """Release packets for the tick ending at ``now_ms``."""
        if not self.queue:
            self.budget = 0.0
            self.limit_active = False
            return []
        rate = self.tick_rate_kbps(window_rate_kbps)
        self.limit_active = (self.queued_bytes * 8.0 / self.drain_rate_kbps(window_rate_kbps)
                             > self.config.max_queue_limit_ms)
        self.last_rate_kbps = rate
        tick_bytes = rate * self.config.base_tick_ms / 8.0
        self.budget = min(self.budget + tick_bytes, 2.0 * tick_bytes)
        released: list[QueuedPacket] = []
        while self.queue and self.budget > 0.0:
            pkt = self.queue[0]
            if not self.limit_active and in_flight + pkt.size > window_bytes:
                break
            self.queue.popleft()
            self.queued_bytes -= pkt.size
            self.budget -= pkt.size
            in_flight += pkt.size
            released.append(pkt)
        if not self.queue:
            self.budget = min(self.budget, 0.0)
        return released
