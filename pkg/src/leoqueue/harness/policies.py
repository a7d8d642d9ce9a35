"""Queue policies consulted by run_call at each segment boundary."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..policy.expert import ExpertTable, expert_action
from ..policy.model import QueuePolicyNet, infer
from ..policy.state import COLLECTION_LIMITS_MS, SEGMENT_S, build_state
from ..rtc.call import FixedQueuePolicy

__all__ = ["FixedQueuePolicy", "RandomQueuePolicy", "ExpertQueuePolicy", "LearnedQueuePolicy"]


@dataclass
class RandomQueuePolicy:
    """Uniform draw over the 15 collection limits before every segment."""
    seed: int = 0
    limits: tuple = COLLECTION_LIMITS_MS
    name: str = "random"
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.limits) != 15 or min(self.limits) != 100 or max(self.limits) != 2000:
            raise ValueError("random policy needs 15 limits spanning [100, 2000] ms")
        self._rng = np.random.default_rng(self.seed)

    def select(self, segment_index: int, trace) -> float:
        return float(self.limits[int(self._rng.integers(len(self.limits)))])


def _state(segment_index: int, trace):
    return build_state(trace.serving_sat_id, segment_index * SEGMENT_S)


@dataclass
class ExpertQueuePolicy:
    table: ExpertTable
    name: str = "expert"

    def select(self, segment_index: int, trace) -> float:
        return float(expert_action(self.table, _state(segment_index, trace).features()))


@dataclass
class LearnedQueuePolicy:
    model: QueuePolicyNet
    name: str = "learned"

    def select(self, segment_index: int, trace) -> float:
        return float(infer(self.model, _state(segment_index, trace)))
