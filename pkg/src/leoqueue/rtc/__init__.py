from .call import (CALL_COLUMNS, SEGMENT_COLUMNS, CallMetrics, FixedQueuePolicy, QueuePolicy, RtcConfig,
                   SegmentRecord, TraceTooShort, call_row, run_call, segment_rows, write_csv)
from .freeze import detect_freezes, freeze_gaps
from .gcc import (CongestionController, CongestionState, GccConfig, PacketFeedback, RateState,
                  cc_on_feedback)
from .kernel import KERNEL
from .pacer import Pacer, PacerConfig, QueuedPacket
