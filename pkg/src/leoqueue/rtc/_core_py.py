"""Pure-Python call simulation loop.

Fallback for the compiled ``_core`` extension; both must produce identical
results for identical inputs (see tests/test_core_equivalence.py).  The
loop is written against plain lists and the object-level Pacer and
CongestionController so it doubles as the readable reference.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .gcc import CongestionController, GccConfig, PacketFeedback
from .pacer import Pacer, PacerConfig, QueuedPacket

# index layout of the float config vector shared with the compiled core
CFG_FIELDS = (
    "tick_ms", "fps", "mtu", "min_kbps", "max_kbps", "start_kbps",
    "pacing_multiplier", "feedback_interval_ms", "window_ms", "buffer_ms",
    "min_buffer_bytes", "outage_ms", "pushback_high", "pushback_low",
    "rtt_window_ms", "cc_capture_ts", "use_pushback", "limit_mode",
)


def simulate(delay_ms, capacity_kbps, loss_prob, blackout_ms, seg_limits,
             rand_u, cfg, gcc_cfg: GccConfig):
    c = dict(zip(CFG_FIELDS, (float(v) for v in cfg)))
    tick = c["tick_ms"]
    duration_s = len(delay_ms)
    n_ticks = int(round(duration_s * 1000.0 / tick))
    frame_interval = 1000.0 / c["fps"]
    mtu = int(c["mtu"])
    seg_len_ms = 120000.0
    outage_ms = c["outage_ms"]

    delay_ms = [float(x) for x in delay_ms]
    capacity_kbps = [float(x) for x in capacity_kbps]
    loss_prob = [float(x) for x in loss_prob]
    blackouts = sorted(float(x) for x in blackout_ms)
    seg_limits = [float(x) for x in seg_limits]
    n_rand = len(rand_u)
    rand_u = [float(x) for x in rand_u]

    # packet table
    p_size: list[int] = []
    p_frame: list[int] = []
    p_enq: list[float] = []
    p_send: list[float] = []
    p_arr: list[float] = []
    p_lost: list[int] = []
    p_bn: list[int] = []  # bytes occupied in bottleneck (0 when tail-dropped)
    # frame table
    f_time: list[float] = []
    f_npk: list[int] = []
    f_got: list[int] = []
    f_bad: list[int] = []
    f_render: list[float] = []

    gcc = CongestionController(gcc_cfg)
    pacer = Pacer(PacerConfig(seg_limits[0], c["pacing_multiplier"], tick), c["start_kbps"])
    target = c["start_kbps"]
    pushback = 1.0
    media_rate = target

    next_frame_ms = 0.0
    bn_head = 0          # next packet to leave the bottleneck
    bn_bytes = 0
    bn_credit = 0.0
    rx_head = 0          # next packet to reach the receiver
    last_arr = 0.0
    fb_lo = 0
    next_fb_ms = c["feedback_interval_ms"]
    fb_queue: deque = deque()
    last_fb_arr = 0.0
    in_flight = 0.0
    rtt = 100.0
    min_rtt_cur = math.inf
    min_rtt_prev = math.inf
    rtt_block_start = 0.0
    last_fb_rx = 0.0
    last_timeout_cut = 0.0
    fb_timeout = gcc_cfg.feedback_timeout_ms
    rand_i = 0
    bo_i = 0
    conservation_errors = 0

    sent_pkts = 0
    delivered_pkts = 0
    lost_pkts = 0

    sec_target = [0.0] * duration_s
    sec_queue_ms = [0.0] * duration_s

    for k in range(1, n_ticks + 1):
        now = k * tick
        sec = min(int((now - tick) // 1000.0), duration_s - 1)
        seg = min(int((now - tick) // seg_len_ms), len(seg_limits) - 1)
        limit = seg_limits[seg]
        if pacer.config.max_queue_limit_ms != limit:
            pacer.set_queue_limit(limit)

        # 1. feedback reaching the sender
        while fb_queue and fb_queue[0][0] <= now:
            _, lo, hi = fb_queue.popleft()
            last_fb_rx = now
            batch = []
            for i in range(lo, hi):
                in_flight -= p_size[i]
                ts = p_enq[i] if c["cc_capture_ts"] else p_send[i]
                batch.append(PacketFeedback(ts, p_arr[i], p_size[i], bool(p_lost[i])))
            sample = now - p_send[hi - 1]
            rtt = sample if rtt <= 0 else 0.875 * rtt + 0.125 * sample
            if now - rtt_block_start >= c["rtt_window_ms"]:
                min_rtt_prev = min_rtt_cur
                min_rtt_cur = math.inf
                rtt_block_start = now
            min_rtt_cur = min(min_rtt_cur, sample)
            target = gcc.on_feedback(batch, now, rtt)
            min_rtt = min(min_rtt_cur, min_rtt_prev)
            window = target * (min_rtt + c["window_ms"]) / 8.0
            fill = (in_flight + pacer.queued_bytes) / window
            if not c["use_pushback"]:
                pushback = 1.0
            elif fill > c["pushback_high"]:
                pushback *= 0.9
            elif fill > 1.0:
                pushback *= 0.95
            elif fill < c["pushback_low"]:
                pushback = 1.0
            else:
                pushback = min(1.0, pushback * 1.05)
            media_rate = max(c["min_kbps"], target * pushback)
            pacer.set_media_rate(media_rate)

        if now - last_fb_rx >= fb_timeout and now - last_timeout_cut >= fb_timeout:
            target = gcc.on_feedback_timeout()
            last_timeout_cut = now
            media_rate = max(c["min_kbps"], target * pushback)
            pacer.set_media_rate(media_rate)

        # 2. encoder
        while next_frame_ms < now:
            size = int(media_rate * frame_interval / 8.0)
            npk = max(1, -(-size // mtu))
            psize = -(-size // npk)
            fid = len(f_time)
            f_time.append(next_frame_ms)
            f_npk.append(npk)
            f_got.append(0)
            f_bad.append(0)
            f_render.append(-1.0)
            for _ in range(npk):
                pid = len(p_size)
                p_size.append(psize)
                p_frame.append(fid)
                p_enq.append(next_frame_ms)
                p_send.append(-1.0)
                p_arr.append(-1.0)
                p_lost.append(0)
                p_bn.append(0)
                pacer.enqueue(QueuedPacket(pid, psize, next_frame_ms))
                sent_pkts += 1
            next_frame_ms += frame_interval

        # 3. pacer -> bottleneck (drop-tail)
        min_rtt = min(min_rtt_cur, min_rtt_prev)
        if math.isinf(min_rtt):
            min_rtt = rtt
        window = target * (min_rtt + c["window_ms"]) / 8.0
        cap = capacity_kbps[sec]
        buf_limit = max(cap * c["buffer_ms"] / 8.0, c["min_buffer_bytes"])
        wrate = window * 8.0 / max(rtt, 1.0) if c["limit_mode"] else math.inf
        for pkt in pacer.drain(now, in_flight, window, wrate):
            i = pkt.packet_id
            p_send[i] = now
            in_flight += pkt.size
            if bn_bytes + pkt.size > buf_limit:
                p_lost[i] = 1
                p_bn[i] = 0
            else:
                p_bn[i] = pkt.size
                bn_bytes += pkt.size

        # 4. bottleneck service
        while bo_i < len(blackouts) and blackouts[bo_i] + outage_ms <= now - tick:
            bo_i += 1
        dark = bo_i < len(blackouts) and blackouts[bo_i] < now and now - tick < blackouts[bo_i] + outage_ms
        if not dark:
            bn_credit += cap * tick / 8.0
        while bn_head < len(p_send) and p_send[bn_head] >= 0:
            need = p_bn[bn_head]
            if need > 0 and bn_credit < need:
                break
            bn_credit -= need
            bn_bytes -= need
            arr = now + delay_ms[sec]
            if arr < last_arr:
                arr = last_arr
            last_arr = arr
            p_arr[bn_head] = arr
            if not p_lost[bn_head]:
                u = rand_u[rand_i % n_rand]
                rand_i += 1
                if u < loss_prob[sec]:
                    p_lost[bn_head] = 1
            bn_head += 1
        if bn_bytes == 0:
            bn_credit = 0.0

        # 5. receiver
        while rx_head < bn_head and p_arr[rx_head] <= now:
            fid = p_frame[rx_head]
            if p_lost[rx_head]:
                f_bad[fid] += 1
                lost_pkts += 1
            else:
                f_got[fid] += 1
                delivered_pkts += 1
            if f_got[fid] + f_bad[fid] == f_npk[fid] and f_bad[fid] == 0:
                f_render[fid] = p_arr[rx_head]
            rx_head += 1

        # 6. feedback generation
        if now >= next_fb_ms:
            if rx_head > fb_lo:
                fb_arr = now + delay_ms[sec]
                if fb_arr < last_fb_arr:
                    fb_arr = last_fb_arr
                last_fb_arr = fb_arr
                fb_queue.append((fb_arr, fb_lo, rx_head))
                fb_lo = rx_head
            next_fb_ms += c["feedback_interval_ms"]

        # 7. bookkeeping
        in_queue = len(pacer.queue)
        in_net = len(p_send) - in_queue - rx_head
        if sent_pkts != delivered_pkts + lost_pkts + in_net + in_queue:
            conservation_errors += 1
        if (k * tick) % 1000.0 == 0.0:
            s = int(k * tick // 1000.0) - 1
            sec_target[s] = media_rate
            sec_queue_ms[s] = pacer.expected_queue_ms()

    return {
        "p_size": np.asarray(p_size, dtype=np.int64),
        "p_enq": np.asarray(p_enq),
        "p_send": np.asarray(p_send),
        "p_arr": np.asarray(p_arr),
        "p_lost": np.asarray(p_lost, dtype=np.int8),
        "p_recv": np.asarray([1 if i < rx_head else 0 for i in range(len(p_size))], dtype=np.int8),
        "f_time": np.asarray(f_time),
        "f_render": np.asarray(f_render),
        "sec_target": np.asarray(sec_target),
        "sec_queue_ms": np.asarray(sec_queue_ms),
        "conservation_errors": conservation_errors,
    }
