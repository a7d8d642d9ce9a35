# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled call simulation loop.

Line-for-line port of ``_core_py.simulate`` with the pacer, trendline,
overuse detector and rate controller inlined.  Floating-point operations
are kept in the same order as the reference so both produce bit-identical
output (build without -ffast-math and with -ffp-contract=off).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, INFINITY, ceil

cnp.import_array()

DEF TL_CAP = 256


cdef inline double dmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double dmax(double a, double b) nogil:
    return a if a > b else b


cdef struct Gcc:
    # config
    double min_kbps, max_kbps, burst_group_ms, smoothing, gain
    int window, max_group_count
    double k_up, k_down, overuse_time_ms, beta, mult, rate_window_ms
    double loss_interval_ms, loss_high, loss_low, packet_bits
    # trendline
    double first_arrival, accumulated, smoothed, slope, prev_slope
    int num_deltas, tl_n, tl_head
    double tl_x[TL_CAP]
    double tl_y[TL_CAP]
    double group_first_send, group_last_send, group_last_recv
    double prev_last_send, prev_last_recv
    # detector
    double threshold, time_over_using, last_update_ms
    int overuse_counter, usage
    # rate control
    double target, rtt, last_change_ms, last_decrease_ms
    double link_estimate, link_var
    double loss_window_start
    long loss_received, loss_lost
    int loss_hold, rate_state
    double last_recv_ms
    # received-rate window over (time, size) samples
    long rw_head, rw_tail, rw_bytes


cdef void gcc_init(Gcc* g, object cfg):
    g.min_kbps = cfg.min_bitrate_kbps
    g.max_kbps = cfg.max_bitrate_kbps
    g.burst_group_ms = cfg.burst_group_ms
    g.smoothing = cfg.trendline_smoothing
    g.gain = cfg.threshold_gain
    g.window = cfg.trendline_window
    if g.window > TL_CAP or g.window < 1:
        raise ValueError("trendline_window out of range for compiled core")
    g.max_group_count = cfg.max_group_count
    g.k_up = cfg.k_up
    g.k_down = cfg.k_down
    g.overuse_time_ms = cfg.overuse_time_ms
    g.beta = cfg.beta
    g.mult = cfg.multiplicative_increase
    g.rate_window_ms = cfg.rate_window_ms
    g.loss_interval_ms = cfg.loss_interval_ms
    g.loss_high = cfg.loss_high
    g.loss_low = cfg.loss_low
    g.packet_bits = cfg.packet_bits
    g.first_arrival = -1.0
    g.accumulated = 0.0
    g.smoothed = 0.0
    g.slope = 0.0
    g.prev_slope = 0.0
    g.num_deltas = 0
    g.tl_n = 0
    g.tl_head = 0
    g.group_first_send = -1.0
    g.group_last_send = 0.0
    g.group_last_recv = 0.0
    g.prev_last_send = -1.0
    g.prev_last_recv = 0.0
    g.threshold = cfg.initial_threshold_ms
    g.time_over_using = -1.0
    g.last_update_ms = -1.0
    g.overuse_counter = 0
    g.usage = 0
    g.target = cfg.start_bitrate_kbps
    g.rtt = 100.0
    g.last_change_ms = -1.0
    g.last_decrease_ms = -1.0
    g.link_estimate = -1.0
    g.link_var = 0.4
    g.loss_window_start = -1.0
    g.loss_received = 0
    g.loss_lost = 0
    g.loss_hold = 0
    g.rate_state = 0
    g.last_recv_ms = 0.0
    g.rw_head = 0
    g.rw_tail = 0
    g.rw_bytes = 0


cdef double tl_slope(Gcc* g) nogil:
    cdef int n = g.tl_n, i, j
    cdef double mx = 0.0, my = 0.0, num = 0.0, den = 0.0, dx
    if n < 2:
        return 0.0
    for i in range(n):
        j = (g.tl_head + i) % g.window
        mx += g.tl_x[j]
        my += g.tl_y[j]
    mx = mx / n
    my = my / n
    for i in range(n):
        j = (g.tl_head + i) % g.window
        dx = g.tl_x[j] - mx
        num += dx * (g.tl_y[j] - my)
        den += dx * dx
    if den == 0.0:
        return 0.0
    return num / den


cdef void tl_update(Gcc* g, double delay_delta, double arrival_ms) nogil:
    cdef int j
    if g.first_arrival < 0:
        g.first_arrival = arrival_ms
    g.num_deltas = g.num_deltas + 1
    if g.num_deltas > g.max_group_count:
        g.num_deltas = g.max_group_count
    g.accumulated += delay_delta
    g.smoothed = g.smoothing * g.smoothed + (1.0 - g.smoothing) * g.accumulated
    if g.tl_n < g.window:
        j = (g.tl_head + g.tl_n) % g.window
        g.tl_n += 1
    else:
        j = g.tl_head
        g.tl_head = (g.tl_head + 1) % g.window
    g.tl_x[j] = arrival_ms - g.first_arrival
    g.tl_y[j] = g.smoothed
    g.prev_slope = g.slope
    if g.tl_n == g.window:
        g.slope = tl_slope(g)


cdef int tl_add(Gcc* g, double send_ms, double recv_ms) nogil:
    cdef int produced = 0
    if g.group_first_send < 0:
        g.group_first_send = send_ms
        g.group_last_send = send_ms
        g.group_last_recv = recv_ms
        return 0
    if send_ms - g.group_first_send <= g.burst_group_ms:
        g.group_last_send = dmax(g.group_last_send, send_ms)
        g.group_last_recv = dmax(g.group_last_recv, recv_ms)
        return 0
    if g.prev_last_send >= 0:
        tl_update(g, (g.group_last_recv - g.prev_last_recv) - (g.group_last_send - g.prev_last_send),
                  g.group_last_recv)
        produced = 1
    g.prev_last_send = g.group_last_send
    g.prev_last_recv = g.group_last_recv
    g.group_first_send = send_ms
    g.group_last_send = send_ms
    g.group_last_recv = recv_ms
    return produced


cdef void det_threshold(Gcc* g, double trend, double now_ms) nogil:
    cdef double excess, k, dt
    if g.last_update_ms < 0:
        g.last_update_ms = now_ms
    excess = fabs(trend) - g.threshold
    if excess > 15.0:
        g.last_update_ms = now_ms
        return
    k = g.k_down if fabs(trend) < g.threshold else g.k_up
    dt = dmin(now_ms - g.last_update_ms, 100.0)
    g.threshold += k * excess * dt
    g.threshold = dmin(dmax(g.threshold, 6.0), 600.0)
    g.last_update_ms = now_ms


cdef int det_detect(Gcc* g, double trend, double group_delta, double now_ms) nogil:
    if trend > g.threshold:
        if g.time_over_using < 0:
            g.time_over_using = group_delta / 2.0
        else:
            g.time_over_using += group_delta
        g.overuse_counter += 1
        if g.time_over_using > g.overuse_time_ms and g.overuse_counter > 1 and g.slope >= g.prev_slope:
            g.time_over_using = 0.0
            g.overuse_counter = 0
            g.usage = 2
    elif trend < -g.threshold:
        g.time_over_using = -1.0
        g.overuse_counter = 0
        g.usage = 1
    else:
        g.time_over_using = -1.0
        g.overuse_counter = 0
        g.usage = 0
    det_threshold(g, trend, now_ms)
    return g.usage


cdef inline void gcc_clamp(Gcc* g) nogil:
    g.target = dmin(dmax(g.target, g.min_kbps), g.max_kbps)


cdef void gcc_apply_loss(Gcc* g, double now_ms) nogil:
    cdef long total
    cdef double loss
    if g.loss_window_start < 0:
        g.loss_window_start = now_ms
    if now_ms - g.loss_window_start < g.loss_interval_ms:
        return
    total = g.loss_received + g.loss_lost
    if total > 0:
        loss = <double>g.loss_lost / <double>total
        if loss > g.loss_high:
            g.target *= 1.0 - 0.5 * loss
            g.loss_hold = 1
        elif loss >= g.loss_low:
            g.loss_hold = 1
        else:
            g.loss_hold = 0
    g.loss_window_start = now_ms
    g.loss_received = 0
    g.loss_lost = 0
    gcc_clamp(g)


cdef void gcc_link_update(Gcc* g, double sample) nogil:
    cdef double norm, err
    if g.link_estimate < 0:
        g.link_estimate = sample
    else:
        g.link_estimate = 0.95 * g.link_estimate + 0.05 * sample
    norm = dmax(g.link_estimate, 1.0)
    err = g.link_estimate - sample
    g.link_var = 0.95 * g.link_var + 0.05 * err * err / norm
    g.link_var = dmin(dmax(g.link_var, 0.4), 2.5)


cdef void gcc_update_rate(Gcc* g, int usage, double now_ms, double received_kbps) nogil:
    cdef double dt_ms, spacing, decreased, response_ms
    if g.last_change_ms < 0:
        g.last_change_ms = now_ms
    dt_ms = now_ms - g.last_change_ms
    if usage == 2:
        g.rate_state = 2
        spacing = dmin(dmax(g.rtt, 10.0), 200.0)
        if received_kbps > 0 and (g.last_decrease_ms < 0 or now_ms - g.last_decrease_ms >= spacing):
            decreased = g.beta * received_kbps
            if decreased < g.target:
                g.target = decreased
            gcc_link_update(g, received_kbps)
            g.last_decrease_ms = now_ms
    elif usage == 1:
        g.rate_state = 1
    else:
        g.rate_state = 0
    if g.rate_state == 0 and not g.loss_hold:
        if g.link_estimate > 0 and received_kbps > g.link_estimate + 3 * sqrt(g.link_var * g.link_estimate):
            g.link_estimate = -1.0
        if g.link_estimate > 0:
            response_ms = g.rtt + 100.0
            g.target += 0.5 * g.packet_bits * dt_ms / response_ms / 1000.0
        else:
            g.target *= pow(g.mult, dmin(dt_ms / 1000.0, 1.0))
        if received_kbps > 0:
            g.target = dmin(g.target, 1.5 * received_kbps + 10.0)
    g.last_change_ms = now_ms
    gcc_clamp(g)


def simulate(delay_ms, capacity_kbps, loss_prob, blackout_ms, seg_limits, rand_u, cfg, gcc_cfg):
    cdef double[::1] c = np.ascontiguousarray(cfg, dtype=np.float64)
    cdef double tick = c[0], fps = c[1]
    cdef long mtu = <long>c[2]
    cdef double min_kbps = c[3], start_kbps = c[5], pacing_mult = c[6]
    cdef double fb_interval = c[7], window_ms = c[8], buffer_ms = c[9], min_buffer_bytes = c[10]
    cdef double outage_ms = c[11], pb_high = c[12], pb_low = c[13], rtt_window_ms = c[14]
    cdef int capture_ts = c[15] != 0, use_pushback = c[16] != 0, limit_mode = c[17] != 0

    cdef double[::1] dly = np.ascontiguousarray(delay_ms, dtype=np.float64)
    cdef double[::1] cap_s = np.ascontiguousarray(capacity_kbps, dtype=np.float64)
    cdef double[::1] lossp = np.ascontiguousarray(loss_prob, dtype=np.float64)
    cdef double[::1] bo = np.ascontiguousarray(np.sort(np.asarray(blackout_ms, dtype=np.float64)))
    cdef double[::1] lim_s = np.ascontiguousarray(seg_limits, dtype=np.float64)
    cdef double[::1] ru = np.ascontiguousarray(rand_u, dtype=np.float64)
    cdef long n_rand = ru.shape[0]
    cdef long duration_s = dly.shape[0]
    cdef long n_seg = lim_s.shape[0]
    cdef long n_bo = bo.shape[0]
    cdef long n_ticks = <long>round(duration_s * 1000.0 / tick)
    cdef double frame_interval = 1000.0 / fps
    cdef double seg_len_ms = 120000.0
    cdef long i

    for i in range(n_seg):
        if not 100.0 <= lim_s[i] <= 2000.0:
            raise ValueError(f"queue limit {lim_s[i]} ms outside [100, 2000]")

    # capacity bounds for the packet/frame tables
    cdef long max_frames = <long>ceil(duration_s * 1000.0 / frame_interval) + 2
    cdef double max_media = dmax(gcc_cfg.max_bitrate_kbps, dmax(min_kbps, start_kbps))
    cdef long max_npk = <long>ceil(<long>(max_media * frame_interval / 8.0) / <double>mtu) + 1
    cdef long max_pk = max_frames * max_npk

    p_size_a = np.zeros(max_pk, dtype=np.int64)
    p_frame_a = np.zeros(max_pk, dtype=np.int64)
    p_enq_a = np.zeros(max_pk, dtype=np.float64)
    p_send_a = np.full(max_pk, -1.0)
    p_arr_a = np.full(max_pk, -1.0)
    p_lost_a = np.zeros(max_pk, dtype=np.int8)
    p_bn_a = np.zeros(max_pk, dtype=np.int64)
    rw_t_a = np.zeros(max_pk, dtype=np.float64)
    rw_s_a = np.zeros(max_pk, dtype=np.int64)
    f_time_a = np.zeros(max_frames, dtype=np.float64)
    f_npk_a = np.zeros(max_frames, dtype=np.int64)
    f_got_a = np.zeros(max_frames, dtype=np.int64)
    f_bad_a = np.zeros(max_frames, dtype=np.int64)
    f_render_a = np.full(max_frames, -1.0)
    sec_target_a = np.zeros(duration_s, dtype=np.float64)
    sec_queue_a = np.zeros(duration_s, dtype=np.float64)
    n_fb_max = n_ticks + 2
    fb_arr_a = np.zeros(n_fb_max, dtype=np.float64)
    fb_lo_a = np.zeros(n_fb_max, dtype=np.int64)
    fb_hi_a = np.zeros(n_fb_max, dtype=np.int64)

    cdef long[::1] p_size = p_size_a
    cdef long[::1] p_frame = p_frame_a
    cdef double[::1] p_enq = p_enq_a
    cdef double[::1] p_send = p_send_a
    cdef double[::1] p_arr = p_arr_a
    cdef signed char[::1] p_lost = p_lost_a
    cdef long[::1] p_bn = p_bn_a
    cdef double[::1] rw_t = rw_t_a
    cdef long[::1] rw_s = rw_s_a
    cdef double[::1] f_time = f_time_a
    cdef long[::1] f_npk = f_npk_a
    cdef long[::1] f_got = f_got_a
    cdef long[::1] f_bad = f_bad_a
    cdef double[::1] f_render = f_render_a
    cdef double[::1] sec_target = sec_target_a
    cdef double[::1] sec_queue = sec_queue_a
    cdef double[::1] fb_arr_q = fb_arr_a
    cdef long[::1] fb_lo_q = fb_lo_a
    cdef long[::1] fb_hi_q = fb_hi_a

    cdef Gcc g
    gcc_init(&g, gcc_cfg)

    # pacer: FIFO over the contiguous id range [q_head, n_pk)
    cdef long q_head = 0
    cdef long queued_bytes = 0
    cdef double media_rate = start_kbps
    cdef double budget = 0.0
    cdef int limit_active = 0
    cdef double limit = lim_s[0]
    cdef double pacing_rate, drain_rate, rate, tick_bytes

    cdef double target = start_kbps
    cdef double pushback = 1.0
    cdef double next_frame_ms = 0.0
    cdef long n_pk = 0, n_fr = 0
    cdef long bn_head = 0, bn_bytes = 0
    cdef double bn_credit = 0.0
    cdef long rx_head = 0
    cdef double last_arr = 0.0
    cdef long fb_lo = 0
    cdef double next_fb_ms = fb_interval
    cdef long fbq_head = 0, fbq_tail = 0
    cdef double last_fb_arr = 0.0
    cdef double in_flight = 0.0
    cdef double rtt = 100.0, sample
    cdef double min_rtt_cur = INFINITY, min_rtt_prev = INFINITY, min_rtt
    cdef double rtt_block_start = 0.0
    cdef long rand_i = 0, bo_i = 0
    cdef double last_fb_rx = 0.0, last_timeout_cut = 0.0
    cdef double fb_timeout = gcc_cfg.feedback_timeout_ms
    cdef double timeout_factor = gcc_cfg.timeout_factor
    cdef long conservation_errors = 0
    cdef long sent_pkts = 0, delivered_pkts = 0, lost_pkts = 0
    cdef long k, sec, seg, lo, hi, j, fid, npk, size, psize, pid, need, s_idx, in_queue, in_net
    cdef double now, window, fill, ts, cap, buf_limit, wrate, arr, fb_arr, recv_kbps, u
    cdef int usage, dark, produced
    cdef double prev_send, group_delta
    cdef long fb_batch_received

    for k in range(1, n_ticks + 1):
        now = k * tick
        sec = <long>((now - tick) // 1000.0)
        if sec > duration_s - 1:
            sec = duration_s - 1
        seg = <long>((now - tick) // seg_len_ms)
        if seg > n_seg - 1:
            seg = n_seg - 1
        limit = lim_s[seg]

        # 1. feedback reaching the sender
        while fbq_head < fbq_tail and fb_arr_q[fbq_head] <= now:
            lo = fb_lo_q[fbq_head]
            hi = fb_hi_q[fbq_head]
            fbq_head += 1
            last_fb_rx = now
            for i in range(lo, hi):
                in_flight -= p_size[i]
            sample = now - p_send[hi - 1]
            rtt = sample if rtt <= 0 else 0.875 * rtt + 0.125 * sample
            if now - rtt_block_start >= rtt_window_ms:
                min_rtt_prev = min_rtt_cur
                min_rtt_cur = INFINITY
                rtt_block_start = now
            min_rtt_cur = dmin(min_rtt_cur, sample)
            # congestion controller
            g.rtt = rtt
            usage = g.usage
            for i in range(lo, hi):
                if p_lost[i]:
                    g.loss_lost += 1
                    continue
                g.loss_received += 1
                rw_t[g.rw_tail] = p_arr[i]
                rw_s[g.rw_tail] = p_size[i]
                g.rw_tail += 1
                g.rw_bytes += p_size[i]
                g.last_recv_ms = dmax(g.last_recv_ms, p_arr[i])
                ts = p_enq[i] if capture_ts else p_send[i]
                prev_send = g.prev_last_send
                if tl_add(&g, ts, p_arr[i]):
                    group_delta = g.prev_last_send - prev_send
                    usage = det_detect(&g, g.num_deltas * g.slope * g.gain, group_delta, p_arr[i])
            gcc_apply_loss(&g, now)
            while g.rw_head < g.rw_tail and rw_t[g.rw_head] <= g.last_recv_ms - g.rate_window_ms:
                g.rw_bytes -= rw_s[g.rw_head]
                g.rw_head += 1
            if g.rw_head < g.rw_tail:
                recv_kbps = g.rw_bytes * 8.0 / g.rate_window_ms
            else:
                recv_kbps = 0.0
            gcc_update_rate(&g, usage, now, recv_kbps)
            target = g.target

            min_rtt = dmin(min_rtt_cur, min_rtt_prev)
            window = target * (min_rtt + window_ms) / 8.0
            fill = (in_flight + queued_bytes) / window
            if not use_pushback:
                pushback = 1.0
            elif fill > pb_high:
                pushback *= 0.9
            elif fill > 1.0:
                pushback *= 0.95
            elif fill < pb_low:
                pushback = 1.0
            else:
                pushback = dmin(1.0, pushback * 1.05)
            media_rate = dmax(min_kbps, target * pushback)

        if now - last_fb_rx >= fb_timeout and now - last_timeout_cut >= fb_timeout:
            g.target = g.target * timeout_factor
            gcc_clamp(&g)
            target = g.target
            last_timeout_cut = now
            media_rate = dmax(min_kbps, target * pushback)

        # 2. encoder
        while next_frame_ms < now:
            size = <long>(media_rate * frame_interval / 8.0)
            npk = (size + mtu - 1) // mtu
            if npk < 1:
                npk = 1
            psize = (size + npk - 1) // npk
            fid = n_fr
            f_time[fid] = next_frame_ms
            f_npk[fid] = npk
            n_fr += 1
            for j in range(npk):
                pid = n_pk
                p_size[pid] = psize
                p_frame[pid] = fid
                p_enq[pid] = next_frame_ms
                n_pk += 1
                queued_bytes += psize
                sent_pkts += 1
            next_frame_ms += frame_interval

        # 3. pacer -> bottleneck (drop-tail)
        min_rtt = dmin(min_rtt_cur, min_rtt_prev)
        if min_rtt == INFINITY:
            min_rtt = rtt
        window = target * (min_rtt + window_ms) / 8.0
        cap = cap_s[sec]
        buf_limit = dmax(cap * buffer_ms / 8.0, min_buffer_bytes)
        wrate = window * 8.0 / dmax(rtt, 1.0) if limit_mode else INFINITY
        if q_head == n_pk:
            budget = 0.0
            limit_active = 0
        else:
            pacing_rate = pacing_mult * media_rate
            drain_rate = dmin(pacing_rate, wrate)
            rate = pacing_rate
            if queued_bytes * 8.0 / drain_rate > limit:
                rate = dmax(rate, queued_bytes * 8.0 / limit)
            limit_active = queued_bytes * 8.0 / drain_rate > limit
            tick_bytes = rate * tick / 8.0
            budget = dmin(budget + tick_bytes, 2.0 * tick_bytes)
            while q_head < n_pk and budget > 0.0:
                pid = q_head
                if not limit_active and in_flight + p_size[pid] > window:
                    break
                q_head += 1
                queued_bytes -= p_size[pid]
                budget -= p_size[pid]
                p_send[pid] = now
                in_flight += p_size[pid]
                if bn_bytes + p_size[pid] > buf_limit:
                    p_lost[pid] = 1
                    p_bn[pid] = 0
                else:
                    p_bn[pid] = p_size[pid]
                    bn_bytes += p_size[pid]
            if q_head == n_pk:
                budget = dmin(budget, 0.0)

        # 4. bottleneck service
        while bo_i < n_bo and bo[bo_i] + outage_ms <= now - tick:
            bo_i += 1
        dark = bo_i < n_bo and bo[bo_i] < now and now - tick < bo[bo_i] + outage_ms
        if not dark:
            bn_credit += cap * tick / 8.0
        while bn_head < n_pk and p_send[bn_head] >= 0:
            need = p_bn[bn_head]
            if need > 0 and bn_credit < need:
                break
            bn_credit -= need
            bn_bytes -= need
            arr = now + dly[sec]
            if arr < last_arr:
                arr = last_arr
            last_arr = arr
            p_arr[bn_head] = arr
            if not p_lost[bn_head]:
                u = ru[rand_i % n_rand]
                rand_i += 1
                if u < lossp[sec]:
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
                fb_arr = now + dly[sec]
                if fb_arr < last_fb_arr:
                    fb_arr = last_fb_arr
                last_fb_arr = fb_arr
                fb_arr_q[fbq_tail] = fb_arr
                fb_lo_q[fbq_tail] = fb_lo
                fb_hi_q[fbq_tail] = rx_head
                fbq_tail += 1
                fb_lo = rx_head
            next_fb_ms += fb_interval

        # 7. bookkeeping
        in_queue = n_pk - q_head
        in_net = n_pk - in_queue - rx_head
        if sent_pkts != delivered_pkts + lost_pkts + in_net + in_queue:
            conservation_errors += 1
        if (k * tick) % 1000.0 == 0.0:
            s_idx = <long>(k * tick // 1000.0) - 1
            sec_target[s_idx] = media_rate
            sec_queue[s_idx] = queued_bytes * 8.0 / (pacing_mult * media_rate) if queued_bytes > 0 else 0.0

    recv_a = np.zeros(n_pk, dtype=np.int8)
    recv_a[:rx_head] = 1
    return {
        "p_size": p_size_a[:n_pk].copy(),
        "p_enq": p_enq_a[:n_pk].copy(),
        "p_send": p_send_a[:n_pk].copy(),
        "p_arr": p_arr_a[:n_pk].copy(),
        "p_lost": p_lost_a[:n_pk].copy(),
        "p_recv": recv_a,
        "f_time": f_time_a[:n_fr].copy(),
        "f_render": f_render_a[:n_fr].copy(),
        "sec_target": sec_target_a,
        "sec_queue_ms": sec_queue_a,
        "conservation_errors": int(conservation_errors),
    }
