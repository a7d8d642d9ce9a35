import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leoqueue.netsim import LinkParams, LinkTrace, build_link_trace
from leoqueue.orbital import ServingSchedule


def _sched(sid, delay=40.0):
    sid = np.asarray(sid)
    return ServingSchedule(len(sid), sid, np.full(len(sid), delay))


def test_no_handover_no_outage():
    tr = build_link_trace(_sched([5] * 300), LinkParams(), seed=1)
    assert not tr.outage.any() and tr.handover_seconds.size == 0
    assert np.all(tr.loss_prob == 0.01) and np.all(tr.delay_ms == 40.0)


def test_single_handover_window():
    sid = [1] * 100 + [2] * 200
    tr = build_link_trace(_sched(sid), LinkParams(handover_outage_ms=400), seed=1)
    assert list(np.flatnonzero(tr.outage)) == [100]
    assert list(tr.handover_seconds) == [100]
    assert tr.delay_ms[100] == pytest.approx(140.0)
    assert tr.loss_prob[100] == pytest.approx(0.11)
    assert tr.delay_ms[99] == 40.0 and tr.delay_ms[101] == 40.0


def test_long_outage_spans_ceil_seconds():
    sid = [1] * 50 + [2] * 50
    tr = build_link_trace(_sched(sid), LinkParams(handover_outage_ms=1500), seed=0)
    assert list(np.flatnonzero(tr.outage)) == [50, 51]


def test_loss_capped_at_one():
    tr = build_link_trace(_sched([1, 1, 2, 2]), LinkParams(loss_rate=0.95), seed=0)
    assert tr.loss_prob[2] == 1.0


def test_no_coverage_zero_capacity():
    tr = build_link_trace(_sched([-1, -1, 3, 3]), LinkParams(), seed=0)
    assert tr.capacity_kbps[0] == 0 and tr.capacity_kbps[1] == 0 and tr.capacity_kbps[2] > 0
    assert tr.handover_seconds.size == 0


def test_determinism():
    s = _sched([1] * 60 + [2] * 60)
    a = build_link_trace(s, LinkParams(), seed=7)
    b = build_link_trace(s, LinkParams(), seed=7)
    assert a.to_csv() == b.to_csv()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), seed2=st.integers(0, 2 ** 31),
       sid=st.lists(st.integers(-1, 4), min_size=1, max_size=200),
       jitter=st.floats(0, 0.5), access=st.floats(0.5, 20))
def test_trace_properties(seed, seed2, sid, jitter, access):
    p = LinkParams(access_capacity_mbps=access, capacity_jitter_frac=jitter)
    s = _sched(sid)
    tr = build_link_trace(s, p, seed)
    covered = tr.serving_sat_id >= 0
    cap = tr.capacity_kbps[covered]
    assert np.all(cap >= access * 1000 * (1 - jitter) - 1e-9)
    assert np.all(cap <= access * 1000 * (1 + jitter) + 1e-9)
    # one outage window per handover (windows may merge when handovers are adjacent)
    width = math.ceil(p.handover_outage_ms / 1000)
    expect = np.zeros(len(sid), bool)
    for h in tr.handover_seconds:
        expect[h:h + width] = True
    assert np.array_equal(expect, tr.outage)
    sid_a = np.asarray(sid)
    valid = (sid_a[:-1] >= 0) & (sid_a[1:] >= 0) & (sid_a[:-1] != sid_a[1:])
    assert tr.handover_seconds.size == valid.sum()
    other = build_link_trace(s, p, seed2)
    assert np.array_equal(other.delay_ms, tr.delay_ms)
    assert np.array_equal(other.handover_seconds, tr.handover_seconds)


def test_seed_changes_jitter():
    s = _sched([1] * 50)
    assert not np.array_equal(build_link_trace(s, LinkParams(), 1).capacity_kbps,
                              build_link_trace(s, LinkParams(), 2).capacity_kbps)


def test_csv_round_trip(tmp_path):
    tr = build_link_trace(_sched([1] * 30 + [2] * 30 + [-1] * 5), LinkParams(), seed=3)
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    back = LinkTrace.from_csv(path)
    assert back.to_csv() == tr.to_csv()
    assert list(back.handover_seconds) == [30]
    assert path.read_text().splitlines()[0] == "t,serving_sat_id,delay_ms,capacity_kbps,loss_prob,outage"


def test_params_validation():
    with pytest.raises(ValueError):
        LinkParams(loss_rate=1.0)
    with pytest.raises(ValueError):
        LinkParams(access_capacity_mbps=0)
    with pytest.raises(ValueError):
        LinkParams(handover_outage_ms=-1)
