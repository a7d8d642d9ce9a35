"""Compiled kernel vs pure-Python reference: bit-identical outputs."""

import numpy as np
import pytest

from leoqueue.harness import DYNAMIC, IDEAL, call_env
from leoqueue.rtc import kernel, _core_py
from leoqueue.rtc.call import RtcConfig, _uniforms

_core = pytest.importorskip("leoqueue.rtc._core")


def _run(sim, trace, limits, seed, cfg=RtcConfig()):
    return sim(trace.delay_ms, trace.capacity_kbps, trace.loss_prob, trace.blackout_starts_ms,
               limits, _uniforms(trace.duration, seed), cfg.vector(trace.outage_ms), cfg.gcc_config())


def test_compiled_selected_when_built():
    assert kernel.compiled_available()
    assert kernel.KERNEL in ("compiled", "python")


@pytest.mark.parametrize("scenario,call_id,limits", [
    (IDEAL, 0, [2000] * 4),
    (IDEAL, 5, [500, 2000, 900, 100]),
    (DYNAMIC, 1, [600, 600, 2000, 500]),
    (DYNAMIC, 7, [100, 1400, 300, 1800]),
])
def test_bit_identical(scenario, call_id, limits):
    env = call_env(scenario, call_id)
    a = _run(_core.simulate, env.trace, limits, env.seed)
    b = _run(_core_py.simulate, env.trace, limits, env.seed)
    assert a.keys() == b.keys()
    for k in a:
        if isinstance(a[k], np.ndarray):
            assert a[k].shape == b[k].shape, k
            assert np.array_equal(a[k], b[k]), k
        else:
            assert a[k] == b[k], k
    assert a["conservation_errors"] == 0


def test_bit_identical_alternate_config():
    cfg = RtcConfig(use_pushback=True, cc_capture_ts=True, window_ms=30.0, limit_mode=False)
    env = call_env(IDEAL, 2)
    a = _run(_core.simulate, env.trace, [900] * 4, 3, cfg)
    b = _run(_core_py.simulate, env.trace, [900] * 4, 3, cfg)
    for k in ("p_arr", "p_lost", "f_render", "sec_target"):
        assert np.array_equal(a[k], b[k]), k
