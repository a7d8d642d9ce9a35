"""Wall-clock comparison of the compiled and pure-Python call kernels.

    python benchmarks/bench_kernel.py [--calls N]
"""

import argparse
import time

import numpy as np

from leoqueue.harness import DYNAMIC, IDEAL, call_env
from leoqueue.rtc import _core_py
from leoqueue.rtc.call import FixedQueuePolicy, run_call

try:
    from leoqueue.rtc import _core
except ImportError:
    _core = None


def bench(sim, envs, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        for e in envs:
            run_call(e.trace, FixedQueuePolicy(2000), e.seed, simulate=sim)
        times.append((time.perf_counter() - t) / len(envs))
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--calls", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    for cfg in (IDEAL, DYNAMIC):
        envs = [call_env(cfg, i) for i in range(args.calls)]
        py = bench(_core_py.simulate, envs, 1)
        line = f"{cfg.name:8s} {cfg.call_duration_s} s call: python {py * 1e3:8.1f} ms"
        if _core is not None:
            c = bench(_core.simulate, envs, args.repeat)
            line += f"  compiled {c * 1e3:7.2f} ms  speedup {py / c:6.1f}x"
        else:
            line += "  (compiled core not built)"
        print(line)


if __name__ == "__main__":
    main()
