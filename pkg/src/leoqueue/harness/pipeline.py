"""Collection, expert construction, training and paired evaluation."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..policy.expert import ExpertTable, build_expert, expert_actions
from ..policy.state import (ACTIONS_MS, SEGMENT_S, Experience, QoEWeights, SegmentState,
                            normalize_dataset)
from ..policy.train import Hyperparams, TrainResult, train
from ..rtc.call import (CALL_COLUMNS, SEGMENT_COLUMNS, CallMetrics, call_row, run_call,
                        segment_rows, write_csv)
from .policies import RandomQueuePolicy
from .scenario import ScenarioConfig, call_env

log = logging.getLogger(__name__)

METRICS = ("avg_bitrate_mbps", "freeze_rate_per_min", "e2e_delay_ms", "packet_loss_frac")


class DatasetSchemaError(ValueError):
    pass


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, items, chunksize=8))


# --- collection -------------------------------------------------------------

@dataclass
class CollectResult:
    path: Path | None
    rows: list
    calls: int
    skipped: int


def _collect_one(args):
    cfg, call_id = args
    try:
        env = call_env(cfg, call_id)
        m = run_call(env.trace, RandomQueuePolicy(seed=env.seed), seed=env.seed, config=cfg.rtc)
        return segment_rows(call_id, m, env.trace), None
    except Exception as e:  # degenerate geometry etc: skip the call
        return None, f"call {call_id}: {type(e).__name__}: {e}"


def collect(cfg: ScenarioConfig, n_calls: int, out_path=None, workers: int = 1) -> CollectResult:
    if n_calls < 1:
        raise ValueError("n_calls must be >= 1")
    results = _map(_collect_one, [(cfg, i) for i in range(n_calls)], workers)
    rows, skipped = [], 0
    for r, err in results:
        if err:
            skipped += 1
            log.warning("skipped %s", err)
        else:
            rows.extend(r)
    rows.sort(key=lambda r: (r[0], r[1]))
    if skipped:
        log.warning("%d of %d calls skipped", skipped, n_calls)
    path = None
    if out_path is not None:
        path = Path(out_path)
        write_csv(path, SEGMENT_COLUMNS, rows)
    return CollectResult(path, rows, n_calls, skipped)


def load_dataset(path) -> list[Experience]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SEGMENT_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
            raise DatasetSchemaError(f"{path}: dataset missing {len(missing)} column(s): {shown}")
        out = []
        for row in reader:
            h = np.array([float(row[f"h{t}"]) for t in range(SEGMENT_S)])
            out.append(Experience(SegmentState.from_handovers(h), float(row["action_queue_ms"]),
                                  float(row["raw_bitrate_mbps"]), float(row["raw_freeze_per_min"])))
    if not out:
        raise DatasetSchemaError(f"{path}: dataset has no rows")
    return out


# --- expert and policy --------------------------------------------------------

def cluster(experiences: list[Experience], k: int = 4, w: QoEWeights = QoEWeights(),
            seed: int = 0) -> tuple[ExpertTable, dict]:
    scaling = normalize_dataset(experiences, w)
    return build_expert(experiences, k, w, seed), scaling


def expert_labels(table: ExpertTable, experiences: list[Experience]) -> np.ndarray:
    feats = np.array([e.state.features() for e in experiences])
    return expert_actions(table, feats)


def train_policy(experiences: list[Experience], table: ExpertTable, hp: Hyperparams = Hyperparams(),
                 max_samples: int | None = None) -> TrainResult:
    """Imitate the expert on the dataset states.

    ``max_samples`` draws a seeded subset (without replacement) to bound cost.
    """
    exps = experiences
    if max_samples is not None and len(exps) > max_samples:
        idx = np.sort(np.random.default_rng(hp.seed).choice(len(exps), max_samples, replace=False))
        exps = [exps[i] for i in idx]
    labels = expert_labels(table, exps)
    return train([e.state for e in exps], labels, hp)


# --- evaluation ---------------------------------------------------------------

def _summary(x: np.ndarray) -> dict:
    return {"mean": float(np.mean(x)), "median": float(np.median(x)),
            "p10": float(np.percentile(x, 10)), "p90": float(np.percentile(x, 90))}


def inter_handover_times(traces) -> np.ndarray:
    gaps = [np.diff(np.asarray(t.handover_seconds)) for t in traces]
    return np.concatenate(gaps).astype(float) if gaps else np.zeros(0)


def handover_histogram(times: np.ndarray, bin_s: float = 30.0, max_s: float | None = None):
    top = max_s if max_s is not None else max(bin_s, float(times.max()) if times.size else bin_s)
    edges = np.arange(0.0, top + bin_s, bin_s)
    counts, edges = np.histogram(times, bins=edges)
    return counts, edges


@dataclass
class EvalReport:
    scenario: str
    arms: dict[str, list[CallMetrics]]
    call_ids: list[int]
    handover_counts: np.ndarray
    inter_handover_s: np.ndarray
    baseline: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.arms or any(len(v) == 0 for v in self.arms.values()):
            raise ValueError("every arm needs at least one call")
        self.baseline = self.baseline or next(iter(self.arms))

    def values(self, arm: str, metric: str) -> np.ndarray:
        return np.array([getattr(m, metric) for m in self.arms[arm]], dtype=float)

    def aggregate(self, arm: str) -> dict:
        return {k: _summary(self.values(arm, k)) for k in METRICS}

    def mean(self, arm: str, metric: str) -> float:
        return float(self.values(arm, metric).mean())

    def relative_delta(self, arm: str, metric: str, baseline: str | None = None) -> float:
        b = self.mean(baseline or self.baseline, metric)
        a = self.mean(arm, metric)
        if b == 0:
            return 0.0 if a == 0 else float("inf")
        return (a - b) / b

    def action_histogram(self, arm: str) -> dict[int, int]:
        c = Counter(int(s.action_queue_ms) for m in self.arms[arm] for s in m.per_segment)
        return dict(sorted(c.items()))

    def summary_text(self) -> str:
        lines = [f"scenario {self.scenario}: {len(self.call_ids)} paired calls, baseline {self.baseline}"]
        for arm in self.arms:
            parts = []
            for k in METRICS:
                parts.append(f"{k}={self.mean(arm, k):.4g}")
                if arm != self.baseline:
                    parts[-1] += f" ({100 * self.relative_delta(arm, k):+.1f}%)"
            lines.append(f"  {arm}: " + ", ".join(parts))
            lines.append(f"    actions: {self.action_histogram(arm)}")
        hc = np.bincount(self.handover_counts) if self.handover_counts.size else []
        lines.append(f"  handovers per call: {dict(enumerate(int(x) for x in hc))}")
        return "\n".join(lines)

    def write(self, out_dir, plots: bool = False) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = []
        for arm in self.arms:
            agg = self.aggregate(arm)
            for k in METRICS:
                rows.append([arm, k] + [repr(agg[k][s]) for s in ("mean", "median", "p10", "p90")]
                            + [repr(self.relative_delta(arm, k))])
        paths = [out / "report.csv", out / "calls.csv", out / "summary.txt", out / "handover_hist.csv"]
        write_csv(paths[0], ("policy", "metric", "mean", "median", "p10", "p90", "rel_delta"), rows)
        write_csv(paths[1], CALL_COLUMNS, [call_row(cid, self.scenario, arm, m)
                                           for arm, ms in self.arms.items()
                                           for cid, m in zip(self.call_ids, ms)])
        paths[2].write_text(self.summary_text() + "\n")
        counts, edges = handover_histogram(self.inter_handover_s)
        write_csv(paths[3], ("bin_start_s", "bin_end_s", "count"),
                  [[repr(float(a)), repr(float(b)), int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)])
        if plots:
            paths += plot_report(self, out)
        return paths


def _eval_one(args):
    cfg, call_id, policies = args
    try:
        env = call_env(cfg, call_id)
    except Exception as e:
        return call_id, None, None, f"{type(e).__name__}: {e}"
    out = {}
    for name, pol in policies.items():
        out[name] = run_call(env.trace, pol, seed=env.seed, config=cfg.rtc)
    return call_id, out, env.trace, None


def evaluate(cfg: ScenarioConfig, policies: dict, n_calls: int, workers: int = 1,
             baseline: str | None = None) -> EvalReport:
    """Paired A/B: every arm runs on the same trace and kernel seed per call."""
    if len(policies) < 2:
        raise ValueError("evaluate needs at least two policies")
    results = _map(_eval_one, [(cfg, i, policies) for i in range(n_calls)], workers)
    arms = {name: [] for name in policies}
    ids, traces = [], []
    for cid, out, trace, err in results:
        if err:
            log.warning("skipped call %d: %s", cid, err)
            continue
        ids.append(cid)
        traces.append(trace)
        for name in policies:
            arms[name].append(out[name])
    counts = np.array([len(t.handover_seconds) for t in traces], dtype=int)
    return EvalReport(cfg.name, arms, ids, counts, inter_handover_times(traces), baseline or "")


# --- handover statistics -----------------------------------------------------

@dataclass
class HandoverStats:
    scenario: str
    counts: np.ndarray
    inter_handover_s: np.ndarray

    def fraction_at_most(self, k: int) -> float:
        return float((self.counts <= k).mean())

    def write(self, out_dir, plots: bool = False) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        p1, p2 = out / f"handover_counts_{self.scenario}.csv", out / f"inter_handover_{self.scenario}.csv"
        bc = np.bincount(self.counts) if self.counts.size else np.zeros(0, int)
        write_csv(p1, ("handovers", "calls"), [[i, int(c)] for i, c in enumerate(bc)])
        counts, edges = handover_histogram(self.inter_handover_s)
        write_csv(p2, ("bin_start_s", "bin_end_s", "count"),
                  [[repr(float(a)), repr(float(b)), int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)])
        paths = [p1, p2]
        if plots:
            paths += plot_handovers({self.scenario: self}, out)
        return paths


def handover_stats(cfg: ScenarioConfig, n_calls: int, horizon_s: int | None = None) -> HandoverStats:
    if horizon_s is not None:
        cfg = cfg.with_(call_duration_s=int(horizon_s))
    counts, traces = [], []
    for i in range(n_calls):
        tr = call_env(cfg, i).trace
        traces.append(tr)
        counts.append(len(tr.handover_seconds))
    return HandoverStats(cfg.name, np.array(counts, dtype=int), inter_handover_times(traces))


# --- optional plots ------------------------------------------------------------

def _pyplot():
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        return plt
    except ImportError:
        log.warning("matplotlib not installed; skipping plots")
        return None


def plot_report(report: EvalReport, out: Path) -> list[Path]:
    plt = _pyplot()
    if plt is None:
        return []
    fig, axes = plt.subplots(1, 4, figsize=(16, 3.5))
    for ax, k in zip(axes, METRICS):
        for arm in report.arms:
            v = np.sort(report.values(arm, k))
            ax.plot(v, np.linspace(0, 1, v.size), label=arm)
        ax.set_xlabel(k)
    axes[0].set_ylabel("CDF")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    p = out / f"metrics_{report.scenario}.png"
    fig.savefig(p, dpi=100)
    plt.close(fig)
    return [p]


def plot_handovers(stats: dict[str, HandoverStats], out: Path) -> list[Path]:
    plt = _pyplot()
    if plt is None:
        return []
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, s in stats.items():
        if s.inter_handover_s.size:
            ax.hist(s.inter_handover_s / 60.0, bins=30, histtype="step", density=True, label=name)
    ax.set_xlabel("inter-handover time (min)")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    p = out / ("inter_handover_" + "_".join(stats) + ".png")
    fig.savefig(p, dpi=100)
    plt.close(fig)
    return [p]


def save_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
