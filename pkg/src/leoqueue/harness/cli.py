"""Command-line entry point: ``leoqueue <subcommand> [--config PATH] [--seed N] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..policy.persist import load_expert, load_policy, save_expert, save_policy
from ..policy.train import Hyperparams
from ..rtc.call import CALL_COLUMNS, call_row, run_call, write_csv
from . import pipeline
from .policies import ExpertQueuePolicy, FixedQueuePolicy, LearnedQueuePolicy, RandomQueuePolicy
from .scenario import PRESETS, call_env, load_config

log = logging.getLogger("leoqueue")


def _scenarios(args):
    if args.config:
        cfg = load_config(args.config)
        cfgs = [cfg]
    else:
        names = [args.scenario] if args.scenario != "both" else ["ideal", "dynamic"]
        cfgs = [PRESETS[n] for n in names]
    if args.seed is not None:
        cfgs = [c.with_(seed=args.seed) for c in cfgs]
    return cfgs


def _calls(args, cfg) -> int:
    return args.calls if args.calls is not None else cfg.calls


def cmd_simulate(args, out: Path) -> None:
    cfg = _scenarios(args)[0]
    env = call_env(cfg, args.call_id)
    pol = RandomQueuePolicy(seed=env.seed) if args.limit is None and args.random else FixedQueuePolicy(args.limit or 2000.0)
    m = run_call(env.trace, pol, seed=env.seed, config=cfg.rtc)
    env.trace.to_csv(out / "trace.csv")
    write_csv(out / "metrics.csv", CALL_COLUMNS, [call_row(args.call_id, cfg.name, pol.name, m)])
    print(f"{cfg.name} call {args.call_id} ({env.src} -> {env.dst}, {len(env.trace.handover_seconds)} handovers): "
          f"bitrate {m.avg_bitrate_mbps:.3f} Mbps, freezes {m.freeze_rate_per_min:.2f}/min, "
          f"delay {m.e2e_delay_ms:.1f} ms, loss {100 * m.packet_loss_frac:.2f}%")


def cmd_collect(args, out: Path) -> None:
    paths = []
    for cfg in _scenarios(args):
        p = out / f"dataset_{cfg.name}.csv"
        res = pipeline.collect(cfg, _calls(args, cfg), p, workers=args.workers)
        paths.append(p)
        print(f"{cfg.name}: {len(res.rows)} segments from {res.calls - res.skipped} calls "
              f"({res.skipped} skipped) -> {p}")
    if len(paths) > 1:
        merged = out / "dataset.csv"
        lines = [paths[0].read_text().splitlines()[0]]
        for p in paths:
            lines += p.read_text().splitlines()[1:]
        merged.write_text("\n".join(lines) + "\n")
        print(f"merged -> {merged}")


def _datasets(paths):
    exps = []
    for p in paths:
        exps += pipeline.load_dataset(p)
    return exps


def cmd_cluster(args, out: Path) -> None:
    exps = _datasets(args.dataset)
    table, scaling = pipeline.cluster(exps, k=args.k, seed=args.seed or 0)
    save_expert(table, out / "expert")
    pipeline.save_json(out / "dataset_scaling.json", scaling)
    print(f"expert labels {table.labels} from {len(exps)} segments -> {out / 'expert'}.json")


def cmd_train(args, out: Path) -> None:
    exps = _datasets(args.dataset)
    table = load_expert(args.expert)
    hp = Hyperparams(epochs=args.epochs, folds=args.folds, seed=args.seed or 0)
    res = pipeline.train_policy(exps, table, hp, max_samples=args.max_samples)
    save_policy(res.model, out / "policy")
    res.write_log(out / "train_log.csv")
    cv = f", cv accuracy {res.cv_accuracy:.3f}" if res.fold_accuracy else ""
    print(f"trained on {min(len(exps), args.max_samples or len(exps))} segments{cv} -> {out / 'policy'}.json")


def cmd_evaluate(args, out: Path) -> None:
    policies = {"default": FixedQueuePolicy(args.baseline_limit)}
    for lim in args.fixed:
        policies[f"fixed{int(lim)}"] = FixedQueuePolicy(lim)
    if args.expert:
        policies["expert"] = ExpertQueuePolicy(load_expert(args.expert))
    if args.policy:
        policies["learned"] = LearnedQueuePolicy(load_policy(args.policy))
    if len(policies) < 2:
        raise ValueError("evaluate needs --policy, --expert or --fixed to compare against the default")
    for cfg in _scenarios(args):
        rep = pipeline.evaluate(cfg, policies, _calls(args, cfg), workers=args.workers)
        rep.write(out / cfg.name, plots=args.plots)
        print(rep.summary_text())


def cmd_stats(args, out: Path) -> None:
    stats = {}
    for cfg in _scenarios(args):
        s = pipeline.handover_stats(cfg, _calls(args, cfg), args.horizon)
        s.write(out)
        stats[cfg.name] = s
        hist = dict(enumerate(int(x) for x in np.bincount(s.counts)))
        print(f"{cfg.name}: handovers per call {hist}; {100 * s.fraction_at_most(1):.1f}% with 0-1")
    if args.plots:
        pipeline.plot_handovers(stats, out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario YAML file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--scenario", choices=["ideal", "dynamic", "both"], default="ideal")
    common.add_argument("--calls", type=int, default=None)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="leoqueue", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run one call and dump trace + metrics")
    s.add_argument("--call-id", type=int, default=0)
    s.add_argument("--limit", type=float, default=None, help="fixed queue limit in ms (default 2000)")
    s.add_argument("--random", action="store_true", help="use the random collection policy")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("collect", parents=[common], help="collect segments with the random policy")
    s.set_defaults(fn=cmd_collect)

    s = sub.add_parser("cluster", parents=[common], help="build and persist the expert table")
    s.add_argument("--dataset", type=Path, nargs="+", required=True)
    s.add_argument("--k", type=int, default=4)
    s.set_defaults(fn=cmd_cluster)

    s = sub.add_parser("train", parents=[common], help="train the imitation policy")
    s.add_argument("--dataset", type=Path, nargs="+", required=True)
    s.add_argument("--expert", type=Path, required=True, help="expert stem (without .json)")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--max-samples", type=int, default=None)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="paired A/B against the default limit")
    s.add_argument("--policy", type=Path, help="trained policy stem")
    s.add_argument("--expert", type=Path, help="expert stem")
    s.add_argument("--fixed", type=float, nargs="*", default=[], help="extra fixed-limit arms (ms)")
    s.add_argument("--baseline-limit", type=float, default=2000.0)
    s.add_argument("--plots", action="store_true")
    s.set_defaults(fn=cmd_evaluate)

    s = sub.add_parser("stats", parents=[common], help="handover count and inter-handover distributions")
    s.add_argument("--horizon", type=int, default=None, help="seconds per sampled window")
    s.add_argument("--plots", action="store_true")
    s.set_defaults(fn=cmd_stats)
    return p


def _stem(p: Path) -> Path:
    return p.with_suffix("") if p.suffix in (".json", ".bin") else p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for attr in ("expert", "policy"):
        if getattr(args, attr, None) is not None:
            setattr(args, attr, _stem(getattr(args, attr)))
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        args.fn(args, args.out)
    except KeyboardInterrupt:
        print("leoqueue: interrupted", file=sys.stderr)
        return 130
    except Exception as e:
        if args.verbose:
            log.exception("failed")
        msg = str(e).splitlines()[0] if str(e) else ""
        print(f"leoqueue {args.command}: error: {type(e).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
