"""Command-line entry point: ``flownav {synth-flow,train,eval,compare}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import env as nav
from .config import ALGOS, RunConfig
from .flowfield import save_flow, save_flow_text
from .metrics import compare_runs, export_action_stats, export_trajectory, format_table
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.policy import FfPolicyNet, PolicyNet
from .ppo import train
from .rollout import evaluate_actor, net_actor, run_episode
from .td3 import Td3Nets, actor_policy, td3_train

log = logging.getLogger("flownav")

TRAIN_LOG_FIELDS = ("algo", "episode", "reward", "length", "outcome")
EVAL_LOG_FIELDS = ("algo", "batch", "episode", "SR", "CR", "mean_reward")


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


class _CsvLog:
    def __init__(self, path: Path, fields):
        self.fh = open(path, "w", newline="")
        self.w = csv.DictWriter(self.fh, fieldnames=fields, extrasaction="ignore")
        self.w.writeheader()

    def write(self, row: dict) -> None:
        self.w.writerow({k: _fmt(v) for k, v in row.items()})

    def close(self) -> None:
        self.fh.close()


def load_config(path) -> RunConfig:
    return RunConfig.load(path) if path else RunConfig()


def _actor_from_net(net):
    """Evaluation adapter for any checkpointed network kind."""
    if net.kind == "td3-actor":
        return actor_policy(Td3Nets(net, None, None))
    if net.kind in ("ppo-lstm", "ppo"):
        return net_actor(net)
    raise ValueError(f"checkpoint of kind {net.kind!r} is not a policy")


def _write_episode_files(out: Path, actor, cfg: nav.EnvConfig, seed: int, stem: str) -> dict:
    ep = run_episode(cfg, actor, seed, rng=None, record=True)
    export_trajectory(ep, out / f"{stem}.csv")
    export_action_stats(ep, out / f"{stem}_action_stats.csv")
    return {"outcome": ep.outcome.value, "reward": ep.total_reward, "length": ep.length}


def train_run(rc: RunConfig, out, algo: str | None = None, episodes: int | None = None,
              seed: int | None = None, flow=None) -> dict:
    """Train one algorithm and write a self-describing run directory.

    Contents: ``config.ini``, ``train_log.csv``, ``eval_log.csv``, checkpoints
    ``final.nnck`` and ``best.nnck``, ``summary.json``, a sample trajectory with
    its action statistics, and ``timing.json`` (the only non-deterministic file).
    """
    if algo is not None:
        rc.run.algo = algo
    if episodes is not None:
        rc.run.episodes = episodes
    if seed is not None:
        rc.run.seed = seed
    algo = rc.run.algo
    if algo not in ALGOS:
        raise ValueError(f"unknown algo {algo!r}; choose from {ALGOS}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rc.save(out / "config.ini")
    cfg = rc.build_env(flow)
    seed = rc.run.seed

    tlog = _CsvLog(out / "train_log.csv", TRAIN_LOG_FIELDS)
    elog = _CsvLog(out / "eval_log.csv", EVAL_LOG_FIELDS)

    def callback(kind, row):
        (tlog if kind == "episode" else elog).write({"algo": algo, **row})

    t0 = time.perf_counter()
    try:
        if algo == "td3":
            res = td3_train(cfg, rc.td3, rc.run.episodes, seed=seed, eval_seed=rc.run.eval_seed,
                            callback=callback)
            final = res.nets.actor
            initial = Td3Nets.create(seed=seed, hyper=rc.td3).actor
            n_eval = rc.td3.n_eval
            save_checkpoint(out / "final.nnck", final, res.nets.opt["actor"])
        else:
            make = PolicyNet if algo == "ppo-lstm" else FfPolicyNet
            final = make(nav.OBS_DIM, seed=seed)
            res = train(cfg, rc.ppo, rc.run.episodes, final, seed=seed,
                        eval_seed=rc.run.eval_seed, callback=callback)
            initial = make(nav.OBS_DIM, seed=seed)
            n_eval = rc.ppo.n_eval
            save_checkpoint(out / "final.nnck", final, res.adam)
    finally:
        tlog.close()
        elog.close()
    train_seconds = time.perf_counter() - t0

    best = final
    if res.best_theta is not None:
        best, _ = load_checkpoint(out / "final.nnck")
        best.set_theta(res.best_theta)
    save_checkpoint(out / "best.nnck", best)

    actor = _actor_from_net(best)
    rep = evaluate_actor(actor, cfg, n_eval, rc.run.eval_seed)
    traj_seed = int(np.random.default_rng(rc.run.eval_seed).integers(2**63 - 1))
    _write_episode_files(out, _actor_from_net(initial), cfg, traj_seed, "trajectory_initial")
    sample = _write_episode_files(out, actor, cfg, traj_seed, "trajectory")
    summary = {
        "algo": algo, "seed": seed, "episodes": len(res.reward_history),
        "SR": rep["SR"], "CR": rep["CR"], "OOB": rep["OOB"], "timeout": rep["timeout"],
        "mean_reward": rep["mean_reward"], "n_eval": n_eval, "eval_seed": rc.run.eval_seed,
        "best_training_SR": res.best_sr, "sample_trajectory": sample,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    (out / "timing.json").write_text(json.dumps({"train_seconds": train_seconds,
                                                 "total_seconds": time.perf_counter() - t0}))
    return summary


def eval_run(checkpoint, rc: RunConfig, out, episodes: int = 100, seed: int = 0) -> dict:
    """Deterministic evaluation of a checkpointed policy."""
    net, _ = load_checkpoint(checkpoint)
    actor = _actor_from_net(net)
    cfg = rc.build_env()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rep = evaluate_actor(actor, cfg, episodes, seed, record=True)
    with open(out / "episodes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "seed", "outcome", "reward", "length"])
        for i, ep in enumerate(rep["trajectories"]):
            w.writerow([i, ep.seed, ep.outcome.value, repr(ep.total_reward), ep.length])
    if rep["trajectories"]:
        ep = rep["trajectories"][0]
        export_trajectory(ep, out / "trajectory.csv")
        export_action_stats(ep, out / "trajectory_action_stats.csv")
    summary = {k: rep[k] for k in ("SR", "CR", "OOB", "timeout", "mean_reward", "n_episodes",
                                    "counts")}
    summary.update({"checkpoint": str(checkpoint), "kind": net.kind, "seed": seed})
    (out / "eval_summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flownav", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth-flow", help="generate a flow file from a config")
    s.add_argument("--config", help="run config (defaults used when omitted)")
    s.add_argument("--out", required=True, help="output flow file (.flw binary, .txt/.csv text)")

    t = sub.add_parser("train", help="train one algorithm")
    t.add_argument("--config", help="run config (defaults used when omitted)")
    t.add_argument("--algo", choices=ALGOS, help="overrides [run] algo")
    t.add_argument("--episodes", type=int, help="overrides [run] episodes")
    t.add_argument("--seed", type=int, help="overrides [run] seed")
    t.add_argument("--out", required=True, help="run directory")

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--checkpoint", required=True, help="NNCK file from a run")
    e.add_argument("--config", help="environment config (defaults used when omitted)")
    e.add_argument("--episodes", type=int, default=100, help="deterministic episodes")
    e.add_argument("--seed", type=int, default=0, help="seed for episode starts")
    e.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("compare", help="compare finished runs")
    c.add_argument("dirs", nargs="+", help="run directories")
    c.add_argument("--alpha-ema", type=float, default=None, help="EMA smoothing factor (default 0.05)")
    c.add_argument("--out", help="write the comparison as JSON here")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        if args.command == "synth-flow":
            rc = load_config(args.config)
            out = Path(args.out)
            flow = rc.build_flow()
            if out.suffix.lower() in (".txt", ".csv"):
                save_flow_text(flow, out)
            else:
                save_flow(flow, out)
            print(f"wrote {out} ({flow.n_frames} frames, {flow.nx}x{flow.ny} nodes)")
        elif args.command == "train":
            rc = load_config(args.config)
            s = train_run(rc, args.out, args.algo, args.episodes, args.seed)
            print(f"{s['algo']} seed {s['seed']}: SR {s['SR']:.3f}  CR {s['CR']:.3f}  "
                  f"mean reward {s['mean_reward']:.3f}  -> {args.out}")
        elif args.command == "eval":
            s = eval_run(args.checkpoint, load_config(args.config), args.out, args.episodes,
                         args.seed)
            print(f"SR {s['SR']:.3f}  CR {s['CR']:.3f}  OOB {s['OOB']:.3f}  "
                  f"timeout {s['timeout']:.3f}  mean reward {s['mean_reward']:.3f}")
        elif args.command == "compare":
            alpha = args.alpha_ema
            if alpha is None:
                alpha = RunConfig.load(Path(args.dirs[0]) / "config.ini").run.alpha_ema \
                    if (Path(args.dirs[0]) / "config.ini").exists() else 0.05
            rows = compare_runs(args.dirs, alpha, args.out)
            print(format_table(rows))
    except (OSError, ValueError) as exc:
        print(f"flownav: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
