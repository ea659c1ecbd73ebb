"""Smoothing, plot-ready exports and cross-run comparison."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

DEFAULT_ALPHA_EMA = 0.05

TRAJECTORY_COLUMNS = (
    ["step", "t", "x", "y", "theta", "vx", "vy", "omega", "a", "omega_dot", "reward"]
    + [f"r_{k}" for k in ("trans", "obs", "free", "best", "step", "energy", "terminal")]
    + [f"ray{i}" for i in range(9)]
    + ["frame"]
)


def ema(series, alpha_ema: float = DEFAULT_ALPHA_EMA) -> np.ndarray:
    """Exponential moving average seeded with the first value.

    ``out[t] = alpha * x[t] + (1 - alpha) * out[t-1]``, ``out[0] = x[0]``.
    """
    if not 0.0 <= alpha_ema <= 1.0:
        raise ValueError(f"alpha_ema must lie in [0, 1], got {alpha_ema}")
    x = np.asarray(series, dtype=np.float64)
    out = np.empty_like(x)
    if x.size == 0:
        return out
    acc = x[0]
    out[0] = acc
    for t in range(1, x.size):
        acc = alpha_ema * x[t] + (1.0 - alpha_ema) * acc
        out[t] = acc
    return out


def export_trajectory(ep, path, extra: dict | None = None) -> Path:
    """Write per-step CSV rows plus a ``.json`` sidecar with start/target/outcome/seed."""
    path = Path(path)
    if not ep.rows:
        raise ValueError("episode has no recorded rows (run it with record=True)")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRAJECTORY_COLUMNS)
        w.writeheader()
        for row in ep.rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    side = {"start": list(ep.start), "target": list(ep.target), "outcome": ep.outcome.value,
            "seed": ep.seed, "length": ep.length, "total_reward": ep.total_reward}
    if extra:
        side.update(extra)
    path.with_suffix(".json").write_text(json.dumps(side, indent=2))
    return path


def export_action_stats(ep, path) -> Path:
    """CSV of the policy head's mean and standard deviation at every step."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "mu1", "mu2", "sigma1", "sigma2"])
        for k, (mu, sig) in enumerate(zip(ep.mus, ep.sigmas), start=1):
            w.writerow([k, repr(float(mu[0])), repr(float(mu[1])),
                        repr(float(sig[0])), repr(float(sig[1]))])
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def compare_runs(run_dirs, alpha_ema: float = DEFAULT_ALPHA_EMA, out: str | Path | None = None):
    """Summarise finished runs, ordered by final EMA of the episode reward.

    Each run directory needs ``train_log.csv`` and ``summary.json``.
    Returns the list of row dicts; writes ``comparison.json`` when ``out`` is given.
    """
    rows = []
    for d in map(Path, run_dirs):
        log_path, summ_path = d / "train_log.csv", d / "summary.json"
        for p in (log_path, summ_path):
            if not p.exists():
                raise FileNotFoundError(f"missing log {p}")
        log = read_csv(log_path)
        summary = json.loads(summ_path.read_text())
        rewards = [float(r["reward"]) for r in log]
        rows.append({
            "run": str(d),
            "algo": summary.get("algo", log[0]["algo"] if log else "?"),
            "seed": summary.get("seed"),
            "episodes": len(rewards),
            "final_ema_reward": float(ema(rewards, alpha_ema)[-1]) if rewards else float("nan"),
            "SR": summary.get("SR"),
            "CR": summary.get("CR"),
        })
    rows.sort(key=lambda r: -r["final_ema_reward"])
    if out is not None:
        Path(out).write_text(json.dumps(rows, indent=2))
    return rows


def format_table(rows) -> str:
    head = f"{'algo':<10} {'seed':>6} {'episodes':>9} {'EMA reward':>11} {'SR':>6} {'CR':>6}  run"
    lines = [head, "-" * len(head)]
    for r in rows:
        sr = "" if r["SR"] is None else f"{r['SR']:.3f}"
        cr = "" if r["CR"] is None else f"{r['CR']:.3f}"
        lines.append(f"{r['algo']:<10} {str(r['seed']):>6} {r['episodes']:>9} "
                     f"{r['final_ema_reward']:>11.3f} {sr:>6} {cr:>6}  {r['run']}")
    return "\n".join(lines)
