import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flownav.env import EnvConfig, Region
from flownav.flowfield import uniform_flow
from flownav.metrics import (TRAJECTORY_COLUMNS, compare_runs, ema, export_action_stats,
                             export_trajectory, format_table, read_csv)
from flownav.nn.policy import PolicyNet
from flownav.rollout import net_actor, run_episode
from oracles import ema_oracle


def test_ema_limits(rng):
    x = rng.normal(size=30)
    assert np.array_equal(ema(x, 1.0), x)
    assert np.array_equal(ema(x, 0.0), np.full(30, x[0]))


def test_ema_closed_form(rng):
    x = rng.normal(size=50)
    for alpha in (0.05, 0.3, 0.77):
        assert np.max(np.abs(ema(x, alpha) - ema_oracle(x, alpha))) <= 1e-12


def test_ema_rejects_bad_alpha():
    with pytest.raises(ValueError):
        ema([1.0, 2.0], 1.5)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.floats(0.0, 1.0))
def test_ema_stays_within_input_range(xs, alpha):
    out = ema(xs, alpha)
    tol = 1e-9 * max(1.0, max(abs(v) for v in xs))
    assert out.min() >= min(xs) - tol and out.max() <= max(xs) + tol


@pytest.fixture
def timeout_env(ref_world):
    return EnvConfig(flow=uniform_flow(0.0), world=ref_world, speed_cap=1.0,
                     start_region=Region(-1.5, -1.5, 2.0, 2.0), target_region=Region(3.0, 3.0, 2.0, 2.0))


def _hover(obs, pa, pr, hidden):
    return np.zeros(2), np.full(2, 0.5), 0.0, None


def test_full_length_episode_export(tmp_path, timeout_env):
    ep = run_episode(timeout_env, _hover, seed=4, record=True)
    assert ep.length == 80
    export_trajectory(ep, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert len(lines) == 81
    assert lines[0].split(",") == TRAJECTORY_COLUMNS
    side = json.loads((tmp_path / "t.json").read_text())
    assert side["outcome"] == "max_steps" and side["seed"] == 4


def test_sidecar_seed_replays_identically(tmp_path, ref_env):
    net = PolicyNet(12, seed=1, policy_scale=1.0)
    ep = run_episode(ref_env, net_actor(net), seed=77, record=True)
    export_trajectory(ep, tmp_path / "a.csv")
    seed = json.loads((tmp_path / "a.json").read_text())["seed"]
    export_trajectory(run_episode(ref_env, net_actor(net), seed=seed, record=True), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_reward_column_sums_to_total(tmp_path, ref_env):
    net = PolicyNet(12, seed=2, policy_scale=1.0)
    ep = run_episode(ref_env, net_actor(net), seed=5, record=True)
    export_trajectory(ep, tmp_path / "a.csv")
    rows = read_csv(tmp_path / "a.csv")
    total = json.loads((tmp_path / "a.json").read_text())["total_reward"]
    assert sum(float(r["reward"]) for r in rows) == pytest.approx(total, abs=1e-12)
    for r in rows:
        parts = sum(float(r[f"r_{k}"]) for k in ("trans", "obs", "free", "best", "step", "energy",
                                                 "terminal"))
        assert parts == pytest.approx(float(r["reward"]), abs=1e-12)


def test_export_requires_recorded_rows(tmp_path, timeout_env):
    ep = run_episode(timeout_env, _hover, seed=0)
    with pytest.raises(ValueError):
        export_trajectory(ep, tmp_path / "x.csv")


def test_action_stats_from_zero_heads(tmp_path, ref_env):
    net = PolicyNet(12, seed=0)
    net.p["Wh"][:] = 0.0
    net.p["bh"][:] = 0.0
    ep = run_episode(ref_env, net_actor(net), seed=3)
    export_action_stats(ep, tmp_path / "s.csv")
    rows = read_csv(tmp_path / "s.csv")
    assert len(rows) == ep.length
    assert all(float(r["mu1"]) == 0.0 and float(r["mu2"]) == 0.0 for r in rows)
    assert all(float(r["sigma1"]) == 1.0 and float(r["sigma2"]) == 1.0 for r in rows)


def test_deterministic_eval_still_logs_sigma(tmp_path, ref_env):
    ep = run_episode(ref_env, net_actor(PolicyNet(12, seed=0)), seed=3, rng=None)
    export_action_stats(ep, tmp_path / "s.csv")
    assert all(float(r["sigma1"]) > 0 and float(r["sigma2"]) > 0 for r in read_csv(tmp_path / "s.csv"))


def _fake_run(d, algo, rewards, sr):
    d.mkdir()
    with open(d / "train_log.csv", "w") as fh:
        fh.write("algo,episode,reward,length,outcome\n")
        for k, r in enumerate(rewards):
            fh.write(f"{algo},{k},{r!r},10,max_steps\n")
    (d / "summary.json").write_text(json.dumps({"algo": algo, "seed": 0, "SR": sr, "CR": 0.0}))
    return d


def test_compare_single_and_duplicates(tmp_path):
    a = _fake_run(tmp_path / "a", "ppo-lstm", [1.0, 2.0, 3.0], 0.5)
    rows = compare_runs([a])
    assert len(rows) == 1 and rows[0]["final_ema_reward"] == pytest.approx(ema([1, 2, 3])[-1])
    rows = compare_runs([a, a])
    assert rows[0] == rows[1]


def test_compare_orders_by_final_ema(tmp_path):
    a = _fake_run(tmp_path / "a", "ppo", [0.0] * 5, 0.1)
    b = _fake_run(tmp_path / "b", "ppo-lstm", [5.0] * 5, 0.9)
    c = _fake_run(tmp_path / "c", "td3", [2.0] * 5, 0.3)
    rows = compare_runs([a, b, c], out=tmp_path / "cmp.json")
    assert [r["algo"] for r in rows] == ["ppo-lstm", "td3", "ppo"]
    assert json.loads((tmp_path / "cmp.json").read_text()) == rows
    table = format_table(rows)
    assert table.splitlines()[2].startswith("ppo-lstm")


def test_compare_missing_logs(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(FileNotFoundError, match="missing log"):
        compare_runs([tmp_path / "empty"])
