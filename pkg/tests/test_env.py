import math

import numpy as np
import pytest

from flownav import env as nav
from flownav.dynamics import UavState
from flownav.env import (OBS_DIM, ConfigError, EnvConfig, EpisodeState, NavEnv, Outcome, Region,
                         RewardConstants, compute_reward, reset, step)
from flownav.flowfield import uniform_flow
from flownav.geometry import SENSOR_ANGLES, free_space_ahead, point_in_obstacle, sensor_sweep
from oracles import random_episodes


@pytest.fixture
def still_env(ref_world):
    return EnvConfig(flow=uniform_flow(0.0), world=ref_world, speed_cap=1.0)


def _state(x, y, theta=0.0, vx=0.0, vy=0.0, target=(3.0, 1.5)):
    return EpisodeState(UavState(x, y, theta, vx, vy), target, (x, y), frame=0)


def test_reset_is_deterministic(ref_env):
    _, a = reset(ref_env, 42)
    _, b = reset(ref_env, 42)
    assert (a.start, a.target, a.frame) == (b.start, b.target, b.frame)
    _, c = reset(ref_env, 43)
    assert c.start != a.start


def test_degenerate_start_region(small_synth, ref_world):
    cfg = EnvConfig(flow=small_synth, world=ref_world, start_region=Region(-1.0, -1.0, 1.2, 1.2))
    for s in range(20):
        _, st = reset(cfg, s)
        assert st.start == (-1.0, 1.2)


def test_reset_sweep_respects_regions(ref_env):
    # regions overlapping obstacle 2 so rejection sampling actually rejects
    cfg = EnvConfig(flow=ref_env.flow, world=ref_env.world,
                    start_region=Region(-1.0, 0.5, 0.0, 1.5), target_region=Region(1.0, 2.0, 0.0, 1.0))
    for s in range(10_000):
        _, st = reset(cfg, s)
        assert cfg.start_region.contains(*st.start)
        assert cfg.target_region.contains(*st.target)
        assert not point_in_obstacle(cfg.world, st.start)
        assert not point_in_obstacle(cfg.world, st.target)
        assert 0 <= st.frame < cfg.flow.n_frames


def test_reset_gives_up_inside_obstacle(ref_env):
    cfg = EnvConfig(flow=ref_env.flow, world=ref_env.world,
                    start_region=Region(-0.2, 0.2, 0.1, 0.9))
    with pytest.raises(ConfigError, match="100 attempts"):
        reset(cfg, 0)


def test_reset_heads_at_target(ref_env):
    obs, st = reset(ref_env, 7)
    assert obs.phi == pytest.approx(0.0, abs=1e-12)
    assert obs.d0 == pytest.approx(math.dist(st.start, st.target))


def test_one_step_short_of_target(still_env):
    dt = still_env.step_dt
    st = _state(2.5, 1.5, vx=1.0, target=(2.5 + dt + 0.1, 1.5))
    res, nxt = step(still_env, st, (0.0, 0.0))
    assert res.terminated is Outcome.TARGET_REACHED
    assert res.info["breakdown"]["terminal"] == still_env.rewards.bonus_target
    assert nxt.outcome is Outcome.TARGET_REACHED
    with pytest.raises(RuntimeError):
        step(still_env, nxt, (0.0, 0.0))


def test_action_clipped(still_env):
    res, _ = step(still_env, _state(-1.0, 2.0), (5.0, -9.0))
    assert res.info["action"].a == 3.0
    assert res.info["action"].omega_dot == -math.pi / 4


def test_eightieth_step_times_out(still_env):
    st = _state(-1.0, 2.0, target=(3.0, 2.0))
    for k in range(1, 81):
        res, st = step(still_env, st, (0.0, 0.0))
        if k < 80:
            assert res.terminated is Outcome.RUNNING
    assert res.terminated is Outcome.MAX_STEPS
    assert st.steps == 80


def test_crash_and_out_of_bounds(still_env):
    res, _ = step(still_env, _state(-0.3, 0.5, vx=1.0), (0.0, 0.0))
    assert res.terminated is Outcome.CRASHED_OBSTACLE
    assert res.info["breakdown"]["terminal"] == -20.0
    res, _ = step(still_env, _state(3.98, 2.0, vx=1.0), (0.0, 0.0))
    assert res.terminated is Outcome.OUT_OF_BOUNDS
    assert res.info["breakdown"]["terminal"] == -10.0


def test_frame_advances_and_wraps(ref_env):
    n = ref_env.flow.n_frames
    st = EpisodeState(UavState(-1.5, 2.0, 0.0), (3.0, 2.0), (-1.5, 2.0), frame=n - 1)
    res, nxt = step(ref_env, st, (0.0, 0.0))
    assert res.info["frame"] == n - 1 and nxt.frame == 0


def test_collinear_progress_gives_translation_reward(ref_world):
    prev, new = UavState(-1.0, 2.0, 0.0), UavState(-0.9, 2.0, 0.0)
    _, b = compute_reward(prev, new, (3.0, 2.0), ref_world, RewardConstants(), (0.0, 0.0))
    assert b["trans"] == pytest.approx(0.1, abs=1e-15)


def test_obstacle_term_limits(ref_world):
    s = UavState(-1.0, 2.0, 0.0)
    rc = RewardConstants()
    _, b = compute_reward(s, s, (3.0, 2.0), ref_world, rc, (0, 0), readings=np.zeros(9))
    assert b["obs"] == -rc.alpha
    _, b = compute_reward(s, s, (3.0, 2.0), ref_world, rc, (0, 0), readings=np.full(9, 1e6))
    assert b["obs"] == 0.0


def test_riding_the_flow_costs_no_energy(ref_world):
    s = UavState(-1.0, 2.0, 0.0, 0.3, -0.2)
    _, b = compute_reward(s, s, (3.0, 2.0), ref_world, RewardConstants(), (0.3, -0.2))
    assert b["energy"] == 0.0


def test_unit_constants_total_matches_closed_forms(ref_world):
    ones = RewardConstants(1, 1, 1, 1, 1, -1, 1, 1, -1, -1)
    prev = UavState(-0.9, 0.4, 0.1, 0.5, 0.2)
    new = UavState(-0.8, 0.45, 0.15, 0.6, 0.25)
    flow = (0.2, -0.1)
    target = (3.0, 2.0)
    total, b = compute_reward(prev, new, target, ref_world, ones, flow)
    rays = sensor_sweep(ref_world, new.pos, new.theta)
    # hand expansion: front face of obstacle 1 is 0.55 ahead, beyond lookahead 0.5
    d_front = (-0.25 - (-0.8)) / math.cos(0.15)
    assert d_front > 0.5
    free = free_space_ahead(ref_world, new.pos, new.theta)
    assert free
    oracle = (
        (math.hypot(-0.9 - 3.0, 0.4 - 2.0) - math.hypot(-0.8 - 3.0, 0.45 - 2.0))
        - math.exp(-min(rays))
        + 1.0
        + 0.0
        - 1.0
        - math.hypot(0.6 - 0.2, 0.25 + 0.1)
    )
    assert total == pytest.approx(oracle, abs=1e-14)


def test_best_direction_term_when_blocked(ref_world):
    s = UavState(-0.6, 0.5, 0.0)
    rc = RewardConstants()
    rays = sensor_sweep(ref_world, s.pos, s.theta)
    _, b = compute_reward(s, s, (3.0, 2.0), ref_world, rc, (0, 0), rays)
    assert b["free"] == 0.0
    best = SENSOR_ANGLES[int(np.argmax(rays))]
    assert b["best"] == pytest.approx(rc.zeta * best)


def test_translation_reward_telescopes(ref_env):
    n = 0
    for d_init, d_final, trans, results in random_episodes(ref_env, 400, 11):
        if results[-1].terminated is Outcome.CRASHED_OBSTACLE:
            continue
        assert trans == pytest.approx(d_init - d_final, abs=1e-9)
        n += 1
        if n == 100:
            break
    assert n == 100


def test_reward_invariants_along_trajectories(ref_env):
    rc = ref_env.rewards
    for _, _, _, results in random_episodes(ref_env, 60, 5):
        for res in results:
            b = res.info["breakdown"]
            assert res.reward == sum(b.values())
            assert set(b) == set(nav.REWARD_KEYS) | {"terminal"}
            if res.terminated is Outcome.RUNNING:
                assert -rc.alpha < b["obs"] <= 0.0
            if b["free"] != 0.0:
                assert b["best"] == 0.0
            assert b["free"] in (0.0, rc.r_free)


def test_obstacle_term_increasing_in_distance(ref_world):
    s = UavState(-1.0, 2.0, 0.0)
    vals = [compute_reward(s, s, (3, 2), ref_world, RewardConstants(), (0, 0),
                           np.full(9, d))[1]["obs"] for d in np.linspace(0, 2, 50)]
    assert np.all(np.diff(vals) > 0)


def test_replay_is_bitwise(ref_env):
    def run(seed):
        rng = np.random.default_rng(seed)
        _, st = reset(ref_env, seed)
        out = []
        while st.outcome is Outcome.RUNNING:
            res, st = step(ref_env, st, rng.uniform(-3, 3, 2))
            out.append((st.uav.as_tuple(), res.reward))
        return out
    assert run(3) == run(3)


def test_observation_vector(ref_env):
    obs, st = reset(ref_env, 1)
    vec = obs.to_vector(ref_env.world)
    assert vec.shape == (OBS_DIM,)
    assert np.all(vec[3:] >= 0) and np.all(vec[3:] <= 1)
    assert vec[2] == pytest.approx(obs.d0 / math.hypot(6, 3))


def test_nav_env_wrapper(ref_env):
    e = NavEnv(ref_env)
    x, info = e.reset(seed=5)
    assert x.shape == (OBS_DIM,)
    done = False
    while not done:
        x, r, term, trunc, info = e.step(np.array([1.0, 0.0]))
        done = term or trunc
    assert term != trunc
    assert trunc == (info["outcome"] is Outcome.MAX_STEPS)


def test_config_validation(small_synth, ref_world):
    with pytest.raises(ConfigError):
        EnvConfig(flow=small_synth, max_steps=0)
    with pytest.raises(ConfigError):
        EnvConfig(flow=small_synth, start_region=Region(-3, -1, 0, 1))
    with pytest.raises(ConfigError):
        Region(1, 0, 0, 1)
    with pytest.raises(ConfigError):
        EnvConfig(flow=small_synth, rewards=RewardConstants(psi=0.0))


def test_speed_cap_derived_from_flow(ref_env):
    assert ref_env.own_speed_cap == pytest.approx(1.4 * ref_env.v_max)
    assert ref_env.step_dt == ref_env.flow.dt_snap == 0.0875
