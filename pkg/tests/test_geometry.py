import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flownav.geometry import (N_SENSORS, REFERENCE_BOUNDS, REFERENCE_OBSTACLES, SENSOR_ANGLES, Obstacle,
                              World, best_direction, free_space_ahead, point_in_obstacle, ray_cast,
                              sensor_sweep)
from oracles import blocked, free_points, march

def test_point_in_obstacle_examples(ref_world):
    assert point_in_obstacle(ref_world, (0.0, 0.5))
    assert not point_in_obstacle(ref_world, (3.0, 2.0))
    assert point_in_obstacle(ref_world, (0.25, 0.5))


def test_ray_hits_obstacle_face(ref_world):
    assert ray_cast(ref_world, (-1.0, 0.5), 0.0, 10.0) == pytest.approx(0.75, abs=1e-15)


def test_ray_hits_domain_boundary(ref_world):
    assert ray_cast(ref_world, (-1.0, 2.9), 0.0, 10.0) == pytest.approx(5.0, abs=1e-15)
    assert ray_cast(ref_world, (-1.0, 2.9), 0.0, 2.0) is None


def test_axis_parallel_ray_beside_obstacle_misses(ref_world):
    # vertical ray at x = -0.3 passes just left of obstacle 1 and exits at the top
    assert ray_cast(ref_world, (-0.3, 0.2), math.pi / 2, 10.0) == pytest.approx(2.8)


def test_slab_matches_dense_march(ref_world):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for p in free_points(ref_world, rng, 1000):
        angle = rng.uniform(-math.pi, math.pi)
        t_slab = ray_cast(ref_world, p, angle, 10.0)
        t_march = march(ref_world, p, angle)
        assert t_slab is not None and t_march is not None
        worst = max(worst, abs(t_slab - t_march))
    assert worst <= 2e-4


def test_open_field_saturates():
    w = World(Obstacle(-50, 50, -50, 50), (), sensor_max_range=2.0)
    assert np.array_equal(sensor_sweep(w, (0.0, 0.0), 0.3), np.full(N_SENSORS, 2.0))


def test_sweep_front_ray_and_shape(ref_world):
    r = sensor_sweep(ref_world, (-1.0, 0.5), 0.0)
    assert r.shape == (N_SENSORS,)
    assert r[4] == pytest.approx(0.75)
    assert SENSOR_ANGLES[4] == 0.0


def test_sweep_invalid_position_reads_zero(ref_world):
    assert np.array_equal(sensor_sweep(ref_world, (0.0, 0.5), 0.0), np.zeros(N_SENSORS))
    assert np.array_equal(sensor_sweep(ref_world, (5.0, 0.5), 0.0), np.zeros(N_SENSORS))


@settings(max_examples=200, deadline=None)
@given(st.floats(-2.0, 4.0), st.floats(0.0, 3.0), st.floats(-10.0, 10.0))
def test_back_sensors_agree(x, y, heading):
    w = World()
    r = sensor_sweep(w, (x, y), heading)
    assert r[0] == r[8]


@settings(max_examples=200, deadline=None)
@given(st.floats(-2.0, 4.0), st.floats(0.0, 3.0), st.floats(-math.pi, math.pi))
def test_sweep_invariant_under_full_turn(x, y, heading):
    w = World()
    np.testing.assert_allclose(sensor_sweep(w, (x, y), heading),
                               sensor_sweep(w, (x, y), heading + 2 * math.pi), atol=1e-9)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1.99, 3.99), st.floats(0.01, 2.99), st.floats(-math.pi, math.pi))
def test_hit_point_brackets_a_containment_change(x, y, angle):
    w = World()
    if point_in_obstacle(w, (x, y)):
        return
    t = ray_cast(w, (x, y), angle, 100.0)
    d = np.array([math.cos(angle), math.sin(angle)])
    eps = 1e-6
    before = np.array([x, y]) + (t - eps) * d
    after = np.array([x, y]) + (t + eps) * d
    if t > eps:
        assert not blocked(w, before[None])[0]
    assert blocked(w, after[None])[0]


def test_free_space_ahead_examples(ref_world):
    assert not free_space_ahead(ref_world, (-0.6, 0.5), 0.0)
    assert free_space_ahead(ref_world, (-0.6, 0.5), math.pi)
    w0 = World(REFERENCE_BOUNDS, REFERENCE_OBSTACLES, lookahead=0.0)
    assert free_space_ahead(w0, (-0.26, 0.5), 0.0)


def test_free_space_ignores_domain_edge(ref_world):
    assert free_space_ahead(ref_world, (3.9, 2.5), 0.0)


def test_best_direction_examples():
    assert best_direction([1.0] * 9) == 0.0
    r = [1.0] * 9
    r[6] = 1.5
    assert best_direction(r) == pytest.approx(math.pi / 2)
    assert SENSOR_ANGLES[6] == pytest.approx(math.pi / 2)
    r = [1.0] * 9
    r[3] = r[5] = 2.0
    assert best_direction(r) == SENSOR_ANGLES[3] < 0


def _argmax_oracle(readings, betas):
    readings = np.asarray(readings)
    top = np.flatnonzero(readings == readings.max())
    cands = sorted(top, key=lambda i: (abs(betas[i]), betas[i]))
    return betas[cands[0]]


def test_best_direction_matches_argmax_oracle():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        # coarse values so ties are frequent
        readings = rng.integers(0, 4, size=9) * 0.5
        assert best_direction(readings) == _argmax_oracle(readings, SENSOR_ANGLES)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 2.0), min_size=9, max_size=9))
def test_best_direction_is_an_input_angle(readings):
    assert best_direction(readings) in SENSOR_ANGLES


def test_world_validation():
    with pytest.raises(ValueError):
        World(REFERENCE_BOUNDS, (Obstacle(3.5, 4.5, 0, 1),))
    with pytest.raises(ValueError):
        World(sensor_max_range=0.0)
