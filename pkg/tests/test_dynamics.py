import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flownav.dynamics import (A_MAX, OMEGA_DOT_MAX, ActionCmd, IntegrationError, UavState,
                              clamp_speed, derivative, rk4_step, wrap_angle)

ZERO = ActionCmd(0.0, 0.0)


def still(_p):
    return (0.0, 0.0)


def test_derivative_ballistic():
    d = derivative(UavState(0, 0, 0.4, 1.0, 0.0, 0.0), ZERO, (0.0, 0.0))
    assert d == (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_derivative_thrust_along_heading():
    d = derivative(UavState(0, 0, 0.0), ActionCmd(3.0, 0.0), (0.0, 0.0))
    assert d[3:5] == (3.0, 0.0)
    d = derivative(UavState(0, 0, math.pi / 2), ActionCmd(3.0, 0.0), (0.0, 0.0))
    assert d[3] == pytest.approx(0.0, abs=1e-15) and d[4] == 3.0


def test_linear_motion_is_exact():
    s = rk4_step(UavState(0.0, 0.0, 0.0, 1.0, 0.0), ZERO, still, 0.1)
    assert (s.x, s.y) == (0.1, 0.0)


def test_uniform_flow_adds_drift():
    c, vx, dt = 0.7, 0.4, 0.0875
    s = rk4_step(UavState(1.0, 1.0, 0.0, vx, 0.0), ZERO, lambda p: (c, 0.0), dt)
    assert s.x == pytest.approx(1.0 + (vx + c) * dt, abs=1e-15)
    assert s.y == 1.0


def _swirl_error(dt, T=1.0):
    s = UavState(1.0, 0.0, 0.0)
    for _ in range(round(T / dt)):
        s = rk4_step(s, ZERO, lambda p: (-p[1], p[0]), dt)
    return math.hypot(s.x - math.cos(T), s.y - math.sin(T))


def test_rk4_fourth_order_on_swirl():
    errs = [_swirl_error(dt) for dt in (0.1, 0.05, 0.025)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(12.0 <= r <= 20.0 for r in ratios), ratios


def test_full_turn_returns_heading():
    omega, dt = 2 * math.pi / 0.1, 0.1
    s = rk4_step(UavState(0, 0, 0.3, 0, 0, omega), ZERO, still, dt)
    assert s.theta == pytest.approx(0.3, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-math.pi, math.pi))
def test_drift_preserves_own_speed(vx, vy, cu, cv, theta):
    s0 = UavState(0.0, 0.0, theta, vx, vy)
    s = rk4_step(s0, ZERO, lambda p: (cu, cv), 0.0875)
    assert (s.vx, s.vy) == (vx, vy)


def test_speed_cap_applied_to_own_velocity():
    s = rk4_step(UavState(0, 0, 0.0, 1.0, 0.0), ActionCmd(3.0, 0.0), lambda p: (5.0, 0.0), 0.1,
                 speed_cap=1.2)
    assert math.hypot(s.vx, s.vy) == pytest.approx(1.2)


def test_clamp_speed_examples():
    assert clamp_speed(0.0, 0.0, 1.0) == (0.0, 0.0)
    vx, vy = clamp_speed(3.0, 4.0, 1.0)
    assert vx == pytest.approx(0.6) and vy == pytest.approx(0.8)


def test_clamp_speed_sweep():
    rng = np.random.default_rng(0)
    for v in rng.normal(scale=5.0, size=(1000, 2)):
        cap = rng.uniform(0.1, 4.0)
        assert math.hypot(*clamp_speed(v[0], v[1], cap)) <= cap * (1 + 1e-15)


def test_action_clip():
    c = ActionCmd(5.0, -3.0).clipped()
    assert c == ActionCmd(A_MAX, -OMEGA_DOT_MAX)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1e4, 1e4))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_wrap_angle_edges():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi


def test_non_finite_raises():
    with pytest.raises(IntegrationError):
        rk4_step(UavState(0, 0, 0), ZERO, lambda p: (math.inf, 0.0), 0.1)
    with pytest.raises(ValueError):
        rk4_step(UavState(0, 0, 0), ZERO, still, 0.0)
