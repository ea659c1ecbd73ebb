"""Point-mass UAV kinematics in an ambient flow, integrated with classical RK4."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

A_MAX = 3.0
OMEGA_DOT_MAX = math.pi / 4.0
SPEED_CAP_FACTOR = 1.4


class IntegrationError(FloatingPointError):
    pass


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@dataclass(frozen=True)
class UavState:
    x: float
    y: float
    theta: float
    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    @property
    def pos(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def vel(self) -> tuple[float, float]:
        return (self.vx, self.vy)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.x, self.y, self.theta, self.vx, self.vy, self.omega)


@dataclass(frozen=True)
class ActionCmd:
    a: float
    omega_dot: float

    def clipped(self) -> "ActionCmd":
        return ActionCmd(min(max(self.a, -A_MAX), A_MAX),
                         min(max(self.omega_dot, -OMEGA_DOT_MAX), OMEGA_DOT_MAX))


def derivative(s, u: ActionCmd, flow) -> tuple[float, ...]:
    """Time derivative of ``(x, y, theta, vx, vy, omega)``.

    ``s`` may be a :class:`UavState` or a plain 6-tuple in that order.
    """
    if isinstance(s, UavState):
        s = s.as_tuple()
    _, _, theta, vx, vy, omega = s
    return (vx + flow[0], vy + flow[1], omega,
            u.a * math.cos(theta), u.a * math.sin(theta), u.omega_dot)


def clamp_speed(vx: float, vy: float, cap: float) -> tuple[float, float]:
    speed = math.hypot(vx, vy)
    if speed <= cap:
        return vx, vy
    k = cap / speed
    return vx * k, vy * k


def rk4_step(s: UavState, u: ActionCmd, flow_at: Callable, dt: float,
             speed_cap: float = math.inf) -> UavState:
    """One classical RK4 step with the flow re-sampled at every stage position.

    ``flow_at`` maps an ``(x, y)`` position to a flow velocity. Heading is
    re-wrapped and own velocity clamped to ``speed_cap`` after the update.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y0 = s.as_tuple()

    def f(y):
        return derivative(y, u, flow_at((y[0], y[1])))

    k1 = f(y0)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y0, k3)))
    y1 = [a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
          for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4)]
    if not all(math.isfinite(v) for v in y1):
        raise IntegrationError(f"non-finite state after RK4 step: {y1}")
    vx, vy = clamp_speed(y1[3], y1[4], speed_cap)
    return UavState(y1[0], y1[1], wrap_angle(y1[2]), vx, vy, y1[5])
