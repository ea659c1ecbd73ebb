"""Rectangular obstacle world and the range-finder sensor model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_SENSORS = 9
#: Body-frame sensor angles, -pi .. pi in 8 equal steps (first and last coincide).
SENSOR_ANGLES = tuple(-math.pi + i * (2.0 * math.pi / 8.0) for i in range(N_SENSORS))


@dataclass(frozen=True)
class Obstacle:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate obstacle {self}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_lo <= x <= self.x_hi and self.y_lo <= y <= self.y_hi


#: Building footprints of the reference layout.
REFERENCE_OBSTACLES = (Obstacle(-0.25, 0.25, 0.0, 1.0), Obstacle(1.25, 1.75, 0.0, 0.5))
REFERENCE_BOUNDS = Obstacle(-2.0, 4.0, 0.0, 3.0)


@dataclass(frozen=True)
class World:
    bounds: Obstacle = REFERENCE_BOUNDS
    obstacles: tuple[Obstacle, ...] = REFERENCE_OBSTACLES
    sensor_max_range: float = 2.0
    lookahead: float = 0.5
    sensor_count: int = field(default=N_SENSORS, init=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        b = self.bounds
        for o in self.obstacles:
            if o.x_lo < b.x_lo or o.x_hi > b.x_hi or o.y_lo < b.y_lo or o.y_hi > b.y_hi:
                raise ValueError(f"obstacle {o} not inside bounds {b}")
        if self.sensor_max_range <= 0 or self.lookahead < 0:
            raise ValueError("sensor_max_range must be positive and lookahead non-negative")

    def in_bounds(self, x: float, y: float) -> bool:
        return self.bounds.contains(x, y)

    @property
    def diagonal(self) -> float:
        b = self.bounds
        return math.hypot(b.x_hi - b.x_lo, b.y_hi - b.y_lo)


def point_in_obstacle(w: World, p) -> bool:
    x, y = float(p[0]), float(p[1])
    return any(o.contains(x, y) for o in w.obstacles)


def _slab_entry(o: Obstacle, ox: float, oy: float, dx: float, dy: float) -> float:
    """Entry parameter of the ray into ``o``, or ``inf`` when it misses.

    Axis-parallel components fall back to interval containment of the origin.
    """
    t0, t1 = -math.inf, math.inf
    for orig, d, lo, hi in ((ox, dx, o.x_lo, o.x_hi), (oy, dy, o.y_lo, o.y_hi)):
        if d == 0.0:
            if orig < lo or orig > hi:
                return math.inf
            continue
        ta = (lo - orig) / d
        tb = (hi - orig) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return math.inf
    if t1 < 0.0:
        return math.inf
    return max(t0, 0.0)


def _bounds_exit(b: Obstacle, ox: float, oy: float, dx: float, dy: float) -> float:
    t = math.inf
    if dx > 0.0:
        t = (b.x_hi - ox) / dx
    elif dx < 0.0:
        t = (b.x_lo - ox) / dx
    if dy > 0.0:
        t = min(t, (b.y_hi - oy) / dy)
    elif dy < 0.0:
        t = min(t, (b.y_lo - oy) / dy)
    return max(t, 0.0)


def _direction(angle: float) -> tuple[float, float]:
    dx, dy = math.cos(angle), math.sin(angle)
    # cos(pi/2) is 6e-17, not 0; snap so axis-parallel rays take the degenerate-slab branch
    if abs(dx) < 1e-15:
        dx = 0.0
    if abs(dy) < 1e-15:
        dy = 0.0
    return dx, dy


def obstacle_distance(w: World, origin, angle: float) -> float:
    """Distance along the ray to the nearest obstacle, ``inf`` if none."""
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = _direction(angle)
    return min((_slab_entry(o, ox, oy, dx, dy) for o in w.obstacles), default=math.inf)


def ray_cast(w: World, origin, angle: float, max_range: float) -> float | None:
    """Distance to the first obstacle face or domain edge, or ``None`` beyond ``max_range``."""
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = _direction(angle)
    t = _bounds_exit(w.bounds, ox, oy, dx, dy)
    for o in w.obstacles:
        t = min(t, _slab_entry(o, ox, oy, dx, dy))
    return t if t <= max_range else None


def sensor_sweep(w: World, pos, heading: float) -> np.ndarray:
    """Nine raw range readings along ``heading + SENSOR_ANGLES``.

    Misses saturate at ``sensor_max_range``. A position inside an obstacle or
    outside the domain reads zero on every sensor.
    """
    x, y = float(pos[0]), float(pos[1])
    if not w.in_bounds(x, y) or point_in_obstacle(w, (x, y)):
        return np.zeros(N_SENSORS)
    out = np.empty(N_SENSORS)
    r = w.sensor_max_range
    for i, beta in enumerate(SENSOR_ANGLES[:-1]):
        t = ray_cast(w, (x, y), heading + beta, r)
        out[i] = r if t is None else t
    # the first and last sensors (-pi and +pi) look along the same ray
    out[-1] = out[0]
    return out


def free_space_ahead(w: World, pos, heading: float) -> bool:
    """True when no obstacle lies within ``lookahead`` straight ahead.

    Domain edges are not obstacles for this test.
    """
    if w.lookahead <= 0.0:
        return True
    return obstacle_distance(w, pos, heading) > w.lookahead


def best_direction(readings, betas=SENSOR_ANGLES) -> float:
    """Angle of the longest reading; ties go to the smallest ``|beta|``, then the negative one."""
    if len(readings) != len(betas):
        raise ValueError(f"{len(readings)} readings for {len(betas)} angles")
    best = None
    for d, b in zip(readings, betas):
        key = (-float(d), abs(b), b)
        if best is None or key < best[0]:
            best = (key, b)
    return best[1]
