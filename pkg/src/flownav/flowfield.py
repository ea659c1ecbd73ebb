"""Time-resolved 2D velocity snapshots: storage, file I/O, synthesis and sampling.

Velocities are in freestream units and lengths in obstacle-height units.
Grids are uniform and node-centred, with nodes on both extents, and each
frame is stored as two ``(ny, nx)`` arrays (row index = y, column index = x).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"FLW1"
_HEADER = struct.Struct("<4sIII5d")

#: Reference domain extents (x_min, x_max, y_min, y_max).
REFERENCE_EXTENTS = (-2.0, 4.0, 0.0, 3.0)
REFERENCE_DT_SNAP = 0.08750
REFERENCE_N_FRAMES = 300


class FlowFormatError(ValueError):
    """Raised when a flow file cannot be decoded.

    ``offset`` is the byte offset (binary files) or line number (text files)
    where decoding failed.
    """

    def __init__(self, message: str, offset: int | None = None, unit: str = "byte offset"):
        if offset is not None:
            message = f"{message} (at {unit} {offset})"
        super().__init__(message)
        self.offset = offset


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FlowSnapshotSet:
    """Ordered stack of velocity frames on a uniform grid.

    ``u`` and ``v`` have shape ``(n_frames, ny, nx)``.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    dt_snap: float
    u: np.ndarray
    v: np.ndarray
    obstacles: tuple = field(default=())

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if u.ndim != 3 or u.shape != v.shape:
            raise ValueError(f"u and v must be matching 3D arrays, got {u.shape} and {v.shape}")
        if u.shape[0] == 0:
            raise ValueError("empty snapshot set")
        if u.shape[1] < 2 or u.shape[2] < 2:
            raise ValueError(f"grid must be at least 2x2, got ny={u.shape[1]}, nx={u.shape[2]}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("extents must be well ordered")
        if not self.dt_snap > 0:
            raise ValueError(f"dt_snap must be positive, got {self.dt_snap}")
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise ValueError("velocity values must be finite")
        u.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "obstacles", tuple(tuple(map(float, o)) for o in self.obstacles))
        object.__setattr__(self, "_dx", (self.x_max - self.x_min) / (self.nx - 1))
        object.__setattr__(self, "_dy", (self.y_max - self.y_min) / (self.ny - 1))

    @property
    def n_frames(self) -> int:
        return self.u.shape[0]

    @property
    def nx(self) -> int:
        return self.u.shape[2]

    @property
    def ny(self) -> int:
        return self.u.shape[1]

    @property
    def extents(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(xs, ys)``."""
        xs = self.x_min + self._dx * np.arange(self.nx)
        ys = self.y_min + self._dy * np.arange(self.ny)
        return xs, ys

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def in_footprint(self, x: float, y: float) -> bool:
        for x_lo, x_hi, y_lo, y_hi in self.obstacles:
            if x_lo <= x <= x_hi and y_lo <= y <= y_hi:
                return True
        return False

    def with_obstacles(self, obstacles) -> "FlowSnapshotSet":
        """Copy of this set whose sampler returns zero inside ``obstacles``.

        ``obstacles`` is an iterable of ``(x_lo, x_hi, y_lo, y_hi)`` tuples or
        objects with those attributes.
        """
        rects = tuple(_as_rect(o) for o in obstacles)
        return FlowSnapshotSet(self.x_min, self.x_max, self.y_min, self.y_max,
                               self.dt_snap, self.u, self.v, rects)


def _as_rect(o) -> tuple[float, float, float, float]:
    if hasattr(o, "x_lo"):
        return (o.x_lo, o.x_hi, o.y_lo, o.y_hi)
    x_lo, x_hi, y_lo, y_hi = o
    return (x_lo, x_hi, y_lo, y_hi)


# --------------------------------------------------------------------- sampling

def sample_velocity(flow: FlowSnapshotSet, frame: int, p) -> tuple[float, float]:
    """Bilinear interpolation of ``(U, V)`` at position ``p`` in ``frame``.

    Points inside an obstacle footprint return ``(0, 0)``. Points outside
    the extents raise :class:`OutOfDomainError`.
    """
    x, y = float(p[0]), float(p[1])
    if not flow.contains(x, y):
        raise OutOfDomainError(f"position ({x}, {y}) outside flow extents {flow.extents}")
    if flow.obstacles and flow.in_footprint(x, y):
        return (0.0, 0.0)
    return _bilinear(flow, frame, x, y)


def sample_velocity_clamped(flow: FlowSnapshotSet, frame: int, p) -> tuple[float, float]:
    """Like :func:`sample_velocity` but clamps ``p`` to the nearest in-domain point."""
    x = min(max(float(p[0]), flow.x_min), flow.x_max)
    y = min(max(float(p[1]), flow.y_min), flow.y_max)
    if flow.obstacles and flow.in_footprint(x, y):
        return (0.0, 0.0)
    return _bilinear(flow, frame, x, y)


def _bilinear(flow: FlowSnapshotSet, frame: int, x: float, y: float) -> tuple[float, float]:
    fx = (x - flow.x_min) / flow._dx
    fy = (y - flow.y_min) / flow._dy
    i = min(int(fx), flow.nx - 2)
    j = min(int(fy), flow.ny - 2)
    tx = fx - i
    ty = fy - j
    u = flow.u[frame]
    v = flow.v[frame]
    w00 = (1.0 - tx) * (1.0 - ty)
    w10 = tx * (1.0 - ty)
    w01 = (1.0 - tx) * ty
    w11 = tx * ty
    us = w00 * u[j, i] + w10 * u[j, i + 1] + w01 * u[j + 1, i] + w11 * u[j + 1, i + 1]
    vs = w00 * v[j, i] + w10 * v[j, i + 1] + w01 * v[j + 1, i] + w11 * v[j + 1, i + 1]
    return (float(us), float(vs))


def max_speed(flow: FlowSnapshotSet) -> float:
    """Largest node speed over all frames."""
    return float(np.sqrt(flow.u * flow.u + flow.v * flow.v).max())


# ------------------------------------------------------------------- synthesis

@dataclass
class SynthConfig:
    n_frames: int = REFERENCE_N_FRAMES
    nx: int = 241
    ny: int = 121
    extents: tuple[float, float, float, float] = REFERENCE_EXTENTS
    dt_snap: float = REFERENCE_DT_SNAP
    mean_speed: float = 1.0
    vortex_strength: float = 1.0
    vortex_count: int = 12
    core_radius: float = 0.25
    advection: float = 0.8
    obstacles: tuple = ()


def synth_flow(cfg: SynthConfig, seed: int) -> FlowSnapshotSet:
    """Uniform +x stream plus a street of advected counter-rotating vortices.

    Vortex centres start on a staggered lattice with seeded jitter and drift
    downstream at ``advection * mean_speed``, wrapping periodically in x.
    Each vortex has a Gaussian core (Lamb-Oseen profile) of radius
    ``core_radius``; signs alternate between the two lattice rows.
    Obstacles are attached to the set so the sampler returns zero inside
    them; stored nodes are left untouched so cells next to a wall still
    interpolate the free stream exactly.
    """
    if cfg.n_frames <= 0 or cfg.nx < 2 or cfg.ny < 2 or cfg.vortex_count < 0:
        raise ValueError("frame and grid counts must be positive (grid at least 2x2)")
    x_min, x_max, y_min, y_max = map(float, cfg.extents)
    if not (x_min < x_max and y_min < y_max):
        raise ValueError("extents must be well ordered")
    if cfg.dt_snap <= 0 or cfg.core_radius <= 0:
        raise ValueError("dt_snap and core_radius must be positive")

    rng = np.random.default_rng(seed)
    lx, ly = x_max - x_min, y_max - y_min
    n = cfg.vortex_count
    cols = np.arange(n) // 2
    rows = np.arange(n) % 2
    n_cols = max(1, (n + 1) // 2)
    x0 = x_min + (cols + 0.5 * rows + 0.5) * lx / n_cols + rng.uniform(-0.1, 0.1, n) * lx / n_cols
    y0 = y_min + ly * (0.35 + 0.3 * rows) + rng.uniform(-0.1, 0.1, n) * ly
    sign = np.where(rows == 0, 1.0, -1.0)
    gamma = cfg.vortex_strength * sign * rng.uniform(0.75, 1.25, n)

    xs = np.linspace(x_min, x_max, cfg.nx)
    ys = np.linspace(y_min, y_max, cfg.ny)
    gx, gy = np.meshgrid(xs, ys)
    u = np.empty((cfg.n_frames, cfg.ny, cfg.nx))
    v = np.empty_like(u)
    drift = cfg.advection * cfg.mean_speed
    rc2 = cfg.core_radius ** 2
    for f in range(cfg.n_frames):
        cx = x_min + np.mod(x0 + drift * f * cfg.dt_snap - x_min, lx)
        uf = np.full_like(gx, cfg.mean_speed)
        vf = np.zeros_like(gx)
        for k in range(n):
            dx = gx - cx[k]
            # nearest periodic image keeps the field continuous as vortices wrap
            dx -= lx * np.round(dx / lx)
            dy = gy - y0[k]
            r2 = dx * dx + dy * dy
            # Lamb-Oseen: u_theta = G/(2 pi r) (1 - exp(-r^2/rc^2)); regular at r = 0
            with np.errstate(invalid="ignore", divide="ignore"):
                fac = np.where(r2 > 0, (1.0 - np.exp(-r2 / rc2)) / r2, 1.0 / rc2)
            fac *= gamma[k] / (2.0 * math.pi)
            uf -= fac * dy
            vf += fac * dx
        u[f] = uf
        v[f] = vf
    return FlowSnapshotSet(x_min, x_max, y_min, y_max, float(cfg.dt_snap), u, v,
                           tuple(_as_rect(o) for o in cfg.obstacles))


def uniform_flow(u0: float, v0: float = 0.0, *, extents=REFERENCE_EXTENTS, nx: int = 7,
                 ny: int = 4, n_frames: int = 1, dt_snap: float = REFERENCE_DT_SNAP) -> FlowSnapshotSet:
    """Spatially and temporally constant field, handy for tests and smoke tasks."""
    shape = (n_frames, ny, nx)
    return FlowSnapshotSet(*map(float, extents), float(dt_snap),
                           np.full(shape, float(u0)), np.full(shape, float(v0)))


# ------------------------------------------------------------------------ I/O

def save_flow(flow: FlowSnapshotSet, path) -> None:
    """Write ``flow`` in the FLW1 binary format."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, flow.nx, flow.ny, flow.n_frames, flow.x_min, flow.x_max,
                              flow.y_min, flow.y_max, flow.dt_snap))
        for f in range(flow.n_frames):
            fh.write(flow.u[f].astype("<f8").tobytes())
            fh.write(flow.v[f].astype("<f8").tobytes())


def load_flow(path) -> FlowSnapshotSet:
    """Read a FLW1 binary file, or the text manifest variant (``.txt``/``.csv``)."""
    path = Path(path)
    if path.suffix.lower() in (".txt", ".csv"):
        return load_flow_text(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FlowFormatError("truncated header", len(data))
    magic, nx, ny, n_frames, x_min, x_max, y_min, y_max, dt_snap = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FlowFormatError(f"bad magic {magic!r}", 0)
    if n_frames == 0:
        raise FlowFormatError("empty snapshot set", 12)
    if nx < 2 or ny < 2:
        raise FlowFormatError(f"grid must be at least 2x2, got nx={nx}, ny={ny}", 4)
    for name, val, off in (("x extents", x_min < x_max, 16), ("y extents", y_min < y_max, 32)):
        if not val:
            raise FlowFormatError(f"{name} not well ordered", off)
    if not (dt_snap > 0 and math.isfinite(dt_snap)):
        raise FlowFormatError(f"dt_snap must be positive, got {dt_snap}", 48)
    n_vals = 2 * n_frames * nx * ny
    expected = _HEADER.size + 8 * n_vals
    if len(data) < expected:
        raise FlowFormatError(
            f"truncated payload: expected {expected} bytes, got {len(data)}", len(data))
    if len(data) > expected:
        raise FlowFormatError(f"trailing data: expected {expected} bytes, got {len(data)}", expected)
    vals = np.frombuffer(data, dtype="<f8", count=n_vals, offset=_HEADER.size)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise FlowFormatError("non-finite velocity value", _HEADER.size + 8 * int(bad[0]))
    vals = vals.astype(np.float64).reshape(n_frames, 2, ny, nx)
    return FlowSnapshotSet(x_min, x_max, y_min, y_max, dt_snap, vals[:, 0], vals[:, 1])


def save_flow_text(flow: FlowSnapshotSet, path) -> None:
    """Plain-text variant: one header line, then one CSV line per (frame, component).

    The header carries ``FLW1 nx ny n_frames x_min x_max y_min y_max dt_snap``.
    Values use ``repr`` so the round trip is exact.
    """
    with open(path, "w") as fh:
        fh.write(" ".join(["FLW1", str(flow.nx), str(flow.ny), str(flow.n_frames)]
                          + [repr(float(x)) for x in (*flow.extents, flow.dt_snap)]) + "\n")
        for f in range(flow.n_frames):
            for comp in (flow.u[f], flow.v[f]):
                fh.write(",".join(repr(float(x)) for x in comp.ravel()) + "\n")


def load_flow_text(path) -> FlowSnapshotSet:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FlowFormatError("missing header line", 0, "line")
    head = lines[0].split()
    if len(head) != 9 or head[0] != "FLW1":
        raise FlowFormatError("malformed header line", 0, "line")
    try:
        nx, ny, n_frames = (int(t) for t in head[1:4])
        x_min, x_max, y_min, y_max, dt_snap = (float(t) for t in head[4:])
    except ValueError as exc:
        raise FlowFormatError(f"malformed header line: {exc}", 0, "line") from None
    if n_frames == 0:
        raise FlowFormatError("empty snapshot set", 0, "line")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != 2 * n_frames:
        raise FlowFormatError(f"expected {2 * n_frames} value lines, got {len(body)}", len(body) + 1, "line")
    arr = np.empty((n_frames, 2, ny, nx))
    for k, ln in enumerate(body):
        try:
            row = np.array([float(t) for t in ln.split(",")])
        except ValueError as exc:
            raise FlowFormatError(f"bad value: {exc}", k + 1, "line") from None
        if row.size != nx * ny:
            raise FlowFormatError(f"expected {nx * ny} values, got {row.size}", k + 1, "line")
        if not np.isfinite(row).all():
            raise FlowFormatError("non-finite velocity value", k + 1, "line")
        arr[k // 2, k % 2] = row.reshape(ny, nx)
    try:
        return FlowSnapshotSet(x_min, x_max, y_min, y_max, dt_snap, arr[:, 0], arr[:, 1])
    except ValueError as exc:
        raise FlowFormatError(str(exc), 0, "line") from None
