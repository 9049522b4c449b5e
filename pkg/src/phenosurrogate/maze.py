"""Ring maze world, differential-drive robot and episode rollouts.

World geometry is a set of line segments ``(ax, ay, bx, by)``.  Concentric ring
walls are polygonized arcs with angular openings; the bounding box closes the
world.  The robot starts at the box centre with heading 0 (pointing along +x).

Kernels come in two flavours (see :mod:`phenosurrogate._accel`): scalar numba
functions that simulate one robot, and numpy functions that advance a whole
batch of robots per call.  Both follow the same arithmetic order; they differ
only by libm rounding in the transcendental functions.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _accel
from ._accel import njit

TWO_PI = 2.0 * math.pi
QUARTER_PI = 0.25 * math.pi
HALF_PI = 0.5 * math.pi
N_RANGEFINDERS = 3
N_BEACON = 4
N_SENSORS = N_RANGEFINDERS + N_BEACON
# push-out passes per collision substep
MAX_PUSH_ITER = 8
# accepted clearance deficit after a push-out
CONTACT_TOL = 1e-12
PENETRATION_TOL = 1e-9


class MazeConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MazeConfig:
    rings: int = 3
    radii: tuple[float, ...] = (10.0, 20.0, 30.0)
    opening_width_deg: float = 30.0
    # per ring: centre angles (degrees) of its openings
    opening_angles: tuple[tuple[float, ...], ...] = ((0.0,), (60.0,), (120.0,))
    bounds_size: float = 70.0
    robot_radius: float = 1.0
    sensor_range: float = 20.0
    turn_gain: float = 0.2
    speed_gain: float = 1.0
    max_steps: int = 300
    arc_resolution_deg: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        angles = []
        for item in self.opening_angles:
            if isinstance(item, (int, float)):
                angles.append((float(item),))
            else:
                angles.append(tuple(float(a) for a in item))
        object.__setattr__(self, "opening_angles", tuple(angles))

    def validate(self) -> None:
        if self.rings < 1:
            raise MazeConfigError("need at least one ring")
        if len(self.radii) != self.rings:
            raise MazeConfigError(f"expected {self.rings} radii, got {len(self.radii)}")
        if len(self.opening_angles) != self.rings:
            raise MazeConfigError(f"expected opening angles for {self.rings} rings")
        if self.radii[0] <= 0:
            raise MazeConfigError("ring radii must be positive")
        for inner, outer in zip(self.radii, self.radii[1:]):
            if outer <= inner:
                raise MazeConfigError(f"radii must be strictly increasing, got {list(self.radii)}")
        if not 0.0 < self.opening_width_deg < 360.0:
            raise MazeConfigError("opening width must lie in (0, 360) degrees")
        for ring, openings in enumerate(self.opening_angles):
            if len(openings) < 1:
                raise MazeConfigError(f"ring {ring} has no opening")
            if len(openings) * self.opening_width_deg >= 360.0:
                raise MazeConfigError(f"openings of ring {ring} cover the full circle")
            centres = sorted(a % 360.0 for a in openings)
            gaps = np.diff(centres + [centres[0] + 360.0])
            if len(centres) > 1 and np.any(gaps <= self.opening_width_deg):
                raise MazeConfigError(f"openings of ring {ring} overlap")
        if self.radii[-1] + self.robot_radius >= 0.5 * self.bounds_size:
            raise MazeConfigError("outer ring does not fit inside the bounding box")
        if self.robot_radius <= 0 or self.sensor_range <= 0:
            raise MazeConfigError("robot radius and sensor range must be positive")
        if self.turn_gain <= 0 or self.speed_gain <= 0:
            raise MazeConfigError("turn and speed gains must be positive")
        if self.max_steps < 1:
            raise MazeConfigError("max_steps must be >= 1")
        if not 0.0 < self.arc_resolution_deg <= 90.0:
            raise MazeConfigError("arc resolution must lie in (0, 90] degrees")

    @property
    def substeps(self) -> int:
        # each substep moves at most half a robot radius, so no wall can be skipped
        return max(1, math.ceil(self.speed_gain / (0.5 * self.robot_radius)))

    def to_json(self) -> dict:
        return {
            "rings": self.rings,
            "radii": list(self.radii),
            "openingWidthDeg": self.opening_width_deg,
            "openingAngles": [list(a) for a in self.opening_angles],
            "boundsSize": self.bounds_size,
            "robotRadius": self.robot_radius,
            "sensorRange": self.sensor_range,
            "turnGain": self.turn_gain,
            "speedGain": self.speed_gain,
            "maxSteps": self.max_steps,
            "arcResolutionDeg": self.arc_resolution_deg,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MazeConfig":
        keys = {
            "rings": "rings",
            "radii": "radii",
            "openingWidthDeg": "opening_width_deg",
            "openingAngles": "opening_angles",
            "boundsSize": "bounds_size",
            "robotRadius": "robot_radius",
            "sensorRange": "sensor_range",
            "turnGain": "turn_gain",
            "speedGain": "speed_gain",
            "maxSteps": "max_steps",
            "arcResolutionDeg": "arc_resolution_deg",
        }
        unknown = set(doc) - set(keys)
        if unknown:
            raise MazeConfigError(f"unknown maze config keys: {sorted(unknown)}")
        kwargs = {keys[k]: v for k, v in doc.items()}
        if "rings" not in kwargs and "radii" in kwargs:
            kwargs["rings"] = len(kwargs["radii"])
        if "opening_angles" in kwargs:
            kwargs["opening_angles"] = tuple(
                (a,) if isinstance(a, (int, float)) else tuple(a) for a in kwargs["opening_angles"]
            )
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "MazeConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class MazeMap:
    config: MazeConfig
    segments: np.ndarray  # (S, 4) rows of ax, ay, bx, by
    ring_of_segment: np.ndarray  # (S,) ring index, -1 for the bounding box
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    start: np.ndarray = field(repr=False)

    @property
    def ring_groups(self) -> list[np.ndarray]:
        return [self.segments[self.ring_of_segment == r] for r in range(self.config.rings)]

    @property
    def boundary(self) -> np.ndarray:
        return self.segments[self.ring_of_segment < 0]


@dataclass(frozen=True)
class RobotState:
    position: np.ndarray
    heading: float = 0.0


@dataclass(frozen=True)
class SensorReading:
    rangefinders: np.ndarray  # right (-45 deg), centre, left (+45 deg)
    beacon: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rangefinders, self.beacon])


@dataclass(frozen=True)
class RolloutResult:
    trajectory: np.ndarray  # (steps + 1, 2)
    headings: np.ndarray  # (steps + 1,)
    path_length: float

    @property
    def end_position(self) -> np.ndarray:
        return self.trajectory[-1]

    @property
    def steps(self) -> int:
        return len(self.trajectory) - 1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "x", "y", "heading"])
            for i, ((x, y), h) in enumerate(zip(self.trajectory, self.headings)):
                writer.writerow([i, repr(float(x)), repr(float(y)), repr(float(h))])


def _arc_points(cx, cy, radius, start_deg, span_deg, resolution_deg):
    n = max(1, math.ceil(span_deg / resolution_deg - 1e-9))
    angles = np.deg2rad(start_deg + span_deg * np.arange(n + 1) / n)
    return np.column_stack([cx + radius * np.cos(angles), cy + radius * np.sin(angles)])


def build_maze(config: MazeConfig | None = None) -> MazeMap:
    """Polygonize the ring walls and add the four boundary segments."""
    config = config or MazeConfig()
    config.validate()
    size = float(config.bounds_size)
    cx = cy = 0.5 * size
    segments = []
    owners = []
    half = 0.5 * config.opening_width_deg
    for ring, (radius, openings) in enumerate(zip(config.radii, config.opening_angles)):
        centres = sorted(a % 360.0 for a in openings)
        for i, centre in enumerate(centres):
            nxt = centres[(i + 1) % len(centres)] + (360.0 if i + 1 == len(centres) else 0.0)
            arc_start = centre + half
            span = (nxt - half) - arc_start
            pts = _arc_points(cx, cy, radius, arc_start, span, config.arc_resolution_deg)
            for a, b in zip(pts[:-1], pts[1:]):
                segments.append((a[0], a[1], b[0], b[1]))
                owners.append(ring)
    corners = [(0.0, 0.0), (size, 0.0), (size, size), (0.0, size)]
    for a, b in zip(corners, corners[1:] + corners[:1]):
        segments.append((a[0], a[1], b[0], b[1]))
        owners.append(-1)
    segs = np.ascontiguousarray(segments, dtype=np.float64)
    lengths = np.hypot(segs[:, 2] - segs[:, 0], segs[:, 3] - segs[:, 1])
    assert np.all(lengths > 0)
    segs.setflags(write=False)
    ring_of = np.asarray(owners, dtype=np.int64)
    ring_of.setflags(write=False)
    start = np.array([cx, cy])
    start.setflags(write=False)
    return MazeMap(config, segs, ring_of, (0.0, 0.0, size, size), start)


def wrap_angle(a: float) -> float:
    """Normalize an angle to [-pi, pi)."""
    return _wrap(a)


# ---------------------------------------------------------------------------
# scalar kernels (numba)


@njit
def _wrap(a):
    w = a - TWO_PI * math.floor((a + math.pi) / TWO_PI)
    if w >= math.pi:
        w -= TWO_PI
    if w < -math.pi:
        w += TWO_PI
    return w


@njit
def _ray_distance(segs, ox, oy, dx, dy, max_range):
    best = max_range
    for i in range(segs.shape[0]):
        ax = segs[i, 0]
        ay = segs[i, 1]
        ex = segs[i, 2] - ax
        ey = segs[i, 3] - ay
        den = dx * ey - dy * ex
        if abs(den) < 1e-12:
            continue
        wx = ax - ox
        wy = ay - oy
        t = (wx * ey - wy * ex) / den
        s = (wx * dy - wy * dx) / den
        if t >= 0.0 and s >= 0.0 and s <= 1.0 and t < best:
            best = t
    return best


@njit
def _beacon_quadrant(px, py, heading, sx, sy):
    if px == sx and py == sy:
        return 0
    rel = math.atan2(sy - py, sx - px) - heading
    rel = rel - TWO_PI * math.floor(rel / TWO_PI)
    q = int(math.ceil(rel / HALF_PI)) - 1
    if q < 0:
        q = 0
    if q > 3:
        q = 3
    return q


@njit
def _sense_into(segs, px, py, heading, sx, sy, sensor_range, out):
    for j in range(N_RANGEFINDERS):
        a = heading + (j - 1) * QUARTER_PI
        out[j] = _ray_distance(segs, px, py, math.cos(a), math.sin(a), sensor_range) / sensor_range
    for j in range(N_BEACON):
        out[N_RANGEFINDERS + j] = 0.0
    out[N_RANGEFINDERS + _beacon_quadrant(px, py, heading, sx, sy)] = 1.0


@njit
def _nearest_wall(segs, px, py):
    best = np.inf
    best_i = -1
    bcx = 0.0
    bcy = 0.0
    for i in range(segs.shape[0]):
        ax = segs[i, 0]
        ay = segs[i, 1]
        ex = segs[i, 2] - ax
        ey = segs[i, 3] - ay
        t = ((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey)
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx = ax + t * ex
        cy = ay + t * ey
        d = math.sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy))
        if d < best:
            best = d
            best_i = i
            bcx = cx
            bcy = cy
    return best, best_i, bcx, bcy


@njit
def _resolve(segs, qx, qy, px, py, radius):
    """Push ``q`` out of walls; fall back to ``p`` if that fails."""
    for _ in range(MAX_PUSH_ITER):
        d, i, cx, cy = _nearest_wall(segs, qx, qy)
        if d >= radius - CONTACT_TOL:
            return qx, qy
        if d > 1e-12:
            nx = (qx - cx) / d
            ny = (qy - cy) / d
        else:
            nx = px - cx
            ny = py - cy
            norm = math.sqrt(nx * nx + ny * ny)
            nx /= norm
            ny /= norm
        qx = cx + nx * radius
        qy = cy + ny * radius
    d, i, cx, cy = _nearest_wall(segs, qx, qy)
    if d >= radius - PENETRATION_TOL:
        return qx, qy
    return px, py


@njit
def _step_scalar(segs, px, py, heading, left, right, radius, turn_gain, speed_gain, n_sub):
    heading = _wrap(heading + (right - left) * turn_gain)
    v = speed_gain * (left + right) * 0.5
    dx = v * math.cos(heading) / n_sub
    dy = v * math.sin(heading) / n_sub
    for _ in range(n_sub):
        qx, qy = _resolve(segs, px + dx, py + dy, px, py, radius)
        px = qx
        py = qy
    return px, py, heading


@njit
def _forward_into(weights, n_in, n_hid, n_out, x, hidden, out):
    k = 0
    for j in range(n_hid):
        acc = 0.0
        for i in range(n_in):
            acc += weights[k + i] * x[i]
        acc += weights[k + n_in]
        hidden[j] = math.tanh(acc)
        k += n_in + 1
    for j in range(n_out):
        acc = 0.0
        for i in range(n_hid):
            acc += weights[k + i] * hidden[i]
        acc += weights[k + n_hid]
        out[j] = math.tanh(acc)
        k += n_hid + 1


@njit
def _rollout_scalar(segs, sx, sy, heading0, radius, sensor_range, turn_gain, speed_gain,
                    n_sub, weights, n_in, n_hid, n_out, traj, heads):
    px = sx
    py = sy
    h = heading0
    x = np.empty(n_in)
    hidden = np.empty(n_hid)
    out = np.empty(n_out)
    traj[0, 0] = px
    traj[0, 1] = py
    heads[0] = h
    path = 0.0
    for t in range(traj.shape[0] - 1):
        _sense_into(segs, px, py, h, sx, sy, sensor_range, x)
        _forward_into(weights, n_in, n_hid, n_out, x, hidden, out)
        nx, ny, h = _step_scalar(segs, px, py, h, out[0], out[1], radius, turn_gain, speed_gain, n_sub)
        path += math.sqrt((nx - px) * (nx - px) + (ny - py) * (ny - py))
        px = nx
        py = ny
        traj[t + 1, 0] = px
        traj[t + 1, 1] = py
        heads[t + 1] = h
    return path


@njit
def _rollout_batch_numba(segs, sx, sy, heading0, radius, sensor_range, turn_gain, speed_gain,
                         n_sub, weights, n_in, n_hid, n_out, traj, heads, paths):
    for b in range(weights.shape[0]):
        paths[b] = _rollout_scalar(segs, sx, sy, heading0, radius, sensor_range, turn_gain,
                                   speed_gain, n_sub, weights[b], n_in, n_hid, n_out,
                                   traj[b], heads[b])


# ---------------------------------------------------------------------------
# batch kernels (numpy)


def _wrap_np(a):
    w = a - TWO_PI * np.floor((a + math.pi) / TWO_PI)
    w = np.where(w >= math.pi, w - TWO_PI, w)
    return np.where(w < -math.pi, w + TWO_PI, w)


def _sense_np(segs, pos, heading, start, sensor_range):
    """Sensor vectors for ``B`` robots -> (B, 7)."""
    B = pos.shape[0]
    angles = heading[:, None] + QUARTER_PI * np.array([-1.0, 0.0, 1.0])
    dx = np.cos(angles)[:, :, None]
    dy = np.sin(angles)[:, :, None]
    ax, ay = segs[:, 0], segs[:, 1]
    ex, ey = segs[:, 2] - ax, segs[:, 3] - ay
    den = dx * ey - dy * ex
    wx = (ax - pos[:, 0:1])[:, None, :]
    wy = (ay - pos[:, 1:2])[:, None, :]
    ok = np.abs(den) >= 1e-12
    safe = np.where(ok, den, 1.0)
    t = (wx * ey - wy * ex) / safe
    s = (wx * dy - wy * dx) / safe
    hit = ok & (t >= 0.0) & (s >= 0.0) & (s <= 1.0) & (t < sensor_range)
    dist = np.where(hit, t, sensor_range).min(axis=2)
    out = np.zeros((B, N_SENSORS))
    out[:, :N_RANGEFINDERS] = dist / sensor_range

    rel = np.arctan2(start[1] - pos[:, 1], start[0] - pos[:, 0]) - heading
    rel = rel - TWO_PI * np.floor(rel / TWO_PI)
    q = np.clip(np.ceil(rel / HALF_PI).astype(np.int64) - 1, 0, 3)
    at_start = (pos[:, 0] == start[0]) & (pos[:, 1] == start[1])
    q[at_start] = 0
    out[np.arange(B), N_RANGEFINDERS + q] = 1.0
    return out


def _nearest_wall_np(segs, q):
    ax, ay = segs[:, 0], segs[:, 1]
    ex, ey = segs[:, 2] - ax, segs[:, 3] - ay
    px = q[:, 0:1]
    py = q[:, 1:2]
    t = np.clip(((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey), 0.0, 1.0)
    cx = ax + t * ex
    cy = ay + t * ey
    d = np.sqrt((px - cx) * (px - cx) + (py - cy) * (py - cy))
    idx = np.argmin(d, axis=1)
    rows = np.arange(q.shape[0])
    return d[rows, idx], cx[rows, idx], cy[rows, idx]


def _resolve_np(segs, q, p, radius):
    q = q.copy()
    for _ in range(MAX_PUSH_ITER):
        d, cx, cy = _nearest_wall_np(segs, q)
        bad = d < radius - CONTACT_TOL
        if not bad.any():
            return q
        nx = q[:, 0] - cx
        ny = q[:, 1] - cy
        norm = d
        degenerate = d <= 1e-12
        if degenerate.any():
            nx = np.where(degenerate, p[:, 0] - cx, nx)
            ny = np.where(degenerate, p[:, 1] - cy, ny)
            norm = np.where(degenerate, np.sqrt(nx * nx + ny * ny), d)
        norm = np.where(bad, norm, 1.0)
        q[:, 0] = np.where(bad, cx + nx / norm * radius, q[:, 0])
        q[:, 1] = np.where(bad, cy + ny / norm * radius, q[:, 1])
    d, _, _ = _nearest_wall_np(segs, q)
    stuck = d < radius - PENETRATION_TOL
    q[stuck] = p[stuck]
    return q


def _step_np(segs, pos, heading, left, right, radius, turn_gain, speed_gain, n_sub):
    heading = _wrap_np(heading + (right - left) * turn_gain)
    v = speed_gain * (left + right) * 0.5
    dx = v * np.cos(heading) / n_sub
    dy = v * np.sin(heading) / n_sub
    for _ in range(n_sub):
        q = np.column_stack([pos[:, 0] + dx, pos[:, 1] + dy])
        pos = _resolve_np(segs, q, pos, radius)
    return pos, heading


def _forward_np(weights, n_in, n_hid, n_out, x):
    """Batched forward pass with the same summation order as ``_forward_into``."""
    B = weights.shape[0]
    hidden = np.empty((B, n_hid))
    out = np.empty((B, n_out))
    k = 0
    for j in range(n_hid):
        acc = np.zeros(B)
        for i in range(n_in):
            acc += weights[:, k + i] * x[:, i]
        acc += weights[:, k + n_in]
        hidden[:, j] = np.tanh(acc)
        k += n_in + 1
    for j in range(n_out):
        acc = np.zeros(B)
        for i in range(n_hid):
            acc += weights[:, k + i] * hidden[:, i]
        acc += weights[:, k + n_hid]
        out[:, j] = np.tanh(acc)
        k += n_hid + 1
    return out


def _rollout_batch_np(segs, start, heading0, radius, sensor_range, turn_gain, speed_gain,
                      n_sub, weights, n_in, n_hid, n_out, max_steps):
    B = weights.shape[0]
    traj = np.empty((B, max_steps + 1, 2))
    heads = np.empty((B, max_steps + 1))
    pos = np.tile(start, (B, 1)).astype(np.float64)
    heading = np.full(B, float(heading0))
    traj[:, 0] = pos
    heads[:, 0] = heading
    paths = np.zeros(B)
    for t in range(max_steps):
        x = _sense_np(segs, pos, heading, start, sensor_range)
        out = _forward_np(weights, n_in, n_hid, n_out, x)
        new, heading = _step_np(segs, pos, heading, out[:, 0], out[:, 1], radius, turn_gain,
                                speed_gain, n_sub)
        d = new - pos
        paths += np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])
        pos = new
        traj[:, t + 1] = pos
        heads[:, t + 1] = heading
    return traj, heads, paths


# ---------------------------------------------------------------------------
# public API


def sense(maze: MazeMap, state: RobotState) -> SensorReading:
    """Rangefinder and beacon readings for one robot state."""
    cfg = maze.config
    px, py = float(state.position[0]), float(state.position[1])
    if _accel.numba_enabled():
        out = np.empty(N_SENSORS)
        _sense_into(maze.segments, px, py, float(state.heading), float(maze.start[0]),
                    float(maze.start[1]), float(cfg.sensor_range), out)
    else:
        out = _sense_np(maze.segments, np.array([[px, py]]), np.array([float(state.heading)]),
                        maze.start, float(cfg.sensor_range))[0]
    return SensorReading(out[:N_RANGEFINDERS].copy(), out[N_RANGEFINDERS:].copy())


def step(maze: MazeMap, state: RobotState, command: Sequence[float]) -> RobotState:
    """Advance one time step under wheel command ``(left, right)``, each in [-1, 1]."""
    left, right = float(command[0]), float(command[1])
    if not (-1.0 <= left <= 1.0 and -1.0 <= right <= 1.0):
        raise ValueError(f"wheel command out of [-1, 1]: {command!r}")
    cfg = maze.config
    px, py = float(state.position[0]), float(state.position[1])
    if _accel.numba_enabled():
        px, py, h = _step_scalar(maze.segments, px, py, float(state.heading), left, right,
                                 float(cfg.robot_radius), float(cfg.turn_gain),
                                 float(cfg.speed_gain), cfg.substeps)
    else:
        pos, hd = _step_np(maze.segments, np.array([[px, py]]), np.array([float(state.heading)]),
                           np.array([left]), np.array([right]), float(cfg.robot_radius),
                           float(cfg.turn_gain), float(cfg.speed_gain), cfg.substeps)
        px, py, h = pos[0, 0], pos[0, 1], hd[0]
    return RobotState(np.array([px, py]), float(h))


def _check_robot_topology(topology) -> None:
    if topology.n_inputs != N_SENSORS or topology.n_outputs != 2:
        raise ValueError(
            f"maze robots need {N_SENSORS} inputs and 2 outputs, got {topology.n_inputs}/{topology.n_outputs}"
        )


def rollout_batch(maze: MazeMap, genomes: np.ndarray, topology, max_steps: int | None = None,
                  keep_trajectories: bool = False):
    """Simulate every genome row for a fixed number of steps.

    Returns ``(end_positions, path_lengths)``, plus ``(trajectories, headings)``
    when ``keep_trajectories`` is set.
    """
    _check_robot_topology(topology)
    cfg = maze.config
    steps = cfg.max_steps if max_steps is None else int(max_steps)
    if steps < 1:
        raise ValueError("max_steps must be >= 1")
    W = np.ascontiguousarray(np.atleast_2d(genomes), dtype=np.float64)
    if W.shape[1] != topology.weight_count:
        raise ValueError(f"genome length {W.shape[1]} != {topology.weight_count}")
    args = (float(cfg.robot_radius), float(cfg.sensor_range), float(cfg.turn_gain),
            float(cfg.speed_gain), cfg.substeps)
    if _accel.numba_enabled():
        B = W.shape[0]
        traj = np.empty((B, steps + 1, 2))
        heads = np.empty((B, steps + 1))
        paths = np.empty(B)
        _rollout_batch_numba(maze.segments, float(maze.start[0]), float(maze.start[1]), 0.0,
                             *args, W, topology.n_inputs, topology.n_hidden, topology.n_outputs,
                             traj, heads, paths)
    else:
        traj, heads, paths = _rollout_batch_np(maze.segments, maze.start, 0.0, *args, W,
                                               topology.n_inputs, topology.n_hidden,
                                               topology.n_outputs, steps)
    ends = traj[:, -1].copy()
    if keep_trajectories:
        return ends, paths, traj, heads
    return ends, paths


def rollout(maze: MazeMap, genome: np.ndarray, topology, max_steps: int | None = None) -> RolloutResult:
    """Run one full-length episode (no early termination)."""
    _, paths, traj, heads = rollout_batch(maze, np.asarray(genome)[None, :], topology, max_steps,
                                          keep_trajectories=True)
    return RolloutResult(traj[0], heads[0], float(paths[0]))


def clearance(maze: MazeMap, points: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest wall segment."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    segs = maze.segments
    out = np.empty(len(pts))
    for lo in range(0, len(pts), 4096):
        chunk = pts[lo:lo + 4096]
        ax, ay = segs[:, 0], segs[:, 1]
        ex, ey = segs[:, 2] - ax, segs[:, 3] - ay
        px, py = chunk[:, 0:1], chunk[:, 1:2]
        t = np.clip(((px - ax) * ex + (py - ay) * ey) / (ex * ex + ey * ey), 0.0, 1.0)
        out[lo:lo + 4096] = np.hypot(px - (ax + t * ex), py - (ay + t * ey)).min(axis=1)
    return out
