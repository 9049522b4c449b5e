import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phenosurrogate.controller import NetTopology, random_genome
from phenosurrogate.maze import (MazeConfig, MazeConfigError, RobotState, build_maze, clearance,
                                 rollout, rollout_batch, sense, step, wrap_angle)


def seg_intersect(p, q, a, b):
    """Proper or touching intersection of segments pq and ab (orientation test)."""
    def orient(u, v, w):
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

    d1, d2 = orient(a, b, p), orient(a, b, q)
    d3, d4 = orient(p, q, a), orient(p, q, b)
    return (d1 * d2 <= 0) and (d3 * d4 <= 0)


def point_segment_distance(p, seg):
    a, b = seg[:2], seg[2:]
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0, 1)
    return float(np.linalg.norm(p - (a + t * ab)))


def test_default_structure(maze):
    assert len(maze.ring_groups) == 3
    assert all(len(g) > 0 for g in maze.ring_groups)
    assert len(maze.boundary) == 4
    lengths = np.hypot(maze.segments[:, 2] - maze.segments[:, 0], maze.segments[:, 3] - maze.segments[:, 1])
    assert lengths.min() > 0
    assert np.allclose(maze.start, [35, 35])
    assert clearance(maze, maze.start)[0] > maze.config.robot_radius


def test_construction_is_deterministic():
    a, b = build_maze(), build_maze()
    assert np.array_equal(a.segments, b.segments)


@pytest.mark.parametrize("kwargs", [
    {"rings": 2, "radii": (10, 10), "opening_angles": ((0,), (90,))},
    {"opening_width_deg": 360.0},
    {"rings": 1, "radii": (10,), "opening_angles": ((0, 10),)},
    {"radii": (10, 20, 40)},
])
def test_invalid_configs_rejected(kwargs):
    with pytest.raises(MazeConfigError):
        build_maze(MazeConfig(**kwargs))


def test_config_json_round_trip(tmp_path):
    cfg = MazeConfig(radii=(8, 16, 24), turn_gain=0.3)
    path = tmp_path / "maze.json"
    path.write_text(json.dumps(cfg.to_json()))
    assert MazeConfig.load(path) == cfg
    with pytest.raises(MazeConfigError):
        MazeConfig.from_json({"rings": 3, "colour": "red"})


def test_straight_lines_from_centre_are_blocked(maze):
    # brute-force segment intersection: no straight escape to the outer cells
    ring_segs = maze.segments[maze.ring_of_segment >= 0]
    for ang in np.linspace(0, 2 * np.pi, 720, endpoint=False):
        end = maze.start + 34.0 * np.array([np.cos(ang), np.sin(ang)])
        hit = any(seg_intersect(maze.start, end, s[:2], s[2:]) for s in ring_segs)
        assert hit, f"ray at {math.degrees(ang):.1f} deg escapes"


def test_rangefinder_half_range_head_on():
    mz = build_maze()
    # boundary wall x = 70; stand 10 units away facing +x, above the outer ring
    st_ = RobotState(np.array([60.0, 66.0]), 0.0)
    r = sense(mz, st_).rangefinders
    assert r[1] == pytest.approx(0.5, abs=1e-12)


def test_rangefinders_match_ray_oracle(maze):
    far = RobotState(np.array([2.0, 2.0]), math.pi / 4)
    r = sense(maze, far).rangefinders
    # every ray heads inwards from the corner; check against a ray-cast oracle
    for j, off in enumerate((-math.pi / 4, 0.0, math.pi / 4)):
        d = _ray_oracle(maze, far.position, far.heading + off)
        assert r[j] == pytest.approx(min(d, 20.0) / 20.0, abs=1e-12)


def _ray_oracle(maze, origin, angle, reach=100.0):
    best = np.inf
    end = origin + reach * np.array([math.cos(angle), math.sin(angle)])
    for s in maze.segments:
        if seg_intersect(origin, end, s[:2], s[2:]):
            # exact intersection via line solve
            a, b = s[:2], s[2:]
            M = np.column_stack([end - origin, a - b])
            t, _ = np.linalg.solve(M, a - origin)
            best = min(best, t * reach)
    return best


def test_rangefinder_no_wall_reads_one():
    mz = build_maze(MazeConfig(sensor_range=5.0))
    r = sense(mz, RobotState(np.array([50.0, 50.0]), 0.0)).rangefinders
    assert np.all(r == 1.0)


def test_beacon_at_start_is_quadrant_zero(maze):
    for h in np.linspace(-math.pi, math.pi, 9, endpoint=False):
        b = sense(maze, RobotState(maze.start.copy(), float(h))).beacon
        assert b.tolist() == [1, 0, 0, 0]


def test_beacon_quadrants(maze):
    # start lies straight ahead (rel angle 0) -> boundary assigned to lower sector index
    p = maze.start - np.array([5.0, 0.0])
    assert sense(maze, RobotState(p, 0.0)).beacon.tolist() == [1, 0, 0, 0]
    # start at +45 deg relative -> quadrant 0; +135 -> 1; -135 -> 2; -45 -> 3
    for rel, q in ((45, 0), (135, 1), (225, 2), (315, 3)):
        heading = -math.radians(rel)
        b = sense(maze, RobotState(p, heading)).beacon
        assert int(np.argmax(b)) == q and b.sum() == 1


def test_step_straight_and_rotate():
    mz = build_maze()
    s0 = RobotState(np.array([50.0, 50.0]), 0.3)
    s1 = step(mz, s0, (1.0, 1.0))
    assert s1.heading == pytest.approx(0.3)
    assert np.linalg.norm(s1.position - s0.position) == pytest.approx(1.0)
    s2 = step(mz, s0, (-1.0, 1.0))
    assert np.allclose(s2.position, s0.position, atol=1e-12)
    assert s2.heading == pytest.approx(0.3 + 2 * 0.2)


def test_step_rejects_bad_command(maze):
    with pytest.raises(ValueError):
        step(maze, RobotState(maze.start.copy(), 0.0), (1.5, 0.0))


def test_step_into_perpendicular_wall():
    mz = build_maze()
    # boundary at x = 70, robot radius 1
    for x0 in (67.0, 68.4, 68.9, 69.0):
        s = RobotState(np.array([x0, 50.0]), 0.0)
        s1 = step(mz, s, (1.0, 1.0))
        advance = s1.position[0] - x0
        assert advance <= (70.0 - x0) - 1.0 + 1e-9
        assert clearance(mz, s1.position)[0] >= 1.0 - 1e-9


def test_heading_wrap():
    assert wrap_angle(math.pi) == pytest.approx(-math.pi)
    assert wrap_angle(3 * math.pi + 0.1) == pytest.approx(-math.pi + 0.1)
    assert -math.pi <= wrap_angle(-math.pi) < math.pi


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_range(a):
    w = wrap_angle(a)
    assert -math.pi <= w < math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-6)


def test_zero_controller(maze, topo2):
    res = rollout(maze, np.zeros(topo2.weight_count), topo2)
    assert res.path_length <= maze.config.max_steps * maze.config.speed_gain
    assert res.path_length == 0.0  # tanh(0) = 0 on both wheels


def test_rollout_determinism(maze, topo2, rng):
    g = random_genome(topo2, rng)
    a, b = rollout(maze, g, topo2), rollout(maze, g, topo2)
    assert np.array_equal(a.trajectory, b.trajectory)
    assert a.path_length == b.path_length
    assert a.steps == maze.config.max_steps
    assert len(a.trajectory) == a.steps + 1


def test_rollout_csv(tmp_path, maze, topo2, rng):
    res = rollout(maze, random_genome(topo2, rng), topo2, max_steps=5)
    res.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "step,x,y,heading"
    assert len(lines) == 7


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 5]))
def test_rollout_invariants(seed, h):
    mz = _MAZE
    topo = NetTopology(n_hidden=h)
    g = np.random.default_rng(seed).uniform(-4, 4, topo.weight_count)
    res = rollout(mz, g, topo, max_steps=120)
    traj = res.trajectory
    steps = np.linalg.norm(np.diff(traj, axis=0), axis=1)
    # path consistency and triangle inequality
    assert res.path_length == pytest.approx(steps.sum(), rel=1e-9, abs=1e-12)
    assert res.path_length >= np.linalg.norm(res.end_position - mz.start) - 1e-9
    # no wall penetration
    assert clearance(mz, traj).min() >= mz.config.robot_radius - 1e-9
    assert np.all((res.headings >= -math.pi) & (res.headings < math.pi))


_MAZE = build_maze()


@given(st.floats(1.5, 68.5), st.floats(1.5, 68.5), st.floats(-math.pi, math.pi, exclude_max=True))
def test_sensor_bounds(x, y, h):
    r = sense(_MAZE, RobotState(np.array([x, y]), h))
    assert np.all((r.rangefinders >= 0) & (r.rangefinders <= 1))
    assert r.beacon.sum() == 1 and set(np.unique(r.beacon)) <= {0.0, 1.0}


def test_rollout_matches_manual_loop(maze, topo2, rng):
    from phenosurrogate.controller import forward

    g = random_genome(topo2, rng)
    state = RobotState(maze.start.copy(), 0.0)
    path = 0.0
    for _ in range(40):
        x = sense(maze, state).as_vector()
        cmd = forward(g, topo2, x)
        nxt = step(maze, state, cmd)
        path += float(np.linalg.norm(nxt.position - state.position))
        state = nxt
    res = rollout(maze, g, topo2, max_steps=40)
    assert np.allclose(res.end_position, state.position, atol=1e-9)
    assert res.path_length == pytest.approx(path, rel=1e-9)


def test_batch_rejects_wrong_topology(maze):
    with pytest.raises(ValueError):
        rollout_batch(maze, np.zeros((1, 20)), NetTopology(n_inputs=5, n_hidden=2))
