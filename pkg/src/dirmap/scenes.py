"""Synthetic trajectory scenes with exact per-segment ground truth.

Four deterministic desk-scale scenes on a [0,10] x [0,8] world that pairs
naturally with a 5x4 grid:

* ``unimodal``      -- pedestrian streams where every region is traversed
                       in a single direction (two one-way sidewalks plus a
                       one-way crossing).
* ``multimodal``    -- the same streets, but the crossing is walked in both
                       directions, so its cells see two opposite headings.
* ``kuka_loop``     -- a closed rectangular end-effector loop repeated by
                       every agent with normally perturbed corner goals.
* ``human_l_path``  -- a single walker on an L-shaped path.

Agents walk their polyline in ``steps_per_agent - 1`` equal arc-length
steps.  Heading noise rotates each emitted step by a wrapped-normal
perturbation while the ground truth keeps the noise-free bearing, so every
emitted segment is paired with the exact direction it was meant to have.
With ``noise_sigma == 0`` the emitted points sit exactly on the ideal path
and extracted headings reproduce the ground truth bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circular import wrap_angle
from .gridmap import GridSpec
from .trajectories import Observation, TrackPoint, headings_from_track

SCENE_NAMES = ("unimodal", "multimodal", "kuka_loop", "human_l_path")

DEFAULT_GRID = GridSpec(0.0, 0.0, 10.0, 8.0, 5, 4)

# Cells whose nominal traffic is the bidirectional crossing, and cells
# that see exactly one nominal direction (street rows).
_CROSSWALK_CELLS = ((2, 1), (2, 2))
_STREET_CELLS = tuple((col, row) for row in (0, 3) for col in range(5))


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of one synthetic scene.

    noise_sigma is the wrapped-normal heading perturbation in radians; the
    kuka_loop scene instead uses it as the goal-position perturbation in
    meters, since that scene's variability comes from perturbed goals
    rather than noisy headings.
    """

    scene: str
    n_agents: int = 40
    steps_per_agent: int = 40
    noise_sigma: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.scene not in SCENE_NAMES:
            raise ValueError(f"scene must be one of {SCENE_NAMES}")
        if self.n_agents < 1 or self.steps_per_agent < 1:
            raise ValueError("counts must be at least 1")
        if not (self.noise_sigma >= 0.0):
            raise ValueError("noise_sigma must be non-negative")


@dataclass(frozen=True)
class SegmentTruth:
    """Noise-free bearing of one emitted trajectory segment."""

    segment_id: int
    track_id: str
    t: float
    true_theta: float


@dataclass(frozen=True)
class Scene:
    """Generated scene: track points plus aligned ground truth."""

    spec: SceneSpec
    points: tuple[TrackPoint, ...]
    truth: tuple[SegmentTruth, ...]
    grid: GridSpec
    crosswalk_cells: tuple[tuple[int, int], ...]
    roadside_cells: tuple[tuple[int, int], ...]

    def observations(self, min_step: float = 0.05) -> list[Observation]:
        """Headings of every track, extracted in agent order."""
        out: list[Observation] = []
        by_track: dict[str, list[TrackPoint]] = {}
        for p in self.points:
            by_track.setdefault(p.track_id, []).append(p)
        for track_id in sorted(by_track, key=int):
            out.extend(headings_from_track(by_track[track_id], min_step))
        return out


def _polyline_positions(waypoints: list[tuple[float, float]], k: int) -> np.ndarray:
    # k points at equal arc length along the polyline, endpoints included.
    pts = np.asarray(waypoints, dtype=float)
    legs = np.diff(pts, axis=0)
    leg_len = np.hypot(legs[:, 0], legs[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(leg_len)])
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("polyline has zero length")
    out = np.empty((k, 2))
    for j in range(k):
        s = total * j / (k - 1) if k > 1 else 0.0
        leg = min(np.searchsorted(cum, s, side="right") - 1, len(leg_len) - 1)
        frac = (s - cum[leg]) / leg_len[leg]
        out[j] = pts[leg] + frac * legs[leg]
    return out


def _agent_paths(spec: SceneSpec, rng: np.random.Generator) -> list[list[tuple[float, float]]]:
    # One waypoint polyline per agent.  Group assignment is by consecutive
    # blocks so each traffic direction occupies its own time phase.
    n = spec.n_agents
    if spec.scene in ("unimodal", "multimodal"):
        groups = ["east", "west", "north"]
        if spec.scene == "multimodal":
            groups.append("south")
        base, extra = divmod(n, len(groups))
        sizes = [base + (1 if g < extra else 0) for g in range(len(groups))]
        paths = []
        for group, size in zip(groups, sizes):
            for _ in range(size):
                u = rng.uniform(-0.4, 0.4)
                if group == "east":
                    paths.append([(0.0, 1.0 + u), (10.0, 1.0 + u)])
                elif group == "west":
                    paths.append([(10.0, 7.0 + u), (0.0, 7.0 + u)])
                elif group == "north":
                    paths.append([(5.0 + u, 2.2), (5.0 + u, 5.8)])
                else:
                    paths.append([(5.0 + u, 5.8), (5.0 + u, 2.2)])
        return paths
    if spec.scene == "kuka_loop":
        corners = [(2.0, 2.0), (8.0, 2.0), (8.0, 6.0), (2.0, 6.0)]
        paths = []
        for _ in range(n):
            jittered = [
                (cx + rng.normal(0.0, spec.noise_sigma), cy + rng.normal(0.0, spec.noise_sigma))
                for cx, cy in corners
            ]
            paths.append(jittered + [jittered[0]])
        return paths
    # human_l_path: a single walker by default; extra agents get small
    # whole-path translations so the row-count contract still holds.
    paths = []
    for _ in range(n):
        dx = rng.uniform(-0.3, 0.3)
        dy = rng.uniform(-0.3, 0.3)
        paths.append([(1.0 + dx, 1.0 + dy), (8.0 + dx, 1.0 + dy), (8.0 + dx, 7.0 + dy)])
    return paths


def generate(spec: SceneSpec) -> Scene:
    """Generate a scene deterministically from its spec.

    Returns the flat TrackPoint list (agents in order, one point per time
    step, t = agent_index * steps_per_agent + step) and the ground truth:
    for every consecutive point pair of every track, the bearing the step
    would have had without heading noise.
    """
    rng = np.random.default_rng(spec.seed)
    paths = _agent_paths(spec, rng)
    heading_noise = spec.scene != "kuka_loop" and spec.noise_sigma > 0.0

    points: list[TrackPoint] = []
    truth: list[SegmentTruth] = []
    segment_id = 0
    k = spec.steps_per_agent
    for agent, waypoints in enumerate(paths):
        track_id = str(agent)
        rail = _polyline_positions(waypoints, k)
        deltas = np.diff(rail, axis=0)
        # math.atan2, like the extraction side, so noise-free scenes
        # reproduce ground truth bit-for-bit.
        bearings = np.array(
            [math.atan2(float(d[1]), float(d[0])) for d in deltas]
        ) if k > 1 else np.empty(0)
        if heading_noise:
            noise = wrap_angle(rng.normal(0.0, spec.noise_sigma, max(k - 1, 1)))
            lengths = np.hypot(deltas[:, 0], deltas[:, 1])
            pos = np.empty_like(rail)
            pos[0] = rail[0]
            for j in range(k - 1):
                angle = bearings[j] + noise[j]
                pos[j + 1, 0] = pos[j, 0] + lengths[j] * math.cos(angle)
                pos[j + 1, 1] = pos[j, 1] + lengths[j] * math.sin(angle)
        else:
            pos = rail
        t0 = float(agent * k)
        for j in range(k):
            points.append(TrackPoint(t0 + j, track_id, float(pos[j, 0]), float(pos[j, 1])))
        for j in range(k - 1):
            truth.append(
                SegmentTruth(segment_id, track_id, t0 + j, wrap_angle(float(bearings[j])))
            )
            segment_id += 1

    if spec.scene == "multimodal":
        crosswalk, roadside = _CROSSWALK_CELLS, _STREET_CELLS
    elif spec.scene == "unimodal":
        crosswalk, roadside = (), _STREET_CELLS + _CROSSWALK_CELLS
    else:
        crosswalk, roadside = (), ()
    return Scene(
        spec=spec,
        points=tuple(points),
        truth=tuple(truth),
        grid=DEFAULT_GRID,
        crosswalk_cells=crosswalk,
        roadside_cells=roadside,
    )


def write_truth_csv(truth, path) -> None:
    """Ground-truth sidecar: one ``segment_id,true_theta`` row per segment."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("segment_id,true_theta\n")
        for seg in truth:
            fh.write(f"{seg.segment_id},{seg.true_theta!r}\n")
