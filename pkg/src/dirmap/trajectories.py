"""Trajectory ingestion: headings from tracked positions, CSV loading, and
a space/time/track-indexed observation store.

Heading extraction here is the reference finite-difference method: the
bearing between consecutive track positions, gated by a minimum
displacement so stationary jitter produces no observation.  Anything
fancier (Kalman tracking, optical flow, ...) is expected to happen
upstream and arrive as precomputed headings via CSV schema B.  Headings
must already be in the world frame.
"""

from __future__ import annotations

import csv
import math
import warnings
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .circular import wrap_angle
from .gridmap import GridSpec

DEFAULT_MIN_STEP = 0.05

TRACK_HEADER = ["t", "track_id", "x", "y"]
OBSERVATION_HEADER = ["t", "track_id", "x", "y", "theta"]


class LoadError(ValueError):
    """Raised when a CSV file cannot be loaded; names the offending line."""


@dataclass(frozen=True)
class TrackPoint:
    """One tracked position; t must be strictly increasing within a track."""

    t: float
    track_id: str
    x: float
    y: float


@dataclass(frozen=True)
class Observation:
    """One heading observation at a time and place."""

    t: float
    track_id: str | None
    x: float
    y: float
    theta: float


def headings_from_track(points, min_step: float = DEFAULT_MIN_STEP) -> list[Observation]:
    """Finite-difference headings along one track.

    Each consecutive pair of points whose displacement is at least
    ``min_step`` emits one Observation carrying the bearing
    atan2(dy, dx), attributed to the first point's position and time.
    Pairs below the gate are skipped as stationary jitter.  Fewer than two
    points yields an empty list.
    """
    points = list(points)
    if len(points) < 2:
        return []
    for a, b in zip(points, points[1:]):
        if a.track_id != b.track_id:
            raise ValueError("headings_from_track expects a single track")
        if not b.t > a.t:
            raise ValueError("track timestamps must be strictly increasing")
    out = []
    for a, b in zip(points, points[1:]):
        dx = b.x - a.x
        dy = b.y - a.y
        if math.hypot(dx, dy) < min_step:
            continue
        out.append(Observation(a.t, a.track_id, a.x, a.y, wrap_angle(math.atan2(dy, dx))))
    return out


def _parse_row(row, line_no: int, has_theta: bool):
    names = OBSERVATION_HEADER if has_theta else TRACK_HEADER
    if len(row) != len(names):
        raise LoadError(f"line {line_no}: expected {len(names)} fields, got {len(row)}")
    values = {}
    for name, token in zip(names, row):
        if name == "track_id":
            values[name] = token.strip() or None
            continue
        try:
            value = float(token)
        except ValueError:
            raise LoadError(f"line {line_no}: {name} not numeric") from None
        if not math.isfinite(value):
            raise LoadError(f"line {line_no}: {name} not finite")
        values[name] = value
    if has_theta:
        return Observation(
            values["t"], values["track_id"], values["x"], values["y"],
            wrap_angle(values["theta"]),
        )
    if values["track_id"] is None:
        raise LoadError(f"line {line_no}: track_id empty")
    return TrackPoint(values["t"], values["track_id"], values["x"], values["y"])


def load_csv(path, error_budget: int = 0):
    """Load a track CSV (schema A) or observation CSV (schema B).

    Schema is detected from the header row: ``t,track_id,x,y`` yields
    TrackPoints, ``t,track_id,x,y,theta`` yields Observations with theta
    wrapped to the canonical range.  Rows that fail validation are
    reported with their line number; more bad rows than ``error_budget``
    (default 0) aborts the load with the first offending line.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError("line 1: file is empty") from None
        header = [h.strip() for h in header]
        if header == TRACK_HEADER:
            has_theta = False
        elif header == OBSERVATION_HEADER:
            has_theta = True
        else:
            raise LoadError(f"line 1: unknown schema {','.join(header)!r}")
        records = []
        errors: list[LoadError] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(_parse_row(row, line_no, has_theta))
            except LoadError as exc:
                errors.append(exc)
                if len(errors) > error_budget:
                    raise errors[0] from None
    for exc in errors:
        warnings.warn(f"skipped bad row: {exc}")
    return records


def write_track_csv(points, path) -> None:
    """Write TrackPoints as a schema-A CSV (lossless float formatting)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACK_HEADER)
        for p in points:
            writer.writerow([repr(p.t), p.track_id, repr(p.x), repr(p.y)])


def _sort_key(obs: Observation):
    return (obs.t, obs.track_id is not None, obs.track_id or "", obs.x, obs.y, obs.theta)


class ObservationStore:
    """Observations indexed by time, track, and (optionally) grid cell.

    The store is immutable after construction and safe for concurrent
    readers.  Slices come back in a canonical order (by time, then track,
    then position/heading) so any insertion order of the same observations
    produces identical results.
    """

    def __init__(self, observations, grid: GridSpec | None = None):
        self._all = sorted(observations, key=_sort_key)
        self._grid = grid
        self._times = [o.t for o in self._all]
        self._by_track: dict[str, list[Observation]] = {}
        self._by_cell: dict[tuple[int, int], list[Observation]] = {}
        self._outside: list[Observation] = []
        for obs in self._all:
            if obs.track_id is not None:
                self._by_track.setdefault(obs.track_id, []).append(obs)
            if grid is not None:
                loc = grid.cell_of(obs.x, obs.y)
                if loc is None:
                    self._outside.append(obs)
                else:
                    self._by_cell.setdefault(loc, []).append(obs)

    @property
    def grid(self) -> GridSpec | None:
        return self._grid

    @property
    def n_observations(self) -> int:
        return len(self._all)

    @property
    def n_outside(self) -> int:
        return len(self._outside)

    @property
    def track_ids(self) -> list[str]:
        return sorted(self._by_track)

    def all_thetas(self) -> np.ndarray:
        return np.array([o.theta for o in self._all])

    def slice_spatial(self, t_lo: float, t_hi: float) -> np.ndarray:
        """All headings observed in the closed time window [t_lo, t_hi]."""
        if t_lo > t_hi:
            raise ValueError("t_lo must not exceed t_hi")
        lo = bisect_left(self._times, t_lo)
        hi = bisect_right(self._times, t_hi)
        return np.array([o.theta for o in self._all[lo:hi]])

    def slice_track(self, track_id: str) -> np.ndarray:
        """One track's headings in time order."""
        if track_id not in self._by_track:
            raise ValueError(
                f"unknown track {track_id!r}; known tracks: {self.track_ids}"
            )
        return np.array([o.theta for o in self._by_track[track_id]])

    def slice_cell(self, col: int, row: int) -> np.ndarray:
        """All headings whose position falls in the given cell, any time."""
        if self._grid is None:
            raise ValueError("store was built without a grid")
        self._grid.cell_index(col, row)  # range check
        return np.array([o.theta for o in self._by_cell.get((col, row), [])])
