"""Directional grid maps: a spatial lattice of fitted angular distributions.

Each cell of the grid holds a von Mises mixture fitted to the motion
headings observed inside it, so the map is a field of probability measures
over direction rather than a scalar or vector field.  Cells are fitted
independently; unobserved cells answer queries with the uniform circular
density and an explicit "not observed" flag.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .circular import (
    TWO_PI,
    CircularStats,
    _fit_from_stats,
    bessel_ratio,
    fit_vm,
    wrap_angle,
)
from .mixture import (
    EmConfig,
    EmReport,
    VonMisesMixture,
    fit_vmm,
    init_clusters,
    refit_vmm,
)

UNIFORM_DENSITY = 1.0 / TWO_PI

MODES = ("vm", "vmm")


class DgmFormatError(ValueError):
    """Raised when a serialized map cannot be parsed."""


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned lattice over a rectangular world region."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    n_cols: int
    n_rows: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid extents must be non-empty")
        if self.n_cols < 1 or self.n_rows < 1:
            raise ValueError("grid needs at least one cell")

    @property
    def cell_width(self) -> float:
        return (self.x_max - self.x_min) / self.n_cols

    @property
    def cell_height(self) -> float:
        return (self.y_max - self.y_min) / self.n_rows

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows

    def cell_of(self, x: float, y: float):
        """Cell (col, row) containing the point, or None when outside.

        The max edges are closed: points exactly on x_max or y_max belong
        to the last column/row.
        """
        if not (self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max):
            return None
        col = min(int((x - self.x_min) / self.cell_width), self.n_cols - 1)
        row = min(int((y - self.y_min) / self.cell_height), self.n_rows - 1)
        return col, row

    def cell_index(self, col: int, row: int) -> int:
        # Column-major from (x_min, y_min).
        if not (0 <= col < self.n_cols and 0 <= row < self.n_rows):
            raise ValueError(f"cell ({col}, {row}) out of range")
        return col * self.n_rows + row


@dataclass(frozen=True)
class SiteSet:
    """User-chosen observation sites: fit around points instead of a grid."""

    sites: tuple[tuple[float, float], ...]
    radius: float

    def __post_init__(self):
        if not self.sites:
            raise ValueError("need at least one site")
        if not (self.radius > 0.0):
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class CellModel:
    """Fitted model of one grid cell plus fit metadata.

    ``thetas`` keeps the observations the fit was computed from (None for
    cells reloaded from disk); it is excluded from equality.
    """

    col: int
    row: int
    n_obs: int
    mixture: VonMisesMixture | None
    report: EmReport | None = field(default=None, compare=False)
    thetas: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def observed(self) -> bool:
        return self.n_obs > 0


@dataclass(frozen=True)
class DirectionalGridMap:
    """Immutable map value; updates produce a new map."""

    spec: GridSpec
    mode: str
    cells: tuple[CellModel, ...]

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if len(self.cells) != self.spec.n_cells:
            raise ValueError("cell array does not match grid size")

    def cell_at(self, col: int, row: int) -> CellModel:
        return self.cells[self.spec.cell_index(col, row)]

    def observed_cells(self) -> list[CellModel]:
        return [c for c in self.cells if c.observed]

    def query(self, x: float, y: float, theta: float):
        """Density of moving in direction theta at (x, y).

        Returns (density, observed).  Outside the grid, or in a cell that
        never saw data, the answer is the uniform density 1/(2*pi) with
        observed=False.
        """
        loc = self.spec.cell_of(x, y)
        if loc is None:
            return UNIFORM_DENSITY, False
        cell = self.cell_at(*loc)
        if not cell.observed or cell.mixture is None:
            return UNIFORM_DENSITY, False
        return float(cell.mixture.pdf(wrap_angle(theta))), True

    def same_parameters(self, other: "DirectionalGridMap") -> bool:
        """Bit-exact equality of grid, mode and all fitted parameters."""
        if self.spec != other.spec or self.mode != other.mode:
            return False
        for a, b in zip(self.cells, other.cells):
            if (a.n_obs, a.col, a.row) != (b.n_obs, b.col, b.row):
                return False
            if (a.mixture is None) != (b.mixture is None):
                return False
            if a.mixture is not None and a.mixture != b.mixture:
                return False
        return True


def _bucket_by_cell(observations: Iterable, spec: GridSpec) -> dict:
    buckets: dict[tuple[int, int], list[float]] = {}
    for obs in observations:
        loc = spec.cell_of(obs.x, obs.y)
        if loc is None:
            continue
        buckets.setdefault(loc, []).append(obs.theta)
    return buckets


def _fit_cell_thetas(thetas: np.ndarray, mode: str, config: EmConfig):
    if mode == "vm":
        fit = fit_vm(thetas)
        return VonMisesMixture.single(fit), None
    mixture, report = fit_vmm(thetas, config)
    return mixture, report


def build(
    observations: Sequence,
    spec: GridSpec,
    mode: str = "vm",
    config: EmConfig | None = None,
) -> DirectionalGridMap:
    """Fit a directional grid map from heading observations.

    Observations are bucketed into cells in input order and each non-empty
    cell is fitted independently: a single von Mises (wrapped as a
    one-component mixture) in "vm" mode, an EM-fitted mixture in "vmm"
    mode.  Deterministic given the input order and config.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    config = config or EmConfig()
    buckets = _bucket_by_cell(observations, spec)
    if not buckets:
        warnings.warn("no observations fell inside the grid; map is all-unobserved")
    cells: list[CellModel] = []
    for col in range(spec.n_cols):
        for row in range(spec.n_rows):
            thetas = buckets.get((col, row))
            if not thetas:
                cells.append(CellModel(col, row, 0, None))
                continue
            arr = wrap_angle(np.asarray(thetas, dtype=float))
            mixture, report = _fit_cell_thetas(arr, mode, config)
            cells.append(CellModel(col, row, arr.size, mixture, report, arr))
    return DirectionalGridMap(spec=spec, mode=mode, cells=tuple(cells))


def build_at_sites(
    observations: Sequence,
    sites: SiteSet,
    mode: str = "vm",
    config: EmConfig | None = None,
) -> list[tuple[tuple[float, float], VonMisesMixture | None]]:
    """Fit one model per user-specified site from observations within its radius.

    Sites with no observations in range get None instead of a mixture.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    config = config or EmConfig()
    xs = np.array([o.x for o in observations])
    ys = np.array([o.y for o in observations])
    thetas = np.array([o.theta for o in observations])
    results = []
    for sx, sy in sites.sites:
        if xs.size:
            mask = np.hypot(xs - sx, ys - sy) <= sites.radius
        else:
            mask = np.zeros(0, dtype=bool)
        if not mask.any():
            results.append(((sx, sy), None))
            continue
        mixture, _ = _fit_cell_thetas(wrap_angle(thetas[mask]), mode, config)
        results.append(((sx, sy), mixture))
    return results


def update_online(
    gmap: DirectionalGridMap,
    new_observations: Sequence,
    config: EmConfig | None = None,
    spec: GridSpec | None = None,
) -> DirectionalGridMap:
    """Fold a new batch of observations into the map, returning a new map.

    In "vm" mode each affected cell is refitted from its accumulated
    observations, so chaining updates is exactly equivalent to one batch
    build over everything seen so far.  In "vmm" mode affected cells re-run
    EM warm-started from their current parameters; if that fails to improve
    the likelihood, the cell is refitted from a fresh cluster
    initialization and the better of the two is kept.

    Cells reloaded from disk no longer carry their observations: "vm" cells
    then continue from sufficient statistics reconstructed from (mu, kappa,
    n_obs), which is exact up to the concentration round-trip, while "vmm"
    cells cannot be updated and raise.
    """
    config = config or EmConfig()
    if spec is not None and spec != gmap.spec:
        raise ValueError("observation grid spec does not match the map")
    buckets = _bucket_by_cell(new_observations, gmap.spec)
    if not buckets:
        return gmap
    cells = list(gmap.cells)
    for (col, row), new_thetas in sorted(buckets.items()):
        idx = gmap.spec.cell_index(col, row)
        old = cells[idx]
        new_arr = wrap_angle(np.asarray(new_thetas, dtype=float))
        if not old.observed:
            mixture, report = _fit_cell_thetas(new_arr, gmap.mode, config)
            cells[idx] = CellModel(col, row, new_arr.size, mixture, report, new_arr)
            continue
        if gmap.mode == "vm":
            cells[idx] = _update_vm_cell(old, new_arr)
        else:
            cells[idx] = _update_vmm_cell(old, new_arr, config)
    return replace(gmap, cells=tuple(cells))


def _update_vm_cell(old: CellModel, new_arr: np.ndarray) -> CellModel:
    if old.thetas is not None:
        combined = np.concatenate([old.thetas, new_arr])
        fit = fit_vm(combined)
        return CellModel(
            old.col, old.row, combined.size, VonMisesMixture.single(fit), None, combined
        )
    # Reloaded cell: rebuild the resultant vector from the stored fit.
    comp = old.mixture.components[0]
    r_bar = bessel_ratio(comp.dist.kappa)
    c = old.n_obs * r_bar * math.cos(comp.dist.mu) + float(np.sum(np.cos(new_arr)))
    s = old.n_obs * r_bar * math.sin(comp.dist.mu) + float(np.sum(np.sin(new_arr)))
    n = old.n_obs + new_arr.size
    c_bar = c / n
    s_bar = s / n
    r = min(math.hypot(c_bar, s_bar), 1.0)
    stats = CircularStats(n, c_bar, s_bar, wrap_angle(math.atan2(s_bar, c_bar)), r, 1.0 - r)
    fit = _fit_from_stats(stats)
    return CellModel(old.col, old.row, n, VonMisesMixture.single(fit), None, None)


def _update_vmm_cell(old: CellModel, new_arr: np.ndarray, config: EmConfig) -> CellModel:
    if old.thetas is None:
        raise ValueError(
            "online vmm update needs the cell's observation history; "
            "maps reloaded from disk do not carry it"
        )
    combined = np.concatenate([old.thetas, new_arr])
    mixture, report = refit_vmm(combined, old.mixture, config)
    improvement = report.nll_trace[0] - report.nll_trace[-1]
    # Warm-started EM cannot change the component count, so fall back to a
    # cluster re-initialization when it stalls or when the clustering now
    # sees a different number of lobes (a new mode emerged, or one died).
    centers = init_clusters(combined, config)
    if improvement <= config.epsilon or len(centers) != mixture.n_components:
        fresh_mixture, fresh_report = fit_vmm(combined, config)
        if fresh_report.nll_trace[-1] < report.nll_trace[-1]:
            mixture, report = fresh_mixture, fresh_report
    return CellModel(old.col, old.row, combined.size, mixture, report, combined)


def to_text(gmap: DirectionalGridMap) -> str:
    """Serialize a map to the versioned text format.

    Header line ``DGM v1 <n_cols> <n_rows> <x_min> <y_min> <x_max> <y_max>
    <mode>``, then one ``cell`` line per observed cell with its component
    parameters at 17 significant digits (lossless for doubles).
    """
    s = gmap.spec
    lines = [
        f"DGM v1 {s.n_cols} {s.n_rows} {s.x_min:.17g} {s.y_min:.17g}"
        f" {s.x_max:.17g} {s.y_max:.17g} {gmap.mode}"
    ]
    for cell in gmap.cells:
        if not cell.observed or cell.mixture is None:
            continue
        parts = [f"cell {cell.col} {cell.row} {cell.n_obs} M={cell.mixture.n_components}"]
        for comp in cell.mixture.components:
            parts.append(f"{comp.weight:.17g} {comp.dist.mu:.17g} {comp.dist.kappa:.17g}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _parse_float(token: str, line_no: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise DgmFormatError(f"line {line_no}: {what} not numeric: {token!r}") from None


def _parse_int(token: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise DgmFormatError(f"line {line_no}: {what} not an integer: {token!r}") from None


def from_text(text: str) -> DirectionalGridMap:
    """Parse a map produced by :func:`to_text`.

    Malformed or version-mismatched input raises DgmFormatError naming the
    offending line; no partial map is ever returned.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DgmFormatError("line 1: empty map file")
    header = lines[0].split()
    if len(header) != 9 or header[0] != "DGM":
        raise DgmFormatError("line 1: expected header 'DGM v1 ...'")
    if header[1] != "v1":
        raise DgmFormatError(f"line 1: unsupported format version {header[1]!r}")
    n_cols = _parse_int(header[2], 1, "n_cols")
    n_rows = _parse_int(header[3], 1, "n_rows")
    x_min = _parse_float(header[4], 1, "x_min")
    y_min = _parse_float(header[5], 1, "y_min")
    x_max = _parse_float(header[6], 1, "x_max")
    y_max = _parse_float(header[7], 1, "y_max")
    mode = header[8]
    if mode not in MODES:
        raise DgmFormatError(f"line 1: unknown mode {mode!r}")
    spec = GridSpec(x_min, y_min, x_max, y_max, n_cols, n_rows)

    cells: list[CellModel] = [
        CellModel(col, row, 0, None) for col in range(n_cols) for row in range(n_rows)
    ]
    for offset, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if tokens[0] != "cell":
            raise DgmFormatError(f"line {offset}: expected 'cell', got {tokens[0]!r}")
        if len(tokens) < 5:
            raise DgmFormatError(f"line {offset}: truncated cell record")
        col = _parse_int(tokens[1], offset, "col")
        row = _parse_int(tokens[2], offset, "row")
        n_obs = _parse_int(tokens[3], offset, "n_obs")
        if not tokens[4].startswith("M="):
            raise DgmFormatError(f"line {offset}: expected 'M=<count>', got {tokens[4]!r}")
        m = _parse_int(tokens[4][2:], offset, "component count")
        if m < 1:
            raise DgmFormatError(f"line {offset}: component count must be positive")
        if len(tokens) != 5 + 3 * m:
            raise DgmFormatError(
                f"line {offset}: expected {5 + 3 * m} fields for M={m}, got {len(tokens)}"
            )
        if not (0 <= col < n_cols and 0 <= row < n_rows):
            raise DgmFormatError(f"line {offset}: cell ({col}, {row}) outside grid")
        if n_obs < 1:
            raise DgmFormatError(f"line {offset}: observed cell must have n_obs >= 1")
        weights, mus, kappas = [], [], []
        for j in range(m):
            base = 5 + 3 * j
            weights.append(_parse_float(tokens[base], offset, f"component {j} weight"))
            mus.append(_parse_float(tokens[base + 1], offset, f"component {j} mu"))
            kappas.append(_parse_float(tokens[base + 2], offset, f"component {j} kappa"))
        try:
            mixture = VonMisesMixture.from_params(weights, mus, kappas)
        except ValueError as exc:
            raise DgmFormatError(f"line {offset}: {exc}") from None
        cells[spec.cell_index(col, row)] = CellModel(col, row, n_obs, mixture)
    return DirectionalGridMap(spec=spec, mode=mode, cells=tuple(cells))


def save(gmap: DirectionalGridMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_text(gmap))


def load(path) -> DirectionalGridMap:
    with open(path, "r", encoding="utf-8") as fh:
        return from_text(fh.read())
