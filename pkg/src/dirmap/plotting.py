"""SVG export of a directional grid map as a lattice of polar plots.

Each observed cell is drawn as a closed lobe whose radius at angle theta
is proportional to the cell's density there; unobserved cells show a faint
circle (the uniform distribution).  Output is plain SVG 1.1 text with no
external dependencies, so files are diffable and byte-deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gridmap import UNIFORM_DENSITY, DirectionalGridMap

NORMALIZE_MODES = ("per-cell", "global")


@dataclass(frozen=True)
class PlotSpec:
    """Rendering parameters for the polar-plot grid."""

    cell_size_px: float = 60.0
    samples_per_lobe: int = 360
    normalize: str = "per-cell"
    stroke: str = "#1f6faa"
    fill: str = "#1f6faa"

    def __post_init__(self):
        if self.samples_per_lobe < 36:
            raise ValueError("samples_per_lobe must be at least 36")
        if self.normalize not in NORMALIZE_MODES:
            raise ValueError(f"normalize must be one of {NORMALIZE_MODES}")
        if not (self.cell_size_px > 0):
            raise ValueError("cell_size_px must be positive")


def render_map_svg(gmap: DirectionalGridMap, plot: PlotSpec | None = None) -> str:
    """Render the map to an SVG document string."""
    plot = plot or PlotSpec()
    spec = gmap.spec
    px = plot.cell_size_px
    width = spec.n_cols * px
    height = spec.n_rows * px
    max_radius = 0.45 * px

    angles = -math.pi + 2.0 * math.pi * np.arange(plot.samples_per_lobe) / plot.samples_per_lobe
    densities = {}
    for cell in gmap.observed_cells():
        densities[(cell.col, cell.row)] = cell.mixture.pdf(angles)
    global_max = max((d.max() for d in densities.values()), default=UNIFORM_DENSITY)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
    ]
    # cell frame
    for col in range(spec.n_cols + 1):
        x = col * px
        parts.append(
            f'<line x1="{x:.2f}" y1="0" x2="{x:.2f}" y2="{height:.0f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
    for row in range(spec.n_rows + 1):
        y = row * px
        parts.append(
            f'<line x1="0" y1="{y:.2f}" x2="{width:.0f}" y2="{y:.2f}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )

    for col in range(spec.n_cols):
        for row in range(spec.n_rows):
            # SVG y runs downward; map rows run upward.
            cx = (col + 0.5) * px
            cy = (spec.n_rows - row - 0.5) * px
            cell = gmap.cell_at(col, row)
            if not cell.observed:
                r = max_radius * (
                    UNIFORM_DENSITY / global_max if plot.normalize == "global" else 0.5
                )
                parts.append(
                    f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="none" '
                    f'stroke="{plot.stroke}" stroke-width="1" opacity="0.25"/>'
                )
                continue
            dens = densities[(col, row)]
            norm = dens.max() if plot.normalize == "per-cell" else global_max
            radii = max_radius * dens / norm
            xs = cx + radii * np.cos(angles)
            ys = cy - radii * np.sin(angles)
            points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
            parts.append(
                f'<polygon points="{points}" fill="{plot.fill}" fill-opacity="0.25" '
                f'stroke="{plot.stroke}" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
