"""Command-line front end: synth, build, query, eval, and plot.

Exit codes: 0 on success, 2 on argument errors (argparse), 3 on data or
I/O errors.  Stdout carries data only; diagnostics go to stderr.  Every
command is deterministic given identical arguments and seeds.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import gridmap, metrics, scenes, trajectories
from .gridmap import GridSpec
from .mixture import EmConfig, find_modes
from .plotting import PlotSpec, render_map_svg

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class DataError(Exception):
    """Wraps data-level failures that should exit with status 3."""


def _parse_grid(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError(
            "grid must be x_min,y_min,x_max,y_max,n_cols,n_rows"
        )
    try:
        x_min, y_min, x_max, y_max = (float(p) for p in parts[:4])
        n_cols, n_rows = int(parts[4]), int(parts[5])
        return GridSpec(x_min, y_min, x_max, y_max, n_cols, n_rows)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_config_tokens(path: str) -> list[str]:
    # key = value lines become --key value tokens placed before the user's
    # flags, so explicit flags override the file.
    tokens: list[str] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file: {exc}") from None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"config file: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        tokens.extend([f"--{key.replace('_', '-')}", value.strip("\"'")])
    return tokens


def _em_config(args) -> EmConfig:
    return EmConfig(
        epsilon=args.epsilon,
        dbscan_eps=args.dbscan_eps,
        dbscan_min_pts=args.min_pts,
        seed=args.seed,
    )


def _observations_from_csv(path: str, min_step: float):
    try:
        records = trajectories.load_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    except trajectories.LoadError as exc:
        raise DataError(f"{path}: {exc}") from None
    if not records:
        return []
    if isinstance(records[0], trajectories.Observation):
        return records
    by_track: dict[str, list] = {}
    for point in records:
        by_track.setdefault(point.track_id, []).append(point)
    observations = []
    for track_id in sorted(by_track):
        points = sorted(by_track[track_id], key=lambda p: p.t)
        observations.extend(trajectories.headings_from_track(points, min_step))
    return observations


def _cmd_synth(args) -> int:
    spec = scenes.SceneSpec(
        scene=args.scene,
        n_agents=args.agents,
        steps_per_agent=args.steps,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    scene = scenes.generate(spec)
    out = Path(args.out)
    truth_out = Path(args.truth_out) if args.truth_out else out.with_suffix(".truth.csv")
    try:
        trajectories.write_track_csv(scene.points, out)
        scenes.write_truth_csv(scene.truth, truth_out)
    except OSError as exc:
        raise DataError(f"cannot write output: {exc}") from None
    print(f"wrote {len(scene.points)} points to {out}", file=sys.stderr)
    print(f"wrote {len(scene.truth)} truth segments to {truth_out}", file=sys.stderr)
    return EXIT_OK


def _cmd_build(args) -> int:
    observations = _observations_from_csv(args.in_csv, args.min_step)
    gmap = gridmap.build(observations, args.grid, args.mode, _em_config(args))
    for cell in gmap.observed_cells():
        iters = cell.report.iterations if cell.report else 1
        conv = cell.report.converged if cell.report else True
        print(
            f"cell {cell.col},{cell.row}: n={cell.n_obs} "
            f"m={cell.mixture.n_components} iterations={iters} converged={conv}",
            file=sys.stderr,
        )
    try:
        gridmap.save(gmap, args.out)
    except OSError as exc:
        raise DataError(f"cannot write map: {exc}") from None
    return EXIT_OK


def _load_map(path: str):
    try:
        return gridmap.load(path)
    except OSError as exc:
        raise DataError(f"cannot read map: {exc}") from None
    except gridmap.DgmFormatError as exc:
        raise DataError(f"{path}: {exc}") from None


def _cmd_query(args) -> int:
    gmap = _load_map(args.map)
    if args.modes:
        loc = gmap.spec.cell_of(args.x, args.y)
        if loc is not None:
            cell = gmap.cell_at(*loc)
            if cell.observed:
                for mode in find_modes(cell.mixture):
                    print(f"{mode:.10f}")
        return EXIT_OK
    density, observed = gmap.query(args.x, args.y, args.theta)
    print(f"{density:.10f},{'true' if observed else 'false'}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    observations = _observations_from_csv(args.in_csv, args.min_step)
    if not observations:
        raise DataError("no observations to evaluate")
    config = _em_config(args)
    try:
        if args.scope == "cell":
            reports = metrics.compare_on_grid(
                observations, args.grid, config, seed=args.seed, n_folds=args.folds
            )
        else:
            thetas = [o.theta for o in observations]
            reports = metrics.compare(thetas, config, seed=args.seed, n_folds=args.folds)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    print("method,enll,apd,mse_closest_mode,fit_ms_mean,fit_ms_sd")
    for report in reports:
        if args.timing:
            timing = f"{report.fit_ms_mean:.3f},{report.fit_ms_sd:.3f}"
        else:
            timing = "0.000,0.000"
        print(
            f"{report.method},{report.enll:.9g},{report.apd:.9g},"
            f"{report.mse_closest_mode:.9g},{timing}"
        )
    return EXIT_OK


def _cmd_plot(args) -> int:
    gmap = _load_map(args.map)
    plot = PlotSpec(
        cell_size_px=args.cell_px,
        samples_per_lobe=args.samples,
        normalize=args.normalize,
        stroke=args.stroke,
        fill=args.fill,
    )
    try:
        Path(args.out).write_text(render_map_svg(gmap, plot), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write SVG: {exc}") from None
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--seed", type=int, default=0, help="random seed")


def _add_fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epsilon", type=float, default=1e-6, help="EM tolerance")
    parser.add_argument("--dbscan-eps", type=float, default=0.5, help="cluster radius (rad)")
    parser.add_argument("--min-pts", type=int, default=5, help="cluster density threshold")
    parser.add_argument("--min-step", type=float, default=0.05, help="heading jitter gate (m)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirmap",
        description="Directional grid maps: model angular motion over a spatial grid.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene CSV")
    p.add_argument("--scene", required=True, choices=scenes.SCENE_NAMES)
    p.add_argument("--out", required=True, help="output CSV (schema A)")
    p.add_argument("--truth-out", help="ground-truth sidecar CSV path")
    p.add_argument("--agents", type=int, default=40)
    p.add_argument("--steps", type=int, default=40, help="points per agent")
    p.add_argument("--noise", type=float, default=0.15, help="heading noise sigma (rad)")
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("build", help="fit a directional grid map from a CSV")
    p.add_argument("--in", dest="in_csv", required=True, help="input CSV (schema A or B)")
    p.add_argument("--grid", type=_parse_grid, required=True,
                   help="x_min,y_min,x_max,y_max,n_cols,n_rows")
    p.add_argument("--mode", choices=gridmap.MODES, default="vm")
    p.add_argument("--out", required=True, help="output map file")
    _add_fit_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("query", help="query a map at a location")
    p.add_argument("map", help="map file")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--theta", type=float, help="direction to evaluate (rad)")
    group.add_argument("--modes", action="store_true", help="list the cell's modes")
    _add_common(p)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("eval", help="compare VM and VMM pipelines on a CSV")
    p.add_argument("--in", dest="in_csv", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--scope", choices=("global", "cell"), default="global")
    p.add_argument("--grid", type=_parse_grid, help="required for --scope cell")
    p.add_argument("--timing", action="store_true",
                   help="report measured fit times (non-deterministic)")
    _add_fit_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("plot", help="render a map as an SVG polar-plot grid")
    p.add_argument("map", help="map file")
    p.add_argument("--out", required=True, help="output SVG path")
    p.add_argument("--cell-px", type=float, default=60.0)
    p.add_argument("--samples", type=int, default=360, help="samples per lobe")
    p.add_argument("--normalize", choices=("per-cell", "global"), default="per-cell")
    p.add_argument("--stroke", default="#1f6faa")
    p.add_argument("--fill", default="#1f6faa")
    _add_common(p)
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # Apply --config by splicing its key/value pairs in front of the
    # user's flags (after the subcommand), so explicit flags win.
    if "--config" in argv:
        idx = argv.index("--config")
        if idx + 1 >= len(argv):
            print("error: --config needs a path", file=sys.stderr)
            return EXIT_USAGE
        path = argv[idx + 1]
        head, tail = argv[: idx], argv[idx + 2 :]
        try:
            tokens = _load_config_tokens(path)
        except DataError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DATA
        argv = head[:1] + tokens + head[1:] + tail

    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval" and args.scope == "cell" and args.grid is None:
        parser.error("--scope cell requires --grid")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
