"""Model-quality metrics: held-out likelihood and density under k-fold
cross-validation, squared error to the closest mode, and KL divergence
between directional densities, plus the harness comparing the unimodal and
mixture pipelines on the same folds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .circular import TWO_PI, fit_vm, wrap_angle
from .gridmap import GridSpec
from .mixture import EmConfig, VonMisesMixture, find_modes, fit_vmm

METHOD_VM = "DGM-VM"
METHOD_VMM = "DGM-VMM"


@dataclass(frozen=True)
class MetricReport:
    """Cross-validated quality metrics for one method.

    Lower enll and higher apd mean a better fit.  Timing is wall-clock per
    fold fit and is the only non-deterministic part; ``same_metrics``
    compares everything else.
    """

    method: str
    enll: float
    apd: float
    mse_closest_mode: float
    fit_ms_mean: float
    fit_ms_sd: float

    def same_metrics(self, other: "MetricReport", atol: float = 0.0) -> bool:
        return (
            self.method == other.method
            and abs(self.enll - other.enll) <= atol
            and abs(self.apd - other.apd) <= atol
            and abs(self.mse_closest_mode - other.mse_closest_mode) <= atol
        )


def enll(mix: VonMisesMixture, thetas) -> float:
    """Expected negative log-likelihood: the mean of -log pdf over the data."""
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    return -float(np.mean(mix.log_pdf(arr)))


def _fit_for_mode(thetas, mode: str, config: EmConfig) -> VonMisesMixture:
    if mode == "vm":
        return VonMisesMixture.single(fit_vm(thetas))
    mixture, _ = fit_vmm(thetas, config)
    return mixture


def _fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), k)


def apd_cv(
    thetas,
    mode: str = "vmm",
    config: EmConfig | None = None,
    n_folds: int = 10,
    seed: int = 0,
) -> float:
    """Average probability density under k-fold cross-validation.

    Shuffles with the seed, splits into ``n_folds`` contiguous folds, fits
    on k-1 folds and averages the fitted density over the held-out fold;
    the result is the mean over folds.
    """
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size < n_folds:
        raise ValueError(f"need at least {n_folds} observations, got {arr.size}")
    config = config or EmConfig()
    fold_means = []
    for test_idx in _fold_indices(arr.size, n_folds, seed):
        train = np.delete(arr, test_idx)
        mix = _fit_for_mode(train, mode, config)
        fold_means.append(float(np.mean(mix.pdf(arr[test_idx]))))
    return float(np.mean(fold_means))


def mse_closest_mode(mix: VonMisesMixture, thetas, modes=None) -> float:
    """Mean squared angular error to the nearest mode of the density.

    Modes come from :func:`find_modes` unless supplied; for a single-mode
    model this is the squared angular error to the mean direction.  A
    uniform mixture has no modes and raises.
    """
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    if modes is None:
        modes = find_modes(mix)
    if len(modes) == 0:
        raise ValueError("mixture has no modes (uniform density)")
    errors = np.abs(wrap_angle(arr[:, None] - np.asarray(modes)[None, :]))
    return float(np.mean(errors.min(axis=1) ** 2))


def kl_divergence(p: VonMisesMixture, q: VonMisesMixture, n_grid: int = 7200) -> float:
    """Kullback-Leibler divergence KL(p || q) by periodic trapezoid quadrature.

    Von Mises mixtures are strictly positive so there are no support
    issues; KL(p, p) is exactly zero and asymmetry is expected.
    """
    step = TWO_PI / n_grid
    grid = -math.pi + step * np.arange(n_grid)
    log_p = p.log_pdf(grid)
    log_q = q.log_pdf(grid)
    return float(np.sum(np.exp(log_p) * (log_p - log_q)) * step)


def compare(
    thetas,
    config: EmConfig | None = None,
    seed: int = 0,
    n_folds: int = 10,
) -> tuple[MetricReport, MetricReport]:
    """Run the unimodal and mixture pipelines under identical folds.

    ENLL pools the held-out negative log densities over all points (each
    point is held out exactly once); APD is the mean of fold means; the
    mode error is computed from a fit on the full data, with the
    single-fit mean direction acting as the sole mode for the unimodal
    method.  Returns (vm_report, vmm_report).
    """
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size < max(n_folds, 10):
        raise ValueError(f"need at least {max(n_folds, 10)} observations, got {arr.size}")
    config = config or EmConfig()
    folds = _fold_indices(arr.size, n_folds, seed)

    reports = []
    for mode, method in (("vm", METHOD_VM), ("vmm", METHOD_VMM)):
        nll_sum = 0.0
        fold_means = []
        times_ms = []
        for test_idx in folds:
            train = np.delete(arr, test_idx)
            t0 = time.perf_counter()
            mix = _fit_for_mode(train, mode, config)
            times_ms.append((time.perf_counter() - t0) * 1e3)
            log_pdf = mix.log_pdf(arr[test_idx])
            nll_sum -= float(np.sum(log_pdf))
            fold_means.append(float(np.mean(np.exp(log_pdf))))
        full = _fit_for_mode(arr, mode, config)
        if mode == "vm":
            modes = [full.components[0].dist.mu]
        else:
            modes = find_modes(full) or list(full.mus)
        reports.append(
            MetricReport(
                method=method,
                enll=nll_sum / arr.size,
                apd=float(np.mean(fold_means)),
                mse_closest_mode=mse_closest_mode(full, arr, modes=modes),
                fit_ms_mean=float(np.mean(times_ms)),
                fit_ms_sd=float(np.std(times_ms)),
            )
        )
    return reports[0], reports[1]


def compare_on_grid(
    observations,
    grid: GridSpec,
    config: EmConfig | None = None,
    seed: int = 0,
    n_folds: int = 10,
) -> tuple[MetricReport, MetricReport]:
    """Per-cell comparison aggregated over a grid.

    Observations are bucketed by cell; every cell with at least
    ``n_folds`` observations is evaluated with :func:`compare` and the
    metrics are averaged weighted by cell observation counts.  Fold times
    are pooled across cells.
    """
    config = config or EmConfig()
    buckets: dict[tuple[int, int], list[float]] = {}
    for obs in observations:
        loc = grid.cell_of(obs.x, obs.y)
        if loc is not None:
            buckets.setdefault(loc, []).append(obs.theta)
    eligible = {loc: np.asarray(t) for loc, t in sorted(buckets.items()) if len(t) >= n_folds}
    if not eligible:
        raise ValueError(f"no cell has at least {n_folds} observations")

    weights = []
    per_cell: list[tuple[MetricReport, MetricReport]] = []
    for loc, cell_thetas in eligible.items():
        per_cell.append(compare(cell_thetas, config, seed=seed, n_folds=n_folds))
        weights.append(cell_thetas.size)
    w = np.asarray(weights, dtype=float)
    w /= w.sum()

    out = []
    for side, method in ((0, METHOD_VM), (1, METHOD_VMM)):
        cell_reports = [pair[side] for pair in per_cell]
        out.append(
            MetricReport(
                method=method,
                enll=float(np.sum(w * [r.enll for r in cell_reports])),
                apd=float(np.sum(w * [r.apd for r in cell_reports])),
                mse_closest_mode=float(
                    np.sum(w * [r.mse_closest_mode for r in cell_reports])
                ),
                fit_ms_mean=float(np.mean([r.fit_ms_mean for r in cell_reports])),
                fit_ms_sd=float(np.mean([r.fit_ms_sd for r in cell_reports])),
            )
        )
    return out[0], out[1]
