"""Von Mises mixtures: density, sampling, EM fitting, and mode finding.

Fitting is expectation-maximization seeded by density-based clustering on
the circle, so the number of components is discovered from the data rather
than supplied by the caller.  Everything is a pure function of (data,
config); randomness is confined to the sampler, which owns a per-call
generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circular import (
    LOG_TWO_PI,
    TWO_PI,
    VonMises,
    circular_stats,
    inverse_bessel_ratio,
    log_bessel_i0,
    wrap_angle,
)

# More components than this is spurious at per-cell data volumes.
MAX_COMPONENTS = 10

# Starting concentration for EM; exactly zero would make the first
# E-step weight-only and slow convergence.
INIT_KAPPA = 1.0

# Initialization clusters at most this many points (pairwise-distance
# DBSCAN is quadratic); larger samples are strided down.  EM always runs
# on the full data.
DBSCAN_INPUT_CAP = 2000


@dataclass(frozen=True)
class MixtureComponent:
    """One weighted von Mises component."""

    weight: float
    dist: VonMises

    def __post_init__(self):
        if not (self.weight >= 0.0):
            raise ValueError("component weight must be non-negative")


@dataclass(frozen=True)
class VonMisesMixture:
    """Convex combination of von Mises components.

    Weights must sum to one (within 1e-12); they are stored exactly as
    given so that serialization round-trips bit-for-bit.
    """

    components: tuple[MixtureComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise ValueError("mixture needs at least one component")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_params(cls, weights, mus, kappas) -> "VonMisesMixture":
        return cls(
            tuple(
                MixtureComponent(float(w), VonMises(float(m), float(k)))
                for w, m, k in zip(weights, mus, kappas, strict=True)
            )
        )

    @classmethod
    def single(cls, dist: VonMises) -> "VonMisesMixture":
        return cls((MixtureComponent(1.0, VonMises(dist.mu, dist.kappa)),))

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def mus(self) -> np.ndarray:
        return np.array([c.dist.mu for c in self.components])

    @property
    def kappas(self) -> np.ndarray:
        return np.array([c.dist.kappa for c in self.components])

    def log_pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        lp = _log_density_matrix(self.weights, self.mus, self.kappas, np.atleast_1d(theta))
        out = _logsumexp_columns(lp)
        if theta.ndim == 0:
            return float(out[0])
        return out.reshape(theta.shape)

    def pdf(self, theta):
        return np.exp(self.log_pdf(theta))


@dataclass(frozen=True)
class EmConfig:
    """Knobs for EM fitting and its cluster-based initialization."""

    epsilon: float = 1e-6
    max_iterations: int = 100
    dbscan_eps: float = 0.5
    dbscan_min_pts: int = 5
    alpha_floor: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not (0.0 < self.dbscan_eps <= math.pi):
            raise ValueError("dbscan_eps must be in (0, pi]")
        if self.dbscan_min_pts < 1:
            raise ValueError("dbscan_min_pts must be at least 1")


@dataclass(frozen=True)
class EmReport:
    """Diagnostics of one EM run.

    nll_trace[i] is the total negative log-likelihood after i update
    steps (element 0 is the initial model); EM guarantees it never
    increases.  The trace covers the component set the loop iterated on;
    components pruned below the weight floor afterwards only affect
    m_final.
    """

    iterations: int
    nll_trace: tuple[float, ...]
    converged: bool
    m_initial: int
    m_final: int

    def trace_is_non_increasing(self, tol: float = 1e-9) -> bool:
        return all(
            later <= earlier + tol
            for earlier, later in zip(self.nll_trace, self.nll_trace[1:])
        )


def _log_density_matrix(weights, mus, kappas, thetas) -> np.ndarray:
    # (M, N) matrix of log(alpha_m) + log VM_m(theta_n).  A zero weight is
    # legal (dead component) and contributes -inf, i.e. zero mass.
    m = len(weights)
    with np.errstate(divide="ignore"):
        log_weights = np.log(np.asarray(weights, dtype=float))
    lp = np.empty((m, len(thetas)))
    for i in range(m):
        lp[i] = (
            log_weights[i]
            + kappas[i] * np.cos(thetas - mus[i])
            - LOG_TWO_PI
            - log_bessel_i0(kappas[i])
        )
    return lp


def _logsumexp_columns(lp: np.ndarray) -> np.ndarray:
    peak = lp.max(axis=0)
    return peak + np.log(np.sum(np.exp(lp - peak), axis=0))


def responsibilities(mix: VonMisesMixture, thetas) -> np.ndarray:
    """Posterior component memberships, one column per observation.

    Entry (m, n) is the probability that observation n came from component
    m; every column sums to one.
    """
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    gammas, _ = _e_step(mix.weights, mix.mus, mix.kappas, arr)
    return gammas


def _e_step(weights, mus, kappas, thetas):
    lp = _log_density_matrix(weights, mus, kappas, thetas)
    log_norm = _logsumexp_columns(lp)
    gammas = np.exp(lp - log_norm)
    nll = -float(np.sum(log_norm))
    return gammas, nll


def _weighted_update(gammas: np.ndarray, cos_t: np.ndarray, sin_t: np.ndarray):
    # Exact weighted MLE per component; components with no mass are dropped.
    totals = gammas.sum(axis=1)
    keep = totals > 0.0
    gammas = gammas[keep]
    totals = totals[keep]
    n = cos_t.size
    c = gammas @ cos_t
    s = gammas @ sin_t
    weights = totals / n
    weights = weights / weights.sum()
    mus = np.arctan2(s, c)
    r_bars = np.minimum(np.hypot(c, s) / totals, 1.0)
    kappas = np.array([inverse_bessel_ratio(r, refine=True) for r in r_bars])
    return weights, mus, kappas


def m_step(gammas, thetas):
    """One maximization step: weighted MLE of each component.

    Args:
        gammas: (M, N) column-stochastic responsibility matrix.
        thetas: the N observed angles.

    Returns:
        List of (weight, mu, kappa) triples; weights sum to one.
        Components that received zero responsibility mass are dropped and
        the remaining weights renormalized.
    """
    gammas = np.asarray(gammas, dtype=float)
    arr = np.asarray(thetas, dtype=float).ravel()
    if gammas.ndim != 2 or gammas.shape[1] != arr.size:
        raise ValueError("responsibility matrix shape does not match data")
    weights, mus, kappas = _weighted_update(gammas, np.cos(arr), np.sin(arr))
    return [(float(w), float(m), float(k)) for w, m, k in zip(weights, mus, kappas)]


def circular_dbscan(thetas, eps: float, min_pts: int) -> np.ndarray:
    """DBSCAN on the circle with metric |wrap(a - b)|.

    Returns a label per point (-1 for noise).  A point is a core point
    when its eps-neighborhood, itself included, holds at least ``min_pts``
    points; clusters grow from core points in scan order, so the labeling
    is deterministic given the input order.
    """
    arr = np.asarray(thetas, dtype=float).ravel()
    n = arr.size
    labels = np.full(n, -1, dtype=int)
    if n == 0:
        return labels
    diff = wrap_angle(arr[:, None] - arr[None, :])
    adjacency = np.abs(diff) <= eps
    core = adjacency.sum(axis=1) >= min_pts
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not core[seed]:
            continue
        labels[seed] = cluster
        frontier = [seed]
        while frontier:
            point = frontier.pop(0)
            for neighbor in np.nonzero(adjacency[point])[0]:
                if labels[neighbor] == -1:
                    labels[neighbor] = cluster
                    if core[neighbor]:
                        frontier.append(neighbor)
        cluster += 1
    return labels


def init_clusters(thetas, config: EmConfig | None = None) -> list[float]:
    """Initial component mean directions from density-based clustering.

    One circular mean per discovered cluster, capped at MAX_COMPONENTS
    (largest clusters win).  If everything is noise the global circular
    mean is returned as a single fallback center.

    The default dbscan_min_pts suits per-cell data volumes (tens to a few
    hundred angles).  It is an absolute count, so for pooled fits of many
    thousands of points scale it with the sample (roughly n/50), otherwise
    sparse saddle points can bridge well-separated lobes into one cluster.
    """
    config = config or EmConfig()
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    if arr.size > DBSCAN_INPUT_CAP:
        sample = arr[:: math.ceil(arr.size / DBSCAN_INPUT_CAP)]
    else:
        sample = arr
    labels = circular_dbscan(sample, config.dbscan_eps, config.dbscan_min_pts)
    n_clusters = labels.max() + 1
    if n_clusters == 0:
        return [circular_stats(arr).mean_dir]
    sizes = [(labels == c).sum() for c in range(n_clusters)]
    order = sorted(range(n_clusters), key=lambda c: -sizes[c])[:MAX_COMPONENTS]
    kept = sorted(order)  # keep discovery order among the survivors
    return [circular_stats(sample[labels == c]).mean_dir for c in kept]


def _em_loop(arr: np.ndarray, weights, mus, kappas, config: EmConfig):
    cos_t = np.cos(arr)
    sin_t = np.sin(arr)
    m_initial = len(weights)
    trace: list[float] = []
    converged = False
    iterations = 0
    for _ in range(config.max_iterations):
        gammas, nll = _e_step(weights, mus, kappas, arr)
        trace.append(nll)
        new_weights, new_mus, new_kappas = _weighted_update(gammas, cos_t, sin_t)
        iterations += 1
        if len(new_mus) == len(mus):
            change = np.max(
                np.hypot(np.cos(new_mus) - np.cos(mus), np.sin(new_mus) - np.sin(mus))
            )
        else:
            change = math.inf
        weights, mus, kappas = new_weights, new_mus, new_kappas
        if change < config.epsilon:
            converged = True
            break
    _, final_nll = _e_step(weights, mus, kappas, arr)
    trace.append(final_nll)

    # Prune numerically dead components once the loop is done; doing it
    # mid-run could bump the recorded trace upward.
    keep = weights >= config.alpha_floor
    if not np.all(keep) and np.any(keep):
        weights = weights[keep] / weights[keep].sum()
        mus = mus[keep]
        kappas = kappas[keep]
    mixture = VonMisesMixture.from_params(weights, wrap_angle(mus), kappas)
    report = EmReport(
        iterations=iterations,
        nll_trace=tuple(trace),
        converged=converged,
        m_initial=m_initial,
        m_final=len(weights),
    )
    return mixture, report


def fit_vmm(thetas, config: EmConfig | None = None, n_components: int | None = None):
    """Fit a von Mises mixture by EM.

    Component means are initialized from circular DBSCAN cluster centers
    (or forced to ``n_components`` if given), weights to 1/M and
    concentrations to a small positive value.  Iterates E and M steps
    until the largest movement of any component mean, measured between
    the (cos mu, sin mu) embeddings, drops below config.epsilon.

    Returns:
        (VonMisesMixture, EmReport)
    """
    config = config or EmConfig()
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    arr = wrap_angle(arr)

    if n_components is None:
        centers = init_clusters(arr, config)
    elif n_components == 1:
        centers = [circular_stats(arr).mean_dir]
    else:
        centers = init_clusters(arr, config)[:n_components]
        base = centers[0]
        j = 1
        while len(centers) < n_components:
            centers.append(wrap_angle(base + TWO_PI * j / n_components))
            j += 1

    n_distinct = np.unique(arr).size
    m = max(1, min(len(centers), MAX_COMPONENTS, n_distinct))
    centers = centers[:m]
    weights = np.full(m, 1.0 / m)
    mus = np.asarray(centers, dtype=float)
    kappas = np.full(m, INIT_KAPPA)
    return _em_loop(arr, weights, mus, kappas, config)


def refit_vmm(thetas, start: VonMisesMixture, config: EmConfig | None = None):
    """Re-run EM warm-started from an existing mixture's parameters."""
    config = config or EmConfig()
    arr = wrap_angle(np.asarray(thetas, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("need at least one angle")
    return _em_loop(arr, start.weights.copy(), start.mus.copy(), start.kappas.copy(), config)


def _sample_von_mises(mu: float, kappa: float, n: int, rng: np.random.Generator) -> np.ndarray:
    # Best-Fisher rejection sampler.
    if n == 0:
        return np.empty(0)
    if kappa < 1e-8:
        return wrap_angle(rng.uniform(-math.pi, math.pi, n))
    tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(n)
    filled = 0
    while filled < n:
        remaining = n - filled
        batch = remaining + remaining // 2 + 16
        u1 = rng.random(batch)
        u2 = rng.random(batch)
        u3 = rng.random(batch)
        z = np.cos(math.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        with np.errstate(divide="ignore", invalid="ignore"):
            accept = (c * (2.0 - c) - u2 > 0.0) | (np.log(c / u2) + 1.0 - c >= 0.0)
        angles = np.sign(u3[accept] - 0.5) * np.arccos(np.clip(f[accept], -1.0, 1.0))
        take = min(angles.size, remaining)
        out[filled : filled + take] = angles[:take]
        filled += take
    return wrap_angle(mu + out)


def sample_mixture(mix: VonMisesMixture, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. angles from the mixture, deterministically per seed.

    Components are chosen by weight, then each draw uses the Best-Fisher
    rejection method (uniform for kappa ~ 0).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    choices = rng.choice(mix.n_components, size=n, p=mix.weights)
    out = np.empty(n)
    for m, comp in enumerate(mix.components):
        mask = choices == m
        out[mask] = _sample_von_mises(comp.dist.mu, comp.dist.kappa, int(mask.sum()), rng)
    return out


def _golden_section_max(func, lo: float, hi: float, tol: float = 1e-9) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = func(x1), func(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = func(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = func(x1)
    return 0.5 * (a + b)


def find_modes(
    mix: VonMisesMixture,
    grid_size: int = 3600,
    uniform_tol: float = 1e-12,
    dedup_tol: float = 1e-6,
) -> list[float]:
    """Locate the local maxima of the mixture density.

    Scans a dense grid over the circle, then refines every bracketed
    maximum by golden-section search to ~1e-8 angular resolution.  Returns
    the modes sorted ascending, deduplicated circularly; a mixture whose
    density is flat over the whole scan (uniform) has no modes and yields
    an empty list.
    """
    step = TWO_PI / grid_size
    grid = -math.pi + step * np.arange(1, grid_size + 1)
    density = mix.pdf(grid)
    if density.max() - density.min() < uniform_tol:
        return []
    is_peak = (density > np.roll(density, 1)) & (density >= np.roll(density, -1))
    peaks = np.nonzero(is_peak)[0]

    def density_at(x: float) -> float:
        return float(mix.pdf(wrap_angle(x)))

    modes = [
        wrap_angle(_golden_section_max(density_at, grid[j] - step, grid[j] + step))
        for j in peaks
    ]
    modes.sort()
    merged: list[float] = []
    for m in modes:
        if merged and abs(m - merged[-1]) < dedup_tol:
            continue
        merged.append(m)
    if len(merged) > 1 and abs(wrap_angle(merged[0] - merged[-1])) < dedup_tol:
        merged.pop()
    return merged
