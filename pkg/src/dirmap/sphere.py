"""Von Mises-Fisher distributions on the unit hypersphere.

The D-dimensional generalization of the circular model: density
proportional to exp(kappa * mu . x) for unit vectors x, normalized with
the modified Bessel function of order D/2 - 1.  For D == 2 this reduces
pointwise to the circular von Mises density under the angle <-> unit
vector correspondence.  General-order Bessel evaluation is delegated to
scipy.special.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, ive

from .circular import KAPPA_MAX

_UNIFORM_KAPPA_TOL = 1e-12


def _as_unit_vectors(x, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError("expected a vector or a matrix of row vectors")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.shape[1]}")
    norms = np.linalg.norm(arr, axis=1)
    if not np.allclose(norms, 1.0, atol=1e-9):
        raise ValueError("inputs must be unit vectors")
    return arr


def _log_uniform_density(dim: int) -> float:
    # Reciprocal surface area of the (dim-1)-sphere.
    return float(gammaln(dim / 2.0) - math.log(2.0) - (dim / 2.0) * math.log(math.pi))


@dataclass(frozen=True, eq=False)
class VonMisesFisher:
    """Directional distribution on the (D-1)-sphere."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or mu.size < 2:
            raise ValueError("mu must be a vector of dimension >= 2")
        norm = np.linalg.norm(mu)
        if not math.isclose(norm, 1.0, abs_tol=1e-9):
            raise ValueError("mu must be a unit vector")
        if not (self.kappa >= 0.0):
            raise ValueError("kappa must be non-negative")
        object.__setattr__(self, "mu", mu)

    @property
    def dim(self) -> int:
        return self.mu.size

    def _log_norm_const(self) -> float:
        d = self.dim
        if self.kappa < _UNIFORM_KAPPA_TOL:
            return _log_uniform_density(d)
        order = d / 2.0 - 1.0
        # log I_order(kappa) = log(ive) + kappa keeps large kappa finite.
        log_bessel = float(np.log(ive(order, self.kappa))) + self.kappa
        return (
            order * math.log(self.kappa)
            - (d / 2.0) * math.log(2.0 * math.pi)
            - log_bessel
        )

    def log_pdf(self, x):
        arr = _as_unit_vectors(x, self.dim)
        out = self._log_norm_const() + self.kappa * (arr @ self.mu)
        if np.ndim(x) == 1:
            return float(out[0])
        return out

    def pdf(self, x):
        return np.exp(self.log_pdf(x))


@dataclass(frozen=True, eq=False)
class VonMisesFisherFit(VonMisesFisher):
    """Fitted distribution plus degeneracy flags, as in the circular case."""

    saturated: bool = False
    uniform: bool = False
    r_bar: float = field(default=0.0)


def fit_vmf(xs) -> VonMisesFisherFit:
    """Moment-based maximum-likelihood fit of a vMF distribution.

    The mean direction is the normalized sample mean vector; the
    concentration uses the standard approximation
    kappa = r_bar * (D - r_bar**2) / (1 - r_bar**2).  A zero mean vector
    (perfectly balanced sample) is flagged uniform; an all-identical
    sample saturates at KAPPA_MAX.
    """
    arr = _as_unit_vectors(xs)
    if arr.shape[0] == 0:
        raise ValueError("need at least one vector")
    d = arr.shape[1]
    mean = arr.mean(axis=0)
    r_bar = float(np.linalg.norm(mean))
    if r_bar <= 1e-12:
        mu = np.zeros(d)
        mu[0] = 1.0
        return VonMisesFisherFit(mu=mu, kappa=0.0, uniform=True, r_bar=r_bar)
    mu = mean / r_bar
    r = min(r_bar, 1.0)
    if r >= 1.0 - 1e-12:
        return VonMisesFisherFit(mu=mu, kappa=KAPPA_MAX, saturated=True, r_bar=r_bar)
    kappa = min(r * (d - r * r) / (1.0 - r * r), KAPPA_MAX)
    return VonMisesFisherFit(mu=mu, kappa=kappa, saturated=kappa >= KAPPA_MAX, r_bar=r_bar)


def _householder_to(mu: np.ndarray) -> np.ndarray:
    # Orthogonal map sending the north pole e_D to mu.
    d = mu.size
    e = np.zeros(d)
    e[-1] = 1.0
    v = e - mu
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        return np.eye(d)
    v /= norm
    return np.eye(d) - 2.0 * np.outer(v, v)


def sample_vmf(dist: VonMisesFisher, n: int, seed: int) -> np.ndarray:
    """Draw n unit vectors from the distribution, deterministically per seed.

    Uses the tangent-normal decomposition: the cosine along mu comes from
    the standard rejection scheme, the tangent part is uniform on the
    equatorial subsphere.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    d = dist.dim
    if dist.kappa < _UNIFORM_KAPPA_TOL:
        raw = rng.standard_normal((n, d))
        return raw / np.linalg.norm(raw, axis=1, keepdims=True)

    kappa = dist.kappa
    m = d - 1
    b = m / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + m * m))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(1.0 - x0 * x0)

    cosines = np.empty(n)
    filled = 0
    while filled < n:
        remaining = n - filled
        batch = remaining + remaining // 2 + 16
        z = rng.beta(m / 2.0, m / 2.0, batch)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(batch)
        accept = kappa * w + m * np.log(1.0 - x0 * w) - c >= np.log(u)
        good = w[accept]
        take = min(good.size, remaining)
        cosines[filled : filled + take] = good[:take]
        filled += take

    tangent = rng.standard_normal((n, d))
    tangent[:, -1] = 0.0
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    sines = np.sqrt(np.clip(1.0 - cosines**2, 0.0, None))
    north = sines[:, None] * tangent
    north[:, -1] = cosines
    return north @ _householder_to(dist.mu).T


def fit_vmf_mixture(
    xs,
    n_components: int,
    max_iterations: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
):
    """EM fit of a mixture of vMF components (same loop shape as the
    circular mixture: soft responsibilities, then weighted moment updates).

    Means are initialized greedily from mutually distant data points.
    Returns (components, converged) where components is a list of
    (weight, VonMisesFisher) pairs.
    """
    arr = _as_unit_vectors(xs)
    n, d = arr.shape
    if n_components < 1 or n_components > n:
        raise ValueError("n_components must be in [1, n]")
    rng = np.random.default_rng(seed)

    # Farthest-point initialization.
    first = int(rng.integers(n))
    centers = [arr[first]]
    while len(centers) < n_components:
        dots = np.max(np.stack([arr @ c for c in centers]), axis=0)
        centers.append(arr[int(np.argmin(dots))])
    mus = np.stack(centers)
    kappas = np.ones(n_components)
    weights = np.full(n_components, 1.0 / n_components)

    converged = False
    for _ in range(max_iterations):
        log_resp = np.stack(
            [
                math.log(weights[m]) + VonMisesFisher(mus[m], kappas[m]).log_pdf(arr)
                for m in range(n_components)
            ]
        )
        peak = log_resp.max(axis=0)
        log_norm = peak + np.log(np.sum(np.exp(log_resp - peak), axis=0))
        gammas = np.exp(log_resp - log_norm)

        totals = gammas.sum(axis=1)
        new_weights = totals / n
        new_weights /= new_weights.sum()
        new_mus = np.empty_like(mus)
        new_kappas = np.empty_like(kappas)
        for m in range(n_components):
            resultant = gammas[m] @ arr
            norm = np.linalg.norm(resultant)
            if norm <= 1e-12 or totals[m] <= 0.0:
                new_mus[m] = mus[m]
                new_kappas[m] = 0.0
                continue
            new_mus[m] = resultant / norm
            r = min(norm / totals[m], 1.0 - 1e-15)
            new_kappas[m] = min(r * (d - r * r) / (1.0 - r * r), KAPPA_MAX)
        change = float(np.max(np.linalg.norm(new_mus - mus, axis=1)))
        weights, mus, kappas = new_weights, new_mus, new_kappas
        if change < tol:
            converged = True
            break
    components = [
        (float(weights[m]), VonMisesFisher(mus[m], float(kappas[m])))
        for m in range(n_components)
    ]
    return components, converged
