"""Circular statistics and the von Mises distribution on the unit circle.

Angles are plain floats (or numpy arrays) in radians, kept in the canonical
range (-pi, pi]; ``wrap_angle`` is the single place that enforces this.
Everything here is a pure function of its inputs and safe to call from
multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi
LOG_TWO_PI = math.log(TWO_PI)

# Concentrations above this are numerically a point mass; fits clamp here
# instead of overflowing the Bessel normalizer.
KAPPA_MAX = 1.0e6

# Mean resultant lengths below this count as "no preferred direction".
UNIFORM_R_TOL = 1e-12

# Power series below this argument, log-space asymptotic expansion above.
_SERIES_CUTOFF = 50.0


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to the canonical range (-pi, pi].

    The boundary maps to +pi, so wrap_angle(-pi) == pi, and the result is
    always congruent to ``theta`` modulo 2*pi.
    """
    arr = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("angle must be finite")
    wrapped = np.mod(arr, TWO_PI)
    wrapped = np.where(wrapped > math.pi, wrapped - TWO_PI, wrapped)
    if wrapped.ndim == 0:
        return float(wrapped)
    return wrapped


def _i0_series(x: float) -> float:
    # Sum_{p>=0} (x/2)^(2p) / (p!)^2, truncated when terms stop mattering.
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    for p in range(1, 101):
        term *= q / (p * p)
        total += term
        if term < 1e-16 * total:
            break
    return total


def _i1_series(x: float) -> float:
    # Sum_{p>=0} (x/2)^(2p+1) / (p! (p+1)!)
    q = 0.25 * x * x
    term = 0.5 * x
    total = term
    for p in range(1, 101):
        term *= q / (p * (p + 1))
        total += term
        if term < 1e-16 * total:
            break
    return total


def _asym_sum(order: int, x: float) -> float:
    # Asymptotic series sqrt(2*pi*x) * I_order(x) * exp(-x) for large x.
    four_nu_sq = 4.0 * order * order
    term = 1.0
    total = 1.0
    for k in range(1, 40):
        term *= -(four_nu_sq - (2 * k - 1) ** 2) / (8.0 * k * x)
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def bessel_i0(kappa: float) -> float:
    """Modified Bessel function of the first kind, order 0.

    Evaluated by its power series for moderate arguments; may overflow for
    kappa above ~700 (use :func:`log_bessel_i0` there).
    """
    if not (kappa >= 0.0):
        raise ValueError("kappa must be non-negative")
    if kappa <= _SERIES_CUTOFF:
        return _i0_series(kappa)
    return math.exp(log_bessel_i0(kappa))


def bessel_i1(kappa: float) -> float:
    """Modified Bessel function of the first kind, order 1."""
    if not (kappa >= 0.0):
        raise ValueError("kappa must be non-negative")
    if kappa <= _SERIES_CUTOFF:
        return _i1_series(kappa)
    return math.exp(kappa - 0.5 * math.log(TWO_PI * kappa) + math.log(_asym_sum(1, kappa)))


def log_bessel_i0(kappa: float) -> float:
    """log I_0(kappa), stable for arbitrarily large kappa."""
    if not (kappa >= 0.0):
        raise ValueError("kappa must be non-negative")
    if kappa <= _SERIES_CUTOFF:
        return math.log(_i0_series(kappa))
    return kappa - 0.5 * math.log(TWO_PI * kappa) + math.log(_asym_sum(0, kappa))


def bessel_ratio(kappa: float) -> float:
    """The ratio I_1(kappa) / I_0(kappa).

    Strictly increasing from 0 toward 1; this is the mean resultant length
    of a von Mises distribution with concentration ``kappa``.
    """
    if not (kappa >= 0.0):
        raise ValueError("kappa must be non-negative")
    if kappa == 0.0:
        return 0.0
    if kappa <= _SERIES_CUTOFF:
        return _i1_series(kappa) / _i0_series(kappa)
    # The exp(kappa)/sqrt(2 pi kappa) prefactors cancel in the ratio.
    return math.exp(math.log(_asym_sum(1, kappa)) - math.log(_asym_sum(0, kappa)))


def _bessel_ratio_derivative(kappa: float, ratio: float) -> float:
    # d/dk [I1/I0] = 1 - ratio^2 - ratio/kappa, with limit 1/2 at kappa -> 0.
    if kappa < 1e-12:
        return 0.5
    return 1.0 - ratio * ratio - ratio / kappa


def inverse_bessel_ratio(r_bar: float, refine: bool = False) -> float:
    """Concentration whose mean resultant length is ``r_bar``.

    By default uses the two-branch closed-form approximation
    ``2*r + r**3 + (5/6)*r**5`` for r_bar < 0.53 and ``0.5 / (1 - r_bar)``
    otherwise.  With ``refine=True`` the approximation seeds a safeguarded
    Newton solve of bessel_ratio(kappa) == r_bar, giving the concentration
    to near machine precision (this is what the fitting routines use; see
    fit_vm).  r_bar >= 1 returns the KAPPA_MAX clamp.

    Args:
        r_bar: mean resultant length, 0 <= r_bar (values >= 1 saturate).
        refine: run the Newton polish.

    Returns:
        Non-negative concentration, clamped to KAPPA_MAX.
    """
    if not (r_bar >= 0.0):
        raise ValueError("r_bar must be non-negative")
    if r_bar >= 1.0:
        return KAPPA_MAX
    if r_bar == 0.0:
        return 0.0
    if r_bar < 0.53:
        kappa = 2.0 * r_bar + r_bar**3 + (5.0 / 6.0) * r_bar**5
    else:
        kappa = 0.5 / (1.0 - r_bar)
    if kappa >= KAPPA_MAX:
        return KAPPA_MAX
    if not refine:
        return kappa

    lo, hi = 0.0, KAPPA_MAX
    kappa = min(max(kappa, 1e-300), KAPPA_MAX)
    for _ in range(80):
        ratio = bessel_ratio(kappa)
        err = ratio - r_bar
        if abs(err) < 1e-14:
            break
        if err > 0.0:
            hi = kappa
        else:
            lo = kappa
        step = err / _bessel_ratio_derivative(kappa, ratio)
        candidate = kappa - step
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        if candidate == kappa:
            break
        kappa = candidate
    return min(kappa, KAPPA_MAX)


@dataclass(frozen=True)
class CircularStats:
    """Summary statistics of a sample of angles.

    c_bar/s_bar are the mean cosine and sine, mean_dir their direction,
    r_bar the mean resultant length in [0, 1] and variance = 1 - r_bar.
    """

    n: int
    c_bar: float
    s_bar: float
    mean_dir: float
    r_bar: float
    variance: float


def circular_stats(thetas) -> CircularStats:
    """Compute circular summary statistics of a non-empty angle sample."""
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    c_bar = float(np.sum(np.cos(arr)) / arr.size)
    s_bar = float(np.sum(np.sin(arr)) / arr.size)
    r_bar = min(math.hypot(c_bar, s_bar), 1.0)
    mean_dir = wrap_angle(math.atan2(s_bar, c_bar))
    return CircularStats(
        n=int(arr.size),
        c_bar=c_bar,
        s_bar=s_bar,
        mean_dir=mean_dir,
        r_bar=r_bar,
        variance=1.0 - r_bar,
    )


@dataclass(frozen=True)
class VonMises:
    """Unimodal directional distribution with mean direction and concentration.

    kappa == 0 is the uniform distribution on the circle; large kappa
    approaches a point mass at mu.  Density is exp(kappa*cos(theta - mu))
    normalized by 2*pi*I0(kappa), evaluated in log space so saturated
    concentrations stay finite.
    """

    mu: float
    kappa: float

    def __post_init__(self):
        if not (self.kappa >= 0.0):
            raise ValueError("kappa must be non-negative")
        object.__setattr__(self, "mu", wrap_angle(self.mu))

    def log_pdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = self.kappa * np.cos(theta - self.mu) - LOG_TWO_PI - log_bessel_i0(self.kappa)
        if out.ndim == 0:
            return float(out)
        return out

    def pdf(self, theta):
        return np.exp(self.log_pdf(theta))


@dataclass(frozen=True)
class VonMisesFit(VonMises):
    """A fitted VonMises plus degeneracy flags.

    saturated: the sample was (numerically) a point mass and kappa was
    clamped at KAPPA_MAX.  uniform: the mean resultant length was zero, so
    no direction is preferred and kappa is 0.
    """

    saturated: bool = False
    uniform: bool = False
    stats: CircularStats | None = None


def vm_log_likelihood(dist: VonMises, thetas) -> float:
    """Log-likelihood of a sample under ``dist``.

    Uses the sufficient-statistic form
    -N*log(2*pi) - N*log(I0(kappa)) + kappa*N*r_bar*cos(mean_dir - mu),
    which equals the sum of pointwise log densities.
    """
    arr = np.asarray(thetas, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one angle")
    s = circular_stats(arr)
    n = float(s.n)
    return (
        -n * LOG_TWO_PI
        - n * log_bessel_i0(dist.kappa)
        + dist.kappa * n * s.r_bar * math.cos(s.mean_dir - dist.mu)
    )


def _fit_from_stats(stats: CircularStats) -> VonMisesFit:
    if stats.r_bar <= UNIFORM_R_TOL:
        return VonMisesFit(mu=0.0, kappa=0.0, saturated=False, uniform=True, stats=stats)
    kappa = inverse_bessel_ratio(stats.r_bar, refine=True)
    return VonMisesFit(
        mu=stats.mean_dir,
        kappa=kappa,
        saturated=kappa >= KAPPA_MAX,
        uniform=False,
        stats=stats,
    )


def fit_vm(thetas) -> VonMisesFit:
    """Maximum-likelihood von Mises fit of an angle sample.

    Returns the sample mean direction and the concentration solving
    bessel_ratio(kappa) == r_bar.  Degenerate samples are flagged: all
    angles identical saturates kappa at KAPPA_MAX; perfectly balanced
    samples (r_bar == 0) come back uniform with mu = 0.
    """
    return _fit_from_stats(circular_stats(thetas))
