"""Circular statistics and single von Mises fits, step by step.

Why ordinary statistics fail on angles, and how the circular versions
behave: mean direction, resultant length, maximum-likelihood fitting.

Run: python demos/01_circular_basics.py
"""

import math

import numpy as np

from dirmap import VonMises, circular_stats, fit_vm, vm_log_likelihood, wrap_angle

print("=== The wraparound problem ===")
a, b = math.radians(170), math.radians(-170)
print(f"two headings: {math.degrees(a):.0f} deg and {math.degrees(b):.0f} deg")
print(f"  arithmetic mean : {math.degrees((a + b) / 2):7.1f} deg   (nonsense)")
stats = circular_stats([a, b])
print(f"  circular mean   : {math.degrees(stats.mean_dir):7.1f} deg   (correct)")

print()
print("=== Dispersion via the mean resultant length ===")
rng = np.random.default_rng(0)
for kappa in (0.5, 4.0, 50.0):
    draws = rng.vonmises(1.0, kappa, 5000)
    s = circular_stats(draws)
    print(
        f"  kappa={kappa:5.1f}: r_bar={s.r_bar:.3f}  variance={s.variance:.3f}"
        f"  mean={s.mean_dir:+.3f} rad"
    )
print("  (r_bar -> 1 as directions concentrate, variance = 1 - r_bar)")

print()
print("=== Maximum-likelihood fit recovers the generating parameters ===")
true = VonMises(mu=0.7, kappa=3.0)
draws = rng.vonmises(true.mu, true.kappa, 10_000)
fit = fit_vm(draws)
print(f"  truth: mu={true.mu:.3f} kappa={true.kappa:.3f}")
print(f"  fit  : mu={fit.mu:.3f} kappa={fit.kappa:.3f}")
print(f"  log-likelihood of fit  : {vm_log_likelihood(fit, draws):12.2f}")
print(f"  log-likelihood of truth: {vm_log_likelihood(true, draws):12.2f}")
print("  (the fit can only be at least as good in-sample)")

print()
print("=== Degenerate samples are flagged, not crashed ===")
point_mass = fit_vm(np.full(100, 2.0))
print(f"  identical angles -> kappa={point_mass.kappa:.0e}, saturated={point_mass.saturated}")
balanced = fit_vm([0.0, math.pi / 2, math.pi, -math.pi / 2])
print(f"  balanced angles  -> kappa={balanced.kappa}, uniform={balanced.uniform}")

print()
print("=== Angles stay canonical in (-pi, pi] ===")
for theta in (3 * math.pi, -math.pi, 7.0):
    print(f"  wrap_angle({theta:+.4f}) = {wrap_angle(theta):+.4f}")
