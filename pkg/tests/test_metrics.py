"""Tests for ENLL, cross-validated APD, mode error, KL divergence, and the
method-comparison harness."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dirmap import (
    EmConfig,
    VonMises,
    VonMisesMixture,
    apd_cv,
    compare,
    compare_on_grid,
    enll,
    fit_vm,
    kl_divergence,
    mse_closest_mode,
    vm_log_likelihood,
    wrap_angle,
)

UNIFORM = 1.0 / (2.0 * math.pi)
LOG_2PI = 1.8378770664093453


def _mixture(*triples):
    return VonMisesMixture.from_params(
        [t[0] for t in triples], [t[1] for t in triples], [t[2] for t in triples]
    )


def test_enll_uniform_model():
    mix = VonMisesMixture.single(VonMises(0.0, 0.0))
    rng = np.random.default_rng(0)
    assert_allclose(enll(mix, rng.uniform(-3, 3, 50)), LOG_2PI, atol=1e-12)


def test_enll_point_at_mode():
    mix = VonMisesMixture.single(VonMises(0.0, 2.0))
    assert_allclose(enll(mix, [0.0]), 0.6618706078923016, atol=1e-12)


def test_enll_equals_vm_nll_over_n():
    rng = np.random.default_rng(1)
    thetas = rng.vonmises(0.5, 3.0, 200)
    dist = VonMises(0.5, 3.0)
    assert_allclose(
        enll(VonMisesMixture.single(dist), thetas),
        -vm_log_likelihood(dist, thetas) / 200,
        atol=1e-9,
    )


def test_enll_empty_raises():
    with pytest.raises(ValueError):
        enll(VonMisesMixture.single(VonMises(0, 1)), [])


def test_apd_uniform_data_near_uniform_density():
    rng = np.random.default_rng(2)
    thetas = rng.uniform(-math.pi, math.pi, 2000)
    apd = apd_cv(thetas, mode="vm", seed=3)
    assert abs(apd - UNIFORM) < 0.005


def test_apd_concentrated_data_beats_uniform():
    rng = np.random.default_rng(3)
    thetas = rng.vonmises(1.0, 8.0, 500)
    assert apd_cv(thetas, mode="vm", seed=3) > 4 * UNIFORM


def test_apd_requires_enough_data():
    with pytest.raises(ValueError):
        apd_cv([0.1] * 5, mode="vm", n_folds=10)


def test_apd_bimodal_vmm_beats_vm():
    rng = np.random.default_rng(4)
    thetas = np.concatenate([rng.vonmises(0.0, 6.0, 300), rng.vonmises(math.pi, 6.0, 300)])
    assert apd_cv(thetas, "vmm", seed=5) > apd_cv(thetas, "vm", seed=5)


def test_apd_rotation_invariant():
    rng = np.random.default_rng(5)
    thetas = rng.vonmises(0.3, 4.0, 400)
    base = apd_cv(thetas, "vm", seed=7)
    rotated = apd_cv(wrap_angle(thetas + 1.7), "vm", seed=7)
    assert abs(base - rotated) < 1e-3


def test_mse_closest_mode_equidistant():
    mix = _mixture((0.5, 0.0, 5.0), (0.5, math.pi, 5.0))
    assert_allclose(mse_closest_mode(mix, [math.pi / 2]), 2.4674011002723395, atol=1e-6)


def test_mse_closest_mode_zero_at_mode():
    mix = VonMisesMixture.single(VonMises(0.7, 5.0))
    assert mse_closest_mode(mix, [0.7]) < 1e-12


def test_mse_closest_mode_uniform_raises():
    with pytest.raises(ValueError):
        mse_closest_mode(VonMisesMixture.single(VonMises(0, 0)), [0.1])


def test_mse_bimodal_vmm_below_vm():
    rng = np.random.default_rng(6)
    thetas = np.concatenate([rng.vonmises(0.0, 8.0, 400), rng.vonmises(math.pi, 8.0, 400)])
    from dirmap import fit_vmm

    vmm_mix, _ = fit_vmm(thetas, EmConfig(dbscan_min_pts=16))
    vm_fit = fit_vm(thetas)
    vm_mse = mse_closest_mode(VonMisesMixture.single(VonMises(vm_fit.mu, max(vm_fit.kappa, 0.1))), thetas, modes=[vm_fit.mu])
    assert mse_closest_mode(vmm_mix, thetas) < 0.5 * vm_mse


def test_kl_self_is_zero():
    mix = _mixture((0.4, 0.0, 2.0), (0.6, 1.5, 5.0))
    assert abs(kl_divergence(mix, mix)) < 1e-9


def test_kl_against_closed_form():
    """KL(VM(0,2) || uniform) has the closed form kappa*A(kappa) - log I0."""
    p = VonMisesMixture.single(VonMises(0.0, 2.0))
    q = VonMisesMixture.single(VonMises(0.0, 0.0))
    assert_allclose(kl_divergence(p, q), 0.57155577444506, atol=1e-9)


def test_kl_asymmetric():
    p = VonMisesMixture.single(VonMises(0.0, 5.0))
    q = _mixture((0.5, 0.0, 1.0), (0.5, 2.0, 3.0))
    assert abs(kl_divergence(p, q) - kl_divergence(q, p)) > 1e-3


def test_kl_non_negative_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(50):
        def rand_mix():
            m = int(rng.integers(1, 4))
            w = rng.dirichlet(np.ones(m))
            return _mixture(*zip(w, rng.uniform(-math.pi, math.pi, m), rng.uniform(0.1, 10, m)))

        assert kl_divergence(rand_mix(), rand_mix()) >= -1e-6


def test_fitted_enll_never_worse_than_uniform_in_sample():
    """The MLE dominates the uniform model on its own training data."""
    rng = np.random.default_rng(8)
    uniform = VonMisesMixture.single(VonMises(0.0, 0.0))
    for _ in range(50):
        thetas = rng.vonmises(rng.uniform(-3, 3), rng.uniform(0, 6), int(rng.integers(10, 400)))
        fitted = VonMisesMixture.single(fit_vm(thetas))
        assert enll(fitted, thetas) <= enll(uniform, thetas) + 1e-12


def test_compare_deterministic():
    rng = np.random.default_rng(9)
    thetas = np.concatenate([rng.vonmises(0.0, 6.0, 150), rng.vonmises(2.5, 6.0, 150)])
    a_vm, a_vmm = compare(thetas, seed=11)
    b_vm, b_vmm = compare(thetas, seed=11)
    assert a_vm.same_metrics(b_vm)
    assert a_vmm.same_metrics(b_vmm)
    assert a_vm.method == "DGM-VM" and a_vmm.method == "DGM-VMM"


def test_compare_requires_minimum_data():
    with pytest.raises(ValueError):
        compare([0.1] * 8)


def test_compare_unimodal_near_parity():
    rng = np.random.default_rng(10)
    thetas = rng.vonmises(0.8, 5.0, 400)
    vm, vmm = compare(thetas, seed=13)
    assert abs(vmm.mse_closest_mode - vm.mse_closest_mode) / vm.mse_closest_mode < 0.15


def test_compare_bimodal_vmm_wins_all_metrics():
    rng = np.random.default_rng(11)
    thetas = np.concatenate([rng.vonmises(0.0, 8.0, 300), rng.vonmises(math.pi, 8.0, 300)])
    vm, vmm = compare(thetas, EmConfig(dbscan_min_pts=12), seed=13)
    assert vmm.enll < vm.enll
    assert vmm.apd > vm.apd
    assert vmm.mse_closest_mode < vm.mse_closest_mode


def test_compare_on_grid_orderings():
    from dirmap import SceneSpec, generate

    scene = generate(SceneSpec("multimodal", n_agents=40, steps_per_agent=40,
                               noise_sigma=0.15, seed=1))
    vm, vmm = compare_on_grid(scene.observations(), scene.grid, seed=1)
    assert vmm.enll < vm.enll
    assert vmm.apd > vm.apd
    assert vmm.mse_closest_mode < 0.6 * vm.mse_closest_mode


def test_compare_on_grid_needs_an_eligible_cell():
    from dirmap import GridSpec, Observation

    grid = GridSpec(0, 0, 1, 1, 1, 1)
    observations = [Observation(0.0, None, 0.5, 0.5, 0.1)] * 3
    with pytest.raises(ValueError):
        compare_on_grid(observations, grid)
