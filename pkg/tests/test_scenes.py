"""Tests for the synthetic scene generators and their ground truth."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dirmap import EmConfig, SceneSpec, build, circular_stats, find_modes, generate


def test_scene_spec_validation():
    with pytest.raises(ValueError):
        SceneSpec("nosuch")
    with pytest.raises(ValueError):
        SceneSpec("unimodal", n_agents=0)
    with pytest.raises(ValueError):
        SceneSpec("unimodal", noise_sigma=-0.1)


def test_deterministic_given_seed():
    a = generate(SceneSpec("multimodal", seed=9))
    b = generate(SceneSpec("multimodal", seed=9))
    assert a.points == b.points
    assert a.truth == b.truth
    c = generate(SceneSpec("multimodal", seed=10))
    assert a.points != c.points


@pytest.mark.parametrize("scene", ["unimodal", "multimodal", "kuka_loop", "human_l_path"])
def test_point_count_contract(scene):
    spec = SceneSpec(scene, n_agents=7, steps_per_agent=23, seed=1)
    out = generate(spec)
    assert len(out.points) == spec.n_agents * spec.steps_per_agent
    assert len(out.truth) == spec.n_agents * (spec.steps_per_agent - 1)


def test_noise_free_headings_equal_truth_exactly():
    scene = generate(SceneSpec("unimodal", n_agents=12, steps_per_agent=30,
                               noise_sigma=0.0, seed=2))
    observations = scene.observations()
    assert len(observations) == len(scene.truth)
    for obs, seg in zip(observations, scene.truth):
        assert obs.theta == seg.true_theta


def test_crosswalk_truth_is_exactly_two_opposite_values():
    scene = generate(SceneSpec("multimodal", n_agents=40, steps_per_agent=40,
                               noise_sigma=0.0, seed=3))
    vertical = sorted({s.true_theta for s in scene.truth if abs(abs(s.true_theta) - math.pi / 2) < 1e-12})
    assert len(vertical) == 2
    assert_allclose(vertical[0] + vertical[1], 0.0, atol=1e-15)
    assert_allclose(abs(vertical[0]), math.pi / 2, atol=1e-15)


def test_heading_noise_dispersion_matches_sigma():
    """Residuals against ground truth have the requested circular spread."""
    sigma = 0.3
    spec = SceneSpec("multimodal", n_agents=60, steps_per_agent=200,
                     noise_sigma=sigma, seed=4)
    scene = generate(spec)
    # low gate: the short crossing legs take sub-default steps at this
    # step count, and every segment must stay paired with its truth row
    observations = scene.observations(min_step=0.005)
    assert len(observations) >= 10_000
    residuals = np.array(
        [obs.theta - seg.true_theta for obs, seg in zip(observations, scene.truth)]
    )
    r_bar = circular_stats(residuals).r_bar
    estimated = math.sqrt(-2.0 * math.log(r_bar))  # wrapped-normal spread
    assert abs(estimated - sigma) / sigma < 0.10


def test_noise_free_multimodal_mode_recovery():
    """Crosswalk cells fit to exactly two modes at the true bearings."""
    scene = generate(SceneSpec("multimodal", n_agents=40, steps_per_agent=40,
                               noise_sigma=0.0, seed=1))
    gmap = build(scene.observations(), scene.grid, "vmm", EmConfig())
    for col, row in scene.crosswalk_cells:
        modes = find_modes(gmap.cell_at(col, row).mixture)
        assert len(modes) == 2
        assert min(abs(m - math.pi / 2) for m in modes) < 1e-3
        assert min(abs(m + math.pi / 2) for m in modes) < 1e-3
    for col, row in scene.roadside_cells:
        cell = gmap.cell_at(col, row)
        if cell.observed:
            assert len(find_modes(cell.mixture)) == 1


def test_unimodal_map_lobes_align_with_trajectories():
    """Fitted cell means point along the noise-free traffic through them."""
    scene = generate(SceneSpec("unimodal", n_agents=30, steps_per_agent=40,
                               noise_sigma=0.0, seed=6))
    observations = scene.observations()
    truth = {s.t: s.true_theta for s in scene.truth}
    gmap = build(observations, scene.grid, "vm")
    per_cell: dict = {}
    for obs in observations:
        loc = scene.grid.cell_of(obs.x, obs.y)
        if loc is not None:
            per_cell.setdefault(loc, set()).add(truth[obs.t])
    for loc, bearings in per_cell.items():
        (bearing,) = bearings
        mu = gmap.cell_at(*loc).mixture.components[0].dist.mu
        assert abs(mu - bearing) < 1e-9, (loc, mu, bearing)


def test_unimodal_scene_has_no_opposed_traffic():
    scene = generate(SceneSpec("unimodal", n_agents=30, steps_per_agent=40,
                               noise_sigma=0.0, seed=6))
    by_cell: dict = {}
    for obs, seg in zip(scene.observations(), scene.truth):
        loc = scene.grid.cell_of(obs.x, obs.y)
        if loc is not None:
            by_cell.setdefault(loc, set()).add(seg.true_theta)
    for loc, bearings in by_cell.items():
        assert len(bearings) == 1, (loc, bearings)


def test_kuka_goal_perturbation_varies_laps():
    scene = generate(SceneSpec("kuka_loop", n_agents=5, steps_per_agent=50,
                               noise_sigma=0.15, seed=7))
    starts = {}
    for p in scene.points:
        starts.setdefault(p.track_id, p)
    positions = [(p.x, p.y) for p in starts.values()]
    assert len(set(positions)) == 5  # every lap starts at its own perturbed corner


def test_kuka_loop_closes():
    scene = generate(SceneSpec("kuka_loop", n_agents=1, steps_per_agent=81,
                               noise_sigma=0.0, seed=8))
    first, last = scene.points[0], scene.points[-1]
    assert_allclose((first.x, first.y), (last.x, last.y), atol=1e-9)


def test_human_l_path_two_legs():
    scene = generate(SceneSpec("human_l_path", n_agents=1, steps_per_agent=40,
                               noise_sigma=0.0, seed=9))
    bearings = {round(s.true_theta, 6) for s in scene.truth}
    # east leg, north leg, and at most one corner-cut chord
    assert len(bearings) <= 3
    assert 0.0 in bearings
    assert round(math.pi / 2, 6) in bearings
