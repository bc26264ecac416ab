from __future__ import annotations

import numpy as np
import pytest

from oracles import gp_smooth_reference
from termtrend.errors import AllMasked
from termtrend.kalman import DIFFUSE_PRIOR_VAR, kalman_smooth_chain


def test_constant_signal_recovered():
    obs = np.full(8, 3.0)
    means, _ = kalman_smooth_chain(obs, chain_var=0.005, obs_var=1e-4)
    assert np.abs(means - 3.0).max() < 1e-6


def test_single_observation_shrinks_toward_prior_mean():
    obs = np.array([2.5])
    means, variances = kalman_smooth_chain(obs, chain_var=0.01, obs_var=0.5)
    expected = 2.5 * DIFFUSE_PRIOR_VAR / (DIFFUSE_PRIOR_VAR + 0.5)
    assert means[0] == pytest.approx(expected, rel=1e-12)
    assert means[0] == pytest.approx(2.5, rel=1e-3)
    assert variances[0] == pytest.approx(0.5 * DIFFUSE_PRIOR_VAR / (DIFFUSE_PRIOR_VAR + 0.5), rel=1e-12)


def test_linear_ramp_tracked_when_chain_dominates():
    obs = np.linspace(0.0, 2.0, 10)
    means, _ = kalman_smooth_chain(obs, chain_var=5.0, obs_var=0.001)
    scale = np.abs(obs).max()
    assert np.abs(means - obs).max() <= 0.01 * scale


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_matches_dense_gaussian_oracle(seed):
    rng = np.random.default_rng(seed)
    n_steps = int(rng.integers(2, 11))
    obs = rng.normal(0.0, 2.0, size=n_steps)
    mask = rng.random(n_steps) < 0.7
    if not mask.any():
        mask[int(rng.integers(0, n_steps))] = True
    chain_var = float(rng.uniform(0.001, 1.0))
    obs_var = float(rng.uniform(0.01, 2.0))
    means, variances = kalman_smooth_chain(obs, mask, chain_var, obs_var)
    ref_means, ref_vars = gp_smooth_reference(obs, mask, chain_var, obs_var)
    assert np.abs(means - ref_means).max() < 1e-6
    assert np.abs(variances - ref_vars).max() < 1e-6


def test_masked_slices_interpolated():
    obs = np.array([1.0, 99.0, 3.0])
    mask = np.array([True, False, True])
    means, variances = kalman_smooth_chain(obs, mask, chain_var=0.1, obs_var=0.01)
    assert 1.0 < means[1] < 3.0  # ignores the masked 99.0
    assert variances[1] > variances[0]


def test_all_masked_raises():
    with pytest.raises(AllMasked):
        kalman_smooth_chain(np.zeros(4), np.zeros(4, dtype=bool), 0.1, 0.1)


def test_batched_chains_match_scalar_calls(rng):
    n_steps, extra = 6, (3, 4)
    obs = rng.normal(size=(n_steps,) + extra)
    mask = np.array([True, True, False, True, True, True])
    means, variances = kalman_smooth_chain(obs, mask, 0.05, 0.3)
    assert means.shape == obs.shape
    assert variances.shape == (n_steps,)
    for i in range(extra[0]):
        for j in range(extra[1]):
            single_means, single_vars = kalman_smooth_chain(obs[:, i, j], mask, 0.05, 0.3)
            assert np.array_equal(single_means, means[:, i, j])
            assert np.array_equal(single_vars, variances)


def test_invalid_variances():
    with pytest.raises(ValueError):
        kalman_smooth_chain(np.zeros(3), chain_var=0.0, obs_var=0.1)
    with pytest.raises(ValueError):
        kalman_smooth_chain(np.zeros(3), chain_var=0.1, obs_var=-1.0)


def test_mask_shape_validated():
    with pytest.raises(ValueError):
        kalman_smooth_chain(np.zeros(3), np.ones(4, dtype=bool), 0.1, 0.1)
