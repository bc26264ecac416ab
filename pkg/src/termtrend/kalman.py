"""Scalar random-walk smoothing for per-term probability chains.

State-space model per chain, with shared scalar variances:

    x_t = x_{t-1} + N(0, chain_var)        latent level
    y_t = x_t     + N(0, obs_var)          pseudo-observation, where observed

The first state carries a diffuse prior N(0, DIFFUSE_PRIOR_VAR). Slices with
``obs_mask`` false skip the measurement update, so the smoother interpolates
through them. Because the mask and variances are shared by every chain, the
variance recursion is scalar and the mean recursions vectorize over any
trailing axes of ``observations``.
"""

from __future__ import annotations

import numpy as np

from .errors import AllMasked

DIFFUSE_PRIOR_VAR = 1e3


def kalman_smooth_chain(
    observations: np.ndarray,
    obs_mask: np.ndarray | None = None,
    chain_var: float = 0.005,
    obs_var: float = 0.5,
    prior_var: float = DIFFUSE_PRIOR_VAR,
) -> tuple[np.ndarray, np.ndarray]:
    """Forward filter / backward smooth one or many chains.

    ``observations`` has shape ``(T,)`` or ``(T, ...)``; trailing axes are
    independent chains sharing the mask. Returns ``(means, variances)`` with
    means shaped like the input and variances shaped ``(T,)`` (identical for
    every chain under a shared mask).
    """
    obs = np.asarray(observations, dtype=np.float64)
    n_steps = obs.shape[0]
    if obs_mask is None:
        mask = np.ones(n_steps, dtype=bool)
    else:
        mask = np.asarray(obs_mask, dtype=bool)
        if mask.shape != (n_steps,):
            raise ValueError("obs_mask must have one entry per slice")
    if not mask.any():
        raise AllMasked()
    if chain_var <= 0 or obs_var <= 0:
        raise ValueError("variances must be positive")

    filt_mean = np.empty_like(obs)
    filt_var = np.empty(n_steps)
    for t in range(n_steps):
        if t == 0:
            pred_mean = np.zeros(obs.shape[1:])
            pred_var = prior_var
        else:
            pred_mean = filt_mean[t - 1]
            pred_var = filt_var[t - 1] + chain_var
        if mask[t]:
            gain = pred_var / (pred_var + obs_var)
            filt_mean[t] = pred_mean + gain * (obs[t] - pred_mean)
            filt_var[t] = (1.0 - gain) * pred_var
        else:
            filt_mean[t] = pred_mean
            filt_var[t] = pred_var

    smooth_mean = np.empty_like(obs)
    smooth_var = np.empty(n_steps)
    smooth_mean[-1] = filt_mean[-1]
    smooth_var[-1] = filt_var[-1]
    for t in range(n_steps - 2, -1, -1):
        pred_var = filt_var[t] + chain_var
        gain = filt_var[t] / pred_var
        smooth_mean[t] = filt_mean[t] + gain * (smooth_mean[t + 1] - filt_mean[t])
        smooth_var[t] = filt_var[t] + gain * gain * (smooth_var[t + 1] - pred_var)
    return smooth_mean, smooth_var
