"""Pure-NumPy Langevin block kernel (reference implementation).

This is the fallback for the Cython extension and the executable definition of
the step recursion:

    x_t = x_{t-1} + (eps_t / 2) * grad log P_{sigma_t}(x_{t-1}) + sqrt(eps_t) * z_t

for an isotropic Gaussian mixture P with per-chain log weight offsets.  Every
array operation here is either elementwise or a reduction over the last axis
of a C-contiguous array, so a chain's trajectory is bit-identical no matter
how many chains share the batch — that property is what makes results
independent of worker count and chunking.
"""

from __future__ import annotations

import numpy as np


def ld_block(
    states: np.ndarray,
    logw: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    sigmas: np.ndarray,
    epses: np.ndarray,
    noise: np.ndarray,
    out_d2: np.ndarray | None = None,
) -> None:
    """Advance `states` in place by len(sigmas) Langevin steps.

    states : (B, D) float64, modified in place
    logw : (B, K) unnormalized log mixture weights per chain
    means : (K, D); variances : (K,) clean per-component variances
    sigmas : (S,) noise level added in quadrature at each step
    epses : (S,) step sizes
    noise : (B, S, D) pre-drawn standard normal increments
    out_d2 : optional (B, S, K); receives squared distances of the *pre-step*
        state to each component mean (clean means, no sigma inflation)
    """
    B, D = states.shape
    K = means.shape[0]
    S = sigmas.shape[0]
    d2 = np.empty((B, K))
    # Divergent states overflow these intermediates; the driver detects and
    # reports that after the block, so the warnings are only noise here.
    with np.errstate(over="ignore", invalid="ignore"):
        _run(states, logw, means, variances, sigmas, epses, noise, out_d2, B, D, K, S, d2)


def _run(states, logw, means, variances, sigmas, epses, noise, out_d2, B, D, K, S, d2):
    for s in range(S):
        sg = sigmas[s]
        v = variances + sg * sg  # (K,)
        for k in range(K):
            diff = states - means[k]
            np.sum(diff * diff, axis=1, out=d2[:, k])
        if out_d2 is not None:
            out_d2[:, s, :] = d2
        lr = logw - 0.5 * D * np.log(v) - d2 / (2.0 * v)
        lr -= lr.max(axis=1, keepdims=True)
        r = np.exp(lr)
        rs = r.sum(axis=1)
        acc = np.zeros_like(states)
        for k in range(K):
            c = r[:, k] / (rs * v[k])
            acc += c[:, None] * (means[k] - states)
        states += (0.5 * epses[s]) * acc
        states += np.sqrt(epses[s]) * noise[:, s, :]
