"""Exact prefix-conditional patch distributions for isotropic Gaussian mixtures.

A point in R^d is split into d/Q contiguous patches of size Q.  Because each
mixture component is a product Gaussian, conditioning on the first q-1 patches
leaves another isotropic mixture over patch q: the component means restrict to
the patch coordinates, the variances are untouched, and only the weights move,
reweighted by each component's marginal likelihood of the observed prefix.
These closed forms are what the chained sampler runs on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mixture import GaussianComponent, MixtureModel, score

__all__ = [
    "PatchLayout",
    "PrefixState",
    "CompletedPrefixError",
    "prefix_log_weights",
    "conditional_mixture",
    "conditional_score",
    "sample_conditional_exact",
    "compose_exact_samples",
]


class CompletedPrefixError(RuntimeError):
    """Raised when an operation needs a next patch but the prefix covers all of them."""


@dataclass(frozen=True)
class PatchLayout:
    """Partition of R^dim into contiguous patches of size patch_size.

    Patch q (0-based) covers coordinates [q * patch_size, (q+1) * patch_size).
    patch_size must divide dim exactly.
    """

    dim: int
    patch_size: int

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "patch_size", int(self.patch_size))
        if self.dim < 1 or self.patch_size < 1:
            raise ValueError("dim and patch_size must be positive")
        if self.dim % self.patch_size != 0:
            raise ValueError(
                f"patch_size {self.patch_size} does not divide dim {self.dim}"
            )

    @property
    def num_patches(self) -> int:
        return self.dim // self.patch_size


@dataclass(frozen=True)
class PrefixState:
    """The first `completed` patches of a point, in coordinate order."""

    layout: PatchLayout
    completed: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "completed", int(self.completed))
        v = np.ascontiguousarray(np.atleast_1d(np.asarray(self.values, dtype=np.float64)))
        if v.size == 0:
            v = np.empty(0)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if not 0 <= self.completed <= self.layout.num_patches:
            raise ValueError(
                f"completed must be in [0, {self.layout.num_patches}], got {self.completed}"
            )
        if self.values.shape != (self.completed * self.layout.patch_size,):
            raise ValueError(
                f"prefix holds {self.values.shape[0]} values but completed={self.completed} "
                f"patches of size {self.layout.patch_size} need "
                f"{self.completed * self.layout.patch_size}"
            )

    @classmethod
    def empty(cls, layout: PatchLayout) -> "PrefixState":
        return cls(layout, 0, np.empty(0))

    @property
    def is_complete(self) -> bool:
        return self.completed == self.layout.num_patches

    def extend(self, patch_values) -> "PrefixState":
        """Append one finished patch and return the longer prefix."""
        patch_values = np.asarray(patch_values, dtype=np.float64)
        if patch_values.shape != (self.layout.patch_size,):
            raise ValueError(
                f"patch has length {patch_values.shape[-1]}, expected {self.layout.patch_size}"
            )
        if self.is_complete:
            raise CompletedPrefixError("all patches are already filled in")
        return PrefixState(
            self.layout, self.completed + 1, np.concatenate([self.values, patch_values])
        )


def _check_prefix(model: MixtureModel, prefix: PrefixState) -> None:
    if model.dim != prefix.layout.dim:
        raise ValueError(
            f"model dim {model.dim} does not match layout dim {prefix.layout.dim}"
        )


def _log_weights_given_prefix(
    model: MixtureModel, prefix: PrefixState, variances: np.ndarray
) -> np.ndarray:
    """Normalized log weights after observing the prefix, with per-component
    marginal variances as given (clean or sigma-inflated)."""
    m = prefix.values.shape[0]
    if m == 0:
        return np.log(model.weights)
    diff = prefix.values[None, :] - model.means[:, :m]
    sq = np.einsum("kd,kd->k", diff, diff)
    lw = model.log_weights - 0.5 * m * np.log(2.0 * np.pi * variances) - sq / (2.0 * variances)
    return lw - _logsumexp(lw)


def _logsumexp(a: np.ndarray) -> float:
    m = np.max(a)
    return float(m + np.log(np.sum(np.exp(a - m))))


def prefix_log_weights(model: MixtureModel, prefix: PrefixState) -> np.ndarray:
    """Normalized log posterior weights of each component given the prefix.

    log w~_i = log w_i + log N(prefix; mu_i restricted, nu_i^2 I) - normalizer.
    An empty prefix returns log of the model weights exactly.
    """
    _check_prefix(model, prefix)
    return _log_weights_given_prefix(model, prefix, model.variances)


def conditional_mixture(
    model: MixtureModel,
    prefix: PrefixState,
    sigma: float = 0.0,
    *,
    perturbed_weights: bool = False,
) -> MixtureModel:
    """The distribution of the next patch given the prefix, convolved with
    N(0, sigma^2 I) in the patch coordinates.

    Returns a patch_size-dimensional mixture: means are the patch coordinates
    of each mu_i, variances are nu_i^2 + sigma^2, and weights come from
    `prefix_log_weights` at the clean variances.  With perturbed_weights=True
    the weights are instead computed at nu_i^2 + sigma^2, i.e. the conditional
    of the sigma-perturbed joint rather than the perturbed clean conditional.
    """
    _check_prefix(model, prefix)
    sigma = float(sigma)
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if prefix.is_complete:
        raise CompletedPrefixError("prefix already covers every patch")
    q = prefix.completed
    size = prefix.layout.patch_size
    lo, hi = q * size, (q + 1) * size
    v = model.variances + sigma * sigma
    lw = _log_weights_given_prefix(model, prefix, v if perturbed_weights else model.variances)
    w = np.exp(lw - np.max(lw))
    w /= np.sum(w)
    # A component hundreds of prefix standard deviations away underflows to
    # weight 0.0, which the model type rejects; pin such weights to the
    # smallest subnormal instead (indistinguishable in every later use).
    w[w == 0.0] = 5e-324
    comps = tuple(
        GaussianComponent(model.means[i, lo:hi], v[i]) for i in range(model.n_components)
    )
    return MixtureModel(size, comps, w)


def conditional_score(
    model: MixtureModel,
    prefix: PrefixState,
    patch_value,
    sigma: float = 0.0,
    *,
    perturbed_weights: bool = False,
) -> np.ndarray:
    """Gradient of the log conditional patch density at patch_value."""
    cond = conditional_mixture(model, prefix, sigma, perturbed_weights=perturbed_weights)
    return score(cond, patch_value)


def sample_conditional_exact(
    model: MixtureModel, prefix: PrefixState, rng: np.random.Generator
) -> np.ndarray:
    """One exact draw of the next patch given the prefix (sigma = 0)."""
    _check_prefix(model, prefix)
    if prefix.is_complete:
        raise CompletedPrefixError("prefix already covers every patch")
    q = prefix.completed
    size = prefix.layout.patch_size
    lo, hi = q * size, (q + 1) * size
    lw = _log_weights_given_prefix(model, prefix, model.variances)
    p = np.exp(lw - np.max(lw))
    p /= np.sum(p)
    i = int(rng.choice(model.n_components, p=p))
    return model.means[i, lo:hi] + np.sqrt(model.variances[i]) * rng.standard_normal(size)


def compose_exact_samples(
    model: MixtureModel, layout: PatchLayout, rng: np.random.Generator, n: int
) -> np.ndarray:
    """n exact joint samples built patch by patch via the chain rule.

    Vectorized over samples: every patch draws one categorical component per
    row from the prefix-posterior weights, then a Gaussian patch.  Distribution
    is identical to sequentially applying `sample_conditional_exact`.
    """
    if model.dim != layout.dim:
        raise ValueError(f"model dim {model.dim} does not match layout dim {layout.dim}")
    if n < 1:
        raise ValueError("n must be >= 1")
    size = layout.patch_size
    means, variances = model.means, model.variances
    out = np.empty((n, layout.dim))
    for q in range(layout.num_patches):
        lo, hi = q * size, (q + 1) * size
        if q == 0:
            lw = np.broadcast_to(model.log_weights, (n, model.n_components)).copy()
        else:
            diff = out[:, None, :lo] - means[None, :, :lo]
            sq = np.einsum("nkd,nkd->nk", diff, diff)
            lw = (
                model.log_weights
                - 0.5 * lo * np.log(2.0 * np.pi * variances)
                - sq / (2.0 * variances)
            )
        lw -= lw.max(axis=1, keepdims=True)
        p = np.exp(lw)
        cdf = np.cumsum(p, axis=1)
        u = rng.random(n) * cdf[:, -1]
        idx = np.minimum(
            (u[:, None] > cdf).sum(axis=1), model.n_components - 1
        )
        out[:, lo:hi] = means[idx, lo:hi] + np.sqrt(variances[idx])[:, None] * (
            rng.standard_normal((n, size))
        )
    return out
