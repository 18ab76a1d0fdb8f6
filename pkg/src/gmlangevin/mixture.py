"""Isotropic Gaussian mixture models with exact densities, scores, and sampling.

All mixtures here are of the form P = sum_i w_i N(mu_i, nu_i^2 I_d).  Component 0
is treated by convention as the "universal" (widest) mode by the analysis layer;
nothing in this module enforces an ordering.  Every density-like quantity is
computed in log space so that points hundreds of standard deviations from a
component neither overflow nor lose the dominant term.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GaussianComponent",
    "MixtureModel",
    "SampleBatch",
    "MgfCheckResult",
    "log_density",
    "score",
    "responsibilities",
    "perturb",
    "sample",
    "mgf_check",
    "model_to_json",
    "model_from_json",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GaussianComponent:
    """One isotropic component N(mean, variance * I_d).

    Parameters
    ----------
    mean : array_like, shape (d,)
    variance : float
        Per-coordinate variance nu^2 (> 0).
    """

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", _readonly(np.atleast_1d(self.mean)))
        object.__setattr__(self, "variance", float(self.variance))
        if self.mean.ndim != 1:
            raise ValueError("component mean must be a 1-D vector")
        if not (self.variance > 0.0) or not np.isfinite(self.variance):
            raise ValueError(f"component variance must be positive, got {self.variance}")
        if not np.all(np.isfinite(self.mean)):
            raise ValueError("component mean must be finite")


@dataclass(frozen=True)
class MixtureModel:
    """A weighted isotropic Gaussian mixture in R^d.

    Weights must be strictly positive and sum to 1 within 1e-12; they are
    validated, never silently renormalized.  Instances are immutable.
    """

    dim: int
    components: tuple[GaussianComponent, ...]
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", _readonly(np.atleast_1d(self.weights)))
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if len(self.components) < 1:
            raise ValueError("a mixture needs at least one component")
        if self.weights.shape != (len(self.components),):
            raise ValueError(
                f"got {len(self.components)} components but {self.weights.shape[0]} weights"
            )
        if np.any(self.weights <= 0.0):
            raise ValueError("all mixture weights must be strictly positive")
        total = float(np.sum(self.weights))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1 within 1e-12, got {total!r}")
        for i, c in enumerate(self.components):
            if c.mean.shape != (self.dim,):
                raise ValueError(
                    f"component {i} mean has length {c.mean.shape[0]}, expected dim={self.dim}"
                )

    # -- packed parameter views used by the samplers and the hot kernels -----

    @property
    def means(self) -> np.ndarray:
        """(k+1, d) matrix of component means."""
        m = np.stack([c.mean for c in self.components])
        m.flags.writeable = False
        return m

    @property
    def variances(self) -> np.ndarray:
        """(k+1,) vector of per-coordinate variances."""
        v = np.array([c.variance for c in self.components])
        v.flags.writeable = False
        return v

    @property
    def log_weights(self) -> np.ndarray:
        lw = np.log(self.weights)
        lw.flags.writeable = False
        return lw

    @property
    def n_components(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class SampleBatch:
    """A set of points in R^dim with a free-form provenance label."""

    dim: int
    points: np.ndarray
    provenance: str = ""
    component_indices: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(np.atleast_2d(self.points)))
        if self.points.shape[1] != self.dim:
            raise ValueError(
                f"points have length {self.points.shape[1]}, expected dim={self.dim}"
            )

    def __len__(self) -> int:
        return self.points.shape[0]


def _check_point(model: MixtureModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise ValueError(f"point has length {x.shape[-1]}, expected dim={model.dim}")
    return x


def _component_log_densities(model: MixtureModel, x: np.ndarray) -> np.ndarray:
    """log [w_i N(x; mu_i, nu_i^2 I)] for each component, shape (..., k+1)."""
    d = model.dim
    diff = x[..., None, :] - model.means  # (..., k+1, d)
    sq = np.sum(diff * diff, axis=-1)  # (..., k+1)
    v = model.variances
    return model.log_weights - 0.5 * d * (_LOG_2PI + np.log(v)) - sq / (2.0 * v)


def log_density(model: MixtureModel, x) -> float | np.ndarray:
    """log P(x) via log-sum-exp over the weighted component densities.

    Finite for every finite x: the largest term is factored out before
    exponentiation, so no component underflows the sum it dominates.
    """
    x = _check_point(model, x)
    lg = _component_log_densities(model, x)
    m = np.max(lg, axis=-1)
    out = m + np.log(np.sum(np.exp(lg - m[..., None]), axis=-1))
    return float(out) if out.ndim == 0 else out


def responsibilities(model: MixtureModel, x) -> np.ndarray:
    """Posterior component probabilities r_i = w_i P^(i)(x) / P(x).

    Computed entirely in log space; the result lies on the simplex even when
    one component dominates by hundreds of orders of magnitude.
    """
    x = _check_point(model, x)
    lg = _component_log_densities(model, x)
    lg = lg - np.max(lg, axis=-1, keepdims=True)
    r = np.exp(lg)
    r /= np.sum(r, axis=-1, keepdims=True)
    return r


def score(model: MixtureModel, x) -> np.ndarray:
    """The gradient of log P at x.

    For an isotropic mixture this is -sum_i r_i(x) (x - mu_i) / nu_i^2 with
    r_i the responsibilities, which is how it is evaluated here.
    """
    x = _check_point(model, x)
    r = responsibilities(model, x)  # (..., k+1)
    rv = r / model.variances
    # sum_i rv_i mu_i  -  x * sum_i rv_i
    pull = np.einsum("...k,kd->...d", rv, model.means)
    return pull - x * np.sum(rv, axis=-1)[..., None]


def perturb(model: MixtureModel, sigma: float) -> MixtureModel:
    """The model convolved with N(0, sigma^2 I): same means and weights, each
    component variance increased by sigma^2."""
    sigma = float(sigma)
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    comps = tuple(
        GaussianComponent(c.mean, c.variance + sigma * sigma) for c in model.components
    )
    return MixtureModel(model.dim, comps, model.weights)


def sample(model: MixtureModel, rng: np.random.Generator, n: int) -> SampleBatch:
    """Draw n i.i.d. points: a categorical component index, then a Gaussian.

    The drawn component indices are kept on the batch so callers can compare
    empirical frequencies against the weights without re-clustering.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = rng.choice(model.n_components, size=n, p=model.weights)
    std = np.sqrt(model.variances[idx])[:, None]
    pts = model.means[idx] + std * rng.standard_normal((n, model.dim))
    return SampleBatch(model.dim, pts, provenance="model sample", component_indices=idx)


@dataclass(frozen=True)
class MgfCheckResult:
    passed: bool
    ratio: float
    rel_std_err: float


def mgf_check(
    component: GaussianComponent,
    alpha,
    rng: np.random.Generator,
    n: int,
) -> MgfCheckResult:
    """Monte-Carlo check of E[exp(alpha . (z - mu))] <= exp(nu^2 |alpha|^2 / 2).

    A Gaussian attains the bound with equality, so the returned ratio converges
    to 1.  Passes unless the estimate exceeds the bound by more than 5 relative
    standard errors.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != component.mean.shape:
        raise ValueError(
            f"alpha has length {alpha.shape[-1]}, expected {component.mean.shape[0]}"
        )
    if n < 1:
        raise ValueError("n must be >= 1")
    z = component.mean + np.sqrt(component.variance) * rng.standard_normal(
        (n, component.mean.shape[0])
    )
    y = np.exp((z - component.mean) @ alpha)
    bound = np.exp(0.5 * component.variance * float(alpha @ alpha))
    est = float(np.mean(y))
    se = float(np.std(y, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    rel_se = se / bound
    return MgfCheckResult(passed=est <= bound * (1.0 + 5.0 * rel_se), ratio=est / bound,
                          rel_std_err=rel_se)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def model_to_json(model: MixtureModel) -> dict:
    """Plain-dict form: {"dim", "weights", "components": [{"mean", "variance"}]}."""
    return {
        "dim": model.dim,
        "weights": [float(w) for w in model.weights],
        "components": [
            {"mean": [float(m) for m in c.mean], "variance": c.variance}
            for c in model.components
        ],
    }


def model_from_json(obj: dict | str) -> MixtureModel:
    """Parse a model from a dict or a JSON string.

    A component mean may be given either as a full list or as {"fill": c},
    meaning the constant vector c * 1_d.
    """
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        dim = int(obj["dim"])
        weights = obj["weights"]
        raw_comps: Sequence[dict] = obj["components"]
    except KeyError as e:
        raise ValueError(f"model JSON is missing required key {e.args[0]!r}") from None
    comps = []
    for i, rc in enumerate(raw_comps):
        try:
            mean_spec = rc["mean"]
            variance = rc["variance"]
        except KeyError as e:
            raise ValueError(
                f"model component {i} is missing required key {e.args[0]!r}"
            ) from None
        if isinstance(mean_spec, dict):
            if set(mean_spec) != {"fill"}:
                raise ValueError(
                    f"model component {i}: mean object must be {{\"fill\": value}}"
                )
            mean = np.full(dim, float(mean_spec["fill"]))
        else:
            mean = np.asarray(mean_spec, dtype=np.float64)
        comps.append(GaussianComponent(mean, variance))
    return MixtureModel(dim, tuple(comps), np.asarray(weights, dtype=np.float64))
