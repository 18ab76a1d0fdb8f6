"""Post-hoc analysis of sampler output: mode clustering, escape scans against
theoretical squared-distance thresholds, feasibility checks for the mixture
separation conditions, null-space geometry, and distribution-distance metrics.

Everything in this module is a pure function of immutable inputs; nothing here
draws random numbers or mutates its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mixture import MixtureModel, SampleBatch, _readonly

__all__ = [
    "ModeReport",
    "NullSpaceFrame",
    "EscapeReport",
    "ClauseCheck",
    "THEOREM_KINDS",
    "ASSUMPTION_KINDS",
    "cluster_mode",
    "mode_labels",
    "mode_frequencies",
    "tv_discrete",
    "marginal_ks",
    "null_space_frame",
    "null_space_sq_norm",
    "theorem_threshold",
    "escape_scan",
    "escape_report_from_probe",
    "assumption_check",
]

THEOREM_KINDS = (
    "vanilla-gaussian",
    "annealed-gaussian",
    "vanilla-subgaussian",
    "annealed-subgaussian",
)

ASSUMPTION_KINDS = (
    "assumption-1",
    "theorem-2-means",
    "assumption-2",
    "assumption-3",
)


@dataclass(frozen=True)
class ModeReport:
    """Empirical mode-label histogram for a batch of samples.

    ``counts[i]`` is the number of samples labelled mode ``i`` (0 is the
    universal mode), ``frequencies`` is ``counts / total``, and
    ``radius_coef`` echoes the clustering radius used so reports are
    self-describing.
    """

    counts: np.ndarray
    frequencies: np.ndarray
    total: int
    radius_coef: float

    def __post_init__(self):
        c = np.ascontiguousarray(self.counts, dtype=np.int64)
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "frequencies", _readonly(self.frequencies))
        object.__setattr__(self, "total", int(self.total))
        object.__setattr__(self, "radius_coef", float(self.radius_coef))
        if int(self.counts.sum()) != self.total:
            raise ValueError("counts must sum to total")
        if abs(float(self.frequencies.sum()) - 1.0) > 1e-12:
            raise ValueError("frequencies must sum to 1")

    def to_json(self) -> dict:
        return {
            "counts": [int(c) for c in self.counts],
            "frequencies": [float(f) for f in self.frequencies],
            "radius_coef": self.radius_coef,
        }


@dataclass(frozen=True)
class NullSpaceFrame:
    """Orthonormal basis R (d x r) of span{mu_i - mu_0} anchored at mu_0.

    The orthogonal complement is never materialized: for y = x - mu_0 the
    squared norm of the null-space part is ||y||^2 - ||R^T y||^2.
    """

    origin: np.ndarray
    basis: np.ndarray
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "origin", _readonly(np.atleast_1d(self.origin)))
        b = np.ascontiguousarray(self.basis, dtype=np.float64)
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "rank", int(self.rank))
        if self.basis.ndim != 2 or self.basis.shape != (self.origin.shape[0], self.rank):
            raise ValueError("basis must have shape (d, rank)")


@dataclass(frozen=True)
class EscapeReport:
    """Outcome of scanning trajectories against a distance threshold.

    ``violations[c]`` is the first step at which chain ``c`` satisfied
    min_i ||x_t - mu_i||^2 <= threshold(t) over the non-universal means,
    or None if it never did.  ``fraction`` is the share of chains with any
    violation; ``threshold_kind`` is a free-form description of the
    threshold that was applied.
    """

    violations: tuple
    threshold_kind: str
    fraction: float

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        object.__setattr__(self, "fraction", float(self.fraction))

    def to_json(self) -> dict:
        return {
            "violations": [
                None if v is None else {"chain": i, "step": int(v)}
                for i, v in enumerate(self.violations)
            ],
            "fraction": self.fraction,
            "threshold_kind": self.threshold_kind,
        }


@dataclass(frozen=True)
class ClauseCheck:
    """One numerically evaluated inequality: lhs vs rhs plus the verdict.

    ``component`` is the non-universal component index the clause concerns,
    or 0 for model-level clauses about the universal variance.
    """

    component: int
    clause: str
    lhs: float
    rhs: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "component": self.component,
            "clause": self.clause,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "pass": self.passed,
        }


# ---------------------------------------------------------------------------
# mode clustering
# ---------------------------------------------------------------------------


def _nonuniversal_sq_dists(points: np.ndarray, model: MixtureModel) -> np.ndarray:
    """(n, k) squared distances to the non-universal means mu_1..mu_k."""
    means = model.means
    n = points.shape[0]
    k = means.shape[0] - 1
    out = np.empty((n, k))
    for i in range(k):
        diff = points - means[i + 1]
        np.sum(diff * diff, axis=1, out=out[:, i])
    return out


def mode_labels(
    points: np.ndarray, model: MixtureModel, radius_coef: float = 5.0
) -> np.ndarray:
    """Vectorized mode labels for an (n, d) array of points.

    A point gets label i >= 1 when mu_i is its nearest non-universal mean
    (ties to the lowest index) and lies within squared distance
    radius_coef * d; otherwise label 0.
    """
    if radius_coef <= 0:
        raise ValueError("radius_coef must be positive")
    if model.n_components < 2:
        raise ValueError("clustering needs at least one non-universal component")
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != model.dim:
        raise ValueError(f"points have length {points.shape[1]}, expected {model.dim}")
    d2 = _nonuniversal_sq_dists(points, model)
    nearest = np.argmin(d2, axis=1)  # argmin takes the lowest index on ties
    within = d2[np.arange(points.shape[0]), nearest] <= radius_coef * model.dim
    return np.where(within, nearest + 1, 0)


def cluster_mode(x, model: MixtureModel, radius_coef: float = 5.0) -> int:
    """Mode label in {0..k} for a single point (see mode_labels)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("cluster_mode expects a single point")
    return int(mode_labels(x[None, :], model, radius_coef)[0])


def mode_frequencies(
    batch: SampleBatch, model: MixtureModel, radius_coef: float = 5.0
) -> ModeReport:
    """Label every sample in the batch and tabulate counts and frequencies."""
    n = len(batch)
    if n == 0:
        raise ValueError("cannot tabulate mode frequencies of an empty batch")
    labels = mode_labels(batch.points, model, radius_coef)
    counts = np.bincount(labels, minlength=model.n_components)
    return ModeReport(counts, counts / n, n, radius_coef)


# ---------------------------------------------------------------------------
# distribution distances
# ---------------------------------------------------------------------------


def _check_simplex(v: np.ndarray, name: str) -> None:
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-D frequency vector")
    if v.min(initial=0.0) < -1e-9 or abs(float(v.sum()) - 1.0) > 1e-9:
        raise ValueError(f"{name} is not on the probability simplex")


def tv_discrete(p, q) -> float:
    """Total variation distance between two discrete distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("frequency vectors must have equal length")
    _check_simplex(p, "p")
    _check_simplex(q, "q")
    return 0.5 * float(np.abs(p - q).sum())


def marginal_ks(batch_a: SampleBatch, batch_b: SampleBatch, coord: int) -> float:
    """Two-sample Kolmogorov-Smirnov statistic on one coordinate.

    sup_x |F_a(x) - F_b(x)| over the empirical CDFs of coordinate ``coord``.
    """
    if batch_a.dim != batch_b.dim:
        raise ValueError("batches have different dimensions")
    if len(batch_a) == 0 or len(batch_b) == 0:
        raise ValueError("KS statistic needs nonempty batches")
    if not 0 <= coord < batch_a.dim:
        raise ValueError(f"coordinate {coord} out of range for dim {batch_a.dim}")
    a = np.sort(batch_a.points[:, coord])
    b = np.sort(batch_b.points[:, coord])
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.shape[0]
    cdf_b = np.searchsorted(b, grid, side="right") / b.shape[0]
    return float(np.abs(cdf_a - cdf_b).max())


# ---------------------------------------------------------------------------
# null-space geometry
# ---------------------------------------------------------------------------

_RANK_RTOL = 1e-10


def null_space_frame(model: MixtureModel) -> NullSpaceFrame:
    """Orthonormal basis of span{mu_i - mu_0} via column-pivoted QR.

    Pivoting is the classic greedy rule: at each step the column with the
    largest residual norm joins the basis, matching the ordering of a
    Businger-Golub QR.  The numerical rank cuts off at 1e-10 relative to the
    largest original column norm (a sigma_max proxy).  A model whose means
    all coincide yields a valid rank-0 frame.
    """
    if model.n_components < 2:
        raise ValueError("need at least one non-universal component")
    origin = model.means[0]
    work = np.array(model.means[1:] - origin, dtype=np.float64).T  # (d, k)
    d = work.shape[0]
    scale = float(np.sqrt((work * work).sum(axis=0).max(initial=0.0)))
    tol = _RANK_RTOL * scale
    cols = []
    for _ in range(work.shape[1]):
        norms = np.linalg.norm(work, axis=0)
        j = int(np.argmax(norms))
        if norms[j] <= tol or norms[j] == 0.0:
            break
        q = work[:, j] / norms[j]
        for prev in cols:  # second pass keeps Q^T Q = I at rounding level
            q -= prev * (prev @ q)
        q /= np.linalg.norm(q)
        cols.append(q)
        work -= np.outer(q, q @ work)
    basis = np.stack(cols, axis=1) if cols else np.zeros((d, 0))
    return NullSpaceFrame(origin, basis, len(cols))


def null_space_sq_norm(x, frame: NullSpaceFrame):
    """Squared norm of the part of x - mu_0 orthogonal to the frame's span.

    Computed as ||y||^2 - ||R^T y||^2 and clamped at zero against rounding.
    Accepts a single (d,) point or any (..., d) stack.
    """
    y = np.asarray(x, dtype=np.float64) - frame.origin
    if y.shape[-1] != frame.origin.shape[0]:
        raise ValueError("point dimension does not match the frame")
    total = np.sum(y * y, axis=-1)
    proj = y @ frame.basis
    val = np.maximum(total - np.sum(proj * proj, axis=-1), 0.0)
    return float(val) if val.ndim == 0 else val


# ---------------------------------------------------------------------------
# theorem thresholds and escape scans
# ---------------------------------------------------------------------------


def theorem_threshold(
    kind: str,
    sigma0_sq: float,
    numax_sq: float,
    d: int,
    sigma_t=0.0,
    c_v: float | None = None,
):
    """Squared-distance level that the trapping statements keep samples above.

    kind selects the guarantee: the Gaussian forms are
    (sigma0^2 + numax^2)/2 * d and (sigma0^2 + numax^2 + 2 sigma_t^2)/2 * d;
    the sub-Gaussian forms replace numax^2/2 with numax^2/(2(1 - c_v)) and,
    when annealed, add sigma_t^2 inside both halves.  ``sigma_t`` may be an
    array, in which case an array of thresholds comes back.
    """
    if kind not in THEOREM_KINDS:
        raise ValueError(f"unknown threshold kind {kind!r}; expected one of {THEOREM_KINDS}")
    if sigma0_sq <= 0 or numax_sq <= 0:
        raise ValueError("variances must be positive")
    if d < 1:
        raise ValueError("dimension must be at least 1")
    sig2 = np.square(np.asarray(sigma_t, dtype=np.float64))
    if np.any(np.asarray(sigma_t) < 0):
        raise ValueError("sigma_t must be nonnegative")
    if kind.endswith("subgaussian"):
        if c_v is None:
            raise ValueError(f"{kind} requires c_v")
        if not 0 < c_v < 1:
            raise ValueError("c_v must lie in (0, 1)")
    elif c_v is not None and not 0 < c_v < 1:
        raise ValueError("c_v must lie in (0, 1)")
    if kind == "vanilla-gaussian":
        out = (sigma0_sq + numax_sq) / 2.0 * d + 0.0 * sig2
    elif kind == "annealed-gaussian":
        out = (sigma0_sq + numax_sq + 2.0 * sig2) / 2.0 * d
    elif kind == "vanilla-subgaussian":
        out = (sigma0_sq / 2.0 + numax_sq / (2.0 * (1.0 - c_v))) * d + 0.0 * sig2
    else:  # annealed-subgaussian, printed form
        out = ((sigma0_sq + sig2) / 2.0 + (numax_sq + sig2) / (2.0 * (1.0 - c_v))) * d
    return float(out) if out.ndim == 0 else out


def escape_scan(
    trajectories,
    model: MixtureModel,
    threshold_fn: Callable[[int, float], float],
    threshold_kind: str = "",
) -> EscapeReport:
    """Scan recorded trajectories for entries into any non-universal mode ball.

    ``trajectories`` is a TrajectoryRecord (or anything with ``steps``,
    ``sigmas``, and (B, n, d) ``states``).  ``threshold_fn(step, sigma)``
    supplies the squared-distance level for each recorded frame; a chain
    violates at the first recorded step where
    min_{i>=1} ||x - mu_i||^2 <= threshold.  Frames containing NaN (e.g.
    patches not yet generated) never violate.
    """
    steps = np.asarray(trajectories.steps)
    sigmas = np.asarray(trajectories.sigmas)
    states = np.asarray(trajectories.states)
    if steps.size == 0 or states.size == 0:
        raise ValueError("cannot scan an empty trajectory record")
    if model.n_components < 2:
        raise ValueError("escape scan needs at least one non-universal component")
    n_chains, n_rec, _ = states.shape
    thresholds = np.array(
        [threshold_fn(int(steps[j]), float(sigmas[j])) for j in range(n_rec)]
    )
    violations: list = [None] * n_chains
    for j in range(n_rec):
        frame = states[:, j, :]
        with np.errstate(invalid="ignore"):
            min_d2 = _nonuniversal_sq_dists(frame, model).min(axis=1)
            hit = min_d2 <= thresholds[j]  # NaN compares False
        for c in np.flatnonzero(hit):
            if violations[c] is None:
                violations[c] = int(steps[j])
    fraction = sum(v is not None for v in violations) / n_chains
    return EscapeReport(tuple(violations), threshold_kind, fraction)


def escape_report_from_probe(
    first_violation: np.ndarray, steps_total: int, threshold_kind: str = ""
) -> EscapeReport:
    """Wrap a streaming probe's per-chain first-violation array (-1 = never).

    The samplers' distance probe already tracks first crossings at stride 1;
    this adapter turns its compact array into the same report escape_scan
    produces, without ever materializing trajectories.
    """
    fv = np.asarray(first_violation)
    if np.any(fv > steps_total):
        raise ValueError("violation step exceeds the stated horizon")
    violations = tuple(None if v < 0 else int(v) for v in fv)
    fraction = float(np.mean(fv >= 0)) if fv.size else 0.0
    return EscapeReport(violations, threshold_kind, fraction)


# ---------------------------------------------------------------------------
# separation-condition feasibility checks
# ---------------------------------------------------------------------------


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite constant")
    return value


def _fraction(name: str, value: float) -> float:
    value = _positive(name, value)
    if value >= 1:
        raise ValueError(f"{name} must lie in (0, 1)")
    return value


def _mean_sq_dists(model: MixtureModel) -> np.ndarray:
    diffs = model.means[1:] - model.means[0]
    return np.sum(diffs * diffs, axis=1)


def assumption_check(
    kind: str,
    model: MixtureModel,
    c_sigma: float | None = None,
    c_v: float | None = None,
    c_L: float | None = None,
) -> list[ClauseCheck]:
    """Evaluate the separation inequalities behind the trapping guarantees.

    Four variants: "assumption-1" (variance ordering plus the mean-distance
    bound), "theorem-2-means" (the annealed mean bound with the noise cap
    c_sigma folded in), and "assumption-2"/"assumption-3" (the sub-Gaussian
    variance floor and mean bound, clauses iv-v, plus the positivity of both
    factors on the right-hand side — the feasibility lemma's claim).  Each
    inequality becomes one ClauseCheck carrying both sides and the verdict;
    callers decide what failing clauses mean.

    c_sigma is required for the annealed kinds ("theorem-2-means",
    "assumption-3"), c_v and c_L for the sub-Gaussian kinds.  Constants
    must be positive (c_v in (0,1)); irrelevant ones are ignored.
    """
    if kind not in ASSUMPTION_KINDS:
        raise ValueError(f"unknown check kind {kind!r}; expected one of {ASSUMPTION_KINDS}")
    if model.n_components < 2:
        raise ValueError("separation checks need at least one non-universal component")
    if c_sigma is not None:
        c_sigma = _positive("c_sigma", c_sigma)
    if c_v is not None:
        c_v = _fraction("c_v", c_v)
    if c_L is not None:
        c_L = _positive("c_L", c_L)
    if kind in ("theorem-2-means", "assumption-3") and c_sigma is None:
        raise ValueError(f"{kind} requires c_sigma")
    if kind in ("assumption-2", "assumption-3") and (c_v is None or c_L is None):
        raise ValueError(f"{kind} requires c_v and c_L")

    d = model.dim
    s0 = float(model.variances[0])
    nus = model.variances[1:]
    numax = float(nus.max())
    mean_d2 = _mean_sq_dists(model)
    checks: list[ClauseCheck] = []

    if kind in ("assumption-1", "theorem-2-means"):
        cs2 = c_sigma**2 if kind == "theorem-2-means" else 0.0
        for i, nu in enumerate(nus, start=1):
            nu = float(nu)
            checks.append(ClauseCheck(i, "variance-order", nu, s0, nu < s0))
            if kind == "assumption-1":
                bracket = math.log(nu / s0) - nu / (2 * s0) + s0 / (2 * nu)
                clause = "mean-distance"
            else:
                # the annealed bound as printed, including its asymmetric
                # denominators 2*sigma0^2 + c_sigma^2 and 2*nu^2 + c_sigma^2
                bracket = (
                    math.log((nu + cs2) / (s0 + cs2))
                    - (nu + cs2) / (2 * s0 + cs2)
                    + (s0 + cs2) / (2 * nu + cs2)
                )
                clause = "mean-distance-annealed"
            rhs = (s0 - nu) / 2 * bracket * d
            lhs = float(mean_d2[i - 1])
            checks.append(ClauseCheck(i, clause, lhs, rhs, lhs <= rhs))
        return checks

    # sub-Gaussian kinds: clauses iv-v plus the feasibility-lemma positivity
    cs2 = c_sigma**2 if kind == "assumption-3" else 0.0
    growth = max(1.0, 4 * (c_L**2 + c_v * c_L) / (c_v * (1 - c_v)))
    floor = growth * (numax + cs2) / (1 - c_v) - cs2
    checks.append(ClauseCheck(0, "variance-floor", s0, floor, s0 > floor))
    for i, nu in enumerate(nus, start=1):
        nu = float(nu)
        factor = ((1 - c_v) * s0 - nu - c_v * cs2) / (2 * (1 - c_v))
        bracket = (
            math.log(c_v * (nu + cs2) / ((c_L**2 + c_v * c_L) * (s0 + cs2)))
            - (nu + cs2) / (2 * (1 - c_v) * (s0 + cs2))
            + (1 - c_v) * (s0 + cs2) / (2 * (nu + cs2))
        )
        rhs = factor * bracket * d
        lhs = float(mean_d2[i - 1])
        checks.append(ClauseCheck(i, "mean-distance", lhs, rhs, lhs <= rhs))
        checks.append(ClauseCheck(i, "lemma-a5-factor", factor, 0.0, factor > 0))
        checks.append(ClauseCheck(i, "lemma-a5-bracket", bracket, 0.0, bracket > 0))
    return checks
