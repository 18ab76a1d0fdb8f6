"""Batched Langevin samplers over isotropic Gaussian mixtures.

Three dynamics share one step kernel:

* vanilla        — fixed target P, score of the clean mixture;
* annealed       — score of P convolved with N(0, sigma_t^2 I), sigma_t from a
                   level schedule that decays over the run;
* patch-chained  — coordinates split into contiguous patches; each patch runs
                   the annealed dynamics on its exact prefix-conditional
                   mixture, then freezes.

Chains are independent.  Each chain owns counter-based random streams keyed by
(seed, chain index, purpose), with initialization and dynamics on separate
streams, so results are bit-identical across reruns, worker counts, and
changes to the iteration count's effect on initial states.  Work is split into
fixed-size chain chunks executed on a thread pool; the kernel math is
invariant to chunk shape, which is what makes the worker count irrelevant to
the bits produced.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import backend
from .conditional import PatchLayout
from .mixture import MixtureModel

__all__ = [
    "NoiseSchedule",
    "StepSchedule",
    "SamplerConfig",
    "TrajectoryRecord",
    "ChainBatch",
    "DistanceProbe",
    "DivergenceError",
    "PURPOSE_INIT",
    "PURPOSE_DYNAMICS",
    "PURPOSE_AUX",
    "chain_generator",
    "build_geometric_levels",
    "expand_schedule",
    "build_step_schedule",
    "ld_step",
    "init_state",
    "run_vanilla",
    "run_annealed",
    "run_chained",
    "resolve_workers",
]

#: steps advanced per kernel call; chosen so noise buffers stay small while the
#: per-call Python overhead is negligible.  Has no effect on results.
_STEP_BLOCK = 64

#: chains per work item.  Fixed (instead of batch/workers) so array shapes do
#: not depend on the worker count.
_CHAIN_CHUNK = 64

PURPOSE_INIT = 0
PURPOSE_DYNAMICS = 1
PURPOSE_AUX = 2

WORKERS_ENV = "GMLANGEVIN_WORKERS"


class DivergenceError(RuntimeError):
    """A chain's state left the numerically trustworthy region."""

    def __init__(self, chain: int, step: int, detail: str):
        super().__init__(f"chain {chain} diverged by step {step}: {detail}")
        self.chain = chain
        self.step = step


def chain_generator(seed: int, chain: int, purpose: int) -> np.random.Generator:
    """The counter-based random stream for one (chain, purpose) pair.

    Streams for different (seed, chain, purpose) triples are statistically
    independent, and a stream's output does not depend on how many chains or
    steps the surrounding run has.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(purpose, chain))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSchedule:
    """Noise standard deviations: L levels expanded to one value per step.

    Levels must be nonnegative and non-increasing.  (The degenerate all-zero
    schedule is admitted so the annealed dynamics can express the vanilla one
    exactly.)
    """

    levels: np.ndarray
    per_step: np.ndarray

    def __post_init__(self):
        lv = np.ascontiguousarray(np.atleast_1d(self.levels), dtype=np.float64)
        ps = np.ascontiguousarray(np.atleast_1d(self.per_step), dtype=np.float64)
        if ps.size == 0:
            ps = np.empty(0)
        lv.flags.writeable = False
        ps.flags.writeable = False
        object.__setattr__(self, "levels", lv)
        object.__setattr__(self, "per_step", ps)
        if lv.size < 1:
            raise ValueError("need at least one noise level")
        if np.any(lv < 0) or not np.all(np.isfinite(lv)):
            raise ValueError("noise levels must be finite and nonnegative")
        if np.any(np.diff(lv) > 0):
            raise ValueError("noise levels must be non-increasing")

    @property
    def num_steps(self) -> int:
        return self.per_step.shape[0]


@dataclass(frozen=True)
class StepSchedule:
    """Per-step sizes eps_t; `base` is the final (smallest-noise) step size."""

    base: float
    per_step: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", float(self.base))
        ps = np.ascontiguousarray(np.atleast_1d(self.per_step), dtype=np.float64)
        if ps.size == 0:
            ps = np.empty(0)
        ps.flags.writeable = False
        object.__setattr__(self, "per_step", ps)
        if not (self.base > 0) or not np.isfinite(self.base):
            raise ValueError("base step size must be positive and finite")
        if ps.size and (np.any(ps <= 0) or not np.all(np.isfinite(ps))):
            raise ValueError("step sizes must be positive and finite")

    @property
    def num_steps(self) -> int:
        return self.per_step.shape[0]


def build_geometric_levels(lambda_first: float, lambda_last: float, num_levels: int) -> np.ndarray:
    """`num_levels` values in geometric progression from lambda_first down to
    lambda_last, endpoints exact to the last bit."""
    lambda_first = float(lambda_first)
    lambda_last = float(lambda_last)
    num_levels = int(num_levels)
    if num_levels < 2:
        raise ValueError(f"need at least 2 levels, got {num_levels}")
    if not (lambda_first >= lambda_last > 0):
        raise ValueError(
            f"levels must satisfy lambda_first >= lambda_last > 0, "
            f"got {lambda_first} and {lambda_last}"
        )
    ratio = (lambda_last / lambda_first) ** (1.0 / (num_levels - 1))
    out = lambda_first * ratio ** np.arange(num_levels, dtype=np.float64)
    out[0] = lambda_first
    out[-1] = lambda_last
    return out


def expand_schedule(levels, num_steps: int) -> NoiseSchedule:
    """Repeat each of the L levels T/L consecutive times.  T must be a
    multiple of L."""
    levels = np.atleast_1d(np.asarray(levels, dtype=np.float64))
    num_steps = int(num_steps)
    L = levels.shape[0]
    if num_steps < 0:
        raise ValueError("num_steps must be nonnegative")
    if num_steps % L != 0:
        raise ValueError(
            f"number of levels {L} does not divide number of steps {num_steps}"
        )
    return NoiseSchedule(levels, np.repeat(levels, num_steps // L))


def build_step_schedule(noise: NoiseSchedule, eps_base: float) -> StepSchedule:
    """eps_t = eps_base * sigma_t^2 / sigma_T^2 (so the final step is exactly
    eps_base).  A constant schedule — including the all-zero one — maps to a
    constant eps_base."""
    eps_base = float(eps_base)
    if not (eps_base > 0) or not np.isfinite(eps_base):
        raise ValueError("eps_base must be positive and finite")
    sig = noise.per_step
    if sig.size == 0:
        raise ValueError("noise schedule has no steps")
    last = sig[-1]
    if last == 0.0:
        # non-increasing + nonnegative means every level is zero here
        return StepSchedule(eps_base, np.full(sig.shape[0], eps_base))
    r = sig / last
    return StepSchedule(eps_base, eps_base * (r * r))


# ---------------------------------------------------------------------------
# configuration, state containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplerConfig:
    """Run shape shared by every sampler.

    init is one of: a component index (draw x_0 from that component, widened
    by the first noise level for annealed/chained runs), the string
    "standard_normal", or an explicit vector used verbatim.  record_every = 0
    keeps only the final state; r > 0 records every state x_t with t % r == 0,
    including t = 0.
    """

    iterations: int
    seed: int
    batch: int
    init: object = 0
    record_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "batch", int(self.batch))
        object.__setattr__(self, "record_every", int(self.record_every))
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.record_every < 0:
            raise ValueError("record_every must be >= 0")
        if not (-(2**63) <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        init = self.init
        if isinstance(init, str):
            if init != "standard_normal":
                raise ValueError(
                    f'string init must be "standard_normal", got {init!r}'
                )
        elif isinstance(init, (int, np.integer)):
            object.__setattr__(self, "init", int(init))
        else:
            vec = np.ascontiguousarray(np.atleast_1d(init), dtype=np.float64)
            vec.flags.writeable = False
            object.__setattr__(self, "init", vec)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Thinned trajectories: states[c, i] is chain c at step steps[i], and
    sigmas[i] is the noise level in force when that state was produced."""

    steps: np.ndarray
    sigmas: np.ndarray
    states: np.ndarray


@dataclass(frozen=True)
class ChainBatch:
    """Final states of a batch of chains plus whatever was recorded en route."""

    states: np.ndarray
    step: int
    recorded: TrajectoryRecord | None = None
    first_violation: np.ndarray | None = None


@dataclass(frozen=True)
class DistanceProbe:
    """Streaming scan: flag the first step t at which a chain's squared
    distance to any of the selected component means drops to threshold[t] or
    below.  component_indices select means of the sampled model; thresholds
    has length T+1 (one per state x_0..x_T)."""

    component_indices: tuple[int, ...]
    thresholds: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "component_indices", tuple(int(i) for i in self.component_indices))
        th = np.ascontiguousarray(np.atleast_1d(self.thresholds), dtype=np.float64)
        th.flags.writeable = False
        object.__setattr__(self, "thresholds", th)
        if len(self.component_indices) == 0:
            raise ValueError("probe needs at least one component index")


def ld_step(score_value, x, eps: float, noise) -> np.ndarray:
    """One Langevin update: x + (eps/2) * score + sqrt(eps) * noise.

    This scalar-form recursion is the semantic definition the block kernels
    implement; it is exposed for tests and one-off use, not for hot loops.
    """
    score_value = np.asarray(score_value, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if not (score_value.shape == x.shape == noise.shape):
        raise ValueError("score, state, and noise must have equal shapes")
    eps = float(eps)
    if not (eps > 0) or not np.isfinite(eps):
        raise ValueError("eps must be positive and finite")
    if not (np.all(np.isfinite(score_value)) and np.all(np.isfinite(x)) and np.all(np.isfinite(noise))):
        raise FloatingPointError("non-finite input to ld_step")
    out = x + (0.5 * eps) * score_value
    out += np.sqrt(eps) * noise
    return out


def init_state(spec, model: MixtureModel, noise_level_0: float, rng: np.random.Generator) -> np.ndarray:
    """Draw or return one initial state.

    Component index i draws from N(mu_i, (nu_i^2 + noise_level_0^2) I);
    "standard_normal" draws from N(0, I); an explicit vector is returned
    verbatim (and consumes no randomness).
    """
    noise_level_0 = float(noise_level_0)
    if noise_level_0 < 0:
        raise ValueError("noise_level_0 must be nonnegative")
    if isinstance(spec, str):
        if spec != "standard_normal":
            raise ValueError(f'string init must be "standard_normal", got {spec!r}')
        return rng.standard_normal(model.dim)
    if isinstance(spec, (int, np.integer)):
        i = int(spec)
        if not 0 <= i < model.n_components:
            raise ValueError(
                f"init component {i} out of range for {model.n_components} components"
            )
        std = np.sqrt(model.variances[i] + noise_level_0 * noise_level_0)
        return model.means[i] + std * rng.standard_normal(model.dim)
    vec = np.ascontiguousarray(np.atleast_1d(spec), dtype=np.float64)
    if vec.shape != (model.dim,):
        raise ValueError(f"init vector has length {vec.shape[0]}, expected {model.dim}")
    return vec.copy()


def resolve_workers(workers: int | None) -> int:
    """Explicit argument, else the GMLANGEVIN_WORKERS environment variable,
    else 1."""
    if workers is None:
        raw = os.environ.get(WORKERS_ENV, "").strip()
        workers = int(raw) if raw else 1
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


# ---------------------------------------------------------------------------
# shared driving machinery
# ---------------------------------------------------------------------------

_DIVERGENCE_FACTOR = 1.0e6  # abort when ||x|| exceeds 1e6 * sqrt(d)


def _record_steps(T: int, record_every: int) -> np.ndarray:
    if record_every <= 0:
        return np.empty(0, dtype=np.int64)
    return np.arange(0, T + 1, record_every, dtype=np.int64)


def _sigma_at(per_step_sigma: np.ndarray, t: int) -> float:
    """The noise level in force when state x_t was produced (the level of step
    t for t >= 1, and of step 1 for the initial state)."""
    if per_step_sigma.size == 0:
        return 0.0
    return float(per_step_sigma[max(t - 1, 0)])


def _segments(t_begin: int, t_end: int, record_every: int):
    """Split global steps (t_begin, t_end] into kernel blocks that land on
    every recording point."""
    t = t_begin
    while t < t_end:
        end = min(t + _STEP_BLOCK, t_end)
        if record_every > 0:
            next_rec = (t // record_every + 1) * record_every
            end = min(end, next_rec)
        yield t, end
        t = end


def _check_finite(states: np.ndarray, chain_offset: int, step: int, dim: int) -> None:
    limit = (_DIVERGENCE_FACTOR * _DIVERGENCE_FACTOR) * dim
    sq = np.sum(states * states, axis=1)
    bad = ~np.isfinite(sq) | (sq > limit)
    if np.any(bad):
        idx = int(np.argmax(bad))
        val = sq[idx]
        detail = "non-finite state" if not np.isfinite(val) else (
            f"squared norm {val:.3e} exceeds {limit:.3e}"
        )
        raise DivergenceError(chain_offset + idx, step, detail)


def _sq_dists(states: np.ndarray, means: np.ndarray) -> np.ndarray:
    """(B, K) squared distances, computed with the same reduction the kernel
    uses (rows reduce independently of batch size)."""
    B = states.shape[0]
    K = means.shape[0]
    out = np.empty((B, K))
    for k in range(K):
        diff = states - means[k]
        np.sum(diff * diff, axis=1, out=out[:, k])
    return out


class _ProbeState:
    """Per-chunk streaming first-violation tracker."""

    def __init__(self, probe: DistanceProbe, n_chains: int):
        self.idx = np.asarray(probe.component_indices, dtype=np.intp)
        self.thresholds = probe.thresholds
        self.first = np.full(n_chains, -1, dtype=np.int64)

    def scan_states(self, d2_all: np.ndarray, t: int) -> None:
        """d2_all: (B, K) distances of states x_t to all model means."""
        hit = np.any(d2_all[:, self.idx] <= self.thresholds[t], axis=1)
        np.copyto(self.first, t, where=(self.first < 0) & hit)

    def scan_block(self, d2_block: np.ndarray, t0: int) -> None:
        """d2_block: (B, S, K) distances of pre-step states x_{t0}..x_{t0+S-1}."""
        S = d2_block.shape[1]
        th = self.thresholds[t0 : t0 + S]
        hit = np.any(d2_block[:, :, self.idx] <= th[None, :, None], axis=2)  # (B, S)
        any_hit = hit.any(axis=1)
        rows = np.nonzero((self.first < 0) & any_hit)[0]
        if rows.size:
            self.first[rows] = t0 + hit[rows].argmax(axis=1)


def _run_patch_dynamics(
    states: np.ndarray,
    gens: Sequence[np.random.Generator],
    logw: np.ndarray,
    means: np.ndarray,
    variances: np.ndarray,
    sigmas: np.ndarray,
    epses: np.ndarray,
    t_offset: int,
    record_every: int,
    record_sink: Callable[[int, np.ndarray], None] | None,
    probe_state: _ProbeState | None,
    chain_offset: int,
    kernel,
) -> None:
    """Advance `states` through the whole (sigmas, epses) schedule, recording
    and probing at global step indices offset by t_offset."""
    B, D = states.shape
    K = means.shape[0]
    n_steps = sigmas.shape[0]
    for ga, gb in _segments(t_offset, t_offset + n_steps, record_every):
        a, b = ga - t_offset, gb - t_offset
        S = b - a
        noise = np.stack([g.standard_normal((S, D)) for g in gens])
        d2_buf = np.empty((B, S, K)) if probe_state is not None else None
        kernel(states, logw, means, variances, sigmas[a:b], epses[a:b], noise, d2_buf)
        if probe_state is not None:
            probe_state.scan_block(d2_buf, ga)
        _check_finite(states, chain_offset, gb, D)
        if record_sink is not None and record_every > 0 and gb % record_every == 0:
            record_sink(gb, states)


def _chunk_ranges(batch: int):
    for start in range(0, batch, _CHAIN_CHUNK):
        yield start, min(start + _CHAIN_CHUNK, batch)


def _map_chunks(fn, chunks, workers: int):
    if workers == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def _assemble(
    model_dim: int,
    config: SamplerConfig,
    per_step_sigma: np.ndarray,
    results: list,
    total_steps: int,
) -> ChainBatch:
    states = np.concatenate([r[0] for r in results], axis=0)
    states.flags.writeable = False
    recorded = None
    if config.record_every > 0:
        steps = _record_steps(total_steps, config.record_every)
        sigmas = np.array([_sigma_at(per_step_sigma, int(t)) for t in steps])
        traj = np.concatenate([r[1] for r in results], axis=0)
        traj.flags.writeable = False
        recorded = TrajectoryRecord(steps, sigmas, traj)
    first = None
    if results and results[0][2] is not None:
        first = np.concatenate([r[2] for r in results])
        first.flags.writeable = False
    return ChainBatch(states=states, step=total_steps, recorded=recorded, first_violation=first)


def _validate_probe(probe: DistanceProbe | None, model: MixtureModel, T: int) -> None:
    if probe is None:
        return
    if probe.thresholds.shape != (T + 1,):
        raise ValueError(
            f"probe needs {T + 1} thresholds (one per state), got {probe.thresholds.shape[0]}"
        )
    for i in probe.component_indices:
        if not 0 <= i < model.n_components:
            raise ValueError(f"probe component index {i} out of range")


# ---------------------------------------------------------------------------
# the three samplers
# ---------------------------------------------------------------------------

def _run_joint(
    model: MixtureModel,
    config: SamplerConfig,
    per_step_sigma: np.ndarray,
    steps: StepSchedule,
    rng_factory,
    probe: DistanceProbe | None,
    workers: int | None,
) -> ChainBatch:
    T = config.iterations
    if steps.num_steps != T:
        raise ValueError(
            f"step schedule has {steps.num_steps} entries but config.iterations is {T}"
        )
    if per_step_sigma.shape[0] != T:
        raise ValueError(
            f"noise schedule has {per_step_sigma.shape[0]} entries but config.iterations is {T}"
        )
    _validate_probe(probe, model, T)
    workers = resolve_workers(workers)
    sigma0 = _sigma_at(per_step_sigma, 0)
    means, variances, logw = model.means, model.variances, model.log_weights
    kernel = backend.kernel()
    rec = config.record_every
    n_rec = _record_steps(T, rec).shape[0]

    def run_chunk(bounds):
        lo, hi = bounds
        B = hi - lo
        states = np.empty((B, model.dim))
        for i in range(B):
            g = rng_factory(config.seed, lo + i, PURPOSE_INIT)
            states[i] = init_state(config.init, model, sigma0, g)
        gens = [rng_factory(config.seed, lo + i, PURPOSE_DYNAMICS) for i in range(B)]
        traj = np.empty((B, n_rec, model.dim)) if rec > 0 else None
        if rec > 0:
            traj[:, 0] = states

        def sink(t, snap):
            traj[:, t // rec] = snap

        ps = _ProbeState(probe, B) if probe is not None else None
        if ps is not None:
            ps.scan_states(_sq_dists(states, means), 0)
        lw = np.ascontiguousarray(np.broadcast_to(logw, (B, logw.shape[0])))
        _check_finite(states, lo, 0, model.dim)
        _run_patch_dynamics(
            states, gens, lw, means, variances,
            per_step_sigma, steps.per_step,
            0, rec, sink if rec > 0 else None, ps, lo, kernel,
        )
        if ps is not None and T > 0:
            ps.scan_states(_sq_dists(states, means), T)
        return states, traj, (ps.first if ps is not None else None)

    results = _map_chunks(run_chunk, list(_chunk_ranges(config.batch)), workers)
    return _assemble(model.dim, config, per_step_sigma, results, T)


def run_vanilla(
    model: MixtureModel,
    config: SamplerConfig,
    steps: StepSchedule,
    rng_factory=chain_generator,
    *,
    probe: DistanceProbe | None = None,
    workers: int | None = None,
) -> ChainBatch:
    """Langevin dynamics on the clean mixture score (no added noise)."""
    zeros = np.zeros(config.iterations)
    return _run_joint(model, config, zeros, steps, rng_factory, probe, workers)


def run_annealed(
    model: MixtureModel,
    config: SamplerConfig,
    noise: NoiseSchedule,
    steps: StepSchedule,
    rng_factory=chain_generator,
    *,
    probe: DistanceProbe | None = None,
    workers: int | None = None,
) -> ChainBatch:
    """Langevin dynamics on the sigma_t-perturbed score, sigma_t from `noise`.

    With an all-zero schedule this produces bit-identical output to
    run_vanilla under the same seed and step schedule.
    """
    return _run_joint(model, config, noise.per_step, steps, rng_factory, probe, workers)


def run_chained(
    model: MixtureModel,
    config: SamplerConfig,
    layout: PatchLayout,
    noise: NoiseSchedule,
    steps: StepSchedule,
    rng_factory=chain_generator,
    *,
    perturbed_weights: bool = False,
    workers: int | None = None,
) -> ChainBatch:
    """Patch-sequential annealed dynamics on exact conditional scores.

    config.iterations is the TOTAL step budget T; each of the d/Q patches runs
    the full (noise, steps) schedules, which must have length T*Q/d.  Patches
    are produced in index order; finished patches freeze, and patches not yet
    started are absent from recorded trajectories (NaN columns).  With a
    single patch (Q = d) this is bit-identical to run_annealed.

    By default the conditional weights come from the prefix likelihood at the
    CLEAN component variances, the perturbation acting only on the patch
    coordinates.  With perturbed_weights=True the weights instead come from
    the sigma_t-perturbed joint (prefix variances nu^2 + sigma_t^2) and are
    recomputed at every noise-level change inside a patch.
    """
    if layout.dim != model.dim:
        raise ValueError(f"layout dim {layout.dim} does not match model dim {model.dim}")
    T = config.iterations
    P = layout.num_patches
    if T % P != 0:
        raise ValueError(
            f"iterations {T} not divisible by the number of patches {P}"
        )
    per_patch = T // P
    if steps.num_steps != per_patch or noise.per_step.shape[0] != per_patch:
        raise ValueError(
            f"chained schedules must have T*Q/d = {per_patch} entries, got "
            f"{noise.per_step.shape[0]} noise and {steps.num_steps} step entries"
        )
    workers = resolve_workers(workers)
    Q = layout.patch_size
    sigma0 = _sigma_at(noise.per_step, 0)
    means, variances = model.means, model.variances
    log_prior = model.log_weights
    kernel = backend.kernel()
    rec = config.record_every
    rec_steps = _record_steps(T, rec)
    n_rec = rec_steps.shape[0]

    def prefix_logw(produced: np.ndarray, lo: int, sigma: float) -> np.ndarray:
        """Unnormalized log posterior weights given the first `lo` coords,
        with the prefix likelihood evaluated at variances nu^2 + sigma^2."""
        B = produced.shape[0]
        if lo == 0:
            return np.ascontiguousarray(
                np.broadcast_to(log_prior, (B, log_prior.shape[0]))
            )
        lw = np.empty((B, model.n_components))
        for k in range(model.n_components):
            v = variances[k] + sigma * sigma
            diff = produced - means[k, :lo]
            sq = np.sum(diff * diff, axis=1)
            lw[:, k] = log_prior[k] - 0.5 * lo * np.log(2.0 * np.pi * v) - sq / (2.0 * v)
        return lw

    # weight-recomputation boundaries inside one patch: the whole patch when
    # weights are clean, one run per distinct noise level otherwise
    if perturbed_weights and per_patch > 0:
        cuts = np.flatnonzero(np.diff(noise.per_step)) + 1
        run_bounds = [0, *cuts.tolist(), per_patch]
    else:
        run_bounds = [0, per_patch]

    def run_chunk(bounds):
        lo_c, hi_c = bounds
        B = hi_c - lo_c
        inits = np.empty((B, model.dim))
        for i in range(B):
            g = rng_factory(config.seed, lo_c + i, PURPOSE_INIT)
            inits[i] = init_state(config.init, model, sigma0, g)
        gens = [rng_factory(config.seed, lo_c + i, PURPOSE_DYNAMICS) for i in range(B)]
        full = np.full((B, model.dim), np.nan)
        traj = np.empty((B, n_rec, model.dim)) if rec > 0 else None
        patch: np.ndarray | None = None
        patch_lo = patch_hi = 0

        def sink(t, patch_states):
            snap = full.copy()
            snap[:, patch_lo:patch_hi] = patch_states
            traj[:, t // rec] = snap

        for q in range(P):
            patch_lo, patch_hi = q * Q, (q + 1) * Q
            patch = inits[:, patch_lo:patch_hi].copy()
            if q == 0 and rec > 0:
                sink(0, patch)
            patch_means = np.ascontiguousarray(means[:, patch_lo:patch_hi])
            for a, b in zip(run_bounds[:-1], run_bounds[1:]):
                sig_w = float(noise.per_step[a]) if perturbed_weights else 0.0
                lw = prefix_logw(full[:, :patch_lo], patch_lo, sig_w)
                _run_patch_dynamics(
                    patch, gens, lw, patch_means, variances,
                    noise.per_step[a:b], steps.per_step[a:b],
                    q * per_patch + a, rec, sink if rec > 0 else None, None, lo_c, kernel,
                )
            full[:, patch_lo:patch_hi] = patch
        return full, traj, None

    results = _map_chunks(run_chunk, list(_chunk_ranges(config.batch)), workers)
    # recorded sigma pattern repeats per patch
    batchout = _assemble(model.dim, config, np.tile(noise.per_step, P), results, T)
    return batchout
