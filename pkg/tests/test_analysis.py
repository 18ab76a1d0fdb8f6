import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from gmlangevin.analysis import (
    ClauseCheck,
    EscapeReport,
    ModeReport,
    assumption_check,
    cluster_mode,
    escape_report_from_probe,
    escape_scan,
    marginal_ks,
    mode_frequencies,
    mode_labels,
    null_space_frame,
    null_space_sq_norm,
    theorem_threshold,
    tv_discrete,
)
from gmlangevin.mixture import GaussianComponent, MixtureModel, SampleBatch, sample
from gmlangevin.samplers import TrajectoryRecord

from conftest import make_synthetic

# Frozen with 50-digit arithmetic; see the mean-distance bound
# (sigma0^2 - nu^2)/2 * (log(nu^2/sigma0^2) - nu^2/(2 sigma0^2)
#  + sigma0^2/(2 nu^2)) * d and its annealed variant.
A1_BOUND_D100 = 23.472104466522364  # = (ln(1/3) - 1/6 + 3/2) * 100
T2_BOUND_D100 = 35.447186705910234  # = (ln(1/2) - 2/7 + 4/3) * 100
# Sub-Gaussian check at sigma0^2=1000, nu^2=1, c_v=0.5, c_L=(1+c_L*)/2:
A2_CL = 3.172878660699924
A2_FLOOR = 372.91514642799694
A2_MEAN_RHS_D100 = 11973129.878694236
A3_FLOOR = 744.8302928559939  # same constants with c_sigma=1
A3_MEAN_RHS_D100 = 5770567.816026997


def wide_pair(dim: int = 100) -> MixtureModel:
    """0.5 N(0, 1000 I) + 0.5 N(1, I): satisfies the sub-Gaussian clauses."""
    comps = (
        GaussianComponent(np.zeros(dim), 1000.0),
        GaussianComponent(np.ones(dim), 1.0),
    )
    return MixtureModel(dim, comps, np.array([0.5, 0.5]))


def lemma_cl(sigma0_sq: float, numax_sq: float, c_v: float) -> float:
    """Midpoint between 1 and the largest c_L the variance floor admits."""
    b = sigma0_sq * (1.0 - c_v) / numax_sq
    cl_star = (-c_v + math.sqrt(c_v * c_v + b * c_v * (1.0 - c_v))) / 2.0
    return (1.0 + cl_star) / 2.0


def record_of(states: np.ndarray, steps, sigmas=None) -> TrajectoryRecord:
    steps = np.asarray(steps, dtype=np.int64)
    if sigmas is None:
        sigmas = np.zeros(len(steps))
    return TrajectoryRecord(steps, np.asarray(sigmas, dtype=np.float64), states)


# ---------------------------------------------------------------------------
# mode clustering
# ---------------------------------------------------------------------------

def test_cluster_mode_at_means(synthetic100):
    assert cluster_mode(np.ones(100), synthetic100) == 1
    assert cluster_mode(-np.ones(100), synthetic100) == 2


def test_cluster_mode_far_point_is_universal(synthetic100):
    assert cluster_mode(np.full(100, 50.0), synthetic100) == 0


def test_cluster_mode_origin_ties_to_lowest_index(synthetic100):
    # ||0 - mu_1||^2 = ||0 - mu_2||^2 = 100 <= 500: equidistant, mode 1 wins.
    assert cluster_mode(np.zeros(100), synthetic100) == 1


def test_cluster_mode_radius_gate(synthetic100):
    x = np.ones(100) * 3.0  # ||x - mu_1||^2 = 400
    assert cluster_mode(x, synthetic100, radius_coef=5.0) == 1
    assert cluster_mode(x, synthetic100, radius_coef=3.9) == 0


def test_cluster_mode_rotation_invariance(rng):
    dim = 3
    base = make_synthetic(dim)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    rotated = MixtureModel(
        dim,
        tuple(
            GaussianComponent(q @ m, v)
            for m, v in zip(base.means, base.variances)
        ),
        base.weights,
    )
    for _ in range(50):
        x = rng.standard_normal(dim) * 3.0
        assert cluster_mode(x, base) == cluster_mode(q @ x, rotated)


def test_mode_labels_match_three_mode_rule(rng, synthetic100):
    """The generalized nearest-within-radius rule reduces to the asymmetric
    two-comparison form for a three-component model."""
    pts = rng.standard_normal((2000, 100)) * 2.5
    d1 = ((pts - 1.0) ** 2).sum(axis=1)
    d2 = ((pts + 1.0) ** 2).sum(axis=1)
    expected = np.where(
        (d1 <= 500) & (d1 <= d2), 1, np.where((d2 <= 500) & (d1 > d2), 2, 0)
    )
    np.testing.assert_array_equal(mode_labels(pts, synthetic100), expected)


def test_cluster_mode_input_validation(synthetic100):
    with pytest.raises(ValueError):
        cluster_mode(np.zeros(99), synthetic100)
    with pytest.raises(ValueError):
        cluster_mode(np.zeros((2, 100)), synthetic100)
    with pytest.raises(ValueError):
        cluster_mode(np.zeros(100), synthetic100, radius_coef=0.0)
    lone = MixtureModel(2, (GaussianComponent(np.zeros(2), 1.0),), np.array([1.0]))
    with pytest.raises(ValueError):
        cluster_mode(np.zeros(2), lone)


def test_mode_frequencies_pure_batch(synthetic100):
    batch = SampleBatch(100, np.tile(np.ones(100), (40, 1)))
    report = mode_frequencies(batch, synthetic100)
    assert report.total == 40
    assert report.counts.tolist() == [0, 40, 0]
    assert report.frequencies.tolist() == [0.0, 1.0, 0.0]
    assert report.radius_coef == 5.0


def test_mode_frequencies_component_draws(rng, synthetic100):
    # chi-square concentration: ||x - mu_1||^2 ~ d +- O(sqrt(d)) << 5d
    pts = rng.standard_normal((10_000, 100)) + 1.0
    report = mode_frequencies(SampleBatch(100, pts), synthetic100)
    assert report.frequencies[1] >= 0.99


def test_mode_frequencies_against_loop_reference(rng, synthetic100):
    batch = sample(synthetic100, rng, 10_000)
    report = mode_frequencies(batch, synthetic100)
    counts = [0, 0, 0]
    for x in batch.points:
        best, best_d2 = 0, math.inf
        for i in (1, 2):
            d2 = float(((x - synthetic100.means[i]) ** 2).sum())
            if d2 < best_d2:
                best, best_d2 = i, d2
        counts[best if best_d2 <= 500.0 else 0] += 1
    assert report.counts.tolist() == counts


def test_mode_frequencies_empty_batch_rejected(synthetic100):
    with pytest.raises(ValueError):
        mode_frequencies(SampleBatch(100, np.empty((0, 100))), synthetic100)


def test_mode_report_json_shape(synthetic100):
    report = mode_frequencies(SampleBatch(100, np.ones((3, 100))), synthetic100, 4.0)
    js = report.to_json()
    assert js == {"counts": [0, 3, 0], "frequencies": [0.0, 1.0, 0.0], "radius_coef": 4.0}


def test_mode_report_validates_totals():
    with pytest.raises(ValueError):
        ModeReport(np.array([1, 2]), np.array([0.5, 0.5]), 4, 5.0)
    with pytest.raises(ValueError):
        ModeReport(np.array([1, 1]), np.array([0.7, 0.5]), 2, 5.0)


# ---------------------------------------------------------------------------
# TV and KS
# ---------------------------------------------------------------------------

def test_tv_discrete_basics():
    assert tv_discrete([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert tv_discrete([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert tv_discrete([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.25, abs=1e-15)


def test_tv_discrete_rejects_bad_input():
    with pytest.raises(ValueError):
        tv_discrete([0.5, 0.5], [0.5, 0.5, 0.0])
    with pytest.raises(ValueError):
        tv_discrete([0.6, 0.6], [0.5, 0.5])
    with pytest.raises(ValueError):
        tv_discrete([-0.2, 1.2], [0.5, 0.5])


@st.composite
def simplex(draw, size):
    raw = draw(
        st.lists(st.floats(0.01, 1.0), min_size=size, max_size=size)
    )
    v = np.array(raw)
    return v / v.sum()


@given(st.integers(2, 5).flatmap(lambda k: st.tuples(simplex(k), simplex(k), simplex(k))))
@settings(max_examples=60, deadline=None)
def test_tv_discrete_is_a_metric(pqr):
    p, q, r = pqr
    assert tv_discrete(p, q) == tv_discrete(q, p)
    assert 0.0 <= tv_discrete(p, q) <= 1.0
    assert tv_discrete(p, r) <= tv_discrete(p, q) + tv_discrete(q, r) + 1e-12


def test_marginal_ks_identical_and_shuffled(rng):
    pts = rng.standard_normal((500, 3))
    a = SampleBatch(3, pts)
    b = SampleBatch(3, pts[rng.permutation(500)])
    assert marginal_ks(a, a, 0) == 0.0
    assert marginal_ks(a, b, 2) == 0.0


def test_marginal_ks_matches_scipy(rng):
    a = SampleBatch(2, rng.standard_normal((100, 2)))
    b = SampleBatch(2, rng.standard_normal((77, 2)) * 1.3 + 0.2)
    for coord in (0, 1):
        expected = scipy.stats.ks_2samp(
            a.points[:, coord], b.points[:, coord]
        ).statistic
        assert marginal_ks(a, b, coord) == pytest.approx(expected, abs=1e-12)


def test_marginal_ks_same_distribution_stays_small():
    # 1.358 * sqrt(2/n) = 0.0192 is the alpha=0.05 critical value at n=10^4;
    # 0.027 corresponds to alpha ~ 0.001, so fixed seeds sit below it.
    for seed in range(10):
        r = np.random.default_rng(seed)
        a = SampleBatch(1, r.standard_normal((10_000, 1)))
        b = SampleBatch(1, r.standard_normal((10_000, 1)))
        assert marginal_ks(a, b, 0) < 0.027


def test_marginal_ks_detects_shift(rng):
    a = SampleBatch(1, rng.standard_normal((2000, 1)))
    b = SampleBatch(1, rng.standard_normal((2000, 1)) + 1.0)
    assert marginal_ks(a, b, 0) > 0.3


def test_marginal_ks_input_validation(rng):
    a = SampleBatch(2, rng.standard_normal((10, 2)))
    b = SampleBatch(3, rng.standard_normal((10, 3)))
    with pytest.raises(ValueError):
        marginal_ks(a, b, 0)
    with pytest.raises(ValueError):
        marginal_ks(a, a, 2)
    with pytest.raises(ValueError):
        marginal_ks(a, SampleBatch(2, np.empty((0, 2))), 0)


# ---------------------------------------------------------------------------
# null-space geometry
# ---------------------------------------------------------------------------

def test_null_space_frame_single_direction():
    dim = 4
    comps = (
        GaussianComponent(np.zeros(dim), 2.0),
        GaussianComponent(np.eye(dim)[0], 1.0),
    )
    frame = null_space_frame(MixtureModel(dim, comps, np.array([0.5, 0.5])))
    assert frame.rank == 1
    np.testing.assert_allclose(frame.basis[:, 0], np.eye(dim)[0], atol=1e-15)


def test_null_space_frame_collinear_means(synthetic100):
    frame = null_space_frame(synthetic100)
    assert frame.rank == 1
    np.testing.assert_allclose(np.abs(frame.basis[:, 0]), 0.1, atol=1e-14)


def test_null_space_frame_random_means(rng):
    dim, k = 10, 3
    means = [np.zeros(dim)] + [rng.standard_normal(dim) for _ in range(k)]
    comps = tuple(GaussianComponent(m, 1.0 + i) for i, m in enumerate(means))
    model = MixtureModel(dim, comps, np.full(k + 1, 1.0 / (k + 1)))
    frame = null_space_frame(model)
    assert frame.rank == 3
    gram = frame.basis.T @ frame.basis
    np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)
    for m in means[1:]:
        recon = frame.basis @ (frame.basis.T @ m)
        assert np.linalg.norm(recon - m) <= 1e-8 * np.linalg.norm(m)


def test_null_space_frame_detects_rank_deficiency():
    dim = 5
    e = np.eye(dim)
    comps = (
        GaussianComponent(np.zeros(dim), 2.0),
        GaussianComponent(e[0], 1.0),
        GaussianComponent(2.0 * e[0], 1.0),
        GaussianComponent(e[1], 1.0),
    )
    frame = null_space_frame(MixtureModel(dim, comps, np.full(4, 0.25)))
    assert frame.rank == 2


def test_null_space_frame_near_duplicate_direction():
    dim = 6
    v = np.linspace(1.0, 2.0, dim)
    comps = (
        GaussianComponent(np.zeros(dim), 2.0),
        GaussianComponent(v, 1.0),
        GaussianComponent(v * (1.0 + 1e-14), 1.0),
    )
    frame = null_space_frame(MixtureModel(dim, comps, np.full(3, 1 / 3)))
    assert frame.rank == 1


def test_null_space_frame_identical_means():
    dim = 3
    comps = (
        GaussianComponent(np.ones(dim), 2.0),
        GaussianComponent(np.ones(dim), 1.0),
    )
    frame = null_space_frame(MixtureModel(dim, comps, np.array([0.5, 0.5])))
    assert frame.rank == 0
    assert frame.basis.shape == (dim, 0)
    x = np.array([3.0, 1.0, 0.0])
    assert null_space_sq_norm(x, frame) == pytest.approx(
        float(((x - 1.0) ** 2).sum()), rel=1e-15
    )


def test_null_space_sq_norm_span_and_complement(synthetic100):
    frame = null_space_frame(synthetic100)
    assert null_space_sq_norm(3.7 * np.ones(100), frame) == pytest.approx(0.0, abs=1e-9)
    y = np.zeros(100)
    y[0], y[1] = 1.0, -1.0  # orthogonal to 1_d
    assert null_space_sq_norm(y, frame) == pytest.approx(2.0, rel=1e-12)


def test_null_space_sq_norm_lstsq_oracle(rng):
    dim, k = 5, 2
    means = [rng.standard_normal(dim) for _ in range(k + 1)]
    comps = tuple(GaussianComponent(m, 1.0) for m in means)
    model = MixtureModel(dim, comps, np.full(k + 1, 1.0 / (k + 1)))
    frame = null_space_frame(model)
    a = np.stack([m - means[0] for m in means[1:]], axis=1)
    for _ in range(20):
        x = rng.standard_normal(dim) * 2.0
        y = x - means[0]
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        expected = float(((y - a @ coef) ** 2).sum())
        assert null_space_sq_norm(x, frame) == pytest.approx(expected, abs=1e-10)


def test_null_space_pythagoras(rng, synthetic100):
    frame = null_space_frame(synthetic100)
    xs = rng.standard_normal((100, 100)) * 3.0
    proj_sq = ((xs - frame.origin) @ frame.basis) ** 2
    total = ((xs - frame.origin) ** 2).sum(axis=1)
    lhs = null_space_sq_norm(xs, frame) + proj_sq.sum(axis=1)
    np.testing.assert_allclose(lhs, total, rtol=1e-9)


def test_null_space_frame_needs_two_components():
    lone = MixtureModel(2, (GaussianComponent(np.zeros(2), 1.0),), np.array([1.0]))
    with pytest.raises(ValueError):
        null_space_frame(lone)


# ---------------------------------------------------------------------------
# theorem thresholds
# ---------------------------------------------------------------------------

def test_theorem_threshold_values():
    assert theorem_threshold("vanilla-gaussian", 3.0, 1.0, 100) == 200.0
    assert theorem_threshold("annealed-gaussian", 3.0, 1.0, 100, sigma_t=1.0) == 300.0
    assert theorem_threshold("vanilla-subgaussian", 3.0, 1.0, 100, c_v=0.5) == 250.0
    assert theorem_threshold(
        "annealed-subgaussian", 3.0, 1.0, 100, sigma_t=0.1, c_v=0.5
    ) == pytest.approx(251.5, rel=1e-15)


def test_theorem_threshold_reductions():
    vanilla = theorem_threshold("vanilla-gaussian", 3.0, 1.0, 100)
    assert theorem_threshold("annealed-gaussian", 3.0, 1.0, 100, sigma_t=0.0) == vanilla
    nearly = theorem_threshold("vanilla-subgaussian", 3.0, 1.0, 100, c_v=1e-12)
    assert nearly == pytest.approx(vanilla, rel=1e-9)


def test_theorem_threshold_accepts_sigma_arrays():
    sig = np.array([1.0, 0.5, 0.0])
    out = theorem_threshold("annealed-gaussian", 3.0, 1.0, 100, sigma_t=sig)
    expected = [
        theorem_threshold("annealed-gaussian", 3.0, 1.0, 100, sigma_t=s) for s in sig
    ]
    np.testing.assert_array_equal(out, expected)


@given(
    st.lists(st.floats(0.0, 10.0), min_size=2, max_size=20),
    st.sampled_from(["annealed-gaussian", "annealed-subgaussian"]),
)
@settings(max_examples=40, deadline=None)
def test_theorem_threshold_monotone_in_schedule(levels, kind):
    sig = np.array(sorted(levels, reverse=True))
    out = theorem_threshold(kind, 3.0, 1.0, 50, sigma_t=sig, c_v=0.3)
    assert np.all(np.diff(out) <= 0)


def test_theorem_threshold_validation():
    with pytest.raises(ValueError):
        theorem_threshold("gaussian", 3.0, 1.0, 100)
    with pytest.raises(ValueError):
        theorem_threshold("vanilla-subgaussian", 3.0, 1.0, 100)
    with pytest.raises(ValueError):
        theorem_threshold("vanilla-subgaussian", 3.0, 1.0, 100, c_v=1.0)
    with pytest.raises(ValueError):
        theorem_threshold("vanilla-gaussian", -3.0, 1.0, 100)
    with pytest.raises(ValueError):
        theorem_threshold("vanilla-gaussian", 3.0, 1.0, 0)
    with pytest.raises(ValueError):
        theorem_threshold("annealed-gaussian", 3.0, 1.0, 100, sigma_t=-0.1)


# ---------------------------------------------------------------------------
# escape scans
# ---------------------------------------------------------------------------

def far_state(dim: int) -> np.ndarray:
    return np.full(dim, 40.0)


def test_escape_scan_state_at_mean_violates(synthetic100):
    states = np.ones((1, 1, 100))
    report = escape_scan(
        record_of(states, [0]), synthetic100, lambda t, s: 200.0, "vanilla-gaussian"
    )
    assert report.violations == (0,)
    assert report.fraction == 1.0
    assert report.threshold_kind == "vanilla-gaussian"


def test_escape_scan_far_state_never_violates(synthetic100):
    states = far_state(100)[None, None, :]
    report = escape_scan(record_of(states, [0]), synthetic100, lambda t, s: 200.0)
    assert report.violations == (None,)
    assert report.fraction == 0.0


def test_escape_scan_reports_first_step(synthetic100):
    steps = [0, 10, 20, 30]
    states = np.tile(far_state(100), (3, 4, 1))
    states[0, 2] = 1.0   # chain 0 inside mode 1 at step 20
    states[2, 1] = -1.0  # chain 2 inside mode 2 at steps 10 and 30
    states[2, 3] = -1.0
    report = escape_scan(record_of(states, steps), synthetic100, lambda t, s: 200.0)
    assert report.violations == (20, None, 10)
    assert report.fraction == pytest.approx(2.0 / 3.0)


def test_escape_scan_thinning_keeps_verdicts(synthetic100):
    steps = np.arange(0, 50, 1)
    states = np.tile(far_state(100), (2, 50, 1))
    states[0, 10] = 1.0
    states[1, 30] = -1.0
    dense = escape_scan(record_of(states, steps), synthetic100, lambda t, s: 200.0)
    thin = escape_scan(
        record_of(states[:, ::10], steps[::10]), synthetic100, lambda t, s: 200.0
    )
    assert dense.violations == thin.violations == (10, 30)
    assert dense.fraction == thin.fraction


def test_escape_scan_threshold_sees_recorded_sigma(synthetic100):
    # A state at squared distance 250 from mu_1 crosses the annealed level
    # (3+1+2*sigma^2)/2*100 only while sigma=1 (threshold 300 vs 200).
    x = np.ones(100)
    x[0] += math.sqrt(250.0)
    states = np.tile(x, (1, 2, 1))
    fn = lambda t, s: theorem_threshold("annealed-gaussian", 3.0, 1.0, 100, sigma_t=s)
    report = escape_scan(record_of(states, [0, 5], sigmas=[0.0, 1.0]), synthetic100, fn)
    assert report.violations == (5,)


def test_escape_scan_ignores_nan_frames(synthetic100):
    states = np.full((1, 2, 100), np.nan)
    states[0, 1] = 1.0
    report = escape_scan(record_of(states, [0, 7]), synthetic100, lambda t, s: 200.0)
    assert report.violations == (7,)


def test_escape_scan_rejects_empty(synthetic100):
    with pytest.raises(ValueError):
        escape_scan(
            record_of(np.empty((2, 0, 100)), []), synthetic100, lambda t, s: 200.0
        )


def test_escape_report_from_probe():
    report = escape_report_from_probe(np.array([-1, 5, 0]), 10, "vanilla-gaussian")
    assert report.violations == (None, 5, 0)
    assert report.fraction == pytest.approx(2.0 / 3.0)
    assert report.to_json() == {
        "violations": [None, {"chain": 1, "step": 5}, {"chain": 2, "step": 0}],
        "fraction": report.fraction,
        "threshold_kind": "vanilla-gaussian",
    }
    with pytest.raises(ValueError):
        escape_report_from_probe(np.array([11]), 10)


# ---------------------------------------------------------------------------
# separation-condition checks
# ---------------------------------------------------------------------------

def by_clause(checks, clause, component=None):
    out = [
        c
        for c in checks
        if c.clause == clause and (component is None or c.component == component)
    ]
    assert out, f"no clause {clause!r} in report"
    return out


def test_assumption1_synthetic_fails_mean_bound(synthetic100):
    checks = assumption_check("assumption-1", synthetic100)
    assert all(c.passed for c in by_clause(checks, "variance-order"))
    for c in by_clause(checks, "mean-distance"):
        assert c.lhs == pytest.approx(100.0, abs=1e-12)
        assert c.rhs == pytest.approx(A1_BOUND_D100, abs=1e-12)
        assert not c.passed


def test_assumption1_shifted_model_passes():
    checks = assumption_check("assumption-1", make_synthetic(100, mean_scale=0.4))
    assert all(c.passed for c in checks)
    c = by_clause(checks, "mean-distance", component=1)[0]
    assert c.lhs == pytest.approx(16.0, abs=1e-12)
    assert c.rhs == pytest.approx(A1_BOUND_D100, abs=1e-12)


def test_assumption1_equal_means_trivially_pass():
    comps = (
        GaussianComponent(np.ones(10), 3.0),
        GaussianComponent(np.ones(10), 1.0),
    )
    model = MixtureModel(10, comps, np.array([0.5, 0.5]))
    c = by_clause(assumption_check("assumption-1", model), "mean-distance")[0]
    assert c.lhs == 0.0 and c.passed


def test_theorem2_means_bound(synthetic100):
    checks = assumption_check("theorem-2-means", synthetic100, c_sigma=1.0)
    c = by_clause(checks, "mean-distance-annealed", component=1)[0]
    assert c.rhs == pytest.approx(T2_BOUND_D100, abs=1e-12)
    assert not c.passed  # 100 > 35.45
    shifted = assumption_check(
        "theorem-2-means", make_synthetic(100, mean_scale=0.4), c_sigma=1.0
    )
    assert all(c.passed for c in shifted)


def test_assumption2_frozen_numbers():
    checks = assumption_check("assumption-2", wide_pair(), c_v=0.5, c_L=A2_CL)
    assert all(c.passed for c in checks)
    floor = by_clause(checks, "variance-floor", component=0)[0]
    assert floor.lhs == 1000.0
    assert floor.rhs == pytest.approx(A2_FLOOR, rel=1e-12)
    mean = by_clause(checks, "mean-distance", component=1)[0]
    assert mean.lhs == pytest.approx(100.0, abs=1e-12)
    assert mean.rhs == pytest.approx(A2_MEAN_RHS_D100, rel=1e-12)
    assert by_clause(checks, "lemma-a5-factor")[0].lhs == pytest.approx(499.0, rel=1e-12)


def test_assumption3_frozen_numbers():
    checks = assumption_check(
        "assumption-3", wide_pair(), c_sigma=1.0, c_v=0.5, c_L=A2_CL
    )
    assert all(c.passed for c in checks)
    floor = by_clause(checks, "variance-floor", component=0)[0]
    assert floor.rhs == pytest.approx(A3_FLOOR, rel=1e-12)
    mean = by_clause(checks, "mean-distance", component=1)[0]
    assert mean.rhs == pytest.approx(A3_MEAN_RHS_D100, rel=1e-12)
    assert by_clause(checks, "lemma-a5-factor")[0].lhs == pytest.approx(498.5, rel=1e-12)


def test_lemma_a5_positivity_grid():
    """Both right-hand-side factors stay positive whenever the variance floor
    holds: sigma0^2=1000, nu^2=1, c_v over a grid, c_L between 1 and the
    floor's largest admissible value."""
    model = wide_pair()
    for cv10 in range(1, 10):
        c_v = cv10 / 10.0
        checks = assumption_check(
            "assumption-2", model, c_v=c_v, c_L=lemma_cl(1000.0, 1.0, c_v)
        )
        assert by_clause(checks, "variance-floor")[0].passed
        for c in by_clause(checks, "lemma-a5-factor") + by_clause(
            checks, "lemma-a5-bracket"
        ):
            assert c.passed and c.lhs > 0.0


def test_assumption2_reports_violations_honestly(synthetic100):
    # sigma0^2=3 is far below the sub-Gaussian variance floor, and the
    # bracket goes negative: both should be reported as failures, not errors.
    checks = assumption_check("assumption-2", synthetic100, c_v=0.5, c_L=1.0)
    assert not by_clause(checks, "variance-floor")[0].passed
    assert not by_clause(checks, "lemma-a5-bracket")[0].passed


def test_assumption_check_constant_validation(synthetic100):
    with pytest.raises(ValueError):
        assumption_check("assumption-0", synthetic100)
    with pytest.raises(ValueError):
        assumption_check("theorem-2-means", synthetic100)  # needs c_sigma
    with pytest.raises(ValueError):
        assumption_check("assumption-2", synthetic100, c_v=0.5)  # needs c_L
    with pytest.raises(ValueError):
        assumption_check("assumption-3", synthetic100, c_v=0.5, c_L=1.0)
    with pytest.raises(ValueError):
        assumption_check("theorem-2-means", synthetic100, c_sigma=0.0)
    with pytest.raises(ValueError):
        assumption_check("assumption-2", synthetic100, c_v=1.5, c_L=1.0)
    with pytest.raises(ValueError):
        assumption_check("assumption-2", synthetic100, c_v=0.5, c_L=-1.0)
    lone = MixtureModel(2, (GaussianComponent(np.zeros(2), 1.0),), np.array([1.0]))
    with pytest.raises(ValueError):
        assumption_check("assumption-1", lone)


def test_clause_check_json_round_trip():
    js = ClauseCheck(1, "mean-distance", 16.0, 23.47, True).to_json()
    assert js == {
        "component": 1,
        "clause": "mean-distance",
        "lhs": 16.0,
        "rhs": 23.47,
        "pass": True,
    }
