"""`gmlangevin` command line: run experiments, validate scores and theorems,
and reproduce the synthetic benchmark figures.

Exit codes: 0 success; 2 configuration error (reported on stderr as one
`config-error: ...` line before any sampling starts); 3 numerical divergence
(`divergence: ...`); 4 a check subcommand found numbers beyond its threshold
(`check-failed: ...`).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .. import __version__, backend
from ..analysis import (
    THEOREM_KINDS,
    assumption_check,
    escape_report_from_probe,
    marginal_ks,
    mode_frequencies,
    theorem_threshold,
    tv_discrete,
)
from ..conditional import (
    PatchLayout,
    PrefixState,
    compose_exact_samples,
    conditional_mixture,
)
from ..mixture import SampleBatch, log_density, model_from_json, sample, score
from ..samplers import (
    PURPOSE_AUX,
    DistanceProbe,
    DivergenceError,
    chain_generator,
    run_annealed,
    run_chained,
    run_vanilla,
)
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .io import (
    build_manifest,
    write_final_csv,
    write_json,
    write_json_atomic,
    write_trace_csv,
)
from .presets import PRESETS, T_GRID_DESK, T_GRID_FULL, preset_config
from .svg import write_distance_panels

SCORE_CHECK_THRESHOLD = 1e-4
# 0.03 at n = 10^4 (the documented bound), scaled with the usual sqrt(2/n)
# two-sample rate: 2.1213... * sqrt(2/n).
TV_KS_COEF = 0.03 / (2.0 / 10_000) ** 0.5


def _fail_config(message: str) -> int:
    print(f"config-error: {message}", file=sys.stderr)
    return 2


def _fail_check(message: str) -> int:
    print(f"check-failed: {message}", file=sys.stderr)
    return 4


def _run_sampler(cfg: ExperimentConfig, workers, probe=None):
    noise, steps = cfg.schedules()
    sampler_cfg = cfg.sampler_config()
    if cfg.sampler == "vanilla":
        return run_vanilla(cfg.model, sampler_cfg, steps, probe=probe, workers=workers)
    if cfg.sampler == "annealed":
        return run_annealed(
            cfg.model, sampler_cfg, noise, steps, probe=probe, workers=workers
        )
    return run_chained(
        cfg.model,
        sampler_cfg,
        cfg.layout(),
        noise,
        steps,
        perturbed_weights=cfg.perturbed_prefix_weights,
        workers=workers,
    )


def _state_sigmas(per_step: np.ndarray) -> np.ndarray:
    """Noise level attached to each state x_0..x_T (x_0 gets the first level)."""
    if per_step.shape[0] == 0:
        return np.zeros(1)
    return np.concatenate(([per_step[0]], per_step))


def _finish(out_dir, command, cfg_echo, results, started) -> None:
    manifest = build_manifest(
        cfg_echo,
        __version__,
        backend.active_name(),
        time.perf_counter() - started,
        results,
    )
    manifest["command"] = command
    write_json_atomic(os.path.join(out_dir, "manifest.json"), manifest)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "out": args.out})
    started = time.perf_counter()
    os.makedirs(cfg.out, exist_ok=True)
    batch = _run_sampler(cfg, args.workers)
    results: dict[str, str] = {}

    final_path = os.path.join(cfg.out, "final.csv")
    write_final_csv(final_path, batch.states)
    results["final.csv"] = final_path

    if batch.recorded is not None:
        trace_path = os.path.join(cfg.out, "trace.csv")
        write_trace_csv(trace_path, batch.recorded)
        results["trace.csv"] = trace_path

    report = mode_frequencies(
        SampleBatch(cfg.model.dim, batch.states, provenance=cfg.sampler),
        cfg.model,
        cfg.radius_coef,
    )
    modes_path = os.path.join(cfg.out, "modes.json")
    write_json(modes_path, report.to_json())
    results["modes.json"] = modes_path

    if cfg.record_every > 0:
        results.update(
            write_distance_panels(cfg.out, batch.states, cfg.model, cfg.radius_coef)
        )

    _finish(cfg.out, "run", cfg.to_json(), results, started)
    freqs = ", ".join(f"{f:.4f}" for f in report.frequencies)
    print(f"run: {cfg.sampler} T={cfg.iterations} batch={cfg.batch} modes=[{freqs}]")
    return 0


# ---------------------------------------------------------------------------
# score-check
# ---------------------------------------------------------------------------

def _fd_rel_error(logp, grad, points: np.ndarray, h: float) -> float:
    """Max relative gap between analytic gradients and central differences."""
    n, d = points.shape
    analytic = np.atleast_2d(grad(points))
    fd = np.empty_like(analytic)
    for j in range(d):
        shift = np.zeros(d)
        shift[j] = h
        fd[:, j] = (logp(points + shift) - logp(points - shift)) / (2.0 * h)
    num = np.linalg.norm(analytic - fd, axis=1)
    den = np.maximum(np.linalg.norm(analytic, axis=1), 1e-300)
    return float((num / den).max())


def cmd_score_check(args) -> int:
    if args.config:
        cfg = load_config(args.config, {"seed": args.seed, "out": args.out})
        model = cfg.model
        seed = cfg.seed
        out_dir = cfg.out
        echo = cfg.to_json()
    else:
        from .presets import synthetic_model_doc

        model = model_from_json(synthetic_model_doc(10))
        seed = args.seed if args.seed is not None else 0
        out_dir = args.out or "results"
        echo = {"model": synthetic_model_doc(10), "seed": seed, "out": out_dir}
    started = time.perf_counter()
    rng = chain_generator(seed, 0, PURPOSE_AUX)
    scale = 3.0 * float(np.sqrt(model.variances.max()))
    pts = scale * rng.standard_normal((args.points, model.dim))

    worst = _fd_rel_error(
        lambda x: log_density(model, x), lambda x: score(model, x), pts, args.fd_step
    )
    cases = {"joint": worst}

    if args.conditional:
        sizes = []
        for token in args.patch_sizes.split(","):
            token = token.strip()
            if not token:
                continue
            q = int(token)
            if q < 1 or model.dim % q:
                raise ConfigError(
                    f"patch size {q} does not divide dimension {model.dim}"
                )
            sizes.append(q)
        if not sizes:
            raise ConfigError("no conditional patch sizes given")
        per_case = max(2, args.points // 20)
        for q_size in sizes:
            layout = PatchLayout(model.dim, q_size)
            for pos in range(layout.num_patches):
                prefix_vals = scale * rng.standard_normal(pos * q_size)
                prefix = PrefixState(layout, pos, prefix_vals)
                patch_pts = scale * rng.standard_normal((per_case, q_size))
                for sigma in (0.0, 0.5):
                    cond = conditional_mixture(model, prefix, sigma)
                    err = _fd_rel_error(
                        lambda x, c=cond: log_density(c, x),
                        lambda x, c=cond: score(c, x),
                        patch_pts,
                        args.fd_step,
                    )
                    key = f"conditional Q={q_size} patch={pos} sigma={sigma}"
                    cases[key] = err
                    worst = max(worst, err)

    passed = worst < SCORE_CHECK_THRESHOLD
    os.makedirs(out_dir, exist_ok=True)
    report_path = os.path.join(out_dir, "score_check.json")
    write_json(
        report_path,
        {
            "max_rel_error": worst,
            "threshold": SCORE_CHECK_THRESHOLD,
            "points": args.points,
            "fd_step": args.fd_step,
            "cases": cases,
            "pass": passed,
        },
    )
    _finish(out_dir, "score-check", echo, {"score_check.json": report_path}, started)
    print(f"score-check: max relative error {worst:.3e} (threshold {SCORE_CHECK_THRESHOLD:g})")
    if not passed:
        return _fail_check(
            f"score mismatch {worst:.3e} exceeds {SCORE_CHECK_THRESHOLD:g}"
        )
    return 0


# ---------------------------------------------------------------------------
# theorem-check
# ---------------------------------------------------------------------------

_GATES = {
    "vanilla-gaussian": ("assumption-1",),
    "annealed-gaussian": ("assumption-1", "theorem-2-means"),
    "vanilla-subgaussian": ("assumption-2",),
    "annealed-subgaussian": ("assumption-3",),
}


def _gate_checks(kind: str, cfg: ExperimentConfig):
    checks = []
    for check_kind in _GATES[kind]:
        kwargs = {}
        if check_kind in ("theorem-2-means", "assumption-3"):
            kwargs["c_sigma"] = cfg.lambda_first
        if check_kind in ("assumption-2", "assumption-3"):
            if cfg.c_v is None or cfg.c_L is None:
                raise ConfigError(f"{kind} checks need c_v and c_L in the config")
            kwargs["c_v"] = cfg.c_v
            kwargs["c_L"] = cfg.c_L
        checks.extend(assumption_check(check_kind, cfg.model, **kwargs))
    return checks


def cmd_theorem_check(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "out": args.out})
    kind = args.kind or cfg.theorem
    if kind is None:
        raise ConfigError("theorem-check needs a kind (--kind or config key 'theorem')")
    if kind not in THEOREM_KINDS:
        raise ConfigError(f"unknown theorem kind {kind!r}")
    wanted = "vanilla" if kind.startswith("vanilla") else "annealed"
    if cfg.sampler != wanted:
        raise ConfigError(
            f"theorem kind {kind!r} applies to the {wanted} sampler, "
            f"config says {cfg.sampler!r}"
        )
    started = time.perf_counter()

    checks = _gate_checks(kind, cfg)
    failed = [c for c in checks if not c.passed]
    os.makedirs(cfg.out, exist_ok=True)
    assumptions_path = os.path.join(cfg.out, "assumptions.json")
    write_json(assumptions_path, [c.to_json() for c in checks])
    if failed:
        lines = "; ".join(
            f"component {c.component} {c.clause} ({c.lhs:.6g} vs {c.rhs:.6g})"
            for c in failed
        )
        if not args.override:
            return _fail_check(f"assumption clauses failed: {lines}")
        print(f"warning: proceeding past failed clauses: {lines}", file=sys.stderr)

    noise, _ = cfg.schedules()
    model = cfg.model
    sigma0_sq = float(model.variances[0])
    numax_sq = float(model.variances[1:].max())
    thresholds = theorem_threshold(
        kind,
        sigma0_sq,
        numax_sq,
        model.dim,
        sigma_t=_state_sigmas(noise.per_step),
        c_v=cfg.c_v,
    )
    probe = DistanceProbe(tuple(range(1, model.n_components)), np.atleast_1d(thresholds))
    batch = _run_sampler(cfg, args.workers, probe=probe)
    report = escape_report_from_probe(batch.first_violation, cfg.iterations, kind)

    escape_path = os.path.join(cfg.out, "escape.json")
    write_json(escape_path, report.to_json())
    _finish(
        cfg.out,
        "theorem-check",
        cfg.to_json(),
        {"assumptions.json": assumptions_path, "escape.json": escape_path},
        started,
    )
    print(
        f"theorem-check: {kind} over T={cfg.iterations}, batch={cfg.batch}: "
        f"violation fraction {report.fraction:.4f}"
    )
    return 0


# ---------------------------------------------------------------------------
# tv-check
# ---------------------------------------------------------------------------

def cmd_tv_check(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed, "out": args.out})
    if cfg.sampler != "chained":
        raise ConfigError("tv-check needs a chained config")
    started = time.perf_counter()
    model = cfg.model
    n = cfg.batch

    exact_pts = compose_exact_samples(
        model, cfg.layout(), chain_generator(cfg.seed, 0, PURPOSE_AUX), n
    )
    exact = SampleBatch(model.dim, exact_pts, provenance="exact-composition")
    ref = sample(model, chain_generator(cfg.seed, 1, PURPOSE_AUX), n)
    chained = SampleBatch(
        model.dim, _run_sampler(cfg, args.workers).states, provenance="chained"
    )

    ks_exact = [marginal_ks(exact, ref, j) for j in range(model.dim)]
    ks_chained = [marginal_ks(chained, ref, j) for j in range(model.dim)]
    threshold = TV_KS_COEF * (2.0 / n) ** 0.5

    report = {
        "samples": n,
        "ks_exact_vs_ref": ks_exact,
        "ks_chained_vs_ref": ks_chained,
        "max_ks_exact": max(ks_exact),
        "max_ks_chained": max(ks_chained),
        "ks_threshold": threshold,
        "pass": max(ks_exact) < threshold,
    }
    f_ref = mode_frequencies(ref, model, cfg.radius_coef).frequencies
    report["tv_modes_exact"] = tv_discrete(
        mode_frequencies(exact, model, cfg.radius_coef).frequencies, f_ref
    )
    report["tv_modes_chained"] = tv_discrete(
        mode_frequencies(chained, model, cfg.radius_coef).frequencies, f_ref
    )

    os.makedirs(cfg.out, exist_ok=True)
    report_path = os.path.join(cfg.out, "tv_check.json")
    write_json(report_path, report)
    _finish(cfg.out, "tv-check", cfg.to_json(), {"tv_check.json": report_path}, started)
    print(
        f"tv-check: n={n} max KS exact {report['max_ks_exact']:.4f}, "
        f"chained {report['max_ks_chained']:.4f} (threshold {threshold:.4f})"
    )
    if not report["pass"]:
        return _fail_check(
            f"exact-composition KS {report['max_ks_exact']:.4f} "
            f"exceeds {threshold:.4f}"
        )
    return 0


# ---------------------------------------------------------------------------
# reproduce-synthetic
# ---------------------------------------------------------------------------

def _crossing_probe(kind: str, cfg: ExperimentConfig):
    noise, _ = cfg.schedules()
    sigma0_sq = float(cfg.model.variances[0])
    numax_sq = float(cfg.model.variances[1:].max())
    thresholds = theorem_threshold(
        kind, sigma0_sq, numax_sq, cfg.model.dim, sigma_t=_state_sigmas(noise.per_step)
    )
    return DistanceProbe(
        tuple(range(1, cfg.model.n_components)), np.atleast_1d(thresholds)
    )


_PRESET_LOCKED_KEYS = frozenset(
    {"model", "sampler", "iterations", "init", "theorem", "c_v", "c_L"}
)


def cmd_reproduce_synthetic(args) -> int:
    if args.preset not in PRESETS:
        raise ConfigError(
            f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}"
        )
    tweaks: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                tweaks = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config!r} is not valid JSON: {exc}") from exc
        if not isinstance(tweaks, dict):
            raise ConfigError("config must be a JSON object")
        locked = sorted(set(tweaks) & _PRESET_LOCKED_KEYS)
        if locked:
            raise ConfigError(
                "the preset fixes these keys, remove them from the config: "
                + ", ".join(locked)
            )
    batch = args.batch if args.batch is not None else int(tweaks.get("batch", 200))
    if batch > 1000 and not args.full:
        raise ConfigError(
            f"batch {batch} exceeds the desk-scale cap of 1000 (pass --full to lift it)"
        )
    if args.seed is not None:
        seed = args.seed
    else:
        seed = int(tweaks.get("seed", 0))
    out_dir = args.out or tweaks.get("out") or "results"
    radius_coef = float(tweaks.get("radius_coef", 5.0))
    grid = T_GRID_FULL if args.full else T_GRID_DESK
    started = time.perf_counter()
    os.makedirs(out_dir, exist_ok=True)

    entries = []
    results: dict[str, str] = {}
    init_component = PRESETS[args.preset]["init"]
    for iterations in grid:
        for sampler in ("vanilla", "annealed", "chained"):
            cell = preset_config(
                args.preset, sampler, iterations, seed=seed, batch=batch, out=out_dir
            )
            for key, value in tweaks.items():
                if key in ("batch", "seed", "out"):
                    continue
                if key == "patch_size" and sampler != "chained":
                    continue
                cell[key] = value
            cfg = parse_config(cell)
            probe = None
            if sampler in ("vanilla", "annealed") and init_component == 0:
                kind = f"{sampler}-gaussian"
                probe = _crossing_probe(kind, cfg)
            run = _run_sampler(cfg, args.workers, probe=probe)
            report = mode_frequencies(
                SampleBatch(cfg.model.dim, run.states, provenance=sampler),
                cfg.model,
                cfg.radius_coef,
            )
            crossing = None
            if probe is not None:
                crossing = float(np.mean(run.first_violation >= 0))
            entries.append(
                {
                    "sampler": sampler,
                    "iterations": iterations,
                    "counts": [int(c) for c in report.counts],
                    "frequencies": [float(f) for f in report.frequencies],
                    "crossing_fraction": crossing,
                }
            )
            freqs = ", ".join(f"{f:.3f}" for f in report.frequencies)
            cross = "-" if crossing is None else f"{crossing:.3f}"
            print(
                f"{args.preset} {sampler:8s} T={iterations:<7d} "
                f"modes=[{freqs}] crossing={cross}"
            )
            if iterations == grid[-1]:
                results.update(
                    write_distance_panels(
                        out_dir,
                        run.states,
                        cfg.model,
                        cfg.radius_coef,
                        prefix=f"panel_{sampler}",
                    )
                )

    summary = {
        "preset": args.preset,
        "batch": batch,
        "seed": seed,
        "radius_coef": radius_coef,
        "t_grid": list(grid),
        "entries": entries,
    }
    summary_path = os.path.join(out_dir, "summary.json")
    write_json(summary_path, summary)
    results["summary.json"] = summary_path
    echo = {"preset": args.preset, "batch": batch, "seed": seed, "out": out_dir, "full": args.full}
    _finish(out_dir, "reproduce-synthetic", echo, results, started)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser, config_required: bool) -> None:
    sub.add_argument(
        "--config",
        required=config_required,
        help="path to the JSON experiment config",
    )
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--out", default=None, help="override the output directory")
    sub.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker threads (default: $GMLANGEVIN_WORKERS or 1); results do not depend on it",
    )
    sub.add_argument(
        "--full",
        action="store_true",
        help="lift the desk-scale caps (affects reproduce-synthetic)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmlangevin",
        description="Langevin samplers over Gaussian mixtures, with validation tools.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("run", help="run one configured experiment")
    _add_common(p, config_required=True)
    p.set_defaults(func=cmd_run)

    p = subs.add_parser(
        "score-check", help="compare analytic scores against finite differences"
    )
    _add_common(p, config_required=False)
    p.add_argument("--points", type=int, default=100, help="evaluation points")
    p.add_argument("--fd-step", type=float, default=1e-5, help="central-difference step")
    p.add_argument(
        "--conditional",
        action="store_true",
        help="also check conditional patch scores at sigma in {0, 0.5}",
    )
    p.add_argument(
        "--patch-sizes",
        default="1,5",
        help="comma-separated patch sizes for --conditional",
    )
    p.set_defaults(func=cmd_score_check)

    p = subs.add_parser(
        "theorem-check", help="scan a sampler run against a trapping threshold"
    )
    _add_common(p, config_required=True)
    p.add_argument("--kind", choices=THEOREM_KINDS, default=None)
    p.add_argument(
        "--override",
        action="store_true",
        help="run even if the separation checks fail (warns on stderr)",
    )
    p.set_defaults(func=cmd_theorem_check)

    p = subs.add_parser(
        "tv-check",
        help="compare exact composition and chained sampling against direct draws",
    )
    _add_common(p, config_required=True)
    p.set_defaults(func=cmd_tv_check)

    p = subs.add_parser(
        "reproduce-synthetic", help="run the three-mode benchmark preset grid"
    )
    p.add_argument("preset", nargs="?", default=None, help="preset name")
    p.add_argument(
        "--list", action="store_true", help="list available presets and exit"
    )
    _add_common(p, config_required=False)
    p.add_argument(
        "--batch", type=int, default=None, help="chains per run (default 200)"
    )
    p.set_defaults(func=cmd_reproduce_synthetic)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "reproduce-synthetic":
        if args.list:
            for name in sorted(PRESETS):
                print(name)
            return 0
        if args.preset is None:
            return _fail_config(
                f"missing preset; available: {', '.join(sorted(PRESETS))}"
            )
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail_config(str(exc))
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
