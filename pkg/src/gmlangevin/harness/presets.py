"""Named experiment presets for the synthetic three-mode benchmark.

The model is 0.2 N(0, 3I) + 0.4 N(1_d, I) + 0.4 N(-1_d, I) at d = 100; the
presets differ only in which component initializes the chains.  Each preset
runs vanilla, annealed, and chained samplers over a grid of horizons; the
desk-scale grid stops at 10^5 steps, the --full grid adds 10^6.
"""

from __future__ import annotations

__all__ = ["PRESETS", "T_GRID_DESK", "T_GRID_FULL", "preset_config", "synthetic_model_doc"]

T_GRID_DESK = (1_000, 10_000, 100_000)
T_GRID_FULL = (1_000, 10_000, 100_000, 1_000_000)

PRESETS = {
    "fig2-init-mode0": {"init": 0},
    "init-mode1": {"init": 1},
    "init-mode2": {"init": 2},
}


def synthetic_model_doc(dim: int = 100) -> dict:
    return {
        "dim": dim,
        "components": [
            {"mean": {"fill": 0.0}, "variance": 3.0},
            {"mean": {"fill": 1.0}, "variance": 1.0},
            {"mean": {"fill": -1.0}, "variance": 1.0},
        ],
        "weights": [0.2, 0.4, 0.4],
    }


def preset_config(
    name: str,
    sampler: str,
    iterations: int,
    *,
    seed: int,
    batch: int,
    out: str,
) -> dict:
    """Raw config document for one (preset, sampler, horizon) cell."""
    doc = {
        "model": synthetic_model_doc(),
        "sampler": sampler,
        "iterations": iterations,
        "batch": batch,
        "seed": seed,
        "init": PRESETS[name]["init"],
        "lambda_first": 1.0,
        "lambda_last": 0.01,
        "levels": 10,
        "eps_base": 2e-5,
        "radius_coef": 5.0,
        "out": out,
    }
    if sampler == "chained":
        doc["patch_size"] = 10
    return doc
