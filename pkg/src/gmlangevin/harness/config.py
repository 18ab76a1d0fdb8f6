"""Experiment configuration: one JSON document, validated before any sampling.

Every constraint the samplers would eventually trip over (patch divisibility,
schedule lengths, init specs, model simplex) is checked up front so a bad
config dies with exit code 2 before the first random draw.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..conditional import PatchLayout
from ..mixture import MixtureModel, model_from_json, model_to_json
from ..samplers import (
    NoiseSchedule,
    SamplerConfig,
    StepSchedule,
    build_geometric_levels,
    build_step_schedule,
    expand_schedule,
)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]

SAMPLER_KINDS = ("vanilla", "annealed", "chained")

_KNOWN_KEYS = {
    "model",
    "sampler",
    "iterations",
    "batch",
    "seed",
    "patch_size",
    "lambda_first",
    "lambda_last",
    "levels",
    "eps_base",
    "init",
    "record_every",
    "radius_coef",
    "perturbed_prefix_weights",
    "out",
    "theorem",
    "c_v",
    "c_L",
}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message is a single line."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _as_int(doc: dict, key: str, minimum: int) -> int:
    value = doc[key]
    _require(
        isinstance(value, int) and not isinstance(value, bool),
        f"{key} must be an integer",
    )
    _require(value >= minimum, f"{key} must be >= {minimum}, got {value}")
    return value


def _as_positive(doc: dict, key: str) -> float:
    value = doc[key]
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0,
        f"{key} must be a positive number",
    )
    return float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved, validated experiment description."""

    model: MixtureModel
    sampler: str
    iterations: int
    batch: int
    seed: int
    patch_size: int | None
    lambda_first: float
    lambda_last: float
    levels: int
    eps_base: float
    init: Any
    record_every: int
    radius_coef: float
    perturbed_prefix_weights: bool
    out: str
    theorem: str | None = None
    c_v: float | None = None
    c_L: float | None = None

    @property
    def steps_per_run(self) -> int:
        """Schedule length: T for joint samplers, T*Q/d per patch for chained."""
        if self.sampler != "chained":
            return self.iterations
        return self.iterations // (self.model.dim // self.patch_size)

    def layout(self) -> PatchLayout:
        return PatchLayout(self.model.dim, self.patch_size)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            iterations=self.iterations,
            seed=self.seed,
            batch=self.batch,
            init=self.init,
            record_every=self.record_every,
        )

    def schedules(self) -> tuple[NoiseSchedule, StepSchedule]:
        if self.levels == 1:
            level_values = np.array([self.lambda_first])
        else:
            level_values = build_geometric_levels(
                self.lambda_first, self.lambda_last, self.levels
            )
        n = self.steps_per_run
        noise = expand_schedule(level_values, n)
        if n == 0:
            return noise, StepSchedule(self.eps_base, np.empty(0))
        return noise, build_step_schedule(noise, self.eps_base)

    def to_json(self) -> dict:
        doc = {
            "model": model_to_json(self.model),
            "sampler": self.sampler,
            "iterations": self.iterations,
            "batch": self.batch,
            "seed": self.seed,
            "lambda_first": self.lambda_first,
            "lambda_last": self.lambda_last,
            "levels": self.levels,
            "eps_base": self.eps_base,
            "init": self.init.tolist() if isinstance(self.init, np.ndarray) else self.init,
            "record_every": self.record_every,
            "radius_coef": self.radius_coef,
            "perturbed_prefix_weights": self.perturbed_prefix_weights,
            "out": self.out,
        }
        if self.patch_size is not None:
            doc["patch_size"] = self.patch_size
        for key in ("theorem", "c_v", "c_L"):
            value = getattr(self, key)
            if value is not None:
                doc[key] = value
        return doc


def _resolve_model(spec, base_dir: str) -> MixtureModel:
    if isinstance(spec, str):
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        try:
            with open(path) as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read model file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model file {path} is not valid JSON: {exc}") from exc
    _require(isinstance(spec, dict), "model must be an inline object or a file path")
    try:
        return model_from_json(spec)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc


def _resolve_init(spec, model: MixtureModel):
    if spec == "standard_normal":
        return spec
    if isinstance(spec, bool):
        raise ConfigError("init must be a component index, vector, or 'standard_normal'")
    if isinstance(spec, int):
        _require(
            0 <= spec < model.n_components,
            f"init component {spec} out of range for {model.n_components} components",
        )
        return spec
    if isinstance(spec, (list, tuple)):
        vec = np.asarray(spec, dtype=np.float64)
        _require(
            vec.ndim == 1 and vec.shape[0] == model.dim,
            f"init vector must have length {model.dim}",
        )
        return vec
    raise ConfigError("init must be a component index, vector, or 'standard_normal'")


def parse_config(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    """Validate a raw JSON document and produce an ExperimentConfig.

    base_dir anchors a relative model-file path (normally the directory the
    config file came from).
    """
    _require(isinstance(doc, dict), "config must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    _require(not unknown, f"unknown config keys: {', '.join(unknown)}")
    for key in ("model", "sampler", "iterations", "batch", "seed"):
        _require(key in doc, f"missing required config key: {key}")

    model = _resolve_model(doc["model"], base_dir)
    sampler = doc["sampler"]
    _require(
        sampler in SAMPLER_KINDS,
        f"sampler must be one of {', '.join(SAMPLER_KINDS)}; got {sampler!r}",
    )
    iterations = _as_int(doc, "iterations", 0)
    batch = _as_int(doc, "batch", 1)
    seed = _as_int(doc, "seed", 0)
    levels = _as_int({**{"levels": 10}, **doc}, "levels", 1)
    lambda_first = _as_positive({**{"lambda_first": 1.0}, **doc}, "lambda_first")
    lambda_last = _as_positive({**{"lambda_last": 0.01}, **doc}, "lambda_last")
    _require(
        lambda_first >= lambda_last,
        f"lambda_first must be >= lambda_last, got {lambda_first} < {lambda_last}",
    )
    if levels == 1:
        _require(
            lambda_first == lambda_last,
            "with a single level lambda_first and lambda_last must agree",
        )
    eps_base = _as_positive({**{"eps_base": 2e-5}, **doc}, "eps_base")
    record_every = _as_int({**{"record_every": 0}, **doc}, "record_every", 0)
    radius_coef = _as_positive({**{"radius_coef": 5.0}, **doc}, "radius_coef")
    perturbed = doc.get("perturbed_prefix_weights", False)
    _require(
        isinstance(perturbed, bool), "perturbed_prefix_weights must be a boolean"
    )
    out = doc.get("out", "results")
    _require(isinstance(out, str) and out != "", "out must be a nonempty path string")

    patch_size = None
    if sampler == "chained":
        _require("patch_size" in doc, "chained sampler requires patch_size")
        patch_size = _as_int(doc, "patch_size", 1)
        _require(
            model.dim % patch_size == 0,
            f"patch_size {patch_size} does not divide dimension {model.dim}",
        )
        num_patches = model.dim // patch_size
        _require(
            iterations % num_patches == 0,
            f"iterations {iterations} not divisible by the {num_patches} patches",
        )
        per_patch = iterations // num_patches
    else:
        _require(
            "patch_size" not in doc,
            f"patch_size only applies to the chained sampler, not {sampler!r}",
        )
        per_patch = iterations
    if iterations > 0:
        _require(
            per_patch % levels == 0,
            f"levels {levels} does not divide the per-run step count {per_patch}",
        )

    init = _resolve_init(doc.get("init", 0), model)

    theorem = doc.get("theorem")
    if theorem is not None:
        from ..analysis import THEOREM_KINDS

        _require(
            theorem in THEOREM_KINDS,
            f"theorem must be one of {', '.join(THEOREM_KINDS)}; got {theorem!r}",
        )
    c_v = doc.get("c_v")
    if c_v is not None:
        _require(
            isinstance(c_v, (int, float)) and 0 < c_v < 1, "c_v must lie in (0, 1)"
        )
        c_v = float(c_v)
    c_L = doc.get("c_L")
    if c_L is not None:
        c_L = _as_positive(doc, "c_L")

    return ExperimentConfig(
        model=model,
        sampler=sampler,
        iterations=iterations,
        batch=batch,
        seed=seed,
        patch_size=patch_size,
        lambda_first=lambda_first,
        lambda_last=lambda_last,
        levels=levels,
        eps_base=eps_base,
        init=init,
        record_every=record_every,
        radius_coef=radius_coef,
        perturbed_prefix_weights=perturbed,
        out=out,
        theorem=theorem,
        c_v=c_v,
        c_L=c_L,
    )


def load_config(path: str, overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file, apply top-level overrides, validate."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if overrides:
        doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
