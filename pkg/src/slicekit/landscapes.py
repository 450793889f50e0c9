"""Synthetic fitness landscapes on the 2-sphere and the budgeted search bench.

Three deterministic landscape families: "peaks" (a weighted sum of von
Mises-Fisher bumps with one dominant mode), "ridge" (an increasing function
of alignment with a fixed axis), and "quadratic" (squared alignment with a
target direction). Their exact constants live in a versioned JSON artifact
shipped with the package, so every reported number is pinned to that file.

The benchmark hands each method a direction-evaluation budget and reports
the best fitness it found; BO methods spend the budget through the counting
oracle, sampling methods spend it by evaluating their generated set.
"""

from __future__ import annotations

import functools
import importlib.resources
import json
from dataclasses import dataclass

import numpy as np

from .selectors import METHODS, SelectorConfig, SliceOracle, bosw, config_for_budget
from .sphere import sample_uniform

LANDSCAPE_KINDS = ("peaks", "ridge", "quadratic")
#: Methods the benchmark admits: these spend exactly the stated budget.
BENCH_METHODS_EXCLUDED = ("rbosw", "abosw", "arbosw")


@dataclass(frozen=True)
class Landscape:
    """A named fitness function over unit vectors in R^3."""

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in LANDSCAPE_KINDS:
            raise ValueError(f"kind must be one of {LANDSCAPE_KINDS}, got {self.kind!r}")


@functools.lru_cache(maxsize=1)
def _frozen_params() -> dict:
    text = importlib.resources.files("slicekit").joinpath("data/landscapes.json").read_text()
    return json.loads(text)


def landscape_config_version() -> int:
    return int(_frozen_params()["version"])


def standard_landscapes() -> dict[str, Landscape]:
    """The three landscapes with their frozen packaged constants."""
    params = _frozen_params()
    return {kind: Landscape(kind, params[kind]) for kind in LANDSCAPE_KINDS}


def evaluate(landscape: Landscape, theta: np.ndarray) -> float:
    """Fitness of one direction (deterministic, nonnegative, smooth)."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (3,):
        raise ValueError(f"landscapes are defined on the 2-sphere, got shape {theta.shape}")
    p = landscape.params
    if landscape.kind == "peaks":
        centers = np.asarray(p["centers"], dtype=np.float64)
        weights = np.asarray(p["weights"], dtype=np.float64)
        kappas = np.asarray(p["concentrations"], dtype=np.float64)
        return float(np.sum(weights * np.exp(kappas * (centers @ theta - 1.0))))
    if landscape.kind == "ridge":
        axis = np.asarray(p["axis"], dtype=np.float64)
        return float(p["amplitude"] * np.exp(p["rate"] * (axis @ theta - 1.0)))
    target = np.asarray(p["target"], dtype=np.float64)
    return float(p["scale"] * (target @ theta) ** 2)


def budgeted_search(
    method: str,
    landscape: Landscape,
    budget: int,
    rng: np.random.Generator,
    cfg: SelectorConfig | None = None,
) -> float:
    """Best fitness found by a method under an exact evaluation budget.

    Sampling methods (mc and the QSW/RQSW family) generate ``budget``
    directions and evaluate each once; ``bosw`` runs its one-shot search,
    whose oracle contract spends exactly ``budget`` evaluations. The seeded
    or refreshing selectors are not admitted since they cannot honor an
    exact budget.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if method in BENCH_METHODS_EXCLUDED:
        raise ValueError(f"{method} does not fit an exact evaluation budget; use bosw or a sampling method")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")

    values: list[float] = []

    def tracked(theta: np.ndarray) -> float:
        val = evaluate(landscape, theta)
        values.append(val)
        return val

    oracle = SliceOracle(tracked, dim=3)
    if method == "bosw":
        base = cfg if cfg is not None else SelectorConfig()
        bosw(oracle, config_for_budget(base, budget), rng)
    else:
        spec = METHODS[method]
        if spec.family == "mc":
            dirs = sample_uniform(rng, 3, budget)
        else:
            from .qsw import make_qsw

            dirs = make_qsw(spec.qsw_kind, budget, spec.randomize, rng, d=3)
        for theta in dirs:
            oracle(theta)

    if oracle.count != budget:
        raise RuntimeError(f"{method} consumed {oracle.count} evaluations for a budget of {budget}")
    return max(values)
