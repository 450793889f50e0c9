"""Direction selectors: Monte Carlo, the QSW family, and four BO-driven schemes.

All selectors produce a fixed-size set of unit directions through one
interface, ``select_for_step``, so a flow loop can swap them freely:

* ``mc`` draws a fresh uniform set every step.
* Deterministic QSW kinds build once and stay fixed.
* Randomized QSW kinds redraw their scramble or rotation every step.
* ``bosw`` grows a set by maximizing an acquisition over candidate pools,
  once, then keeps it. ``rbosw`` reruns that search from scratch on a fixed
  cadence. ``abosw`` starts from a strong QSW set and swaps in a few
  acquisition picks for its weakest members, once. ``arbosw`` repeats the
  seeded refinement on a cadence with a freshly rotated seed.

The BO schemes treat the per-direction slice cost as a black box to
maximize, so the surrogate concentrates directions where the projected
transport cost carries signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import gp
from .gp import AcquisitionKind, GpState
from .ot1d import check_cloud, wasserstein_1d
from .qsw import QswKind, RandomizeMode, make_qsw
from .sphere import sample_uniform


class InvalidStateError(RuntimeError):
    """A reuse step was requested without the previously selected set."""


@dataclass(frozen=True)
class SelectorConfig:
    """Knobs shared by every selector.

    ``init_size=None`` resolves to min(10, n_slices); ``refresh_period=None``
    resolves per selector (25 for rbosw, 100 for arbosw). ``anneal_gamma``
    switches batch proposals to the epsilon-decayed acquisition mixture.
    """

    n_slices: int = 100
    batch_size: int = 5
    rounds: int = 2
    pool_size: int = 4096
    ucb_beta: float = 0.7
    cos_cutoff: float = 0.98
    init_size: int | None = None
    refresh_period: int | None = None
    seed_kind: QswKind = QswKind.COULOMB_OPTIMIZED
    acquisition: AcquisitionKind = AcquisitionKind.UCB
    anneal_gamma: float | None = None

    def __post_init__(self):
        if self.n_slices < 1:
            raise ValueError(f"n_slices must be >= 1, got {self.n_slices}")
        if not 1 <= self.batch_size <= self.n_slices:
            raise ValueError(f"batch_size must be in [1, n_slices], got {self.batch_size}")
        if self.rounds < 0:
            raise ValueError(f"rounds must be >= 0, got {self.rounds}")
        if self.pool_size < self.batch_size:
            raise ValueError(f"pool_size must be >= batch_size, got {self.pool_size}")
        if not 0.0 < self.cos_cutoff < 1.0:
            raise ValueError(f"cos_cutoff must lie in (0, 1), got {self.cos_cutoff}")
        if self.ucb_beta < 0:
            raise ValueError(f"ucb_beta must be >= 0, got {self.ucb_beta}")
        if self.init_size is None:
            object.__setattr__(self, "init_size", min(10, self.n_slices))
        if not 1 <= self.init_size <= self.n_slices:
            raise ValueError(f"init_size must be in [1, n_slices], got {self.init_size}")
        if self.refresh_period is not None and self.refresh_period < 1:
            raise ValueError(f"refresh_period must be >= 1, got {self.refresh_period}")
        if self.anneal_gamma is not None and not 0.0 < self.anneal_gamma < 1.0:
            raise ValueError(f"anneal_gamma must lie in (0, 1), got {self.anneal_gamma}")


class SliceOracle:
    """Callable slice-cost oracle with an evaluation counter.

    Wraps f(theta) -> nonnegative slice cost; ``count`` increments exactly
    once per call, which is how the evaluation-budget contracts of the BO
    selectors are audited.
    """

    def __init__(self, fn: Callable[[np.ndarray], float], dim: int):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self._fn = fn
        self.dim = dim
        self.count = 0

    def __call__(self, theta: np.ndarray) -> float:
        self.count += 1
        val = float(self._fn(np.asarray(theta, dtype=np.float64)))
        if not np.isfinite(val):
            raise ValueError(f"slice oracle returned a non-finite value: {val}")
        return val

    @classmethod
    def for_clouds(cls, X: np.ndarray, Y: np.ndarray, p: float = 2.0) -> "SliceOracle":
        """Oracle evaluating the 1-D W_p^p cost of the two clouds' projections."""
        X = check_cloud(X, "X")
        Y = check_cloud(Y, "Y")
        if X.shape != Y.shape:
            raise ValueError(f"clouds must have identical shape, got {X.shape} vs {Y.shape}")
        return cls(lambda theta: wasserstein_1d(X @ theta, Y @ theta, p), X.shape[1])


def _passes_dedup(candidate: np.ndarray, kept: np.ndarray | None, cutoff: float) -> bool:
    if kept is None or kept.shape[0] == 0:
        return True
    return float(np.max(np.abs(kept @ candidate))) <= cutoff


def propose_batch(
    state: GpState,
    current: np.ndarray,
    cfg: SelectorConfig,
    rng: np.random.Generator,
    max_new: int | None = None,
    t: int = 1,
) -> np.ndarray:
    """Propose up to ``max_new`` new directions from a fresh uniform pool.

    Candidates are scored by the configured acquisition and taken greedily
    best-first, skipping any whose absolute cosine similarity to the current
    set or to an earlier pick exceeds the cutoff. With ``anneal_gamma`` set,
    each pick instead follows the epsilon_t = t^(-gamma) mixture: the
    acquisition argmax with probability epsilon_t, a uniform admissible
    candidate otherwise.

    May return fewer rows than requested (even zero) when deduplication
    exhausts the pool; callers decide how to proceed.
    """
    if max_new is None:
        max_new = cfg.batch_size
    if max_new < 0:
        raise ValueError(f"max_new must be >= 0, got {max_new}")
    current = np.atleast_2d(np.asarray(current, dtype=np.float64))
    d = current.shape[1] if current.size else state.train_dirs.shape[1]
    if max_new == 0:
        return np.empty((0, d))

    pool = sample_uniform(rng, d, cfg.pool_size)
    best = float(np.max(state.train_vals))
    picked: list[np.ndarray] = []

    if cfg.anneal_gamma is None:
        scores = gp.acquisition(state, pool, cfg.acquisition, best, rng=rng, beta=cfg.ucb_beta)
        order = np.argsort(-scores, kind="stable")
        cos_cur = np.max(np.abs(pool @ current.T), axis=1) if current.size else np.zeros(pool.shape[0])
        for idx in order:
            if len(picked) == max_new:
                break
            if cos_cur[idx] > cfg.cos_cutoff:
                continue
            if picked and not _passes_dedup(pool[idx], np.asarray(picked), cfg.cos_cutoff):
                continue
            picked.append(pool[idx])
    else:
        remaining = np.ones(pool.shape[0], dtype=bool)
        for _ in range(max_new):
            kept = np.vstack([current] + picked) if (current.size or picked) else None
            admissible = [
                i for i in np.flatnonzero(remaining) if _passes_dedup(pool[i], kept, cfg.cos_cutoff)
            ]
            if not admissible:
                break
            sub = pool[admissible]
            eps = float(t) ** (-cfg.anneal_gamma)
            if rng.random() < eps:
                scores = gp.acquisition(state, sub, cfg.acquisition, best, rng=rng, beta=cfg.ucb_beta)
                local = int(np.argmax(scores))
            else:
                local = int(rng.integers(len(admissible)))
            picked.append(sub[local])
            remaining[admissible[local]] = False

    return np.asarray(picked) if picked else np.empty((0, d))


def bosw(oracle: SliceOracle, cfg: SelectorConfig, rng: np.random.Generator) -> np.ndarray:
    """One-shot BO construction of an n_slices-direction set.

    A small uniform initialization is evaluated, then batches of acquisition
    picks are appended (the final batch truncated to the remaining budget),
    so the oracle is consulted exactly n_slices times. If deduplication ever
    starves a batch, the gap is filled with uniform draws to keep the budget
    exact.
    """
    d = oracle.dim
    n_init = min(cfg.init_size, cfg.n_slices)
    current = sample_uniform(rng, d, n_init)
    vals = [oracle(theta) for theta in current]

    round_idx = 0
    while current.shape[0] < cfg.n_slices:
        round_idx += 1
        state = gp.fit(current, np.asarray(vals))
        want = min(cfg.batch_size, cfg.n_slices - current.shape[0])
        batch = propose_batch(state, current, cfg, rng, max_new=want, t=round_idx)
        if batch.shape[0] < want:
            filler = sample_uniform(rng, d, want - batch.shape[0])
            batch = np.vstack([batch, filler]) if batch.size else filler
        vals.extend(oracle(theta) for theta in batch)
        current = np.vstack([current, batch])
    return current


def abosw(
    oracle: SliceOracle,
    seed: np.ndarray,
    cfg: SelectorConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Seeded refinement: evaluate a full QSW set, then swap in a few BO picks.

    The seed evaluations form the surrogate's initial data. Each of the
    ``rounds`` rounds proposes a batch, evaluates it, and pairs the k-th best
    proposal with the k-th worst incumbent, swapping only when the proposal
    scores strictly higher, so the set never degrades and at most
    batch_size * rounds positions differ from the seed. Oracle usage is
    exactly n_slices + batch_size * rounds when no round starves.
    """
    seed = np.atleast_2d(np.asarray(seed, dtype=np.float64))
    if seed.shape[0] != cfg.n_slices:
        raise ValueError(f"seed has {seed.shape[0]} directions but cfg.n_slices={cfg.n_slices}")
    current = seed.copy()
    cur_vals = np.asarray([oracle(theta) for theta in current])
    data_dirs = [current.copy()]
    data_vals = [cur_vals.copy()]

    for round_idx in range(1, cfg.rounds + 1):
        state = gp.fit(np.vstack(data_dirs), np.concatenate(data_vals))
        batch = propose_batch(state, current, cfg, rng, max_new=cfg.batch_size, t=round_idx)
        if batch.shape[0] == 0:
            continue
        batch_vals = np.asarray([oracle(theta) for theta in batch])
        data_dirs.append(batch)
        data_vals.append(batch_vals)
        best_first = np.argsort(-batch_vals, kind="stable")
        worst_first = np.argsort(cur_vals, kind="stable")
        for k in range(min(batch.shape[0], current.shape[0])):
            pi, wi = best_first[k], worst_first[k]
            if batch_vals[pi] > cur_vals[wi]:
                current[wi] = batch[pi]
                cur_vals[wi] = batch_vals[pi]
    return current


@dataclass(frozen=True)
class MethodSpec:
    """How a method name maps onto generation machinery."""

    family: str  # "mc" | "qsw" | "bo"
    qsw_kind: QswKind | None = None
    randomize: RandomizeMode = RandomizeMode.NONE
    per_step: bool = False  # regenerate at every outer step


METHODS: dict[str, MethodSpec] = {
    "mc": MethodSpec("mc", per_step=True),
    "eqsw": MethodSpec("qsw", QswKind.EQUAL_AREA_SOBOL),
    "gqsw": MethodSpec("qsw", QswKind.GAUSSIAN_SOBOL),
    "sqsw": MethodSpec("qsw", QswKind.SPIRAL),
    "dqsw": MethodSpec("qsw", QswKind.DISTANCE_OPTIMIZED),
    "cqsw": MethodSpec("qsw", QswKind.COULOMB_OPTIMIZED),
    "reqsw": MethodSpec("qsw", QswKind.EQUAL_AREA_SOBOL, RandomizeMode.SCRAMBLE, per_step=True),
    "rgqsw": MethodSpec("qsw", QswKind.GAUSSIAN_SOBOL, RandomizeMode.SCRAMBLE, per_step=True),
    "rreqsw": MethodSpec("qsw", QswKind.EQUAL_AREA_SOBOL, RandomizeMode.ROTATE, per_step=True),
    "rrgqsw": MethodSpec("qsw", QswKind.GAUSSIAN_SOBOL, RandomizeMode.ROTATE, per_step=True),
    "rsqsw": MethodSpec("qsw", QswKind.SPIRAL, RandomizeMode.ROTATE, per_step=True),
    "rdqsw": MethodSpec("qsw", QswKind.DISTANCE_OPTIMIZED, RandomizeMode.ROTATE, per_step=True),
    "rcqsw": MethodSpec("qsw", QswKind.COULOMB_OPTIMIZED, RandomizeMode.ROTATE, per_step=True),
    "bosw": MethodSpec("bo"),
    "rbosw": MethodSpec("bo"),
    "abosw": MethodSpec("bo"),
    "arbosw": MethodSpec("bo"),
}

_DEFAULT_REFRESH = {"rbosw": 25, "arbosw": 100}


def method_names() -> list[str]:
    return list(METHODS)


def _refresh_due(method: str, t: int, cfg: SelectorConfig) -> bool:
    period = cfg.refresh_period or _DEFAULT_REFRESH[method]
    return t % period == 0


def select_for_step(
    method: str,
    t: int,
    prev: np.ndarray | None,
    oracle: SliceOracle,
    cfg: SelectorConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Produce the direction set for outer step ``t`` under any method.

    Reuse semantics: methods that build once (bosw, abosw, deterministic
    QSW) return ``prev`` unchanged after step 0; refresh methods (rbosw,
    arbosw) rebuild whenever t is a multiple of their period; per-step
    methods (mc, randomized QSW) regenerate every call. BO reuse paths
    require ``prev`` and raise ``InvalidStateError`` without it.
    """
    if t < 0:
        raise ValueError(f"step index must be >= 0, got {t}")
    try:
        spec = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; known: {', '.join(METHODS)}") from None
    d = oracle.dim

    if spec.family == "mc":
        return sample_uniform(rng, d, cfg.n_slices)

    if spec.family == "qsw":
        if spec.per_step:
            return make_qsw(spec.qsw_kind, cfg.n_slices, spec.randomize, rng, d=d)
        if t == 0 or prev is None:
            return make_qsw(spec.qsw_kind, cfg.n_slices, RandomizeMode.NONE, d=d)
        return prev

    if method == "bosw":
        if t == 0:
            return bosw(oracle, cfg, rng)
        return _require_prev(method, t, prev)
    if method == "rbosw":
        if _refresh_due(method, t, cfg):
            return bosw(oracle, cfg, rng)
        return _require_prev(method, t, prev)
    if method == "abosw":
        if t == 0:
            seed = make_qsw(cfg.seed_kind, cfg.n_slices, RandomizeMode.NONE, d=d)
            return abosw(oracle, seed, cfg, rng)
        return _require_prev(method, t, prev)
    if method == "arbosw":
        if _refresh_due(method, t, cfg):
            # Rotated re-seed: repeated refinements of one frozen seed would
            # pin ~90% of the set forever and the flow would inherit that
            # fixed set's bias floor.
            seed = make_qsw(cfg.seed_kind, cfg.n_slices, RandomizeMode.ROTATE, rng, d=d)
            return abosw(oracle, seed, cfg, rng)
        return _require_prev(method, t, prev)
    raise ValueError(f"unhandled method {method!r}")


def _require_prev(method: str, t: int, prev: np.ndarray | None) -> np.ndarray:
    if prev is None:
        raise InvalidStateError(f"{method} at step {t} needs the previously selected set")
    return prev


def config_for_budget(cfg: SelectorConfig, budget: int) -> SelectorConfig:
    """Clone a config with the slice budget replaced and init size clamped."""
    return replace(
        cfg,
        n_slices=budget,
        batch_size=min(cfg.batch_size, budget),
        init_size=min(cfg.init_size, budget),
    )
