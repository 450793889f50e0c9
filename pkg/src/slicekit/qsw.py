"""Quasi-Monte Carlo direction sets and their randomized counterparts.

Five constructions: equal-area and Gaussianized Sobol points, generalized
spiral points, and spiral sets polished by distance or Coulomb energy
descent. Sobol points come from scipy's generator, which uses the Joe-Kuo
direction-number table (the d=21201 set of Joe & Kuo, 2008); that table
identity pins the expected values in the test suite.

Randomization either rescrambles the Sobol net (Sobol-based kinds only) or
applies one shared random rotation to the whole set, which preserves all
pairwise geodesic distances.
"""

from __future__ import annotations

import enum
import functools
import warnings

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .sphere import random_rotation, sample_uniform

SOBOL_BITS = 30
SOBOL_MAX_DIM = 21
_CENTER_EPS = 1e-12


class QswKind(enum.Enum):
    """Direction-set construction. Only GAUSSIAN_SOBOL generalizes past d=3."""

    EQUAL_AREA_SOBOL = "eqsw"
    GAUSSIAN_SOBOL = "gqsw"
    SPIRAL = "sqsw"
    DISTANCE_OPTIMIZED = "dqsw"
    COULOMB_OPTIMIZED = "cqsw"


class RandomizeMode(enum.Enum):
    NONE = "none"
    SCRAMBLE = "scramble"
    ROTATE = "rotate"


SOBOL_KINDS = (QswKind.EQUAL_AREA_SOBOL, QswKind.GAUSSIAN_SOBOL)


def sobol(n: int, dim: int, scramble_seed: int | None = None, method: str = "owen") -> np.ndarray:
    """First ``n`` points of a Sobol sequence in [0, 1)^dim.

    Unscrambled (``scramble_seed=None``) the sequence starts at the origin
    and is bit-stable. With a seed, ``method`` picks the randomization:
    "owen" uses scipy's linear-matrix scramble with digital shift (the
    default), "xor" applies a plain digital XOR shift to the base net.
    """
    if not (2 <= dim <= SOBOL_MAX_DIM):
        raise ValueError(f"dim must be in [2, {SOBOL_MAX_DIM}], got {dim}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if method not in ("owen", "xor"):
        raise ValueError(f"method must be 'owen' or 'xor', got {method!r}")
    with warnings.catch_warnings():
        # scipy warns when n is not a power of two; we take plain prefixes.
        warnings.simplefilter("ignore", UserWarning)
        if scramble_seed is not None and method == "owen":
            return qmc.Sobol(d=dim, scramble=True, bits=SOBOL_BITS, seed=int(scramble_seed)).random(n)
        pts = qmc.Sobol(d=dim, scramble=False, bits=SOBOL_BITS).random(n)
    if scramble_seed is None:
        return pts
    # XOR digital shift: exact on the k / 2^bits lattice the base net lives on.
    ints = np.round(pts * float(1 << SOBOL_BITS)).astype(np.int64)
    mask = np.random.default_rng(int(scramble_seed)).integers(0, 1 << SOBOL_BITS, size=dim)
    return (ints ^ mask) / float(1 << SOBOL_BITS)


def equal_area_map(u: np.ndarray) -> np.ndarray:
    """Lambert cylindrical equal-area map from [0, 1)^2 to the 2-sphere.

    z = 2*u2 - 1 and longitude 2*pi*u1; area elements are preserved, so
    uniform squares push forward to uniform sphere samples.
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if u.shape[1] != 2:
        raise ValueError(f"expected (n, 2) input, got shape {u.shape}")
    phi = 2.0 * np.pi * u[:, 0]
    z = 2.0 * u[:, 1] - 1.0
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def gaussian_map(u: np.ndarray) -> np.ndarray:
    """Inverse-normal-CDF map from (0, 1)^d to the (d-1)-sphere.

    Coordinates are clamped to [eps, 1-eps] before inversion. The exact
    center point (0.5, ..., 0.5) inverts to the zero vector; its first
    coordinate is nudged by eps so the output is still a unit vector.
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    if u.shape[1] < 2:
        raise ValueError(f"need d >= 2 columns, got shape {u.shape}")
    g = ndtri(np.clip(u, _CENTER_EPS, 1.0 - _CENTER_EPS))
    norms = np.linalg.norm(g, axis=1)
    center = norms == 0.0
    if np.any(center):
        g[center, 0] = ndtri(0.5 + _CENTER_EPS)
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def spiral(n: int) -> np.ndarray:
    """Generalized spiral points on the 2-sphere.

    Heights z_l = 1 - (2l - 1)/n descend uniformly; longitudes advance by
    the golden angle pi*(3 - sqrt(5)) per point.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ell = np.arange(1, n + 1, dtype=np.float64)
    z = 1.0 - (2.0 * ell - 1.0) / n
    phi = ell * np.pi * (3.0 - np.sqrt(5.0))
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _energy_and_grad(points: np.ndarray, kind: str, block: int = 2048):
    """Pairwise energy and its Euclidean gradient, accumulated in row blocks.

    Uses ||a - b||^2 = 2 - 2<a, b> for unit rows, so only Gram blocks are
    materialized (bounded memory for large sets). Both energies share the
    gradient form grad_i = -sum_j w_ij (p_i - p_j) with w = 1/r^3 (coulomb)
    or w = 1/r (distance).
    """
    n = points.shape[0]
    energy = 0.0
    grad = np.zeros_like(points)
    for start in range(0, n, block):
        stop = min(start + block, n)
        local = np.arange(stop - start)
        cols = np.arange(start, stop)
        sq = points[start:stop] @ points.T
        sq *= -2.0
        sq += 2.0
        np.maximum(sq, 1e-300, out=sq)
        r = np.sqrt(sq)
        if kind == "coulomb":
            w = 1.0 / r  # reused below as 1/r^3
            w[local, cols] = 0.0
            energy += 0.5 * float(w.sum())
            w /= sq
        else:
            r[local, cols] = 0.0
            energy -= 0.5 * float(r.sum())
            with np.errstate(divide="ignore"):
                w = 1.0 / r
            w[local, cols] = 0.0
        grad[start:stop] = (w @ points) - w.sum(axis=1)[:, None] * points[start:stop]
    return energy, grad


def pairwise_energy(points: np.ndarray, kind: str) -> float:
    """Total pairwise energy: sum of 1/r (coulomb) or of -r (distance) over pairs."""
    if kind not in ("coulomb", "distance"):
        raise ValueError(f"kind must be 'coulomb' or 'distance', got {kind!r}")
    return _energy_and_grad(np.asarray(points, dtype=np.float64), kind)[0]


def optimize_energy(
    init: np.ndarray,
    kind: str,
    iters: int = 1000,
    step: float = 0.01,
) -> np.ndarray:
    """Projected gradient descent on pairwise energy over the 2-sphere.

    Each iteration takes an Euclidean descent step, renormalizes every row,
    and halves the step (for that iteration) until the energy does not
    increase, so the accepted energy sequence is monotone non-increasing.
    Coincident rows in ``init`` would blow up the energy; they are split by
    a deterministic 1e-8 perturbation first.

    Parameters
    ----------
    init : ndarray, shape (n, 3)
        Starting unit vectors.
    kind : {"coulomb", "distance"}
        Energy to descend: sum 1/r or sum -r over pairs.
    iters : int
        Maximum accepted steps; 0 returns ``init`` unchanged.
    step : float
        Initial step length for each iteration's backtracking.
    """
    if kind not in ("coulomb", "distance"):
        raise ValueError(f"kind must be 'coulomb' or 'distance', got {kind!r}")
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters}")
    points = np.asarray(init, dtype=np.float64).copy()
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"energy designs are built on the 2-sphere, got shape {points.shape}")
    if iters == 0:
        return points

    gram = points @ points.T
    np.fill_diagonal(gram, -1.0)
    dup_rows = np.unique(np.argwhere(gram >= 1.0 - 1e-15).ravel())
    if dup_rows.size:
        jitter_rng = np.random.default_rng(0)
        points[dup_rows] += 1e-8 * jitter_rng.standard_normal((dup_rows.size, 3))
        points /= np.linalg.norm(points, axis=1, keepdims=True)

    energy, grad = _energy_and_grad(points, kind)
    trial = step  # persists across iterations: halved on rejection, regrown on success
    for _ in range(iters):
        accepted = False
        for _ in range(40):
            cand = points - trial * grad
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            cand_energy, cand_grad = _energy_and_grad(cand, kind)
            if cand_energy <= energy:
                points, energy, grad = cand, cand_energy, cand_grad
                accepted = True
                trial = min(trial * 1.3, step)
                break
            trial *= 0.5
        if not accepted:
            break
    return points


@functools.lru_cache(maxsize=32)
def _base_set_cached(kind: QswKind, L: int, d: int) -> np.ndarray:
    out = _build_base_set(kind, L, d)
    out.setflags(write=False)
    return out


def _build_base_set(kind: QswKind, L: int, d: int) -> np.ndarray:
    if kind is QswKind.EQUAL_AREA_SOBOL:
        return equal_area_map(sobol(L, 2))
    if kind is QswKind.GAUSSIAN_SOBOL:
        return gaussian_map(sobol(L, d))
    if kind is QswKind.SPIRAL:
        return spiral(L)
    if kind is QswKind.DISTANCE_OPTIMIZED:
        return optimize_energy(spiral(L), "distance")
    if kind is QswKind.COULOMB_OPTIMIZED:
        return optimize_energy(spiral(L), "coulomb")
    raise ValueError(f"unknown kind {kind!r}")


def make_qsw(
    kind: QswKind,
    L: int,
    randomize: RandomizeMode = RandomizeMode.NONE,
    rng: np.random.Generator | None = None,
    d: int = 3,
) -> np.ndarray:
    """Build a QSW direction set, optionally randomized.

    ``RandomizeMode.NONE`` is deterministic (and cached); SCRAMBLE redraws
    the Sobol scramble seed from ``rng`` and is only defined for Sobol-based
    kinds; ROTATE applies one shared Haar rotation to the whole base set.

    ``d`` is only honored by GAUSSIAN_SOBOL; every other construction lives
    on the 2-sphere and requires d=3.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    if kind is not QswKind.GAUSSIAN_SOBOL and d != 3:
        raise ValueError(f"{kind.value} requires d=3, got d={d}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")

    if randomize is RandomizeMode.NONE:
        return _base_set_cached(kind, L, d)
    if rng is None:
        raise ValueError(f"randomize mode {randomize.value!r} needs an rng")
    if randomize is RandomizeMode.SCRAMBLE:
        if kind not in SOBOL_KINDS:
            raise ValueError(f"scramble randomization applies only to Sobol kinds, not {kind.value}")
        seed = int(rng.integers(0, 2**63 - 1))
        if kind is QswKind.EQUAL_AREA_SOBOL:
            return equal_area_map(sobol(L, 2, scramble_seed=seed))
        return gaussian_map(sobol(L, d, scramble_seed=seed))
    if randomize is RandomizeMode.ROTATE:
        base = _base_set_cached(kind, L, d)
        return base @ random_rotation(rng, d).T
    raise ValueError(f"unknown randomize mode {randomize!r}")


def best_min_separation_mc(rng: np.random.Generator, n: int, n_sets: int = 20) -> float:
    """Best (largest) minimum pairwise geodesic distance among seeded MC sets.

    A packing-quality yardstick for the structured constructions.
    """
    from .sphere import pairwise_geodesic

    best = 0.0
    for _ in range(n_sets):
        dirs = sample_uniform(rng, 3, n)
        dist = pairwise_geodesic(dirs)
        np.fill_diagonal(dist, np.inf)
        best = max(best, float(dist.min()))
    return best
