"""Gaussian-process surrogate on the sphere and acquisition rules.

The kernel is a Gaussian of the geodesic distance with unit prior variance;
targets are de-meaned instead of fitting a signal variance, and the only
learned hyperparameter is the median-heuristic lengthscale. The surrogate is
refit from scratch whenever data changes (cubic in the number of
observations, which stays in the low hundreds here).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import log_ndtr, ndtr

from .sphere import pairwise_geodesic

LENGTHSCALE_FALLBACK = math.pi / 4
# The geodesic Gaussian is not positive semidefinite on the sphere: at
# median-heuristic lengthscales its smallest eigenvalue can reach about
# -(n/300) for n near-uniform directions. The ladder therefore continues
# past the 1e-2 rung that covers mere duplicates, far enough (unit kernel
# diagonal, |K| <= n) that factorization always succeeds in practice.
JITTER_LADDER = tuple(10.0**e for e in range(-8, 4))  # 1e-8 .. 1e3
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class AcquisitionKind(enum.Enum):
    UCB = "ucb"
    EI = "ei"
    LOG_EI = "logei"
    THOMPSON = "thompson"


@dataclass(frozen=True)
class GpState:
    """Fitted surrogate: training pairs plus the factorized kernel system.

    ``chol`` is the lower Cholesky factor of K + jitter*I and ``alpha`` the
    solved weights for the de-meaned targets, so posterior queries are two
    triangular solves.
    """

    train_dirs: np.ndarray
    train_vals: np.ndarray
    mean_offset: float
    lengthscale: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray


def angular_rbf(a: np.ndarray, b: np.ndarray, lengthscale: float) -> float:
    """Gaussian kernel of the geodesic distance: exp(-(d_S/l)^2 / 2)."""
    if lengthscale <= 0:
        raise ValueError(f"lengthscale must be > 0, got {lengthscale}")
    d = pairwise_geodesic(a, b)[0, 0]
    return float(np.exp(-0.5 * (d / lengthscale) ** 2))


def kernel_matrix(a: np.ndarray, b: np.ndarray, lengthscale: float) -> np.ndarray:
    """Angular RBF kernel matrix between two direction sets."""
    if lengthscale <= 0:
        raise ValueError(f"lengthscale must be > 0, got {lengthscale}")
    d = pairwise_geodesic(a, b)
    return np.exp(-0.5 * (d / lengthscale) ** 2)


def median_lengthscale(dirs: np.ndarray) -> float:
    """Median of pairwise geodesic distances, in radians.

    Falls back to pi/4 when the set collapses to near-duplicates (median
    below 1e-6), which would otherwise produce a useless zero lengthscale.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    n = dirs.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least 2 directions")
    dist = pairwise_geodesic(dirs)
    med = float(np.median(dist[np.triu_indices(n, k=1)]))
    return med if med >= 1e-6 else LENGTHSCALE_FALLBACK


def fit(dirs: np.ndarray, vals: np.ndarray) -> GpState:
    """Fit the zero-mean surrogate to observed (direction, value) pairs.

    The kernel matrix is factorized with an escalating jitter ladder
    (1e-8 up to 1e-2, ten-fold steps); near-duplicate directions routinely
    need a rung or two.

    Raises
    ------
    numpy.linalg.LinAlgError
        If factorization still fails at the top of the ladder.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    vals = np.asarray(vals, dtype=np.float64).ravel()
    if dirs.shape[0] != vals.shape[0] or vals.shape[0] < 1:
        raise ValueError(f"need equally many directions and values, got {dirs.shape[0]} and {vals.shape[0]}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("training values contain NaN or Inf")

    offset = float(np.mean(vals))
    centered = vals - offset
    lengthscale = median_lengthscale(dirs) if dirs.shape[0] >= 2 else LENGTHSCALE_FALLBACK
    K = kernel_matrix(dirs, dirs, lengthscale)

    chol = None
    jitter = JITTER_LADDER[0]
    for jitter in JITTER_LADDER:
        try:
            chol = np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
            break
        except np.linalg.LinAlgError:
            continue
    if chol is None:
        raise np.linalg.LinAlgError(
            f"kernel matrix not factorizable even at jitter {JITTER_LADDER[-1]:g}"
        )
    alpha = cho_solve((chol, True), centered)
    return GpState(
        train_dirs=dirs,
        train_vals=vals,
        mean_offset=offset,
        lengthscale=lengthscale,
        jitter=jitter,
        chol=chol,
        alpha=alpha,
    )


def posterior(state: GpState, query: np.ndarray):
    """Predictive mean and standard deviation at one or many directions.

    Unit prior variance; the variance is clamped at zero from below. A
    (d,) query returns two floats, an (m, d) query two (m,) arrays.
    """
    query = np.asarray(query, dtype=np.float64)
    single = query.ndim == 1
    q = np.atleast_2d(query)
    if q.shape[1] != state.train_dirs.shape[1]:
        raise ValueError(f"query d={q.shape[1]} does not match training d={state.train_dirs.shape[1]}")
    k_star = kernel_matrix(state.train_dirs, q, state.lengthscale)  # (n_t, m)
    mean = state.mean_offset + k_star.T @ state.alpha
    v = solve_triangular(state.chol, k_star, lower=True)
    var = np.maximum(0.0, 1.0 - np.sum(v * v, axis=0))
    std = np.sqrt(var)
    if single:
        return float(mean[0]), float(std[0])
    return mean, std


def _log_h(z: np.ndarray) -> np.ndarray:
    """log(z*Phi(z) + phi(z)), stable for very negative z."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    easy = z > -1.0
    out[easy] = np.log(z[easy] * ndtr(z[easy]) + _phi(z[easy]))
    hard = ~easy
    if np.any(hard):
        zh = z[hard]
        log_phi = -0.5 * zh * zh - _LOG_SQRT_2PI
        # t = z*Phi(z)/phi(z) lies in (-1, 0); computed via log Phi to avoid underflow
        t = zh * np.exp(log_ndtr(zh) - log_phi)
        out[hard] = log_phi + np.log1p(t)
    return out


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def acquisition(
    state: GpState,
    query: np.ndarray,
    kind: AcquisitionKind,
    best_so_far: float,
    rng: np.random.Generator | None = None,
    beta: float = 0.7,
) -> np.ndarray | float:
    """Score directions for selection (maximization orientation).

    UCB is mean + beta*std; EI the usual closed form against the incumbent;
    LOG_EI its numerically stable logarithm (same argmax wherever EI is
    positive); THOMPSON one independent posterior sample per query point,
    drawn from ``rng``.
    """
    if kind is AcquisitionKind.UCB and beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    query = np.asarray(query, dtype=np.float64)
    single = query.ndim == 1
    mean, std = posterior(state, np.atleast_2d(query))

    if kind is AcquisitionKind.UCB:
        score = mean + beta * std
    elif kind is AcquisitionKind.THOMPSON:
        if rng is None:
            raise ValueError("Thompson sampling needs an rng")
        score = mean + std * rng.standard_normal(mean.shape)
    else:
        imp = mean - best_so_far
        tiny = std < 1e-12
        z = np.where(tiny, 0.0, imp / np.where(tiny, 1.0, std))
        if kind is AcquisitionKind.EI:
            score = np.where(tiny, np.maximum(imp, 0.0), imp * ndtr(z) + std * _phi(z))
        elif kind is AcquisitionKind.LOG_EI:
            with np.errstate(divide="ignore"):
                score = np.where(
                    tiny,
                    np.where(imp > 0, np.log(np.maximum(imp, 1e-300)), -np.inf),
                    np.log(np.where(tiny, 1.0, std)) + _log_h(z),
                )
        else:
            raise ValueError(f"unknown acquisition kind {kind!r}")
    return float(score[0]) if single else score


def annealed_select(
    state: GpState,
    pool: np.ndarray,
    t: int,
    gamma: float,
    kind: AcquisitionKind,
    rng: np.random.Generator,
    best_so_far: float = 0.0,
    beta: float = 0.7,
) -> np.ndarray:
    """Acquisition argmax with probability t^(-gamma), else a uniform pool draw.

    The exploration probability decays toward uniform coverage as the step
    index ``t`` grows; t=1 always takes the argmax. One branch draw plus at
    most one index draw are consumed from ``rng``, in that order.
    """
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise ValueError("candidate pool is empty")
    if t < 1:
        raise ValueError(f"step index must be >= 1, got {t}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    eps = float(t) ** (-gamma)
    if rng.random() < eps:
        scores = acquisition(state, pool, kind, best_so_far, rng=rng, beta=beta)
        return pool[int(np.argmax(scores))]
    return pool[int(rng.integers(pool.shape[0]))]
