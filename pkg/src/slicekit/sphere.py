"""Unit-sphere geometry: sampling, geodesic distances, and random rotations.

Directions are plain numpy arrays: a single direction is a shape ``(d,)``
unit vector, a direction set is a shape ``(L, d)`` array whose rows are unit
vectors. Row order is meaningful (selectors replace directions by index), so
nothing here reorders a set.

All randomness flows through an explicit ``numpy.random.Generator``; there is
no module-level RNG state.
"""

from __future__ import annotations

import numpy as np

UNIT_NORM_TOL = 1e-9


def as_direction_set(dirs: np.ndarray) -> np.ndarray:
    """Validate and return an (L, d) array of unit-norm rows.

    Accepts a single (d,) vector and promotes it to shape (1, d).

    Raises
    ------
    ValueError
        If the array is empty, d < 2, or any row is not unit norm
        within ``UNIT_NORM_TOL``.
    """
    dirs = np.asarray(dirs, dtype=np.float64)
    if dirs.ndim == 1:
        dirs = dirs[None, :]
    if dirs.ndim != 2 or dirs.shape[0] == 0:
        raise ValueError(f"expected a nonempty (L, d) array, got shape {dirs.shape}")
    if dirs.shape[1] < 2:
        raise ValueError(f"directions need d >= 2, got d={dirs.shape[1]}")
    norms = np.linalg.norm(dirs, axis=1)
    if not np.all(np.abs(norms - 1.0) <= UNIT_NORM_TOL):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise ValueError(f"rows must be unit norm within {UNIT_NORM_TOL}, worst deviation {worst:.3e}")
    return dirs


def sample_uniform(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. uniform directions on the (d-1)-sphere.

    Standard-normal vectors normalized to unit length; dimension-agnostic
    and deterministic given the generator state.

    Parameters
    ----------
    rng : numpy.random.Generator
        Seeded generator, owned by the caller.
    d : int
        Ambient dimension, at least 2.
    n : int
        Number of directions, at least 1.

    Returns
    -------
    ndarray, shape (n, d)
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # A zero Gaussian vector has probability zero; resample defensively.
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms


def geodesic_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Arc length between two unit vectors, in [0, pi].

    The inner product is clamped to [-1, 1] before arccos; near-duplicate
    directions produced by the selectors can push it past 1 by roundoff.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def pairwise_geodesic(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Geodesic distance matrix between rows of ``a`` and rows of ``b``.

    With ``b`` omitted, returns the (L, L) self-distance matrix.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = a if b is None else np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return np.arccos(np.clip(a @ b.T, -1.0, 1.0))


def random_rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-distributed rotation matrix with determinant +1.

    QR orthonormalization of a Gaussian matrix, with the R-diagonal sign
    fix that makes the factorization unique (hence Haar on O(d)), then a
    column flip onto the det=+1 component.

    Returns
    -------
    ndarray, shape (d, d)
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
