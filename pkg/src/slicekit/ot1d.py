"""Exact 1-D Wasserstein costs, the finite-slice SW estimator, and its gradient.

Point clouds are (n, d) arrays with implicit uniform weights 1/n. In one
dimension with equal weights, optimal transport matches sorted values
(monotone rearrangement), so each slice costs two sorts and a linear sum.

The estimator averages per-slice costs in slice-index order, which keeps the
result bit-stable regardless of how slice work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateGradientError(RuntimeError):
    """Gradient of the root-SW objective requested at (or too near) zero distance."""


# Root-SW below this counts as degenerate for gradient purposes.
SW_ROOT_EPS = 1e-12


@dataclass(frozen=True)
class SwValue:
    """Finite-slice estimate of SW_p^p: the mean over slices of 1-D W_p^p costs."""

    value: float
    p: float
    n_slices: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"SW estimate must be nonnegative, got {self.value}")


def check_cloud(points: np.ndarray, name: str = "cloud") -> np.ndarray:
    """Validate an (n, d) point cloud: 2-D, nonempty, all entries finite."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty (n, d) array, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise ValueError(f"{name} contains NaN or Inf")
    return points


def project(cloud: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Scalar projections of every cloud point onto a direction.

    Returns the length-n vector of inner products (the 1-D pushforward of
    the empirical measure).
    """
    cloud = np.asarray(cloud, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if cloud.ndim != 2 or theta.ndim != 1 or cloud.shape[1] != theta.shape[0]:
        raise ValueError(f"dimension mismatch: cloud {cloud.shape} vs direction {theta.shape}")
    return cloud @ theta


def wasserstein_1d(xs: np.ndarray, ys: np.ndarray, p: float = 2.0) -> float:
    """Exact p-Wasserstein cost (to the p-th power) between two 1-D samples.

    Equal sample sizes and uniform weights, so the optimal plan pairs
    order statistics: (1/n) * sum |x_(i) - y_(i)|^p. Inputs are not mutated.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    if xs.shape[0] < 1:
        raise ValueError("samples must be nonempty")
    if p < 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    diffs = np.abs(np.sort(xs) - np.sort(ys))
    if p == 1.0:
        return float(np.mean(diffs))
    if p == 2.0:
        return float(np.mean(diffs * diffs))
    return float(np.mean(diffs**p))


def slice_costs(mu: np.ndarray, nu: np.ndarray, thetas: np.ndarray, p: float = 2.0) -> np.ndarray:
    """Per-slice 1-D W_p^p costs for every direction in a set.

    Returns a length-L vector; ``sw_estimate`` is its mean. Vectorized over
    slices: one (n, L) projection matrix per cloud, sorted column-wise.
    """
    mu = check_cloud(mu, "mu")
    nu = check_cloud(nu, "nu")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if mu.shape[1] != nu.shape[1] or mu.shape[1] != thetas.shape[1]:
        raise ValueError(
            f"dimension mismatch: mu d={mu.shape[1]}, nu d={nu.shape[1]}, directions d={thetas.shape[1]}"
        )
    if mu.shape[0] != nu.shape[0]:
        raise ValueError(
            f"clouds must have equal sizes (uniform-weight sorted matching), got {mu.shape[0]} vs {nu.shape[0]}"
        )
    if p < 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    xp = np.sort(mu @ thetas.T, axis=0)
    yp = np.sort(nu @ thetas.T, axis=0)
    diffs = np.abs(xp - yp)
    if p == 2.0:
        return np.mean(diffs * diffs, axis=0)
    if p == 1.0:
        return np.mean(diffs, axis=0)
    return np.mean(diffs**p, axis=0)


def sw_estimate(mu: np.ndarray, nu: np.ndarray, thetas: np.ndarray, p: float = 2.0) -> SwValue:
    """Finite-slice sliced-Wasserstein estimate: mean of per-slice W_p^p costs.

    The reduction over slices is a single fixed-order mean, so repeated runs
    agree bitwise for the same inputs.
    """
    costs = slice_costs(mu, nu, thetas, p)
    return SwValue(value=float(np.mean(costs)), p=float(p), n_slices=costs.shape[0])


def sw_gradient(
    Z: np.ndarray,
    Y: np.ndarray,
    thetas: np.ndarray,
    mode: str = "sw2",
) -> np.ndarray:
    """Gradient of the p=2 slice objective with respect to the rows of Z.

    For ``mode="sw2-squared"`` the objective is the squared estimate and the
    gradient row for point i is (2/(n L)) * sum_l (theta_l^T z_i - y_match) theta_l,
    where y_match is the Y order statistic holding the same rank as z_i on
    slice l. Sorting is stable, so ties match by original index.

    For ``mode="sw2"`` the objective is the root of the squared estimate and
    the chain rule divides by twice the root; at (near) zero distance that is
    undefined and ``DegenerateGradientError`` is raised so callers can stop
    a flow cleanly.

    Returns
    -------
    ndarray, shape (n, d)
    """
    if mode not in ("sw2", "sw2-squared"):
        raise ValueError(f"mode must be 'sw2' or 'sw2-squared', got {mode!r}")
    Z = check_cloud(Z, "Z")
    Y = check_cloud(Y, "Y")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if Z.shape != Y.shape:
        raise ValueError(f"clouds must have identical shape, got {Z.shape} vs {Y.shape}")
    if Z.shape[1] != thetas.shape[1]:
        raise ValueError(f"dimension mismatch: cloud d={Z.shape[1]} vs directions d={thetas.shape[1]}")
    n, _ = Z.shape
    L = thetas.shape[0]

    zp = Z @ thetas.T  # (n, L)
    yp = Y @ thetas.T
    iz = np.argsort(zp, axis=0, kind="stable")
    iy = np.argsort(yp, axis=0, kind="stable")
    resid_sorted = np.take_along_axis(zp, iz, axis=0) - np.take_along_axis(yp, iy, axis=0)
    # Scatter rank-matched residuals back to original point indices.
    resid = np.empty_like(resid_sorted)
    np.put_along_axis(resid, iz, resid_sorted, axis=0)
    grad_sq = (2.0 / (n * L)) * (resid @ thetas)

    if mode == "sw2-squared":
        return grad_sq
    sw_sq = float(np.mean(np.mean(resid_sorted * resid_sorted, axis=0)))
    root = np.sqrt(sw_sq)
    if root < SW_ROOT_EPS:
        raise DegenerateGradientError(f"SW2 = {root:.3e} is below {SW_ROOT_EPS}; root gradient undefined")
    return grad_sq / (2.0 * root)
