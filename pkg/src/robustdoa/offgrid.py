"""
Off-grid refinement
===================

Turns the row-sparse ADMM output into K on-grid angles, then alternates a
least-squares source estimate with a first-order Taylor correction of the
angles until the cumulative gap settles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import AngleGrid, ArrayGeometry, steering_derivative, steering_matrix

ANGLE_LIMIT_DEG = 89.9
RIDGE_CONDITION = 1e12


class RefinementError(np.linalg.LinAlgError):
    """The gap system or the least-squares source fit is singular."""


@dataclass(frozen=True)
class OnGridPicks:
    grid_indices: np.ndarray
    angles_deg: np.ndarray
    row_norms: np.ndarray

    @property
    def degenerate(self) -> bool:
        return bool(np.all(self.row_norms == 0))


@dataclass(frozen=True)
class RefineResult:
    doas_deg: np.ndarray
    gaps_deg: np.ndarray
    iterations: int
    converged: bool


def pick_on_grid(X, grid: AngleGrid, K: int, peaks: bool = False) -> OnGridPicks:
    """Indices of the ``K`` rows of ``X`` with largest l2 norm, strongest first.

    Ties go to the lower index, so ``X == 0`` yields the first ``K`` grid points.
    With ``peaks=True`` only local maxima of the row-norm profile compete
    (remaining slots, if any, are filled by the strongest other rows), which
    stops one off-grid source from claiming two neighbouring cells.
    """
    X = np.asarray(X)
    N = X.shape[0]
    if N != grid.size:
        raise ValueError(f"X has {N} rows but the grid has {grid.size} points")
    if not 1 <= K <= N:
        raise ValueError(f"K={K} must lie in [1, {N}]")
    norms = np.linalg.norm(X, axis=1)
    order = np.argsort(-norms, kind="stable")
    if peaks:
        left = np.r_[-np.inf, norms[:-1]]
        right = np.r_[norms[1:], -np.inf]
        is_peak = (norms > left) & (norms >= right) & (norms > 0)
        order = np.r_[order[is_peak[order]], order[~is_peak[order]]]
    idx = order[:K]
    return OnGridPicks(grid_indices=idx, angles_deg=grid.angles_deg[idx], row_norms=norms[idx])


def gap_system(Y, O_tilde, theta_deg, X_hat, geometry: ArrayGeometry):
    """Return ``(G, z)`` of the quadratic ``d^T G d - 2 Re(z^T d)`` in the gap ``d``."""
    A = steering_matrix(geometry, theta_deg)
    B = steering_derivative(geometry, theta_deg)
    H = Y - O_tilde - A @ X_hat
    G = (B.conj().T @ B) * (X_hat @ X_hat.conj().T).T
    z = np.diag(X_hat @ H.conj().T @ B)
    return G, z


def solve_gap(Y, O_tilde, theta_deg, X_hat, geometry: ArrayGeometry) -> np.ndarray:
    """Real gap vector (radians) minimizing ``||H - B diag(d) X_hat||_F^2``.

    Solves ``Re(G) d = Re(z)``, the stationarity condition over real ``d``.
    An ill-conditioned system is retried with a small ridge before giving up.
    """
    Y = np.asarray(Y, dtype=complex)
    X_hat = np.atleast_2d(np.asarray(X_hat, dtype=complex))
    G, z = gap_system(Y, np.asarray(O_tilde, dtype=complex), theta_deg, X_hat, geometry)
    Gr, zr = G.real, z.real
    K = Gr.shape[0]

    if not np.all(np.isfinite(Gr)) or np.trace(Gr) <= 0:
        raise RefinementError("gap system is empty or non-finite")
    if np.linalg.cond(Gr) > RIDGE_CONDITION:
        Gr = Gr + 1e-8 * np.trace(Gr) / K * np.eye(K)
        if np.linalg.cond(Gr) > RIDGE_CONDITION:
            raise RefinementError("gap system singular after ridge")
    delta = np.linalg.solve(Gr, zr)
    if not np.all(np.isfinite(delta)):
        raise RefinementError("non-finite gap estimate")
    return delta


def _source_fit(A, Z):
    K = A.shape[1]
    X_hat, _, rank, sv = np.linalg.lstsq(A, Z, rcond=None)
    if rank < K or sv[-1] <= sv[0] * 1e-10:
        raise RefinementError("steering matrix is rank deficient (coincident angles)")
    return X_hat


def refine(
    Y,
    O_tilde,
    picks: OnGridPicks,
    geometry: ArrayGeometry,
    tol: float = 1e-4,
    max_iters: int = 50,
    max_step_deg: float | None = 1.0,
) -> RefineResult:
    """Alternate source least squares and Taylor gap updates.

    ``max_step_deg`` caps each per-iteration angle move (half of a 2 degree
    grid cell by default); pass ``None`` to disable it. Convergence is tested
    on the cumulative gap: relative change below ``tol``, or its absolute
    value on the first step.

    Raises
    ------
    RefinementError
        When the source fit or the gap system is singular.
    """
    theta0 = np.asarray(picks.angles_deg, dtype=float)
    if theta0.size == 0:
        raise ValueError("no on-grid picks to refine")
    Z = np.asarray(Y, dtype=complex) - np.asarray(O_tilde, dtype=complex)
    zeros = np.zeros_like(Z)

    theta = np.clip(theta0, -ANGLE_LIMIT_DEG, ANGLE_LIMIT_DEG)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        X_hat = _source_fit(steering_matrix(geometry, theta), Z)
        delta = np.rad2deg(solve_gap(Z, zeros, theta, X_hat, geometry))
        if max_step_deg is not None:
            delta = np.clip(delta, -max_step_deg, max_step_deg)
        before = np.linalg.norm(theta - theta0)
        theta = np.clip(theta + delta, -ANGLE_LIMIT_DEG, ANGLE_LIMIT_DEG)
        step = np.linalg.norm(np.deg2rad(delta))
        ref = np.deg2rad(before)
        if (step / ref if ref > 0 else step) < tol:
            converged = True
            break

    return RefineResult(doas_deg=theta, gaps_deg=theta - theta0, iterations=it, converged=converged)
