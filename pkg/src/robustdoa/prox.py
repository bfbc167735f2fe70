"""Proximal kernels for the minimax logarithmic concave (MLC) penalty.

All scalar kernels broadcast over numpy arrays, so the ADMM outlier step can
apply them element-wise in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MlcParams:
    lam: float = 1.0
    gamma: float = 2.0
    eta: float = 0.5

    def __post_init__(self):
        if not (self.lam > 0 and self.gamma > 0 and self.eta > 0):
            raise ValueError(f"MLC parameters must be positive, got {self}")

    @property
    def breakpoint(self) -> float:
        """Modulus beyond which the penalty is flat: eta * (exp(gamma * lam) - 1)."""
        return self.eta * np.expm1(self.gamma * self.lam)

    @property
    def ceiling(self) -> float:
        return 0.5 * self.gamma * self.lam**2


def _scalar_or_array(out):
    return out.item() if np.ndim(out) == 0 else out


def mlc_value(params: MlcParams, x):
    """MLC penalty of ``|x|``; saturates at ``gamma * lam**2 / 2``."""
    r = np.abs(np.asarray(x))
    L = np.log1p(r / params.eta)
    inner = params.lam * L - L**2 / (2 * params.gamma)
    return _scalar_or_array(np.where(r <= params.breakpoint, inner, params.ceiling))


def variational_weight(params: MlcParams, x):
    """Optimal weight ``max(lam - log(|x|/eta + 1)/gamma, 0)``."""
    r = np.abs(np.asarray(x))
    w = np.maximum(params.lam - np.log1p(r / params.eta) / params.gamma, 0.0)
    return _scalar_or_array(w)


def log_prox_objective(mu, eta, x, c):
    return mu * np.log(np.abs(x) + eta) + 0.5 * np.abs(x - c) ** 2


def log_prox(mu, eta, c):
    """Global minimizer of ``mu*log(|x| + eta) + |x - c|**2 / 2``.

    The magnitude is either 0 or the larger stationary point
    ``((|c| - eta) + sqrt((|c| + eta)**2 - 4 mu)) / 2``; both candidates are
    scored and ties go to 0. The phase of ``c`` is kept.
    """
    c = np.asarray(c, dtype=complex)
    mu = np.asarray(mu, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(mu <= 0) or np.any(eta <= 0):
        raise ValueError("log_prox needs mu > 0 and eta > 0")
    a = np.abs(c)
    disc = (a + eta) ** 2 - 4.0 * mu
    alpha = 0.5 * ((a - eta) + np.sqrt(np.maximum(disc, 0.0)))
    alpha = np.where(disc > 0, np.maximum(alpha, 0.0), 0.0)

    f_alpha = mu * np.log(alpha + eta) + 0.5 * (alpha - a) ** 2
    f_zero = mu * np.log(eta) + 0.5 * a**2
    # differences at rounding level count as ties
    slack = 8 * np.finfo(float).eps * (np.abs(f_zero) + np.abs(mu * np.log(eta)) + 1.0)
    mag = np.where(f_alpha < f_zero - slack, alpha, 0.0)

    unit = np.exp(1j * np.angle(c))
    return _scalar_or_array(mag * unit)


def mlc_prox(params: MlcParams, mu, c, x_prev):
    """One reweighted prox step of the MLC penalty.

    The weight is evaluated at ``x_prev``; where it vanishes the penalty is
    saturated and ``c`` passes through unchanged.
    """
    c = np.asarray(c, dtype=complex)
    w = np.broadcast_to(np.asarray(variational_weight(params, x_prev)), c.shape)
    active = w > 0
    out = c.copy()
    if np.any(active):
        out[active] = log_prox(mu * w[active], params.eta, c[active])
    return _scalar_or_array(out)


def row_soft_threshold(C, tau: float):
    """Row-wise group shrinkage: the prox of ``tau * ||X||_{2,1}``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    C = np.asarray(C)
    norms = np.linalg.norm(C, axis=1, keepdims=True)
    scale = np.zeros_like(norms)
    keep = (norms >= tau) & (norms > 0)
    scale[keep] = (norms[keep] - tau) / norms[keep]
    return C * scale
