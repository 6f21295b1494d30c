"""Regulation errors, filtered errors and their barrier-transformed versions."""
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .exceptions import DomainError, FunnelViolation
from .transforms import squash

DEFAULT_GUARD = 1e-9


@dataclass(frozen=True)
class RegulationTarget:
    """Setpoint for the first state block; higher derivatives are regulated to zero."""

    x1_d: tuple

    def __post_init__(self):
        object.__setattr__(self, "x1_d", tuple(float(v) for v in self.x1_d))
        if not np.all(np.isfinite(self.x1_d)):
            raise DomainError("target entries must be finite")

    @property
    def n(self):
        return len(self.x1_d)


@dataclass
class TransformedState:
    s_k: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    chi: np.ndarray
    r_xi: np.ndarray
    r_t: np.ndarray


def compute_errors(x, target, k):
    """Split the stacked state into ``k`` blocks and subtract the setpoint from the first.

    Returns an array of shape ``(k, n)``.
    """
    x = np.asarray(x, dtype=float)
    n = target.n
    if x.shape != (k * n,):
        raise DomainError(f"state has shape {x.shape}, expected ({k * n},)")
    e = x.reshape(k, n).copy()
    e[0] -= target.x1_d
    return e


def filtered_errors(e, lam):
    """Binomial filter stack ``s_i = sum_l C(i-1, l) lam^l e_{i-l}``.

    ``e`` has shape ``(k, n)``; the result has the same shape with ``s[0] = e[0]``.
    """
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam!r}")
    e = np.asarray(e, dtype=float)
    return filter_matrix(e.shape[0], float(lam)) @ e


@lru_cache(maxsize=64)
def filter_matrix(k, lam):
    """Lower-triangular ``(k, k)`` matrix mapping the error blocks to the filter stack."""
    m = np.zeros((k, k))
    for i in range(k):
        for ell in range(i + 1):
            m[i, i - ell] = comb(i, ell) * lam**ell
    m.flags.writeable = False
    return m


def transform(s_k, beta, p, guard=DEFAULT_GUARD):
    """Squash ``s_k``, scale by the funnel gain and apply the reciprocal barrier.

    Raises :class:`FunnelViolation` for the first channel whose margin
    ``1 - |zeta|`` is at most ``guard``.
    """
    s_k = np.asarray(s_k, dtype=float)
    beta = np.asarray(beta, dtype=float)
    eta, r_xi = squash(s_k, p)
    zeta = beta * eta
    # 1 - zeta^2 without cancellation: kappa/(s^2+kappa) - (beta^2-1) eta^2
    w = p.kappa / (s_k * s_k + p.kappa) - (beta * beta - 1.0) * eta * eta
    margin = w / (1.0 + np.abs(zeta))
    outside = margin <= guard
    if outside.any():
        j = int(np.argmax(outside))
        raise FunnelViolation(j, zeta[j] if abs(zeta[j]) >= 1 else np.copysign(1.0 - margin[j], zeta[j]))
    chi = zeta / w
    r_t = (1.0 + zeta * zeta) / (w * w)
    return TransformedState(s_k, eta, zeta, chi, r_xi, r_t)
