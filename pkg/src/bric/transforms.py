"""Scalar maps used by the barrier integral controller.

Every function accepts floats or numpy arrays and works elementwise.
``kappa`` is always passed explicitly.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import BarrierDomainError, DomainError


@dataclass(frozen=True)
class SquashParams:
    kappa: float = 20.0

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise DomainError(f"kappa must be positive, got {self.kappa!r}")


@dataclass(frozen=True)
class AsymBounds:
    """Lower and upper extent of the asymmetric barrier interval ``(-lower_M, upper_M)``."""

    lower_M: float
    upper_M: float

    def __post_init__(self):
        if not (self.lower_M > 0 and self.upper_M > 0):
            raise DomainError(f"asymmetric bounds must be positive, got {self.lower_M!r}, {self.upper_M!r}")


def _kappa(p):
    return p.kappa if isinstance(p, SquashParams) else float(p)


def squash(s, p):
    """Map ``s`` into ``(-1, 1)`` as ``s / sqrt(s^2 + kappa)``.

    Returns
    -------
    eta, deriv
        The squashed value and its derivative ``kappa / (s^2 + kappa)^(3/2)``.
    """
    s = np.asarray(s, dtype=float)
    if not np.isfinite(s).all():
        raise DomainError("squash argument must be finite")
    kappa = _kappa(p)
    q = s * s + kappa
    root = np.sqrt(q)
    return s / root, kappa / (q * root)


def squash_inverse(eta, p):
    eta = np.asarray(eta, dtype=float)
    if not (np.abs(eta) < 1).all():
        raise DomainError("squash_inverse argument must lie in (-1, 1)")
    return eta * np.sqrt(_kappa(p)) / np.sqrt(1.0 - eta * eta)


def funnel_gain(psi):
    """Funnel gain ``sqrt(psi^2 + 1)`` in terms of the reciprocal funnel ``psi = 1/phi``.

    ``psi = 0`` corresponds to the infinite funnel at ``t = 0`` and gives exactly 1.
    """
    psi = np.asarray(psi, dtype=float)
    if not np.isfinite(psi).all() or (psi < 0).any():
        raise DomainError("funnel_gain needs a finite, nonnegative reciprocal funnel value")
    return np.sqrt(psi * psi + 1.0)


def barrier(zeta):
    """Reciprocal barrier ``zeta / (1 - zeta^2)`` and its derivative.

    Raises :class:`BarrierDomainError` for ``|zeta| >= 1``.
    """
    zeta = np.asarray(zeta, dtype=float)
    if not (np.abs(zeta) < 1).all():
        raise BarrierDomainError("barrier argument must lie in (-1, 1)")
    w = 1.0 - zeta * zeta
    return zeta / w, (1.0 + zeta * zeta) / (w * w)


def barrier_inverse(chi):
    chi = np.asarray(chi, dtype=float)
    if not np.isfinite(chi).all():
        raise DomainError("barrier_inverse argument must be finite")
    a = np.abs(chi)
    # rationalized form of (sqrt(1+4chi^2) - 1) / (2chi); no cancellation, limit 0 at chi = 0
    return np.sign(chi) * 2.0 * a / (np.sqrt(1.0 + 4.0 * a * a) + 1.0)


def barrier_asym(zeta, b):
    zeta = np.asarray(zeta, dtype=float)
    if not np.all((zeta > -b.lower_M) & (zeta < b.upper_M)):
        raise BarrierDomainError(f"asymmetric barrier argument must lie in (-{b.lower_M}, {b.upper_M})")
    return zeta / ((1.0 - zeta / b.upper_M) * (1.0 + zeta / b.lower_M))


def barrier_asym_inverse(chi, b):
    """Inverse of :func:`barrier_asym`, returning the root inside ``(-lower_M, upper_M)``."""
    chi = np.asarray(chi, dtype=float)
    if not np.isfinite(chi).all():
        raise DomainError("barrier_asym_inverse argument must be finite")
    a = 1.0 / b.lower_M - 1.0 / b.upper_M
    c = 1.0 / (b.lower_M * b.upper_M)
    # root of c*chi*z^2 + (1 - a*chi)*z - chi = 0; pick the cancellation-free branch
    p = 1.0 - a * chi
    root = np.sqrt(p * p + 4.0 * c * chi * chi)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = 2.0 * chi / (p + root)
        other = (root - p) / (2.0 * c * chi)
    return np.where(p >= 0, stable, other)
