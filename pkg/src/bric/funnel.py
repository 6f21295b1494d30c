"""Exponential funnels ``phi(t) = exp(-c t) / t + floor`` and the gains built on them.

The funnel is infinite at ``t = 0``, so everything is evaluated through its
reciprocal ``psi = 1/phi = t / (exp(-c t) + floor * t)``, which is finite and
smooth on ``[0, inf)``.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .transforms import funnel_gain

DEFAULT_CAP = 1e9


@dataclass(frozen=True)
class FunnelSpec:
    """Per-channel decay rates and floors.

    Construction does not check the values; call :func:`validate`.
    """

    rates: tuple
    floors: tuple
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "floors", tuple(float(f) for f in self.floors))

    @classmethod
    def uniform(cls, n, rate, floor, cap=DEFAULT_CAP):
        return cls((rate,) * n, (floor,) * n, cap)

    @property
    def n(self):
        return len(self.rates)


def _check_t(t):
    if not t >= 0:
        raise DomainError(f"time must be nonnegative, got {t!r}")


def phi(spec, j, t):
    """Funnel value; ``inf`` at ``t = 0``."""
    _check_t(t)
    if t == 0:
        return np.inf
    return np.exp(-spec.rates[j] * t) / t + spec.floors[j]


def phi_reciprocal(spec, j, t):
    _check_t(t)
    return t / (np.exp(-spec.rates[j] * t) + spec.floors[j] * t)


def psi_vector(spec, t):
    _check_t(t)
    c = np.asarray(spec.rates)
    return t / (np.exp(-c * t) + np.asarray(spec.floors) * t)


def beta(spec, t):
    """Funnel gains for all channels at time ``t``; exactly 1 at ``t = 0``."""
    return funnel_gain(psi_vector(spec, t))


def phi_vector(spec, t):
    _check_t(t)
    if t == 0:
        return np.full(spec.n, np.inf)
    return np.exp(-np.asarray(spec.rates) * t) / t + np.asarray(spec.floors)


def validate(spec, grid=None):
    """Return a list of problems with ``spec``; empty means the funnel is usable.

    Besides the sign checks, ``|dphi/dt| / phi^3`` is evaluated with central
    differences on a log-spaced grid over ``[1e-6, 100]`` and compared to
    ``spec.cap``.
    """
    problems = []
    if len(spec.rates) != len(spec.floors):
        problems.append(f"rates and floors differ in length ({len(spec.rates)} vs {len(spec.floors)})")
    if not spec.rates:
        problems.append("funnel needs at least one channel")
    if not (spec.cap > 0):
        problems.append(f"cap must be positive, got {spec.cap!r}")
    for j, (c, f) in enumerate(zip(spec.rates, spec.floors)):
        if not (np.isfinite(c) and c > 0):
            problems.append(f"channel {j}: rate must be positive, got {c!r}")
        if not (np.isfinite(f) and f > 0):
            problems.append(f"channel {j}: floor must be positive, got {f!r}")
    if problems:
        return problems

    ts = np.logspace(-6, 2, 801) if grid is None else np.asarray(grid, dtype=float)
    dt = 1e-4 * ts
    for j, (c, f) in enumerate(zip(spec.rates, spec.floors)):
        fun = lambda t: np.exp(-c * t) / t + f  # noqa: E731
        dphi = (fun(ts + dt) - fun(ts - dt)) / (2 * dt)
        ratio = np.abs(dphi) / fun(ts) ** 3
        worst = np.max(ratio)
        if not np.isfinite(worst) or worst > spec.cap:
            problems.append(f"channel {j}: |dphi/dt|/phi^3 reaches {worst:.3g}, above cap {spec.cap:.3g}")
    return problems
