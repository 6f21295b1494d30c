"""Barrier integral control law, its adaptation integrators, and a PPC baseline.

Controllers expose a common surface used by the simulation engine:

``n_aux``
    number of integrator states appended to the plant state,
``initial_aux()``
    their initial values,
``start(x0)``
    hook called once before integration,
``evaluate(x, t, aux, detail=False)``
    returns ``(u, aux_dot, info)``; ``info`` is a :class:`ControlInfo` when
    ``detail`` is set and None otherwise.
"""
from dataclasses import dataclass, field

import numpy as np

from . import funnel as funnel_mod
from .error_pipeline import DEFAULT_GUARD, compute_errors, filtered_errors, transform
from .exceptions import DomainError, FunnelViolation
from .transforms import SquashParams


@dataclass(frozen=True)
class BricGains:
    lam: float = 1.0
    kappa: float = 20.0
    mu_g: float = 0.1
    mu_d1: float = 10.0
    mu_d2: float = 10.0

    def problems(self):
        return [f"{name} must be positive, got {v!r}"
                for name, v in vars(self).items() if not (np.isfinite(v) and v > 0)]


@dataclass
class BricState:
    d1_hat: float = 0.0
    d2_hat: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class PpcConfig:
    k_ppc: float = 0.1
    rho0: float = 1.0
    rho_rate: float = 0.5
    rho_floor: float = 0.5

    def problems(self):
        out = [f"{name} must be positive, got {v!r}"
               for name, v in vars(self).items() if not (np.isfinite(v) and v > 0)]
        if not out and not self.rho0 > self.rho_floor:
            out.append(f"rho0 ({self.rho0}) must exceed rho_floor ({self.rho_floor})")
        return out


@dataclass
class ControlInfo:
    """Per-instant signals recorded by the engine."""

    e: np.ndarray
    s: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    chi: np.ndarray
    r_xi: np.ndarray
    r_t: np.ndarray
    beta: np.ndarray
    bound: np.ndarray


def bric_control(ts, beta, st, g):
    """Evaluate the BRIC law and the two adaptation rates.

    Returns ``(u, d1_dot, d2_dot)``.
    """
    v = np.asarray(beta) * ts.r_xi * ts.r_t * ts.chi
    u = -(g.mu_g + st.d1_hat) * v - st.d2_hat
    rc = ts.r_t * ts.chi
    d1_dot = g.mu_d1 * float(rc @ rc)
    d2_dot = g.mu_d2 * v
    return u, d1_dot, d2_dot


def ppc_rho(cfg, t):
    return cfg.rho0 * np.exp(-cfg.rho_rate * t) + cfg.rho_floor


def ppc_control(s_k, rho, cfg):
    """Logarithmic prescribed-performance law ``u = -k * r * eps``.

    With ``xi = s/rho``: ``eps = ln((1+xi)/(1-xi))`` and ``r = 2 / (rho (1 - xi^2))``.
    """
    s_k = np.asarray(s_k, dtype=float)
    xi = s_k / rho
    bad = np.flatnonzero(np.abs(xi) >= 1.0)
    if bad.size:
        raise FunnelViolation(bad[0], xi[bad[0]])
    w = 1.0 - xi * xi
    eps = np.log1p(xi) - np.log1p(-xi)
    return -cfg.k_ppc * (2.0 / (rho * w)) * eps


class BricController:
    """Barrier integral controller for a ``k``-th order chain with ``n`` channels.

    The adaptation integrators ``(d1_hat, d2_hat)`` are not stored here; they
    travel with the integrated state so that one ODE scheme advances everything.
    """

    name = "bric"

    def __init__(self, gains, funnel, target, k, d1_hat0=0.0, d2_hat0=None, guard=DEFAULT_GUARD):
        self.gains = gains
        self.funnel = funnel
        self.target = target
        self.k = k
        self.n = target.n
        self.d1_hat0 = float(d1_hat0)
        self.d2_hat0 = np.zeros(self.n) if d2_hat0 is None else np.asarray(d2_hat0, dtype=float)
        self.guard = guard
        self._squash = SquashParams(gains.kappa)
        if funnel.n != self.n:
            raise DomainError(f"funnel has {funnel.n} channels, target has {self.n}")

    @property
    def n_aux(self):
        return 1 + self.n

    def initial_aux(self):
        return np.concatenate([[self.d1_hat0], self.d2_hat0])

    def start(self, x0):
        pass

    def evaluate(self, x, t, aux, detail=False):
        e = compute_errors(x, self.target, self.k)
        s = filtered_errors(e, self.gains.lam)
        b = funnel_mod.beta(self.funnel, t)
        ts = transform(s[-1], b, self._squash, self.guard)
        st = BricState(aux[0], aux[1:])
        u, d1_dot, d2_dot = bric_control(ts, b, st, self.gains)
        aux_dot = np.empty(self.n_aux)
        aux_dot[0] = d1_dot
        aux_dot[1:] = d2_dot
        if not detail:
            return u, aux_dot, None
        info = ControlInfo(e, s, ts.eta, ts.zeta, ts.chi, ts.r_xi, ts.r_t, b,
                           funnel_mod.phi_vector(self.funnel, t))
        return u, aux_dot, info


class PpcController:
    """Prescribed performance baseline on the same filtered error ``s_k``.

    If ``cfg.rho0`` is None the funnel start is taken as ``||s_k(0)||`` in :meth:`start`.
    """

    name = "ppc"
    n_aux = 0
    _no_aux = np.zeros(0)

    def __init__(self, cfg, target, k, lam=1.0, rho0=None, guard=DEFAULT_GUARD):
        self.guard = guard
        self.target = target
        self.k = k
        self.n = target.n
        self.lam = lam
        self._auto_rho0 = rho0 is None
        self.cfg = cfg if rho0 is None else PpcConfig(cfg.k_ppc, rho0, cfg.rho_rate, cfg.rho_floor)

    def initial_aux(self):
        return np.zeros(0)

    def start(self, x0):
        if self._auto_rho0:
            s = filtered_errors(compute_errors(x0, self.target, self.k), self.lam)
            c = self.cfg
            self.cfg = PpcConfig(c.k_ppc, float(np.linalg.norm(s[-1])), c.rho_rate, c.rho_floor)
        problems = self.cfg.problems()
        if problems:
            raise DomainError("; ".join(problems))

    def evaluate(self, x, t, aux, detail=False):
        e = compute_errors(x, self.target, self.k)
        s = filtered_errors(e, self.lam)
        rho = np.full(self.n, ppc_rho(self.cfg, t))
        xi = s[-1] / rho
        outside = np.abs(xi) >= 1.0 - self.guard
        if outside.any():
            j = int(np.argmax(outside))
            raise FunnelViolation(j, xi[j])
        u = ppc_control(s[-1], rho, self.cfg)
        if not detail:
            return u, self._no_aux, None
        eps = np.log1p(xi) - np.log1p(-xi)
        nan = np.full(self.n, np.nan)
        info = ControlInfo(e, s, nan, xi, eps, nan, nan, nan, rho)
        return u, np.zeros(0), info
