"""Plant models of the form

    x_i' = x_{i+1}        (i < k)
    x_k' = F(x, z, t) + G(x, z, t) u
    z'   = F_z(x, z, t)

Each model provides ``dims``, ``rhs(x, z, u, t)``, ``input_matrix(x, z, t)``
and ``breakpoints`` (times at which the right-hand side switches).
"""
import math
from dataclasses import dataclass, field, fields
from itertools import product
from typing import Protocol

import numpy as np

from .exceptions import DomainError, NumericError


@dataclass(frozen=True)
class PlantDims:
    k: int
    n: int
    n_z: int = 0

    def __post_init__(self):
        if self.k < 2 or self.n < 1 or self.n_z < 0:
            raise DomainError(f"invalid plant dimensions {self}")


class Plant(Protocol):
    dims: PlantDims
    breakpoints: tuple

    def rhs(self, x, z, u, t): ...

    def input_matrix(self, x, z, t): ...


def chain_rhs(dims, x, tail):
    """Stack the integrator chain ``x_i' = x_{i+1}`` with the model-specific last block."""
    xd = np.empty(dims.k * dims.n)
    xd[: -dims.n] = x[dims.n:]
    xd[-dims.n:] = tail
    return xd


def _check(dims, x, z, u):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (dims.k * dims.n,) or z.shape != (dims.n_z,) or u.shape != (dims.n,):
        raise DomainError(f"shape mismatch: x{x.shape} z{z.shape} u{u.shape} for {dims}")
    if not (np.isfinite(x).all() and np.isfinite(z).all()):
        raise NumericError("non-finite plant state")
    return x, z, u


class DoubleIntegrator:
    """``x1'' = F_d + u`` with constant drift and identity input matrix."""

    breakpoints = ()

    def __init__(self, F_d=(1.0, -2.0)):
        self.F_d = np.asarray(F_d, dtype=float)
        self.dims = PlantDims(2, len(self.F_d), 0)

    def rhs(self, x, z, u, t):
        x, z, u = _check(self.dims, x, z, u)
        return chain_rhs(self.dims, x, self.F_d + u), np.zeros(0)

    def input_matrix(self, x, z, t):
        return np.eye(self.dims.n)


@dataclass(frozen=True)
class PendulumParams:
    J1: float = 0.5
    J2: float = 0.625
    m1: float = 2.0
    m2: float = 2.5
    r_c: float = 0.5
    d_c: float = 0.5
    l_c: float = 0.5
    k_c: float = 150.0
    b_c: float = 1.0
    g: float = 9.81
    sigma0: float = 1.0
    sigma1: float = 1.0
    sigma2: float = 1.0
    theta_dot_s: float = 0.1
    T_s: float = 2.0
    T_c: float = 1.0

    def problems(self):
        return [f"{f.name} must be positive, got {getattr(self, f.name)!r}"
                for f in fields(self) if not getattr(self, f.name) > 0]


@dataclass(frozen=True)
class ScenarioFlags:
    """Motor-failure window and disturbance switches for the pendulum benchmark.

    ``disturbance_mode`` is ``"torque"`` (disturbance added to the torque
    balance, i.e. scaled by ``1/J_i``) or ``"acceleration"`` (added to the
    angular acceleration directly). ``lugre_form`` is ``"printed"`` (no bristle
    state in the Stribeck term) or ``"standard"``.
    """

    motor_failure: bool = True
    failure_window: tuple = (2.0, 10.0)
    failure_factor: float = 0.5
    disturbance: bool = False
    disturbance_mode: str = "torque"
    lugre_form: str = "printed"

    def __post_init__(self):
        object.__setattr__(self, "failure_window", tuple(float(v) for v in self.failure_window))

    def problems(self):
        out = []
        a, b = self.failure_window
        if not a < b:
            out.append(f"failure_window start {a} must precede end {b}")
        if self.disturbance_mode not in ("torque", "acceleration"):
            out.append(f"disturbance_mode must be 'torque' or 'acceleration', got {self.disturbance_mode!r}")
        if self.lugre_form not in ("printed", "standard"):
            out.append(f"lugre_form must be 'printed' or 'standard', got {self.lugre_form!r}")
        return out


@dataclass
class CouplingDiagnostics:
    clamped_radicands: int = 0


def coupling_geometry(theta, theta_dot, p, diag=None):
    """Spring/damper geometry between the two pendulum tips.

    Returns ``(x_c, x_c_dot, theta_c, F_c)``: tip distance, its rate, link
    angle and the spring-damper force.
    """
    th1, th2 = theta
    w1, w2 = theta_dot
    s1, c1 = math.sin(th1), math.cos(th1)
    s2, c2 = math.sin(th2), math.cos(th2)
    half_r2 = 0.5 * p.r_c * p.r_c
    rad = p.d_c * p.d_c + p.d_c * p.r_c * (s1 - s2) + half_r2 * (1.0 - math.cos(th2 - th1))
    if rad < 0.0:
        rad = 0.0
        if diag is not None:
            diag.clamped_radicands += 1
    x_c = math.sqrt(rad)
    rad_dot = p.d_c * p.r_c * (c1 * w1 - c2 * w2) + half_r2 * math.sin(th2 - th1) * (w2 - w1)
    x_c_dot = rad_dot / (2.0 * x_c) if x_c > 0.0 else 0.0
    theta_c = math.atan2(p.r_c * (c2 - c1), 2.0 * p.d_c + p.r_c * (s1 - s2))
    F_c = p.k_c * (x_c - p.l_c) + p.b_c * x_c_dot
    return x_c, x_c_dot, theta_c, F_c


def lugre_friction(theta_dot_i, tau_i, p, form="printed"):
    """LuGre bristle rate and friction torque for one joint.

    Returns ``(tau_dot, T)``. ``form="printed"`` omits the bristle state from
    the Stribeck term; ``form="standard"`` multiplies it in.
    """
    a = abs(theta_dot_i)
    stribeck = p.T_c + (p.T_s - p.T_c) * math.exp(-((theta_dot_i / p.theta_dot_s) ** 2))
    if form == "standard":
        tau_dot = theta_dot_i - p.sigma0 * a * tau_i / stribeck
    else:
        tau_dot = theta_dot_i - p.sigma0 * a / stribeck
    T = p.sigma0 * tau_i + p.sigma1 * tau_dot + p.sigma2 * theta_dot_i
    return tau_dot, T


def disturbance(t):
    return (5.0 * math.sin(2.0 * t - math.pi / 4.0), 5.0 * math.cos(t - math.pi / 6.0))


class CoupledPendulums:
    """Two inverted pendulums joined by a spring-damper, with LuGre joint friction.

    State ``x = [theta1, theta2, omega1, omega2]``, internal state ``z = [tau1, tau2]``.
    """

    dims = PlantDims(2, 2, 2)

    def __init__(self, params=None, flags=None):
        self.params = params or PendulumParams()
        self.flags = flags or ScenarioFlags()
        self.diagnostics = CouplingDiagnostics()
        self.breakpoints = self.flags.failure_window if self.flags.motor_failure else ()

    def sigma_t(self, t):
        f = self.flags
        if f.motor_failure and f.failure_window[0] <= t < f.failure_window[1]:
            return f.failure_factor
        return 1.0

    def input_rows(self, theta, t):
        """Rows ``B_c1``, ``B_c2`` of the torque input map (before division by inertia)."""
        th1, th2 = theta
        cross = -math.cos(th2) * math.sin(th1)
        b1 = (math.cos(th1) + 1.5, cross)
        b2 = (cross, self.sigma_t(t) * math.sin(th2) * math.cos(th2) + 2.0)
        return b1, b2

    def input_matrix(self, x, z, t):
        b1, b2 = self.input_rows(x[:2], t)
        return np.array([b1, b2]) / np.array([[self.params.J1], [self.params.J2]])

    def rhs(self, x, z, u, t):
        x, z, u = _check(self.dims, x, z, u)
        p, f = self.params, self.flags
        th1, th2, w1, w2 = x
        _, _, theta_c, F_c = coupling_geometry((th1, th2), (w1, w2), p, self.diagnostics)
        b1, b2 = self.input_rows((th1, th2), t)
        dist = disturbance(t) if f.disturbance else (0.0, 0.0)
        acc = np.empty(2)
        z_dot = np.empty(2)
        for i, (th, w, J, m, b, sign) in enumerate(
            ((th1, w1, p.J1, p.m1, b1, -1.0), (th2, w2, p.J2, p.m2, b2, 1.0))
        ):
            tau_dot, T = lugre_friction(w, z[i], p, f.lugre_form)
            torque = p.r_c * (p.g * m * math.sin(th) + sign * 0.5 * F_c * math.cos(th - theta_c))
            torque += -T + b[0] * u[0] + b[1] * u[1]
            if f.disturbance_mode == "torque":
                acc[i] = (torque + dist[i]) / J
            else:
                acc[i] = torque / J + dist[i]
            z_dot[i] = tau_dot
        return chain_rhs(self.dims, x, acc), z_dot


@dataclass
class ProbeReport:
    min_eigenvalue: float
    location: tuple
    positive: bool
    samples: int = 0
    notes: list = field(default_factory=list)


def assumption_probe(model, states, times):
    """Smallest eigenvalue of ``G + G^T`` over a grid of ``(x, z)`` states and times."""
    worst, where, count = math.inf, None, 0
    for (x, z), t in product(states, times):
        G = np.asarray(model.input_matrix(np.asarray(x, float), np.asarray(z, float), t))
        lam = float(np.linalg.eigvalsh(G + G.T)[0])
        count += 1
        if lam < worst:
            worst, where = lam, (tuple(map(float, np.ravel(x))), tuple(map(float, np.ravel(z))), float(t))
    return ProbeReport(worst, where, worst > 0, count)


def pendulum_probe_grid(points=41):
    """States with ``theta`` on a uniform grid over ``[-pi, pi]^2`` and zero velocities."""
    th = np.linspace(-math.pi, math.pi, points)
    return [((a, b, 0.0, 0.0), (0.0, 0.0)) for a, b in product(th, th)]
