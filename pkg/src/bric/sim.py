"""Fixed-step closed-loop simulation with barrier guarding."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, FunnelViolation, NumericError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    t_end: float = 20.0
    h: float = 1e-3
    record_every: int = 10
    guard_margin: float = 1e-9
    max_substep_halvings: int = 4

    def problems(self):
        out = []
        if not self.t_end > 0:
            out.append(f"t_end must be positive, got {self.t_end!r}")
        if not (self.h > 0 and self.h <= self.t_end):
            out.append(f"h must lie in (0, t_end], got {self.h!r}")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            out.append(f"record_every must be a positive integer, got {self.record_every!r}")
        if not 0 < self.guard_margin < 1e-3:
            out.append(f"guard_margin must lie in (0, 1e-3), got {self.guard_margin!r}")
        if not (isinstance(self.max_substep_halvings, int) and self.max_substep_halvings >= 0):
            out.append(f"max_substep_halvings must be a nonnegative integer, got {self.max_substep_halvings!r}")
        return out


def rk4_step(rhs, y, t, h, k1=None, t_last=None):
    """One classical Runge-Kutta step of ``y' = rhs(t, y)``.

    Raises :class:`NumericError` if any stage derivative is non-finite.
    ``k1`` may be passed in when the derivative at ``(t, y)`` is already known.
    ``t_last`` overrides the time of the final stage, so a step ending on a
    switching instant can use the left limit of a piecewise rhs.
    """
    if k1 is None:
        k1 = rhs(t, y)
    ks = [k1]
    for c in (0.5, 0.5, 1.0):
        if not np.isfinite(ks[-1]).all():
            raise NumericError(f"non-finite stage derivative in step from t={t:.6g}")
        ts = t + c * h if c < 1.0 or t_last is None else t_last
        ks.append(rhs(ts, y + c * h * ks[-1]))
    k1, k2, k3, k4 = ks
    y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(y_new).all():
        raise NumericError(f"non-finite state after step from t={t:.6g}")
    return y_new


@dataclass
class Trajectory:
    """Closed-loop samples, one row per recorded instant.

    ``bound`` holds the active funnel on ``s_k`` (``phi`` for BRIC, ``rho``
    for PPC). For PPC, ``zeta`` is ``s_k / rho`` and ``chi`` the logarithmic
    transformed error; ``eta``, ``r_xi``, ``r_t`` and ``beta`` are NaN.
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    e: np.ndarray
    s: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    chi: np.ndarray
    r_xi: np.ndarray
    r_t: np.ndarray
    u: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    beta: np.ndarray
    bound: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_rows(cls, rows, meta):
        names = [f for f in cls.__dataclass_fields__ if f != "meta"]
        if not rows:
            return cls(*(np.zeros((0,)) for _ in names), meta=meta)
        return cls(*(np.array([r[f] for r in rows]) for f in names), meta=meta)

    @property
    def s_k(self):
        return self.s[:, -1, :]


class ClosedLoop:
    """Plant plus controller, integrated on the augmented state ``(x, z, aux)``."""

    def __init__(self, plant, controller):
        self.plant = plant
        self.controller = controller
        d = plant.dims
        self._kn = d.k * d.n
        self._nz = d.n_z

    def split(self, y):
        kn, nz = self._kn, self._nz
        return y[:kn], y[kn:kn + nz], y[kn + nz:]

    def rhs(self, t, y):
        x, z, aux = self.split(y)
        u, aux_dot, _ = self.controller.evaluate(x, t, aux)
        x_dot, z_dot = self.plant.rhs(x, z, u, t)
        return np.concatenate([x_dot, z_dot, aux_dot])

    def sample(self, t, y):
        x, z, aux = self.split(y)
        u, _, info = self.controller.evaluate(x, t, aux, detail=True)
        n = self.controller.n
        if aux.size:
            d1, d2 = aux[0], aux[1:]
        else:
            d1, d2 = 0.0, np.zeros(n)
        return dict(t=t, x=x.copy(), z=z.copy(), e=info.e, s=info.s, eta=info.eta, zeta=info.zeta,
                    chi=info.chi, r_xi=info.r_xi, r_t=info.r_t, u=u, d1=d1, d2=d2.copy(),
                    beta=info.beta, bound=info.bound)


def time_grid(t_end, h, breakpoints=()):
    """Step boundaries ``0, h, 2h, ..., t_end`` with every interior breakpoint inserted."""
    n = int(np.ceil(t_end / h - 1e-9))
    grid = [i * h for i in range(n)] + [float(t_end)]
    for b in breakpoints:
        if 0 < b < t_end and min(abs(g - b) for g in grid) > 1e-12 * max(1.0, b):
            grid.append(float(b))
    return np.array(sorted(grid))


def run_closed_loop(plant, controller, sim, x0, z0=None, aux0=None):
    """Integrate the closed loop from ``t = 0`` to ``sim.t_end``.

    A step whose stages leave the funnel interior is retried as two half
    steps, recursively up to ``sim.max_substep_halvings`` times. After that a
    :class:`FunnelViolation` is raised carrying ``t``, the channel and the
    normalized value; the rows recorded so far are attached as
    ``exc.trajectory``. Non-finite states raise :class:`NumericError` the same way.
    """
    problems = sim.problems()
    if problems:
        raise DomainError("; ".join(problems))
    d = plant.dims
    x0 = np.asarray(x0, dtype=float)
    z0 = np.zeros(d.n_z) if z0 is None else np.asarray(z0, dtype=float)
    if x0.shape != (d.k * d.n,) or z0.shape != (d.n_z,):
        raise DomainError(f"initial condition shapes x{x0.shape} z{z0.shape} do not match {d}")
    controller.guard = sim.guard_margin
    controller.start(x0)
    aux0 = controller.initial_aux() if aux0 is None else np.asarray(aux0, dtype=float)
    loop = ClosedLoop(plant, controller)
    meta = dict(controller=controller.name, k=d.k, n=d.n, n_z=d.n_z, h=sim.h, t_end=sim.t_end,
                record_every=sim.record_every)
    for attr in ("gains", "cfg", "lam"):
        if hasattr(controller, attr):
            meta[attr] = getattr(controller, attr)

    grid = time_grid(sim.t_end, sim.h, getattr(plant, "breakpoints", ()))
    y = np.concatenate([x0, z0, aux0])
    rows = []
    halvings = 0

    breaks = {float(b) for b in getattr(plant, "breakpoints", ())}

    def advance(y, t, h, k1, depth, t_end):
        # the last stage of a step ending on a breakpoint sees the left limit
        nonlocal halvings
        t_last = np.nextafter(t_end, -np.inf) if t_end in breaks else None
        try:
            y_new = rk4_step(loop.rhs, y, t, h, k1, t_last)
            return y_new, loop.rhs(t_end, y_new)
        except (FunnelViolation, NumericError) as exc:
            if depth >= sim.max_substep_halvings:
                if isinstance(exc, FunnelViolation) and exc.t is None:
                    exc.at(t)
                raise
            halvings += 1
            half = 0.5 * h
            y_mid, k_mid = advance(y, t, half, k1, depth + 1, t + half)
            return advance(y_mid, t + half, half, k_mid, depth + 1, t_end)

    try:
        k1 = loop.rhs(0.0, y)
        rows.append(loop.sample(0.0, y))
        for i in range(len(grid) - 1):
            t, t_next = grid[i], grid[i + 1]
            y, k1 = advance(y, t, t_next - t, k1, 0, t_next)
            if (i + 1) % sim.record_every == 0 or i + 1 == len(grid) - 1:
                rows.append(loop.sample(t_next, y))
    except FunnelViolation as exc:
        if exc.t is None:
            exc.at(0.0)
        exc.trajectory = Trajectory.from_rows(rows, meta)
        log.debug("%s", exc)
        raise
    except NumericError as exc:
        exc.trajectory = Trajectory.from_rows(rows, meta)
        raise
    meta["halvings"] = halvings
    return Trajectory.from_rows(rows, meta)


@dataclass
class Metrics:
    final_error: float
    final_sk_norm: float
    effort: float
    min_margin: float
    max_u_norm: float
    d1_final: float
    d1_drift: float
    d1_still_increasing: bool
    envelope_ok: object = None

    def as_dict(self):
        return dict(vars(self))


def compute_metrics(traj, envelope=None):
    """Scalar summaries of a trajectory.

    ``envelope`` is an optional ``(A, L, B)`` checked as
    ``||e(t)|| <= A exp(-L t) + B`` on every row.
    """
    if len(traj) == 0:
        raise DomainError("cannot compute metrics of an empty trajectory")
    t = traj.t
    e_final = traj.e[-1, 0]
    u2 = np.sum(traj.u**2, axis=1)
    effort = float(np.trapezoid(u2, t)) if len(t) > 1 else 0.0
    margin = float(np.min(1.0 - np.max(np.abs(traj.zeta), axis=1)))
    t_quarter = 0.75 * t[-1]
    d1_mark = float(np.interp(t_quarter, t, traj.d1))
    d1_final = float(traj.d1[-1])
    drift = abs(d1_final - d1_mark)
    env = None
    if envelope is not None:
        A, L, B = envelope
        norms = np.linalg.norm(traj.e.reshape(len(t), -1), axis=1)
        env = bool(np.all(norms <= A * np.exp(-L * t) + B))
    return Metrics(
        final_error=float(np.linalg.norm(e_final)),
        final_sk_norm=float(np.linalg.norm(traj.s_k[-1])),
        effort=effort,
        min_margin=margin,
        max_u_norm=float(np.sqrt(np.max(u2))),
        d1_final=d1_final,
        d1_drift=drift,
        d1_still_increasing=bool(drift > 1e-3 * (1.0 + abs(d1_final))),
        envelope_ok=env,
    )
