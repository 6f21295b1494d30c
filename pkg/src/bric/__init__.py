"""Barrier integral control for uncertain high-order control-affine systems."""
from .controllers import BricController, BricGains, PpcConfig, PpcController, bric_control, ppc_control, ppc_rho
from .error_pipeline import RegulationTarget, compute_errors, filtered_errors, transform
from .exceptions import BarrierDomainError, ConfigError, DomainError, FunnelViolation, NumericError
from .funnel import FunnelSpec
from .plants import CoupledPendulums, DoubleIntegrator, PendulumParams, ScenarioFlags
from .sim import SimConfig, Trajectory, compute_metrics, rk4_step, run_closed_loop

__version__ = "0.1.0"
