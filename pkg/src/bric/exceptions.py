"""Exception hierarchy shared across the package."""


class BricError(Exception):
    """Base class for all errors raised by :mod:`bric`."""


class DomainError(BricError, ValueError):
    """An argument lies outside the domain of a map."""


class BarrierDomainError(DomainError):
    """The barrier argument left its open interval."""


class FunnelViolation(BricError):
    """The normalized error reached the funnel boundary.

    Attributes
    ----------
    channel : int
        Zero-based index of the offending channel.
    value : float
        The normalized error (``zeta`` for BRIC, ``s/rho`` for PPC).
    t : float or None
        Simulation time, filled in by the engine when known.
    """

    def __init__(self, channel, value, t=None):
        self.channel = int(channel)
        self.value = float(value)
        self.t = t
        super().__init__(self._message())

    def _message(self):
        where = "" if self.t is None else f" at t={self.t:.6g}"
        return f"funnel violation on channel {self.channel}{where}: |{self.value:.12g}| >= 1"

    def at(self, t):
        self.t = float(t)
        self.args = (self._message(),)
        return self


class NumericError(BricError, ArithmeticError):
    """A non-finite value appeared in the integrated state."""


class ConfigError(BricError, ValueError):
    """Experiment configuration failed validation.

    ``diagnostics`` lists every problem found, each prefixed by its location.
    """

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
