"""Exception hierarchy shared by every module."""


class MracError(Exception):
    """Base class for all errors raised by irlmrac."""


class ConfigError(MracError, ValueError):
    """An experiment, plant or reference configuration violates an invariant."""


class NumericError(MracError, ArithmeticError):
    """A numerical routine produced non-finite output."""


class DivergenceError(MracError):
    """A simulated quantity became non-finite or exceeded the divergence limit."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SingularCriticError(MracError):
    """The control block of the critic is below its floor; greedy gains are undefined."""


class OrderingError(MracError, ValueError):
    """A stateful signal was sampled backwards in time."""


class UnboundedCostError(MracError):
    """A rollout cost diverged."""
