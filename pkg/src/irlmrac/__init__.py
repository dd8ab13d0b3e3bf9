"""Model-free model-reference adaptive control by integral reinforcement learning.

An actor-critic loop adapts a three-tap error-feedback gain so that a plant
output tracks a reference, using only output and reference measurements.
"""

from irlmrac.errors import (
    ConfigError,
    DivergenceError,
    MracError,
    NumericError,
    OrderingError,
    SingularCriticError,
    UnboundedCostError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "MracError",
    "NumericError",
    "OrderingError",
    "SingularCriticError",
    "UnboundedCostError",
    "__version__",
]
