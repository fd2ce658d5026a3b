"""Exception types shared across the toolkit.

Plain precondition violations on scalar arguments (negative lengths,
out-of-range angles, malformed vectors) raise ValueError directly; the
classes here mark failures that callers are expected to branch on.
"""


class FitError(RuntimeError):
    """Tensile-test data cannot support the requested parameter fit."""


class ConfigError(ValueError):
    """A suit, plant, or controller description is structurally invalid."""


class ChannelConflictError(ConfigError):
    """A pressure channel is claimed by more than one active axis controller."""


class ZeroVarianceError(ValueError):
    """Delay estimation was requested for a constant signal."""


class SimulationFault(RuntimeError):
    """Integration produced a non-finite state.

    The ``partial`` attribute carries whatever trajectory prefix was
    recorded before the fault, or None.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
