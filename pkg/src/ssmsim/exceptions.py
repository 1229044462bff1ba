"""Exception types shared across the simulator.

All of them subclass ``ValueError`` or ``RuntimeError`` so callers that only
care about "bad input" vs "run failed" can catch the builtins.
"""


class ParameterError(ValueError):
    """A scalar parameter is outside its legal range."""


class DimensionError(ValueError):
    """Array shapes do not agree."""


class NumericError(ValueError):
    """Non-finite values where finite ones are required."""


class RangeError(ValueError):
    """Input voltages / pixel values outside [0, 1]."""


class ReadDisturbError(ValueError):
    """A read voltage exceeds the device threshold and would disturb its state."""


class DivergedTrainingError(RuntimeError):
    def __init__(self, epoch, message=None):
        self.epoch = epoch
        super().__init__(message or f"non-finite weights after epoch {epoch}")
