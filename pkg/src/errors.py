"""Exception hierarchy for BeamEngineer"""

from typing import Optional


class BeamEngineerError(Exception):
    """Base class for every error raised by the package"""


class ShapeError(BeamEngineerError, ValueError):
    """Operand shapes are incompatible"""


class SingularMatrixError(BeamEngineerError):
    """Linear system is singular or too ill-conditioned to solve"""

    def __init__(self, message: str, condition: Optional[float] = None):
        super().__init__(message)
        self.condition = condition


class NonFiniteError(BeamEngineerError, FloatingPointError):
    """A computation produced NaN or Inf"""


class TapeError(BeamEngineerError):
    """Invalid use of an autodiff tape"""


class ConfigError(BeamEngineerError, ValueError):
    """Invalid or unknown configuration value"""


class CheckpointError(BeamEngineerError):
    """Checkpoint file is malformed or does not match the expected model"""


class DatasetError(BeamEngineerError):
    """Dataset file is malformed"""


class TrainingDivergedError(BeamEngineerError):
    """Training loss became non-finite"""

    def __init__(self, message: str, last_good: Optional[str] = None):
        super().__init__(message)
        self.last_good = last_good


class InvalidInstanceError(BeamEngineerError, ValueError):
    """Problem instance violates its invariants"""
