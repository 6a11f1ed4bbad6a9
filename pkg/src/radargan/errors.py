"""Exception types shared across the package."""


class RadarGanError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RadarGanError, ValueError):
    """Input data or parameters violate a documented invariant."""


class GeometryError(ValidationError):
    """Scene layout does not fit the simulation domain."""


class ConfigError(RadarGanError, ValueError):
    """Bad configuration file, flag combination, or unknown key."""


class FormatError(RadarGanError, ValueError):
    """On-disk artifact is corrupt, truncated, or of the wrong version."""


class DimensionError(RadarGanError, ValueError):
    """Array shapes are inconsistent with the requested operation."""


class DivergenceError(RadarGanError, RuntimeError):
    """A field update produced non-finite values."""

    def __init__(self, message: str, step_index: int):
        super().__init__(f"{message} (step {step_index})")
        self.step_index = step_index


class TrainingDivergedError(RadarGanError, RuntimeError):
    """A training loss went non-finite."""

    def __init__(self, message: str, stage: int, epoch: int, batch: int):
        super().__init__(f"{message} (stage {stage}, epoch {epoch}, batch {batch})")
        self.stage = stage
        self.epoch = epoch
        self.batch = batch


class ConflictError(RadarGanError):
    """An operation conflicts with already-recorded state."""


class NotFoundError(RadarGanError):
    """A referenced resource does not exist."""
