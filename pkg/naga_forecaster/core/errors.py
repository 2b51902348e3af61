"""
Error types for the Naga forecaster.
Every failure the library reports on purpose is one of these.
"""


class DimensionError(ValueError):
    """Shapes of the operands do not fit the operation."""


class MissingParameterError(LookupError):
    """A gradient was requested for a parameter the tape never watched."""


class InputError(ValueError):
    """Model input is unusable (for example non-finite values)."""


class IngestionError(ValueError):
    """A CSV file could not be turned into a series table."""


class SplitError(ValueError):
    """A chronological split specification is invalid for the table."""


class WindowError(ValueError):
    """A split is too short for the requested look-back and horizon."""


class UnsupportedTargetError(ValueError):
    """A bilinear target pairs positions the Vedic encoder cannot align."""


class ConfigError(ValueError):
    """An experiment configuration file or override is invalid."""


class NonFiniteLossError(RuntimeError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, epoch, batch_index, loss):
        super().__init__(
            f"Non-finite training loss {loss!r} at epoch {epoch}, "
            f"batch {batch_index}"
        )
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
