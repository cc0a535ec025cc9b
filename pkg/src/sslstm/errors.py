"""Exception types raised across the package."""


class SsLstmError(Exception):
    """Base class for all package errors."""


class NonFiniteInput(SsLstmError, ValueError):
    pass


class EmbeddingTooLong(SsLstmError, ValueError):
    pass


class WindowTooLarge(SsLstmError, ValueError):
    pass


class InvalidStep(SsLstmError, ValueError):
    pass


class EmptyMatrix(SsLstmError, ValueError):
    pass


class EmptyInput(SsLstmError, ValueError):
    pass


class InsufficientRows(SsLstmError, ValueError):
    pass


class DegenerateSpectrum(SsLstmError, ValueError):
    """No usable eigengap between signal and noise subspaces."""


class RankDeficientBlock(SsLstmError, ValueError):
    pass


class ZeroEnergy(SsLstmError, ValueError):
    pass


class ShapeMismatch(SsLstmError, ValueError):
    pass


class DivergenceDetected(SsLstmError, RuntimeError):
    pass


class WindowLengthMismatch(SsLstmError, ValueError):
    pass


class LengthMismatch(SsLstmError, ValueError):
    pass


class ZeroDenominator(SsLstmError, ZeroDivisionError):
    pass


class ConfigError(SsLstmError, ValueError):
    pass


class CsvParseError(SsLstmError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StageError(SsLstmError):
    """Wraps a failure inside one pipeline stage.

    ``stage`` names the stage (``"extract"``, ``"train"`` ...) and ``index``
    optionally identifies the snapshot or series being processed.
    """

    def __init__(self, stage, cause, index=None):
        self.stage = stage
        self.index = index
        self.cause = cause
        where = stage if index is None else f"{stage}[{index}]"
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")


class NoConvergence(UserWarning):
    """Emitted when an inner fixed-point iteration hits its iteration cap."""
