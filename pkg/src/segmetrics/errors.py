"""Exception types shared across the package.

Everything raised on bad user input derives from :class:`SegmetricsError`
so callers (notably the CLI) can distinguish data problems from genuine
bugs, which surface as plain ``AssertionError``.
"""


class SegmetricsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidClassError(SegmetricsError, ValueError):
    """A class id is outside the valid range for a label map."""


class InvalidPairingError(SegmetricsError, ValueError):
    """Two objects that must describe the same class or canvas do not."""


class DimensionMismatchError(SegmetricsError, ValueError):
    """Paired maps have different spatial dimensions."""


class UndefinedMetricError(SegmetricsError, ValueError):
    """A metric has no defined value for the given input."""


class FormatError(SegmetricsError, ValueError):
    """A file could not be decoded as a label or confidence map."""

    def __init__(self, message, *, path=None, byte_offset=None):
        path = None if path is None else str(path)
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if byte_offset is not None:
            detail = f"{detail} (byte offset {byte_offset})"
        super().__init__(detail)
        self.path = path
        self.byte_offset = byte_offset


class PairingError(SegmetricsError, ValueError):
    """Dataset directories could not be paired up."""


class PanelError(SegmetricsError, RuntimeError):
    """A synthetic panel failed its declared-topology check."""


class PerturbationError(SegmetricsError, RuntimeError):
    """A perturbation could not be applied within its retry budget."""
