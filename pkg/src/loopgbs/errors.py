"""Exception taxonomy shared across the toolkit."""


class InputError(ValueError):
    """Invalid user-supplied value, schedule, or file (CLI exit code 2)."""


class ProgramError(InputError):
    """A circuit program violates its structural constraints."""


class IngestionError(InputError):
    """A certificate or data file is malformed; the message names the key."""


class ResourceError(RuntimeError):
    """Requested computation exceeds the configured desk-scale limits (CLI exit code 3)."""


class UnsupportedStateError(InputError):
    """Operation is not defined for this state family."""
