"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """Invalid simulation or analysis configuration.

    ``key`` names the offending configuration entry when known.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InputError(ValueError):
    """Malformed external input (initial-law files and the like)."""


class ParseError(ValueError):
    """A path file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class StorageError(OSError):
    """Writing an output artifact failed."""


class EventBufferOverflow(RuntimeError):
    """A tracked path exceeded its event budget.

    ``partial`` holds the records simulated up to the overflow.
    """

    def __init__(self, message, partial=()):
        super().__init__(message)
        self.partial = list(partial)
