"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid caller-supplied data: bad matrix, failed validation, malformed config."""


class TraceRequiredError(InputError):
    """Operation is only defined for tracial states."""


class ConsistencyError(RuntimeError):
    """An identity that must hold mathematically failed numerically.

    Raised when two independent computations of the same object disagree
    beyond tolerance, which signals a broken precondition (for example a
    subsystem that is not actually invariant under the modular flow) or a
    genuine defect, never routine round-off.
    """


class ConfigError(InputError):
    """Config parsing/validation failure, located by a path into the document."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
