"""Exception taxonomy shared by all modules."""


class SpecdynError(Exception):
    """Base class for all library errors."""


class ValidationError(SpecdynError):
    """Invalid input: bad spec, violated precondition, unresolvable window.

    Carries an optional `path` naming the offending field in a config
    document (e.g. "measure.weights").
    """

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path
        self.message = message


class ResourceError(SpecdynError):
    """A configured budget or cap would be exceeded."""


class NumericalError(SpecdynError):
    """A numerical routine failed (e.g. eigensolver non-convergence)."""
