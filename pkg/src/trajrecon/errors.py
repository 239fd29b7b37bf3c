"""Exception types shared across the package."""


class ReconError(Exception):
    """Base class for all errors raised by trajrecon."""


class PointError(ReconError, ValueError):
    """A point does not belong to the space it was used with."""


class UnsupportedError(ReconError):
    """The requested space/map/operation combination is not supported.

    Raised instead of returning an answer that could be wrong.
    """


class PreconditionError(ReconError):
    """A check that an operation depends on was not certified."""


class ConfigError(ReconError):
    """Invalid run configuration.

    ``problems`` holds ``(field_path, message)`` pairs.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        lines = [f"{path or '<root>'}: {msg}" for path, msg in self.problems]
        super().__init__("invalid config:\n  " + "\n  ".join(lines))
