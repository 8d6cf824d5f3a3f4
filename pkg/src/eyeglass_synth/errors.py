"""Exception and warning classes shared across the package."""


class InvalidArgument(ValueError):
    pass


class DegenerateConfigurationError(ValueError):
    """Anchor points too few, collinear, or otherwise unable to fix a pose."""


class MiningError(ValueError):
    pass


class InconsistentManifestError(ValueError):
    pass


class EmptyProtocolError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


class ParseError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
            if line is not None:
                loc += f"{line}:"
            loc += " "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class GimbalLockWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass


class EmptyCoverageWarning(UserWarning):
    pass


class InsufficientDataWarning(UserWarning):
    pass
