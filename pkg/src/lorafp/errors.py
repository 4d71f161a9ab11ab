"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid configuration: missing column, bad fractions, bad hyperparameter."""


class ParseError(ValueError):
    """A data cell could not be parsed."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(ValueError):
    """A record violates the fingerprint schema."""


class ManifestError(ValueError):
    """A split manifest file is malformed or inconsistent."""


class FitError(ValueError):
    """A model or transform cannot be fitted on the given data."""


class TrainingError(RuntimeError):
    """Network training diverged."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
