"""Exception types shared across the package.

Every error carries a short ``category`` string; the CLI prints it as the
first token of its one-line diagnostic so scripts can branch on it.
"""


class NfdxError(Exception):
    category = "error"


class DomainError(NfdxError, ValueError):
    category = "domain"


class ConfigError(NfdxError, ValueError):
    category = "config"


class ShapeError(NfdxError, ValueError):
    category = "shape"


class LabelError(NfdxError, ValueError):
    category = "label-range"


class CorruptFileError(NfdxError):
    category = "corrupt-file"


class VersionMismatchError(NfdxError):
    category = "version-mismatch"


class MissingCellError(NfdxError, KeyError):
    category = "missing-cell"

    def __str__(self):
        return str(self.args[0]) if self.args else "missing cell"


class InsufficientDataError(NfdxError, ValueError):
    category = "insufficient-data"


class DivergenceError(NfdxError, FloatingPointError):
    category = "divergence"


class DatasetIOError(NfdxError, OSError):
    category = "io"
