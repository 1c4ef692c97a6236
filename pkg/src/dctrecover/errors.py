"""Exception hierarchy.  Each class carries the CLI exit code for its
error class so the command-line front end can map failures uniformly."""


class DctRecoverError(Exception):
    exit_code = 1


class UnsupportedFormat(DctRecoverError):
    exit_code = 3


class CorruptFile(DctRecoverError):
    exit_code = 4


class NotGrayscale(DctRecoverError):
    exit_code = 5


class IoFailure(DctRecoverError):
    exit_code = 6


class IndivisibleDimensions(DctRecoverError):
    exit_code = 7


class DimensionMismatch(DctRecoverError):
    exit_code = 8


class InvalidCount(DctRecoverError):
    exit_code = 9


class InvalidMask(DctRecoverError):
    exit_code = 9


class NotDcOnlyMask(DctRecoverError):
    exit_code = 10


class TooSmall(DctRecoverError):
    exit_code = 11


class EmptyInput(DctRecoverError):
    exit_code = 12


class RecoveryFailed(DctRecoverError):
    """The LP solver finished without an optimal certificate."""

    exit_code = 13

    def __init__(self, message, status=None, stats=None):
        super().__init__(message)
        self.status = status
        self.stats = stats
