"""Exception taxonomy shared by every stage.

Each class carries a stable ``code`` (its own name) that the CLI prints as
``ERROR <code>: <detail>`` before exiting with status 2.
"""


class DataError(Exception):
    """Base class for all recoverable data/contract violations."""

    code = "DataError"

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        cls.code = cls.__name__


# --- attention-stack container -------------------------------------------

class BadMagic(DataError):
    pass


class BadVersion(DataError):
    pass


class TruncatedFile(DataError):
    pass


class DuplicateRecordKey(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class NegativeValue(DataError):
    pass


class BadDimensions(DataError):
    pass


class TokenOutOfRange(DataError):
    pass


class IoFailure(DataError):
    pass


# --- greymap / pixmap images ---------------------------------------------

class BadHeader(DataError):
    pass


class TruncatedPixels(DataError):
    pass


# --- numeric stages -------------------------------------------------------

class FieldOutOfRange(DataError):
    pass


class NoRecordsForToken(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NoSeeds(DataError):
    pass


class EmptyGrid(DataError):
    pass


class MissingGroundTruth(DataError):
    pass


class InvalidGeometry(DataError):
    pass


# --- configuration --------------------------------------------------------

class BadConfig(DataError):
    pass
