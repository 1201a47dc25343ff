"""Error taxonomy for the export tool.

Reader-side classes reuse the code names of the consuming engine so a
failed validation names the same condition the engine itself would
report.
"""


class ExportError(Exception):
    """Base for every failure this tool reports deliberately."""

    @property
    def code(self) -> str:
        return type(self).__name__


class BadManifest(ExportError):
    pass


class UnreadableSource(ExportError):
    pass


class AxisMismatch(ExportError):
    pass


class NegativeValues(ExportError):
    pass


class IoFailure(ExportError):
    pass


class BadMagic(ExportError):
    pass


class BadVersion(ExportError):
    pass


class TruncatedFile(ExportError):
    pass


class BadDimensions(ExportError):
    pass


class TokenOutOfRange(ExportError):
    pass


class DuplicateRecordKey(ExportError):
    pass


class NonFiniteValue(ExportError):
    pass


class NegativeValue(ExportError):
    pass
