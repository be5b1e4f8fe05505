"""Exception types raised on invalid input data."""


class PadEvalError(ValueError):
    """Base class for data validation failures."""


class ManifestError(PadEvalError):
    pass


class ScoreFileError(PadEvalError):
    """A score file row failed validation.

    ``row`` is the 1-based line number in the source document (header is
    line 1 for CSV), ``field`` names the offending column when known.
    """

    def __init__(self, message, row=None, field=None):
        self.row = row
        self.field = field
        where = []
        if row is not None:
            where.append(f"row {row}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class EmptyClassError(PadEvalError):
    """A metric was requested on a class with no records."""


class CascadeError(PadEvalError):
    pass
