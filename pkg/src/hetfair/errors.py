"""Exception hierarchy.

``ValidationError`` and its subclasses signal bad input (CLI exit code 1);
everything else deriving from ``HetfairError`` is a runtime failure (exit 2).
"""


class HetfairError(Exception):
    pass


class ValidationError(HetfairError, ValueError):
    pass


class SchemaError(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ParameterError(ValidationError):
    pass


class InsufficientDataError(HetfairError, ValueError):
    pass


class HeteroUnavailableError(HetfairError):
    """Both heterogeneous clusters of a target are empty."""


class NoSourceError(HetfairError):
    """The target cluster has no instances to sample from."""


class DegeneratePairError(HetfairError, ValueError):
    """Zero distance between the two instances of a generation pair."""


class UndefinedRateError(HetfairError, ValueError):
    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class TrainingError(HetfairError, ValueError):
    pass


class FoldError(HetfairError):
    pass
