class ExplicError(Exception):
    """Base class for all errors raised by the package."""


class ParseError(ExplicError):
    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        if pos is not None and text is not None:
            line = text.count("\n", 0, pos) + 1
            col = pos - (text.rfind("\n", 0, pos) + 1) + 1
            message = f"{message} (line {line}, column {col})"
        elif pos is not None:
            message = f"{message} (at offset {pos})"
        super().__init__(message)


class ModelError(ExplicError):
    pass


class FormulaError(ExplicError):
    pass


class TraceError(ExplicError):
    pass


class ResourceLimit(ExplicError):
    """An automaton construction exceeded the configured state cap or deadline."""


class FragmentError(ExplicError):
    """Formula lies outside the fragment the bounded oracle can decide."""
