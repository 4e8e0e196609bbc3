"""Exception hierarchy. Everything derives from ``ValueError`` so callers that
only care about bad input can catch that."""


class MDNREError(ValueError):
    pass


class DimensionError(MDNREError):
    """Landmark counts or array shapes disagree."""


class ConfigurationError(MDNREError):
    """Missing labels, empty candidate pools, bad parameters."""


class CalibrationError(MDNREError):
    """A non-neutral class was trained with zero displacement."""


class PoseError(MDNREError):
    """Pose anchors are degenerate (zero spread)."""


class NumericalError(MDNREError):
    """A linear system could not be solved."""


class ParseError(MDNREError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
