"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SensiError(Exception):
    exit_code = 1


class MissingInputError(SensiError, FileNotFoundError):
    exit_code = 2


class DataValidationError(SensiError, ValueError):
    exit_code = 3


class ParseError(DataValidationError):
    """A malformed input row. ``row`` is the 1-based line number in the file."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ShapeError(DataValidationError):
    pass


class ConfigError(SensiError, ValueError):
    exit_code = 4


class ModelFormatError(SensiError, ValueError):
    pass


class TrainingDivergedError(SensiError, ArithmeticError):
    pass
