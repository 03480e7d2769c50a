"""Exception hierarchy.

``DataError`` covers everything a user can fix by changing inputs (the CLI
maps it to exit code 2); ``NumericFailure`` covers numerical breakdown during
training or prediction (exit code 3).
"""


class HtsError(Exception):
    """Base class for all package errors."""


class DataError(HtsError, ValueError):
    """Invalid input data, configuration or arguments."""


class CsvFormatError(DataError):
    def __init__(self, path, line, column, message):
        self.path = str(path)
        self.line = line
        self.column = column
        where = f"{self.path}:{line}"
        if column is not None:
            where += f":{column}"
        super().__init__(f"{where}: {message}")


class DegenerateColumnError(DataError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} is constant (max == min); cannot normalize")


class DimensionError(DataError):
    pass


class ExtrapolationError(DataError):
    def __init__(self, feature, value, low, high):
        self.feature = feature
        self.value = value
        super().__init__(
            f"feature {feature!r} = {value!r} lies outside the guard band [{low!r}, {high!r}]"
        )


class CandidateOverflowError(DataError):
    pass


class NumericFailure(HtsError, ArithmeticError):
    pass


class TrainingDivergedError(NumericFailure):
    def __init__(self, epoch, sample):
        self.epoch = epoch
        self.sample = sample
        super().__init__(
            f"non-finite value during training at epoch {epoch}, sample {sample}"
        )
