"""Exception hierarchy shared by every module."""


class RwfnError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class InvalidArgument(RwfnError, ValueError):
    pass


class NumericError(RwfnError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, last_good=None):
        super().__init__(message)
        # parameters of the last finite optimisation step, if any
        self.last_good = last_good


class LookupFailure(RwfnError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class SchemaError(RwfnError, ValueError):
    pass


class ConsistencyError(RwfnError, ValueError):
    pass


class ParseError(RwfnError, ValueError):
    def __init__(self, message, index=None):
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)
        self.index = index


class SplitError(RwfnError, ValueError):
    pass


class StateError(RwfnError, RuntimeError):
    pass


class ConfigError(RwfnError, ValueError):
    exit_code = 2

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class CompatibilityError(RwfnError, ValueError):
    exit_code = 4
