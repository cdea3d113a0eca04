"""Exception hierarchy shared by the library and the command line."""


class MatcpdError(Exception):
    """Base class; ``code`` is the structured error code reported by the CLI."""

    code = "error"


class InvalidDataError(MatcpdError, ValueError):
    code = "invalid-data"


class BoundaryError(MatcpdError, ValueError):
    """Boundary removal parameter incompatible with the series length."""

    code = "boundary"


class NumericalError(MatcpdError, ArithmeticError):
    code = "numerical"


class SchemaError(MatcpdError, ValueError):
    code = "schema"


class ParseError(MatcpdError, ValueError):
    code = "parse"


class NotRejectedError(MatcpdError, RuntimeError):
    """A change-point estimate was requested from a test that did not reject."""

    code = "logic"


class ConfigError(MatcpdError, ValueError):
    code = "config"
