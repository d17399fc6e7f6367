"""Exception hierarchy shared by the library and the CLI."""


class PrabError(Exception):
    """Base class for all errors raised by prabfde."""


class ValidationError(PrabError, ValueError):
    """A problem description violates a hypothesis of the solver."""


class ParseError(ValidationError):
    """Malformed problem file or expression.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where = f" ({where})"
        super().__init__(message + where)


class PsiValidation(ValidationError):
    """The supplied psi is not an admissible change of variable."""


class DimensionMismatch(PrabError, ValueError):
    pass


class DomainError(PrabError, ValueError):
    pass


class OutOfRange(DomainError):
    pass


class NonConvergence(PrabError, ArithmeticError):
    """A series or an iteration failed to reach its tolerance."""


class MaxItersExceeded(NonConvergence):
    def __init__(self, iterations, last_update):
        self.iterations = iterations
        self.last_update = last_update
        super().__init__(
            f"Picard iteration did not converge in {iterations} iterations "
            f"(last update norm {last_update:.3e})"
        )


class SingularDiagonal(PrabError, ArithmeticError):
    pass
