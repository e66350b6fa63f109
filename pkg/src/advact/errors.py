"""Exception hierarchy shared across the package."""


class AdvactError(Exception):
    """Base class for every error raised by advact."""


class ShapeError(AdvactError, ValueError):
    """Operand shapes are incompatible."""

    def __init__(self, message, *shapes):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class ContractError(AdvactError, ValueError):
    """A precondition of an operation was violated."""


class DomainError(AdvactError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class NumericOverflowError(AdvactError, ArithmeticError):
    """A value left the representable float range or became NaN.

    ``context`` carries whatever locating information the raiser had
    (layer name, epoch, batch).
    """

    def __init__(self, message, **context):
        self.base_message = message
        if context:
            where = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({where})"
        super().__init__(message)
        self.context = context


class SingularityError(NumericOverflowError):
    """Evaluation too close to a pole of a closed form."""


class SpecError(AdvactError, ValueError):
    """A network or experiment description is inconsistent."""


class ParseError(AdvactError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
