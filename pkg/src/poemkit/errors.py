"""Exception hierarchy.

Everything raised on purpose by poemkit derives from :class:`PoemError`.
The CLI maps :class:`ConfigError` to exit status 2 and every other
:class:`PoemError` to exit status 3.
"""


class PoemError(Exception):
    """Base class for all poemkit errors."""


class ConfigError(PoemError):
    """A study configuration is malformed or violates a constraint."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


# grid construction


class LadderError(PoemError):
    pass


class NonIntegerSegments(LadderError):
    def __init__(self, level, value):
        self.level = level
        self.value = value
        super().__init__(
            f"level {level} would need {float(value):g} grid segments; "
            "segment counts must be integers"
        )


class NonIntegerSteps(LadderError):
    def __init__(self, level, value):
        self.level = level
        self.value = value
        super().__init__(
            f"level {level} would need {float(value):g} time steps; "
            "t_end / dt must be an integer"
        )


# solvers


class UnstableParameters(PoemError):
    pass


# estimator


class DegenerateOrders(PoemError):
    pass


class SingularSystem(PoemError):
    pass


class MismatchedSupport(PoemError):
    pass


class EmptyField(PoemError):
    pass


class NonPositiveValue(PoemError):
    pass


class ZeroLeadingTerm(PoemError):
    pass


class InsufficientWindows(PoemError):
    pass


class UndefinedOrder(PoemError):
    pass


# midas


class MismatchedLadder(PoemError):
    pass


class NonBracketing(PoemError):
    pass


class InsufficientNeighbors(PoemError):
    pass
