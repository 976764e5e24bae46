"""Exception hierarchy shared by every module of the package."""


class WeilError(Exception):
    """Base class for all errors raised by weilpoisson."""


class AlgebraMismatch(WeilError, ValueError):
    """Operands live in different Weil algebras (or different dimensions)."""


class InfiniteDimensional(WeilError, ValueError):
    """A monomial ideal misses a pure power of some generator."""


class AlgebraTooLarge(WeilError, ValueError):
    """The quotient has more basis monomials than the supported cap."""


class NotInvertible(WeilError, ArithmeticError):
    """Inverse requested for an element of the maximal ideal."""


class SingularAugmentation(WeilError, ArithmeticError):
    """The real part of a matrix over A is singular."""


class SpecSyntaxError(WeilError, ValueError):
    """Malformed expression or algebra-spec text; carries the character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifier(SpecSyntaxError):
    pass


class VariableOutOfRange(SpecSyntaxError):
    pass


class DomainError(WeilError, ArithmeticError):
    """An expression was evaluated outside the domain of one of its nodes."""


class SamplingExhausted(WeilError, RuntimeError):
    """Too many sample points fell outside the domain of the compared functions."""


class UnrepresentableBracket(WeilError, ValueError):
    """A vector-field bracket would leave the finite-sum class of lifted functions."""


class DegenerateAt(WeilError, ArithmeticError):
    """A symplectic matrix is (numerically) singular at the given point."""

    def __init__(self, point, message="symplectic matrix is degenerate"):
        super().__init__(f"{message} at {point!r}")
        self.point = point
