"""Exception hierarchy shared across the package."""


class NervePoolError(ValueError):
    """Base class for all errors raised by this package."""


class MalformedInputError(NervePoolError):
    """Input data violates a structural precondition."""


class DimensionError(NervePoolError):
    """Requested dimension is outside the range stored in a complex."""


class UnknownVertexError(NervePoolError, KeyError):
    """A vertex identifier does not belong to the complex."""

    def __str__(self) -> str:
        return ValueError.__str__(self)


class IncompleteCoverError(NervePoolError):
    """Some vertex of the complex is not assigned to any cluster."""


class UncoveredSimplexError(NervePoolError):
    """A block-row of the assignment matrix sums to zero."""
