"""Exception types shared across the package.

The CLI maps :class:`DomainError` to exit status 2 and
:class:`NumericalError` to exit status 3.
"""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class NumericalError(ArithmeticError):
    """A quadrature or root solve failed to reach its tolerance."""


class NoCrossingError(DomainError):
    """The full-insurance and wait-until-safe values never cross."""


class MultipleCrossingsError(NumericalError):
    """More than one crossing was found where a unique one was expected."""
