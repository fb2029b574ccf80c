"""Exception types shared across the laboratory."""


class ParabolabError(Exception):
    """Base class for all package errors."""


class DomainError(ParabolabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(ParabolabError, ValueError):
    """A spec object failed its structural invariants."""


class BlowUpExceededError(DomainError):
    """A weight was evaluated at or beyond its finite blow-up time.

    Carries ``eta_sup`` (the supremum of the weight domain) so callers can
    rescale their horizon.
    """

    def __init__(self, message: str, eta_sup: float):
        super().__init__(message)
        self.eta_sup = eta_sup


class EllipticityViolationError(ParabolabError, ValueError):
    """Principal symbol failed the two-sided positivity bound; carries a witness."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class InadmissibleModulusError(ParabolabError, ValueError):
    """The modulus does not meet a construction's admissibility requirement
    (e.g. an Osgood modulus passed where a convergent tail is needed)."""


class SearchFailureError(ParabolabError, RuntimeError):
    """An automatic parameter search exhausted its budget."""


class RepresentabilityError(DomainError):
    """A requested absolute-scale value cannot be represented in double
    precision; carries the base-10 log magnitude and points to gauged mode."""

    def __init__(self, message: str, log10_magnitude: float):
        super().__init__(message)
        self.log10_magnitude = log10_magnitude


class QuadratureError(ParabolabError, RuntimeError):
    """A quadrature routine failed to reach its accuracy target."""
