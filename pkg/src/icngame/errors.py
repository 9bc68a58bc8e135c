"""Exception hierarchy shared by every module."""


class IcnGameError(Exception):
    """Base class for all errors raised by the package."""


class NumericsError(IcnGameError):
    pass


class NoSignChange(NumericsError):
    """The bracket does not straddle a root."""


class MaxIterExceeded(NumericsError):
    pass


class DomainError(IcnGameError, ValueError):
    """An argument lies outside the domain of the function."""


class PriceOutOfRange(DomainError):
    pass


class CapacityExceeded(DomainError):
    """Carried load reached the link capacity B."""


class UnsupportedModel(IcnGameError, ValueError):
    """The requested operation has no form for this congestion factor."""


class SidePaymentTooLarge(IcnGameError):
    """The effective side payment violates the interior-equilibrium bound.

    ``bound`` is the strict upper limit on ``|effective side payment|`` and
    ``kappa`` is set when the failure happened inside a caching scenario.
    """

    def __init__(self, effective_ps, bound, kappa=None):
        self.effective_ps = effective_ps
        self.bound = bound
        self.kappa = kappa
        where = "" if kappa is None else f" at kappa={kappa:.12g}"
        super().__init__(
            f"|effective side payment| = {abs(effective_ps):.12g} must be < "
            f"{bound:.12g}{where} for an interior equilibrium"
        )


class PopularityError(DomainError):
    """Invalid popularity distribution; ``row`` is 1-based when known."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NotUnimodalWarning(UserWarning):
    pass
