"""Exception hierarchy shared by all estimator modules."""


class BayesSumError(Exception):
    """Base class for all library errors."""


class DomainError(BayesSumError):
    """An input lies outside the mathematical domain of an operation."""


class ContractError(BayesSumError):
    """Arguments violate a documented calling contract (lengths, modes)."""


class CapabilityError(BayesSumError):
    """The request is valid but exceeds a configured limit or an
    unsupported (distribution, kernel) combination."""


class SingularGramError(BayesSumError):
    """Gram matrix could not be factorized even after jitter escalation.

    Usually signals repeated or near-duplicate sample points.
    """


class SingularScoreError(BayesSumError):
    """Difference score requested at a point of zero probability."""


class NumericalError(BayesSumError):
    """A numerical invariant failed beyond the tolerated floating-point slack."""
