"""Exception hierarchy shared by the services, the CLI and the HTTP routes.

Every error is a ``ValueError`` so callers that only care about bad input can
catch the builtin; the CLI maps the whole family to exit code 2 and the routes
map it to HTTP 422.
"""


class WitnessKitError(ValueError):
    """Base class for precondition failures."""


class DimensionMismatchError(WitnessKitError):
    """Matrix or vector size does not agree with the declared factor dimensions."""


class NotHermitianError(WitnessKitError):
    """Operator deviates from its conjugate transpose by more than the tolerance."""


class NotAStateError(WitnessKitError):
    """Operator fails the trace or positivity preconditions of a density operator."""


class ParameterError(WitnessKitError):
    """Out-of-range construction parameter (lambda, partition, combination, family coefficients)."""


class UncertifiedWitnessError(WitnessKitError):
    """An operation that needs a certified witness received an uncertified one."""

