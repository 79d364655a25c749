"""Exception types shared across the package."""


class DistributionError(ValueError):
    """Probabilities or state counts violate the distribution contract."""


class SpreadError(ValueError):
    """A spread is not a valid partition for the given distribution."""


class DecodeError(ValueError):
    """A binary frame or container cannot be decoded."""


class SingularSystem(ArithmeticError):
    """The spread's Markov chain has no unique stationary distribution."""


class CapExceeded(RuntimeError):
    """An enumeration would exceed the configured size cap."""
