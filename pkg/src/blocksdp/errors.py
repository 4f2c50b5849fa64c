"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class SizeCapError(ValueError):
    """An exhaustive enumeration would exceed its stated size cap."""
