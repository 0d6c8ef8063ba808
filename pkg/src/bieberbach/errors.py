"""Exception types shared across the package."""


class SpecError(ValueError):
    """Invalid or incompatible parameters (bad lattice kind, bad basis, ...)."""


class DomainError(ValueError):
    """Parameters outside the region where the singular metric is defined."""


class ResourceError(RuntimeError):
    """A discretization would exceed the configured node cap."""
