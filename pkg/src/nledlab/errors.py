"""Exception types shared across the package."""


class DomainError(ValueError):
    """Field point outside the region where a Lagrangian is defined."""


class NoConvergence(RuntimeError):
    """Newton inversion failed to reach tolerance.

    ``cells`` holds the flat indices of the offending points (grid cells
    when raised from the solver).
    """

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = tuple(int(c) for c in cells)


class CFLViolation(ValueError):
    """Time step exceeds the light-speed stability bound."""


class FitError(RuntimeError):
    """Centroid trajectory is not well described by a straight line."""
