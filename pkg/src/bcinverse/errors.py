"""Exception types raised by the solvers."""


class FormatError(ValueError):
    """Malformed input file."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ConvergenceError(RuntimeError):
    """Picard series did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)


class SolvabilityError(RuntimeError):
    """A discrete integral equation is singular."""


class EigensolverError(RuntimeError):
    pass


class FlowError(RuntimeError):
    """The A-amplitude flow blew up."""

    def __init__(self, message, x_reached=None):
        self.x_reached = x_reached
        super().__init__(message)


class PoleProximityError(RuntimeError):
    pass
