"""Exception types raised by the library."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature hit its subdivision cap before meeting tolerance.

    Attributes
    ----------
    achieved : float
        Worst ratio of estimated error to requested tolerance at the cap.
    """

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


class ConvergenceError(ArithmeticError):
    """A refinement loop stopped before its stopping criterion was met."""

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)
