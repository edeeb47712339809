"""Exception hierarchy shared by every module."""


class Cat1ProxError(Exception):
    pass


class InvalidInputError(Cat1ProxError, ValueError):
    pass


class DegenerateGeodesicError(Cat1ProxError, ValueError):
    """Raised for (near-)antipodal endpoints where the geodesic is not unique."""


class DomainError(Cat1ProxError, ValueError):
    """Point outside the space, or a function that is +inf where a finite value is needed."""


class ConvergenceError(Cat1ProxError, RuntimeError):
    """An iterative solver gave up.

    ``best`` holds the best iterate found; runners attach ``partial_trace``.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.partial_trace = None
