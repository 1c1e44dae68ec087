"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the open interval or range an operation accepts."""


class ResolutionError(RuntimeError):
    """Spectral tail too large for the requested result to be meaningful."""


class QuadratureError(RuntimeError):
    pass


class NonSimpleZero(RuntimeError):
    def __init__(self, location, derivative, message=None):
        self.location = location
        self.derivative = derivative
        super().__init__(message or f"zero at t={location:.6g} has |f'|={abs(derivative):.3g}")


class EndpointZero(RuntimeError):
    def __init__(self, endpoint, value):
        self.endpoint = endpoint
        self.value = value
        super().__init__(f"profile (nearly) vanishes at t={endpoint:+g}: |f|={abs(value):.3g}")


class ConstraintViolation(RuntimeError):
    """w + 1 <= 0 somewhere, so (w+1)^p is not defined."""


class NoConvergence(RuntimeError):
    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class NodalMismatch(RuntimeError):
    def __init__(self, expected, found, point=None):
        self.expected = expected
        self.found = found
        self.point = point
        super().__init__(f"converged solution has nodal class {found}, expected {expected}")


class StepCollapse(RuntimeError):
    def __init__(self, message, branch=None):
        self.branch = branch
        super().__init__(message)


class NodalChange(RuntimeError):
    def __init__(self, expected, found, branch=None):
        self.expected = expected
        self.found = found
        self.branch = branch
        super().__init__(
            f"nodal class changed from {expected} to {found} along branch "
            "(suspected numerical crossing)"
        )


class BlowupDetected(RuntimeError):
    pass


class ToleranceFailure(RuntimeError):
    pass
