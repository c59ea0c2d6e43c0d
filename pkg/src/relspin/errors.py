"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An operation was called with input violating its stated contract."""


class SingularMomentumError(PreconditionError):
    """A momentum-space operator with a k=0 singularity met a state with
    non-negligible zero-mode weight.  The longitudinal projector has no
    direction-independent limit at k=0, so no convention value is supplied."""


class GridResolutionError(PreconditionError):
    """A wavepacket violates the resolution or boundary-margin contract."""


class BoundaryFluxError(RuntimeError):
    """Norm leaking into the boundary margin shell exceeded the abort limit."""


class KrylovConvergenceError(RuntimeError):
    """Krylov propagation failed to reach the requested accuracy.

    Carries a suggested smaller time step in ``suggested_dt``.
    """

    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class ConfigError(ValueError):
    """Scenario configuration is invalid; ``path`` locates the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
