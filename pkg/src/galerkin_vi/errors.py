"""Exception types raised by the integrator and the study harness."""


class GalerkinError(Exception):
    """Base class for all library errors."""


class DegenerateHessian(GalerkinError):
    """The velocity Hessian (or a Newton Jacobian) is numerically singular."""


class NewtonDivergence(GalerkinError):
    """Newton iteration failed to reach its residual tolerance."""


class ShootingDivergence(GalerkinError):
    """Shooting on the initial momentum failed to hit the boundary value."""


class InvalidDegree(GalerkinError, ValueError):
    pass


class UnsupportedSize(GalerkinError, ValueError):
    pass


class OrderMismatch(GalerkinError):
    pass


class InsufficientData(GalerkinError, ValueError):
    pass


class ZeroError(GalerkinError, ValueError):
    """Every error in a sweep sits below the numerical floor."""


class IoFailure(GalerkinError, OSError):
    pass
