class DtmechError(Exception):
    """Base class for every error the toolkit raises on purpose."""


class ConfigError(DtmechError, ValueError):
    """Bad flags, config file contents or unit strings."""


class NumericalError(DtmechError):
    """A computation could not deliver a trustworthy number."""


class DivergentTransform(NumericalError):
    """The gamma transform integral does not converge (growth rate g with g*tau >= 1)."""


class QuadratureNotConverged(NumericalError):
    """Node doubling and the adaptive fallback both missed the error target."""


class FitUnstable(NumericalError):
    """A log-linear Lyapunov fit left a residual above the accepted threshold."""


class StiffnessFailure(NumericalError):
    """Step-size control of the ODE integrator collapsed."""


class BackwardOnly(DtmechError, ValueError):
    """The scheme has beta = 0 (forward-difference), so its kernel is undefined for n > 0."""


class GridUnderResolved(DtmechError, ValueError):
    """The advection grid cannot resolve the initial profile or hold its drift."""
