"""Exception types raised by batemanlab."""


class BatemanError(Exception):
    """Base class for all library errors."""


class ChartDomainError(BatemanError, ValueError):
    """A state lies outside the domain of a coordinate chart."""


class StepFailure(BatemanError, RuntimeError):
    """The time integrator could not complete the requested interval."""


class TurningPointError(BatemanError, ValueError):
    """A radial point lies outside the classically allowed region."""


class QuadratureError(BatemanError, RuntimeError):
    """Adaptive quadrature did not converge."""


class NonPositiveRho(BatemanError, ValueError):
    """The splitting function rho must be strictly positive."""


class NonPositiveCasimir(BatemanError, ValueError):
    """A subsystem Casimir is not positive."""


class ZeroGammaB(BatemanError, ValueError):
    """The B-oscillator damping rate vanishes."""


class OffSurfaceError(BatemanError, ValueError):
    """A composite state does not satisfy the global constraint J = 0."""


class DomainError(BatemanError, ValueError):
    """An argument lies outside the validity domain of a formula."""


class RadicalDomainError(DomainError):
    """The spectral radical is negative for a real representation label."""


class GridTooCoarse(BatemanError, RuntimeError):
    """The finite-difference grid cannot resolve the requested levels."""
