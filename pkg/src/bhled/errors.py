"""Exception types shared across the package."""


class BhledError(Exception):
    """Base class for all package errors."""


class ConfigError(BhledError):
    """Malformed or inconsistent run configuration (CLI exit code 2)."""


class DomainTooSmall(BhledError):
    """Radial domain does not extend far enough to test the axioms."""


class NonLorentzianMetric(BhledError):
    """Tabulated metric has a point with det(h) >= 0 or h^00 >= 0."""

    def __init__(self, r, message=None):
        self.r = r
        super().__init__(message or f"metric loses Lorentzian signature at r = {r}")


class NoHorizon(BhledError):
    """g^rr does not change sign on the scanned domain."""


class AxiomViolation(BhledError):
    """One of the black-hole axioms fails (multiple horizons, no trapping, ...)."""


class DegenerateTrapping(BhledError):
    """Critical point of the effective potential is not a nondegenerate maximum."""


class InternalError(BhledError):
    """Inconsistent internal tables (bad metric data, non-monotone tortoise map)."""


class IdentityCheckFailed(BhledError):
    """A closed-form identity disagrees with its finite-difference cross check."""


class ZeroModeUndefined(BhledError):
    """An l = 0 quantity leaked into the mode pipeline (belongs to the charge sector)."""


class AliasingError(BhledError):
    """Requested mode content exceeds what the angular quadrature resolves."""


class GridTooSmall(BhledError):
    """Radial grid has too few points for the stencil order."""


class CFLViolation(BhledError):
    """Requested time step exceeds the CFL limit."""


class BufferBreach(BhledError):
    """Field support reached the outer boundary under the causal-buffer policy."""


class EvolutionAborted(BhledError):
    """Evolution stopped early (NaN detected); carries the last good trajectory."""

    def __init__(self, message, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class ContinuityViolation(BhledError):
    """Maxwell source pair violates the continuity equation."""

    def __init__(self, mode, residual, tol):
        self.mode = mode
        self.residual = residual
        super().__init__(
            f"continuity residual {residual:.3e} above tolerance {tol:.3e} for mode {mode}"
        )


class ChargeTransportInconsistency(BhledError):
    """Radial-quadrature and time-integration charge routes disagree."""


class SolverFailed(BhledError):
    """Elliptic solver did not reach the requested residual."""


class SingularWeight(BhledError):
    """Weight evaluated exactly at its singular anchor radius."""


class WindowError(BhledError):
    """Requested space-time window lies outside the sampled data."""
