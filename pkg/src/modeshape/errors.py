"""Exception hierarchy.

Validation problems (bad inputs, malformed files) are distinguished from
numerical failures (infeasible basis, non-convergence) so the CLI can map
them to different exit codes.
"""


class ModeshapeError(Exception):
    """Base class for all package errors."""


class ValidationError(ModeshapeError, ValueError):
    """Malformed input: bad field values, shape mismatches, schema violations."""


class InfeasibleBasisError(ModeshapeError):
    """The Fourier basis cannot support the requested constraints.

    Carries ``min_tau`` (seconds), an estimate of the shortest pulse
    duration that would make the request feasible, when one can be given.
    """

    def __init__(self, message, min_tau=None):
        super().__init__(message)
        self.min_tau = min_tau


class NoSignalError(ModeshapeError):
    """The target row is annihilated by the constraints (lambda_max ~ 0)."""


class QuadratureError(ModeshapeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    ``estimate`` holds the best available value, ``achieved`` the error bound
    actually reached.
    """

    def __init__(self, message, estimate=None, achieved=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved = achieved


class IntegrationError(ModeshapeError):
    """Time propagation did not converge within the step-refinement budget."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class FockCutoffError(ModeshapeError):
    """Significant population reached the top Fock level; n_max is too small."""

    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class DegenerateReferenceError(ModeshapeError):
    """Reference population is too close to zero for a fractional error."""
