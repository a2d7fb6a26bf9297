"""Exception types shared across the package."""


class ChainGeometryError(ValueError):
    """Particle positions violate the strict ordering 0 < q_1 < ... < q_N < L."""


class PotentialDomainError(ValueError):
    """Pair potential evaluated at a nonpositive scaled separation."""


class IntegrationBlowupError(RuntimeError):
    """Particle ordering was lost during time stepping; reduce the time step."""


class EmptyCellError(RuntimeError):
    """A mesoscale average has zero kernel mass in at least one cell."""


class GridMismatchError(ValueError):
    """Fine-grid fields passed to an operator built for a different grid."""


class NearVacuumError(RuntimeError):
    """Reconstructed density fell below the vacuum threshold."""


class ZeroDensityCellError(ValueError):
    """Particle prescription requested for a cell with vanishing density."""


class InfeasiblePrescriptionError(RuntimeError):
    """The energy budget for velocity perturbations is negative.

    Carries the deficit (how much the budget is below zero) as ``deficit``.
    """

    def __init__(self, deficit, message=None):
        self.deficit = float(deficit)
        super().__init__(
            message or f"energy budget infeasible, deficit {self.deficit:.6e}"
        )


class ReconstructionFailureError(RuntimeError):
    """A reconstructed Jacobian is nonpositive somewhere on the fine grid."""


class CFLViolationError(RuntimeError):
    """Mesoscale time step violates the advective CFL bound."""


class NegativeDensityError(RuntimeError):
    """A mesoscale step produced a nonpositive density."""


class ConfigError(ValueError):
    """Experiment configuration failed validation."""
