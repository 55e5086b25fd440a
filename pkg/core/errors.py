"""
Exception hierarchy for the CPR splitting toolkit
"""


class CprError(Exception):
    """Root of every error raised by the library"""


class RoleError(CprError, ValueError):
    """A matrix does not satisfy the invariants of its role"""


class InvertibilityError(CprError):
    """A matrix expected to be invertible is (numerically) singular"""


class ConditioningError(CprError):
    """A computation lost accuracy beyond what the inputs allow"""


class PositivityError(ConditioningError):
    """A matrix expected to be positive definite has a non-positive eigenvalue"""


class SolverStall(CprError):
    """The splitting solver did not reach its residual tolerance"""

    def __init__(self, message, residual_history=None, level=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.level = level

    def __str__(self):
        base = super().__str__()
        if self.level is not None:
            base = f"[level {self.level}] {base}"
        if self.residual_history:
            base = f"{base} (last residual {self.residual_history[-1]:.3e} after {len(self.residual_history)} evaluations)"
        return base


class OracleInconclusive(CprError):
    """The brute-force oracle could not reach its residual target"""


class GapError(CprError):
    """Eigenvalues of a coadjoint base point are too close to separate"""


class ConfigurationError(CprError, ValueError):
    """Invalid run configuration, partition or chain"""


class DocumentError(CprError, ValueError):
    """A text document could not be read or is malformed"""
