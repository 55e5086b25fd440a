"""
Polar decomposition g = e^X u of an invertible matrix
"""
import logging
from dataclasses import dataclass

import numpy as np

from core.errors import ConditioningError, PositivityError
from core.matrices import (
    DEFAULT_TOLERANCES,
    HermitianMatrix,
    Invertible,
    Tolerances,
    Unitary,
    as_array,
    expm_h,
    logm_h,
    relative_error,
    unitarity_defect,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolarFactors:
    X: HermitianMatrix
    u: Unitary

    def compose(self) -> np.ndarray:
        return expm_h(self.X) @ self.u.data

    def residual(self, g) -> float:
        return relative_error(self.compose(), g)


def polar_decompose(g, tolerances: Tolerances = DEFAULT_TOLERANCES) -> PolarFactors:
    """X = 1/2 log(g g*), u = e^{-X} g"""
    g = g if isinstance(g, Invertible) else Invertible(g, tolerances)
    array = g.data
    try:
        X = 0.5 * logm_h(array @ array.conj().T)
    except PositivityError as exc:
        raise ConditioningError(f"g g* lost positivity (condition {g.condition:.3e}): {exc}") from exc
    u = expm_h(-X) @ array
    logger.debug(f"Polar factors: unitarity defect {unitarity_defect(u):.3e}")
    return PolarFactors(HermitianMatrix(X, tolerances), Unitary(u, tolerances))


def period_norm(X) -> float:
    """||X||_F when e^X is unitary, else 0; the period group is trivial iff this always vanishes"""
    array = as_array(X)
    if unitarity_defect(expm_h(array)) <= DEFAULT_TOLERANCES.unitary_tol * max(1, array.shape[0]):
        return float(np.linalg.norm(array, "fro"))
    return 0.0
