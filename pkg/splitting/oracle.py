"""
Derivative-free reference solver for psi_split, used only to cross-check the main solver on small inputs
"""
import logging

import numpy as np

from configuration.config import ORACLE
from core.errors import ConfigurationError, OracleInconclusive
from core.matrices import HermitianMatrix, PositiveDefinite, from_coordinates, hermitian_basis
from expectations.conditional import ConditionalExpectation
from splitting.cpr import PsiSplit, _ResidualMap

logger = logging.getLogger(__name__)


def oracle_split(p, E: ConditionalExpectation, tol: float = ORACLE["tol"],
                 max_sweeps: int = ORACLE["max_sweeps"]) -> PsiSplit:
    """Coordinate descent with per-coordinate shrinking steps on the real coordinates of Herm(B),
    from Y = 0, for a zero of E(log(e^{-Y} p e^{-Y}))
    """
    p = p if isinstance(p, PositiveDefinite) else PositiveDefinite(p)
    if p.dim > ORACLE["max_dim"]:
        raise ConfigurationError(f"oracle_split is limited to dim <= {ORACLE['max_dim']}, got {p.dim}")
    if p.dim != E.dim:
        raise ConfigurationError(f"Expectation of dim {E.dim} cannot split a {p.dim}x{p.dim} matrix")

    residual_map = _ResidualMap(p.data, E)
    basis = hermitian_basis(E.partition.mask)
    coordinates = np.zeros(basis.shape[0])

    def objective(point):
        return float(np.linalg.norm(residual_map(from_coordinates(point, basis)), "fro"))

    value = objective(coordinates)
    history = [value]
    steps = np.full(coordinates.size, ORACLE["initial_step"])
    sweeps = 0
    while value > tol and sweeps < max_sweeps and steps.max(initial=0.0) > np.finfo(float).eps:
        sweeps += 1
        for index in range(coordinates.size):
            for direction in (1.0, -1.0):
                trial = coordinates.copy()
                trial[index] += direction * steps[index]
                trial_value = objective(trial)
                if trial_value < value:
                    coordinates, value = trial, trial_value
                    steps[index] = min(2.0 * steps[index], ORACLE["initial_step"])
                    break
            else:
                steps[index] *= 0.5
        history.append(value)

    if value > tol:
        raise OracleInconclusive(
            f"Oracle stopped at residual {value:.3e} > {tol:.1e} after {sweeps} sweeps "
            f"(largest step {steps.max(initial=0.0):.1e})"
        )
    Y = from_coordinates(coordinates, basis)
    X = 0.5 * residual_map.inner(Y)
    X = X - E(X)
    logger.debug(f"Oracle reached residual {value:.3e} in {sweeps} sweeps")
    return PsiSplit(
        X=HermitianMatrix(X),
        Y=HermitianMatrix(Y),
        residual=value,
        iterations=sweeps,
        converged=True,
        method="oracle",
        residual_history=history,
    )
