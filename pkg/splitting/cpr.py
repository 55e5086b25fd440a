"""
CPR splitting g = u e^X e^Y of an invertible matrix relative to a conditional expectation E,
and its positive-cone counterpart p = e^Y e^{2X} e^Y.

Convention: p := g* g, so u = g e^{-Y} e^{-X}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy import linalg as sla

from configuration.config import SOLVER
from core.errors import ConditioningError, ConfigurationError, SolverStall
from core.matrices import (
    HermitianMatrix,
    Invertible,
    PositiveDefinite,
    Unitary,
    as_array,
    expm_h,
    from_coordinates,
    hermitian_basis,
    logm_h,
    relative_error,
    to_coordinates,
)
from expectations.conditional import ConditionalExpectation
from utils.document_utils import matrix_to_document

logger = logging.getLogger(__name__)

FALLBACKS = ("fixed_point_only", "newton_fallback")


@dataclass
class SolverConfig:
    """Configuration for the damped fixed-point solver and its Newton fallback"""
    residual_tol: float = SOLVER["residual_tol"]
    max_iterations: int = SOLVER["max_iterations"]
    damping_shrink: float = SOLVER["damping_shrink"]
    fallback: str = SOLVER["fallback"]
    min_step: float = SOLVER["min_step"]
    newton_step: float = SOLVER["newton_step"]

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ConfigurationError(f"residual_tol must be > 0, got {self.residual_tol}")
        if self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0 < self.damping_shrink < 1:
            raise ConfigurationError(f"damping_shrink must lie in (0, 1), got {self.damping_shrink}")
        if self.fallback not in FALLBACKS:
            raise ConfigurationError(f"fallback must be one of {', '.join(FALLBACKS)}, got {self.fallback!r}")
        if not self.min_step > 0 or not self.newton_step > 0:
            raise ConfigurationError("min_step and newton_step must be > 0")


@dataclass
class PsiSplit:
    """Factors (X, Y) of p = e^Y e^{2X} e^Y with solver diagnostics; unpacks as (X, Y)"""
    X: HermitianMatrix
    Y: HermitianMatrix
    residual: float
    iterations: int
    converged: bool
    method: str
    residual_history: List[float] = field(default_factory=list)

    def __iter__(self) -> Iterator[HermitianMatrix]:
        return iter((self.X, self.Y))

    def compose(self) -> np.ndarray:
        half = expm_h(self.Y)
        return half @ expm_h(2 * as_array(self.X)) @ half


@dataclass
class SplitFactors:
    """u e^{X_n} ... e^{X_2} e^{Y_1}; X_list is ordered X_n, ..., X_2"""
    u: Unitary
    X_list: Tuple[HermitianMatrix, ...]
    Y1: HermitianMatrix
    residual: float
    iterations: int
    solver_residual: float = 0.0
    converged: bool = True

    @property
    def depth(self) -> int:
        return len(self.X_list) + 1

    def compose(self) -> np.ndarray:
        result = self.u.data.copy()
        for X in self.X_list:
            result = result @ expm_h(X)
        return result @ expm_h(self.Y1)

    def psi_compose(self) -> np.ndarray:
        return psi_compose(self.X_list, self.Y1)

    def to_document(self) -> dict:
        return {
            "u": matrix_to_document(self.u.data),
            "X": [matrix_to_document(X.data) for X in self.X_list],
            "Y1": matrix_to_document(self.Y1.data),
            "residual": self.residual,
            "solver_residual": self.solver_residual,
            "iterations": self.iterations,
            "converged": self.converged
        }


def psi_compose(X_list, Y1) -> np.ndarray:
    """e^{Y_1} e^{X_2} ... e^{X_{n-1}} e^{2 X_n} e^{X_{n-1}} ... e^{X_2} e^{Y_1}"""
    inner = expm_h(2 * as_array(X_list[0]))
    for X in X_list[1:]:
        side = expm_h(X)
        inner = side @ inner @ side
    side = expm_h(Y1)
    return side @ inner @ side


def cpr_compose(u, X, Y) -> np.ndarray:
    return as_array(u) @ expm_h(X) @ expm_h(Y)


def noise_floor(p: np.ndarray, log_scale: float) -> float:
    """Attainable residual of the eigen-based residual map for this p"""
    eigenvalues = np.linalg.eigvalsh(p)
    condition = eigenvalues[-1] / eigenvalues[0]
    return 16 * p.shape[0] * np.finfo(float).eps * condition * log_scale


class _ResidualMap:
    """R(Y) = E(log(e^{-Y} p e^{-Y}))"""

    def __init__(self, p: np.ndarray, E: ConditionalExpectation):
        self.p = p
        self.E = E
        self.evaluations = 0

    def inner(self, Y: np.ndarray) -> np.ndarray:
        half = expm_h(-Y)
        return logm_h(half @ self.p @ half)

    def __call__(self, Y: np.ndarray) -> np.ndarray:
        self.evaluations += 1
        return self.E(self.inner(Y))


def _fixed_point(residual_map, Y, R, cfg: SolverConfig, target: float, history: List[float]):
    step = 0.5
    r = history[-1]
    iterations = 0
    while r > target and iterations < cfg.max_iterations:
        iterations += 1
        candidate = Y + step * R
        R_candidate = residual_map(candidate)
        r_candidate = float(np.linalg.norm(R_candidate, "fro"))
        if r_candidate < r:
            Y, R, r = candidate, R_candidate, r_candidate
            history.append(r)
            logger.debug(f"fixed point iteration {iterations}: residual {r:.3e}, step {step:.2e}")
            step = min(0.5, step / cfg.damping_shrink)
        else:
            step *= cfg.damping_shrink
            if step < cfg.min_step:
                logger.debug(f"fixed point stalled at residual {r:.3e} after {iterations} iterations")
                break
    return Y, R, iterations


def _newton(residual_map, Y, R, cfg: SolverConfig, target: float, history: List[float]):
    basis = hermitian_basis(residual_map.E.partition.mask)
    size = basis.shape[0]
    coordinates = to_coordinates(R, basis)
    r = history[-1]
    iterations = 0
    while r > target and iterations < cfg.max_iterations:
        iterations += 1
        h = cfg.newton_step * (1.0 + np.linalg.norm(Y, "fro"))
        jacobian = np.empty((size, size))
        for a in range(size):
            plus = residual_map(Y + h * basis[a])
            minus = residual_map(Y - h * basis[a])
            jacobian[:, a] = to_coordinates(plus - minus, basis) / (2 * h)
        q, r_factor = sla.qr(jacobian)
        diagonal = np.abs(np.diag(r_factor))
        if diagonal.min() <= size * np.finfo(float).eps * diagonal.max():
            raise ConditioningError(
                f"Newton Jacobian is rank deficient (|R_ii| from {diagonal.min():.3e} to {diagonal.max():.3e})"
            )
        delta = from_coordinates(sla.solve_triangular(r_factor, -(q.T @ coordinates)), basis)

        scale = 1.0
        while True:
            candidate = Y + scale * delta
            R_candidate = residual_map(candidate)
            r_candidate = float(np.linalg.norm(R_candidate, "fro"))
            if r_candidate < r:
                Y, R, r = candidate, R_candidate, r_candidate
                coordinates = to_coordinates(R, basis)
                history.append(r)
                logger.debug(f"newton iteration {iterations}: residual {r:.3e}, damping {scale:.2e}")
                break
            scale *= cfg.damping_shrink
            if scale < cfg.min_step:
                logger.debug(f"newton line search stalled at residual {r:.3e}")
                return Y, R, iterations
    return Y, R, iterations


def psi_split(p, E: ConditionalExpectation, cfg: Optional[SolverConfig] = None, initial_Y=None) -> PsiSplit:
    """Solve p = e^Y e^{2X} e^Y with E(X) = 0 and Y = E(Y)"""
    cfg = cfg or SolverConfig()
    p = p if isinstance(p, PositiveDefinite) else PositiveDefinite(p)
    if p.dim != E.dim:
        raise ConfigurationError(f"Expectation of dim {E.dim} cannot split a {p.dim}x{p.dim} matrix")
    array = p.data
    log_p = logm_h(array)
    log_scale = 1.0 + float(np.linalg.norm(log_p, "fro"))
    target = cfg.residual_tol * log_scale
    floor = noise_floor(array, log_scale)
    residual_map = _ResidualMap(array, E)

    if initial_Y is None:
        Y = 0.5 * E(log_p)
    else:
        Y = E(as_array(HermitianMatrix(initial_Y)))
    R = residual_map(Y)
    history = [float(np.linalg.norm(R, "fro"))]

    Y, R, iterations = _fixed_point(residual_map, Y, R, cfg, target, history)
    method = "fixed_point"
    if history[-1] > max(target, floor):
        if cfg.fallback == "newton_fallback":
            logger.info(f"Fixed point stalled at residual {history[-1]:.3e}; switching to Newton")
            Y, R, newton_iterations = _newton(residual_map, Y, R, cfg, target, history)
            iterations += newton_iterations
            method = "newton_fallback"
        if history[-1] > max(target, floor):
            raise SolverStall(
                f"psi_split stopped at residual {history[-1]:.3e} above target {target:.3e} "
                f"(noise floor {floor:.3e}) using {method}",
                residual_history=history,
            )

    X = 0.5 * residual_map.inner(Y)
    X = X - E(X)
    logger.debug(f"psi_split converged via {method}: residual {history[-1]:.3e}, "
                 f"{iterations} iterations, {residual_map.evaluations} evaluations")
    return PsiSplit(
        X=HermitianMatrix(X),
        Y=HermitianMatrix(Y),
        residual=history[-1],
        iterations=iterations,
        converged=True,
        method=method,
        residual_history=history,
    )


def cpr_split(g, E: ConditionalExpectation, cfg: Optional[SolverConfig] = None, initial_Y=None) -> SplitFactors:
    """g = u e^X e^Y with u unitary, X in p_E and Y in p_B"""
    g = g if isinstance(g, Invertible) else Invertible(g)
    array = g.data
    solution = psi_split(PositiveDefinite(array.conj().T @ array), E, cfg, initial_Y)
    u = array @ expm_h(-as_array(solution.Y)) @ expm_h(-as_array(solution.X))
    factors = SplitFactors(
        u=Unitary(u),
        X_list=(solution.X,),
        Y1=solution.Y,
        residual=0.0,
        iterations=solution.iterations,
        solver_residual=solution.residual,
    )
    factors.residual = relative_error(factors.compose(), array)
    return factors
