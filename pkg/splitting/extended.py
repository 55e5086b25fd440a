"""
Extended CPR splitting along a chain of conditional expectations:
g = u e^{X_n} ... e^{X_2} e^{Y_1} and p = e^{Y_1} e^{X_2} ... e^{2X_n} ... e^{X_2} e^{Y_1}
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.errors import SolverStall
from core.matrices import (
    HermitianMatrix,
    Invertible,
    PositiveDefinite,
    Unitary,
    expm_h,
    herm_sqrt,
    relative_error,
)
from expectations.chains import ExpectationChain
from splitting.cpr import SolverConfig, SplitFactors, cpr_split, psi_compose

logger = logging.getLogger(__name__)


def _split_level(g: np.ndarray, chain: ExpectationChain, level: int, cfg: SolverConfig):
    """Split g in G_level along E_level, ..., E_2; returns (u, [X_level, ..., X_2], Y_1, iterations, worst residual)"""
    E = chain.expectation(level)
    try:
        top = cpr_split(g, E, cfg)
    except SolverStall as exc:
        if exc.level is None:
            exc.level = level
        raise
    X_top = top.X_list[0].data
    if level == 2:
        return top.u.data, [X_top], top.Y1.data, top.iterations, top.solver_residual

    u_sub, X_sub, Y1, iterations, worst = _split_level(expm_h(top.Y1), chain, level - 1, cfg)
    # g = u_n u_s e^{Ad_{u_s^{-1}} X_n} e^{X_{n-1}} ... e^{Y_1}
    X_top = u_sub.conj().T @ X_top @ u_sub
    within = chain.level_expectation(level)(X_top)
    X_top = within - E(within)
    return (
        top.u.data @ u_sub,
        [X_top] + X_sub,
        Y1,
        iterations + top.iterations,
        max(worst, top.solver_residual),
    )


def extended_split(g, chain: ExpectationChain, cfg: Optional[SolverConfig] = None) -> SplitFactors:
    """u e^{X_n} ... e^{X_2} e^{Y_1} following the level-by-level recursion"""
    cfg = cfg or SolverConfig()
    g = g if isinstance(g, Invertible) else Invertible(g)
    u, X_list, Y1, iterations, worst = _split_level(g.data, chain, chain.depth, cfg)
    factors = SplitFactors(
        u=Unitary(u),
        X_list=tuple(HermitianMatrix(X) for X in X_list),
        Y1=HermitianMatrix(Y1),
        residual=0.0,
        iterations=iterations,
        solver_residual=worst,
    )
    factors.residual = relative_error(factors.compose(), g.data)
    logger.debug(f"extended_split depth {chain.depth}: residual {factors.residual:.3e}, {iterations} iterations")
    return factors


@dataclass
class PsiFactors:
    """(X_n, ..., X_2, Y_1) of a positive matrix"""
    X_list: Tuple[HermitianMatrix, ...]
    Y1: HermitianMatrix
    residual: float
    iterations: int

    def compose(self) -> np.ndarray:
        return psi_compose(self.X_list, self.Y1)


def extended_psi_split(p, chain: ExpectationChain, cfg: Optional[SolverConfig] = None) -> PsiFactors:
    """Factors of p read off the extended splitting of p^{1/2}"""
    p = p if isinstance(p, PositiveDefinite) else PositiveDefinite(p)
    factors = extended_split(herm_sqrt(p), chain, cfg)
    result = PsiFactors(factors.X_list, factors.Y1, 0.0, factors.iterations)
    result.residual = relative_error(result.compose(), p.data)
    return result
