"""
Real-linear operators on the space of Hermitian matrices built from ad_X:
(ad_X)^2, 1 + (ad_X)^2 and sinh(ad_X)/ad_X, represented in a Frobenius-orthonormal basis
"""
from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from configuration.config import CURVATURE
from core.matrices import (
    HermitianMatrix,
    as_array,
    from_coordinates,
    hermitian_basis,
    to_coordinates,
)

logger = logging.getLogger(__name__)


class HermitianOperator:
    """Matrix of a real-linear map on Herm(n) in the basis of core.matrices.hermitian_basis"""

    def __init__(self, dim: int, matrix: np.ndarray, name: str = "operator"):
        self.dim = dim
        self.basis = hermitian_basis(np.ones((dim, dim), dtype=bool))
        self.matrix = np.asarray(matrix, dtype=float)
        self.name = name
        self._eigenvalues: Optional[np.ndarray] = None

    @classmethod
    def from_map(cls, dim: int, func: Callable[[np.ndarray], np.ndarray], name: str = "operator"):
        basis = hermitian_basis(np.ones((dim, dim), dtype=bool))
        columns = [to_coordinates(func(element), basis) for element in basis]
        return cls(dim, np.array(columns).T, name)

    def apply(self, Z) -> np.ndarray:
        return from_coordinates(self.matrix @ to_coordinates(Z, self.basis), self.basis)

    def __call__(self, Z) -> np.ndarray:
        return self.apply(Z)

    @property
    def asymmetry(self) -> float:
        """Frobenius self-adjointness defect"""
        return float(np.linalg.norm(self.matrix - self.matrix.T))

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            self._eigenvalues = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))
        return self._eigenvalues

    def frobenius_lower_bound(self) -> float:
        """min ||T Z||_F / ||Z||_F, the smallest singular value"""
        return float(np.linalg.svd(self.matrix, compute_uv=False).min())

    def invertibility_bound(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    def plus_identity(self, scale: float = 1.0) -> "HermitianOperator":
        """1 + scale * T"""
        return HermitianOperator(self.dim, np.eye(self.matrix.shape[0]) + scale * self.matrix, f"1 + {self.name}")

    def __repr__(self):
        return f"HermitianOperator({self.name}, dim={self.dim})"


class AdOperator(HermitianOperator):
    """(ad_X)^2 restricted to the Hermitian matrices"""

    def __init__(self, X: HermitianMatrix, matrix: np.ndarray):
        super().__init__(X.dim, matrix, "(ad_X)^2")
        self.X = X


def _spectral_differences(X) -> tuple:
    eigenvalues, vectors = np.linalg.eigh(as_array(X))
    return eigenvalues[:, None] - eigenvalues[None, :], vectors


def schur_function(X, scalar: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    """Z -> f(ad_X) Z computed in the eigenbasis of X, where ad_X has eigenvalues lambda_i - lambda_j"""
    differences, vectors = _spectral_differences(X)
    weights = scalar(differences)

    def apply(Z):
        inner = vectors.conj().T @ as_array(Z) @ vectors
        return vectors @ (weights * inner) @ vectors.conj().T

    return apply


def ad_squared(X) -> AdOperator:
    """Z -> [X, [X, Z]] on the Hermitian matrices"""
    X = X if isinstance(X, HermitianMatrix) else HermitianMatrix(X)
    x = X.data

    def double_commutator(Z):
        inner = x @ Z - Z @ x
        return x @ inner - inner @ x

    operator = HermitianOperator.from_map(X.dim, double_commutator)
    return AdOperator(X, operator.matrix)


def ad_spectrum(X) -> np.ndarray:
    """Sorted {(lambda_i - lambda_j)^2} over ordered pairs, the predicted spectrum of (ad_X)^2"""
    differences, _ = _spectral_differences(X)
    return np.sort((differences ** 2).reshape(-1))


def sinh_ratio_scalar(t, cutoff: float = CURVATURE["series_cutoff"]) -> np.ndarray:
    """sinh(t)/t with the removable singularity filled by 1 + t^2/6 + t^4/120 for |t| < cutoff"""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < cutoff
    safe = np.where(small, 1.0, t)
    squared = t * t
    return np.where(small, 1.0 + squared / 6.0 + squared * squared / 120.0, np.sinh(safe) / safe)


def sinh_ratio(X) -> HermitianOperator:
    """sinh(ad_X)/ad_X on the Hermitian matrices"""
    X = X if isinstance(X, HermitianMatrix) else HermitianMatrix(X)
    operator = HermitianOperator.from_map(X.dim, schur_function(X, sinh_ratio_scalar))
    operator.name = "sinh(ad_X)/ad_X"
    return operator


def identity_operator(dim: int) -> HermitianOperator:
    return HermitianOperator(dim, np.eye(dim * dim), "1")


def one_plus_ad_squared(X) -> HermitianOperator:
    return ad_squared(X).plus_identity()
