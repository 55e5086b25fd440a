"""
Complex dense matrix algebra for the splitting toolkit.

Role-typed wrappers (Hermitian, skew-Hermitian, positive definite, unitary,
invertible), Hermitian functional calculus by spectral decomposition,
unitarily invariant norms and the Lie-algebra primitives ad / Ad / sigma.
Everything downstream works on these.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import linalg as sla

from configuration.config import NORM_FLAGS, SAMPLING, TOLERANCES
from core.errors import (
    ConditioningError,
    ConfigurationError,
    InvertibilityError,
    PositivityError,
    RoleError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tolerances:
    """Tolerances used by the role wrappers and membership tests"""
    herm_tol: float = TOLERANCES["herm_tol"]
    unitary_tol: float = TOLERANCES["unitary_tol"]
    repair_limit: float = TOLERANCES["repair_limit"]
    pd_floor: float = TOLERANCES["pd_floor"]
    inv_floor: float = TOLERANCES["inv_floor"]
    membership_tol: float = TOLERANCES["membership_tol"]
    check_tol: float = TOLERANCES["check_tol"]
    equality_tol: float = TOLERANCES["equality_tol"]
    gap: float = TOLERANCES["gap"]

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not np.isfinite(value) or value <= 0:
                raise ConfigurationError(f"Tolerance {name} must be a positive number, got {value}")

    def with_overrides(self, **overrides):
        """Return a copy with the non-None overrides applied"""
        values = dict(self.__dict__)
        values.update({key: value for key, value in overrides.items() if value is not None})
        return Tolerances(**values)


DEFAULT_TOLERANCES = Tolerances()


def as_array(matrix) -> np.ndarray:
    """Return the complex ndarray behind a wrapper, array or nested list"""
    if isinstance(matrix, SquareMatrix):
        return matrix.data
    return np.asarray(matrix, dtype=complex)


def frobenius(matrix) -> float:
    return float(np.linalg.norm(as_array(matrix), "fro"))


def relative_error(approx, exact) -> float:
    """Frobenius distance scaled by max(1, ||exact||_F)"""
    exact = as_array(exact)
    return float(np.linalg.norm(as_array(approx) - exact, "fro") / max(1.0, np.linalg.norm(exact, "fro")))


def dagger(matrix) -> np.ndarray:
    return as_array(matrix).conj().T


def _hermitian_part(array: np.ndarray) -> np.ndarray:
    return 0.5 * (array + array.conj().T)


def _skew_part(array: np.ndarray) -> np.ndarray:
    return 0.5 * (array - array.conj().T)


# ---------------------------------------------------------------------------
# Role wrappers
# ---------------------------------------------------------------------------

class SquareMatrix:
    """Square complex matrix with finite entries.

    Subclasses repair their input on construction (symmetrize, re-orthogonalize)
    and record the size of the repair in ``repair``; a repair larger than
    ``tolerances.repair_limit`` raises RoleError.
    """

    role = "square"

    def __init__(self, data, tolerances: Tolerances = DEFAULT_TOLERANCES):
        array = np.array(as_array(data), dtype=complex, copy=True)
        if array.ndim != 2 or array.shape[0] != array.shape[1] or array.shape[0] < 1:
            raise RoleError(f"Expected a non-empty square matrix, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise RoleError("Matrix has non-finite entries")
        array, repair = self._repair(array, tolerances)
        if repair > tolerances.repair_limit:
            raise RoleError(f"{self.role} repair of size {repair:.3e} exceeds limit {tolerances.repair_limit:.1e}")
        array.setflags(write=False)
        self.data = array
        self.repair = float(repair)
        self.tolerances = tolerances

    def _repair(self, array, tolerances):
        return array, 0.0

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, repair={self.repair:.1e})"


class HermitianMatrix(SquareMatrix):
    """Element of p: self-adjoint matrix, symmetrized on construction"""

    role = "hermitian"

    def _repair(self, array, tolerances):
        symmetric = _hermitian_part(array)
        defect = np.linalg.norm(array - symmetric, "fro") / (1.0 + np.linalg.norm(array, "fro"))
        return symmetric, defect


class SkewHermitianMatrix(SquareMatrix):
    """Element of u = i p"""

    role = "skew-hermitian"

    def _repair(self, array, tolerances):
        skew = _skew_part(array)
        defect = np.linalg.norm(array - skew, "fro") / (1.0 + np.linalg.norm(array, "fro"))
        return skew, defect


class PositiveDefinite(HermitianMatrix):
    """Element of the positive cone G+ = e^p"""

    role = "positive"

    def _repair(self, array, tolerances):
        symmetric, defect = super()._repair(array, tolerances)
        eigenvalues = np.linalg.eigvalsh(symmetric)
        floor = tolerances.pd_floor * max(abs(eigenvalues[-1]), abs(eigenvalues[0]))
        if eigenvalues[0] <= floor:
            raise PositivityError(
                f"Minimum eigenvalue {eigenvalues[0]:.3e} not above floor {floor:.3e}"
            )
        return symmetric, defect


class Unitary(SquareMatrix):
    """Fixed point of sigma: u*u = 1, re-orthogonalized through its polar factor when drifting"""

    role = "unitary"

    def _repair(self, array, tolerances):
        identity = np.eye(array.shape[0])
        defect = np.linalg.norm(array.conj().T @ array - identity, "fro")
        if defect <= tolerances.unitary_tol:
            return array, 0.0
        left, _, right = np.linalg.svd(array)
        return left @ right, defect


class Invertible(SquareMatrix):
    """Element of G: smallest singular value above inv_floor times the largest"""

    role = "invertible"

    def _repair(self, array, tolerances):
        singular_values = np.linalg.svd(array, compute_uv=False)
        if singular_values[-1] <= tolerances.inv_floor * max(singular_values[0], 1e-300):
            raise InvertibilityError(
                f"Matrix is singular to working precision (smallest singular value {singular_values[-1]:.3e},"
                f" largest {singular_values[0]:.3e})"
            )
        return array, 0.0

    @property
    def condition(self) -> float:
        singular_values = np.linalg.svd(self.data, compute_uv=False)
        return float(singular_values[0] / singular_values[-1])


def is_hermitian(matrix, tol: float = DEFAULT_TOLERANCES.herm_tol) -> bool:
    array = as_array(matrix)
    return np.linalg.norm(array - array.conj().T, "fro") <= tol * (1.0 + np.linalg.norm(array, "fro"))


def is_skew_hermitian(matrix, tol: float = DEFAULT_TOLERANCES.herm_tol) -> bool:
    array = as_array(matrix)
    return np.linalg.norm(array + array.conj().T, "fro") <= tol * (1.0 + np.linalg.norm(array, "fro"))


def unitarity_defect(matrix) -> float:
    array = as_array(matrix)
    return float(np.linalg.norm(array.conj().T @ array - np.eye(array.shape[0]), "fro"))


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormKind:
    """Unitarily invariant norm: operator, frobenius or schatten(p >= 1)"""
    variant: str
    p: Optional[float] = None

    def __post_init__(self):
        if self.variant not in ("operator", "frobenius", "schatten"):
            raise ConfigurationError(f"Unknown norm variant: {self.variant}")
        if self.variant == "schatten" and (self.p is None or self.p < 1):
            raise ConfigurationError(f"Schatten norms need p >= 1, got {self.p}")

    @classmethod
    def parse(cls, text: str) -> "NormKind":
        """Parse 'operator', 'frobenius', 'schatten:p' or one of the CLI flags (op, fro, s1, ...)"""
        text = NORM_FLAGS.get(text, text)
        if text.startswith("schatten"):
            _, _, order = text.partition(":")
            try:
                return cls("schatten", float(order))
            except ValueError:
                raise ConfigurationError(f"Cannot parse Schatten order in {text!r}")
        return cls(text)

    @property
    def label(self) -> str:
        if self.variant == "schatten":
            return f"schatten:{self.p:g}"
        return self.variant


OPERATOR = NormKind("operator")
FROBENIUS = NormKind("frobenius")


def schatten(p: float) -> NormKind:
    return NormKind("schatten", float(p))


STANDARD_NORMS = (OPERATOR, FROBENIUS, schatten(1), schatten(2), schatten(4))


def norm(matrix, kind: NormKind = FROBENIUS) -> float:
    """Operator norm = largest singular value; schatten(p) = l^p norm of singular values"""
    array = as_array(matrix)
    if kind.variant == "frobenius":
        return float(np.linalg.norm(array, "fro"))
    singular_values = np.linalg.svd(array, compute_uv=False)
    if kind.variant == "operator":
        return float(singular_values[0]) if singular_values.size else 0.0
    return float(np.sum(singular_values ** kind.p) ** (1.0 / kind.p))


# ---------------------------------------------------------------------------
# Hermitian functional calculus
# ---------------------------------------------------------------------------

def _eigh(array: np.ndarray):
    try:
        return np.linalg.eigh(_hermitian_part(array))
    except np.linalg.LinAlgError as exc:
        scale = np.linalg.norm(array, "fro")
        raise ConditioningError(
            f"Hermitian eigensolver failed on a {array.shape[0]}x{array.shape[0]} matrix "
            f"(Frobenius norm {scale:.3e}, finite={bool(np.all(np.isfinite(array)))}): {exc}"
        ) from exc


def hermitian_function(matrix, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a real scalar function to a Hermitian matrix through its eigendecomposition"""
    eigenvalues, vectors = _eigh(as_array(matrix))
    return _hermitian_part((vectors * func(eigenvalues)) @ vectors.conj().T)


def expm_h(array) -> np.ndarray:
    """e^X of a Hermitian array, returned as an array"""
    return hermitian_function(array, np.exp)


def logm_h(array) -> np.ndarray:
    """Hermitian logarithm of a positive definite array, returned as an array"""
    eigenvalues, vectors = _eigh(as_array(array))
    if eigenvalues[0] <= 0:
        raise PositivityError(f"Logarithm needs a positive definite matrix, minimum eigenvalue {eigenvalues[0]:.3e}")
    return _hermitian_part((vectors * np.log(eigenvalues)) @ vectors.conj().T)


def herm_exp(X, tolerances: Tolerances = DEFAULT_TOLERANCES) -> PositiveDefinite:
    return PositiveDefinite(expm_h(as_array(X)), tolerances)


def herm_log(p, tolerances: Tolerances = DEFAULT_TOLERANCES) -> HermitianMatrix:
    return HermitianMatrix(logm_h(as_array(p)), tolerances)


def herm_sqrt(p, tolerances: Tolerances = DEFAULT_TOLERANCES) -> PositiveDefinite:
    eigenvalues, vectors = _eigh(as_array(p))
    if eigenvalues[0] <= 0:
        raise PositivityError(f"Square root needs a positive definite matrix, minimum eigenvalue {eigenvalues[0]:.3e}")
    return PositiveDefinite((vectors * np.sqrt(eigenvalues)) @ vectors.conj().T, tolerances)


def positive_from_group(g, tolerances: Tolerances = DEFAULT_TOLERANCES) -> PositiveDefinite:
    """g sigma(g)^{-1} = g g*, the point of G+ represented by gU"""
    array = as_array(g)
    return PositiveDefinite(array @ array.conj().T, tolerances)


# ---------------------------------------------------------------------------
# Lie-algebra primitives
# ---------------------------------------------------------------------------

def _check_dims(*arrays):
    shapes = {array.shape for array in arrays}
    if len(shapes) != 1:
        raise RoleError(f"Dimension mismatch: {sorted(shapes)}")


def ad(X, Y) -> SquareMatrix:
    """ad_X(Y) = XY - YX"""
    x, y = as_array(X), as_array(Y)
    _check_dims(x, y)
    return SquareMatrix(x @ y - y @ x)


def inverse(g) -> np.ndarray:
    """Inverse of an invertible matrix; unitaries are inverted by their adjoint"""
    if isinstance(g, Unitary):
        return g.data.conj().T
    array = as_array(g)
    if not isinstance(g, Invertible):
        Invertible(array)
    return np.linalg.inv(array)


def Ad(g, X) -> SquareMatrix:
    """Ad_g(X) = g X g^{-1}; keeps the Hermitian/skew-Hermitian role of X when g is unitary"""
    g_array, x = as_array(g), as_array(X)
    _check_dims(g_array, x)
    result = g_array @ x @ inverse(g)
    if isinstance(g, Unitary) and isinstance(X, (HermitianMatrix, SkewHermitianMatrix)):
        role = SkewHermitianMatrix if isinstance(X, SkewHermitianMatrix) else HermitianMatrix
        return role(result, X.tolerances)
    return SquareMatrix(result)


def sigma(g) -> Invertible:
    """The involution sigma(g) = (g*)^{-1}"""
    return Invertible(inverse(Invertible(dagger(g))))


def sigma_lie(X) -> SquareMatrix:
    """Differential of sigma at the identity: a -> -a*"""
    return SquareMatrix(-dagger(X))


# ---------------------------------------------------------------------------
# Real coordinates on spaces of Hermitian matrices
# ---------------------------------------------------------------------------

def hermitian_basis(mask: np.ndarray) -> np.ndarray:
    """Frobenius-orthonormal real basis of the Hermitian matrices supported on a symmetric boolean mask.

    Returns an array of shape (m, n, n): unit diagonal matrices, then for each
    pair i < j the symmetric and the imaginary antisymmetric elements.
    """
    mask = np.asarray(mask, dtype=bool)
    dim = mask.shape[0]
    elements = []
    for i in range(dim):
        if mask[i, i]:
            element = np.zeros((dim, dim), dtype=complex)
            element[i, i] = 1.0
            elements.append(element)
    scale = 1.0 / np.sqrt(2.0)
    for i in range(dim):
        for j in range(i + 1, dim):
            if not mask[i, j]:
                continue
            real_part = np.zeros((dim, dim), dtype=complex)
            real_part[i, j] = real_part[j, i] = scale
            imaginary_part = np.zeros((dim, dim), dtype=complex)
            imaginary_part[i, j] = 1j * scale
            imaginary_part[j, i] = -1j * scale
            elements.extend([real_part, imaginary_part])
    if not elements:
        return np.zeros((0, dim, dim), dtype=complex)
    return np.array(elements)


def to_coordinates(matrix, basis: np.ndarray) -> np.ndarray:
    """Real coordinates <B_a, H> = Re tr(B_a* H)"""
    return np.real(np.einsum("aij,ij->a", basis.conj(), as_array(matrix)))


def from_coordinates(coordinates: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0] == 0:
        return np.zeros(basis.shape[1:], dtype=complex)
    return np.tensordot(np.asarray(coordinates, dtype=float), basis, axes=1)


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

ROLES = ("unitary", "hermitian", "invertible", "positive")


def _gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)


def random_hermitian_array(rng: np.random.Generator, dim: int, clip: float = SAMPLING["spectrum_clip"]) -> np.ndarray:
    """Gaussian Hermitian matrix with spectrum clipped to [-clip, clip]"""
    eigenvalues, vectors = _eigh(_hermitian_part(_gaussian(rng, dim)))
    return _hermitian_part((vectors * np.clip(eigenvalues, -clip, clip)) @ vectors.conj().T)


def haar_unitary_array(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Gaussian with the phases of diag(R) moved into Q"""
    q, r = sla.qr(_gaussian(rng, dim))
    diagonal = np.diag(r)
    phases = np.where(np.abs(diagonal) > 0, diagonal / np.abs(diagonal), 1.0)
    return q * phases


def random_invertible_array(rng: np.random.Generator, dim: int, clip: float = SAMPLING["spectrum_clip"]) -> np.ndarray:
    """Q e^S with Q Haar and S clipped Hermitian, so cond <= e^(2 clip)"""
    q = haar_unitary_array(rng, dim)
    return q @ expm_h(random_hermitian_array(rng, dim, clip))


def random_instance(dim: int, seed: int, role: str, tolerances: Tolerances = DEFAULT_TOLERANCES):
    """Deterministic random matrix of the requested role"""
    if dim < 1:
        raise ConfigurationError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    if role == "unitary":
        return Unitary(haar_unitary_array(rng, dim), tolerances)
    if role == "hermitian":
        return HermitianMatrix(random_hermitian_array(rng, dim), tolerances)
    if role == "invertible":
        return Invertible(random_invertible_array(rng, dim), tolerances)
    if role == "positive":
        return PositiveDefinite(expm_h(random_hermitian_array(rng, dim)), tolerances)
    raise ConfigurationError(f"Unknown role {role!r}; expected one of {', '.join(ROLES)}")


