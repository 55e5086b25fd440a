"""
Orbit models of U_A/U_B and G_A/G_B: flag manifolds, Grassmannians, Stiefel manifolds and coadjoint orbits
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from core.errors import ConfigurationError, GapError
from core.matrices import (
    DEFAULT_TOLERANCES,
    NormKind,
    SkewHermitianMatrix,
    Tolerances,
    Unitary,
    as_array,
    inverse,
    relative_error,
    schatten,
)
from expectations.conditional import ConditionalExpectation
from expectations.partitions import BlockPartition
from homogeneous.cosets import GCoset, TangentVector, to_tangent
from splitting.cpr import SolverConfig
from utils.document_utils import matrix_to_document

logger = logging.getLogger(__name__)


def _as_unitary(u, tolerances: Tolerances) -> Unitary:
    return u if isinstance(u, Unitary) else Unitary(u, tolerances)


@dataclass(frozen=True, eq=False)
class FlagPoint:
    """(u p_1 u*, ..., u p_n u*)"""
    projections: Tuple[np.ndarray, ...]

    def defect(self) -> float:
        """Largest failure of p^2 = p = p* and sum p_i = 1"""
        dim = self.projections[0].shape[0]
        worst = relative_error(sum(self.projections), np.eye(dim))
        for projection in self.projections:
            worst = max(
                worst,
                relative_error(projection @ projection, projection),
                relative_error(projection.conj().T, projection),
            )
        return worst

    def distance(self, other: "FlagPoint") -> float:
        if len(self.projections) != len(other.projections):
            return float("inf")
        return max(relative_error(a, b) for a, b in zip(self.projections, other.projections))

    def same_as(self, other: "FlagPoint", tol: float = DEFAULT_TOLERANCES.equality_tol) -> bool:
        return self.distance(other) <= tol

    def to_document(self) -> list:
        return [matrix_to_document(projection) for projection in self.projections]


def flag_of(u, partition: BlockPartition, tolerances: Tolerances = DEFAULT_TOLERANCES) -> FlagPoint:
    if partition.corner_flag:
        raise ConfigurationError(
            f"Flags need a partition filling dim {partition.dim}; {partition.to_text()} is a corner"
        )
    u = _as_unitary(u, tolerances)
    return FlagPoint(tuple(u.data @ p @ u.data.conj().T for p in partition.block_projections()))


def grassmannian_of(u, k: int, dim: int, tolerances: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Projection onto the span of the first k columns of u (two-block flag)"""
    if not 1 <= k < dim:
        raise ConfigurationError(f"Grassmannian needs 1 <= k < dim, got k={k}, dim={dim}")
    return flag_of(u, BlockPartition(dim, (k, dim - k)), tolerances).projections[0]


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """The partial isometry u p_1, with p_1 the projection onto the leading remainder coordinates"""
    matrix: np.ndarray
    rank: int

    @property
    def frame(self) -> np.ndarray:
        """The first rank columns (an orthonormal frame)"""
        return self.matrix[:, :self.rank]

    def sphere_vector(self) -> np.ndarray:
        if self.rank != 1:
            raise ConfigurationError(f"Sphere model needs rank 1, got rank {self.rank}")
        return self.matrix[:, 0]

    def distance(self, other: "StiefelPoint") -> float:
        return relative_error(self.matrix, other.matrix)

    def same_as(self, other: "StiefelPoint", tol: float = DEFAULT_TOLERANCES.equality_tol) -> bool:
        return self.distance(other) <= tol

    def to_document(self) -> dict:
        return matrix_to_document(self.matrix)


def stiefel_of(u, partition: BlockPartition, tolerances: Tolerances = DEFAULT_TOLERANCES) -> StiefelPoint:
    if not partition.corner_flag:
        raise ConfigurationError(f"Stiefel points need a corner partition, got {partition.to_text()}")
    # U_B = diag(1, U(k)) is the stabilizer of p_1 only with one block after the remainder
    if len(partition.blocks) != 1:
        raise ConfigurationError(
            f"Stiefel points need exactly one block after the remainder, got {partition.to_text()}"
        )
    u = _as_unitary(u, tolerances)
    return StiefelPoint(u.data @ partition.remainder_projection(), partition.remainder)


# ---------------------------------------------------------------------------
# Coadjoint orbits
# ---------------------------------------------------------------------------

@dataclass
class CoadjointPoint:
    point: np.ndarray
    g: np.ndarray

    def to_document(self, X0) -> dict:
        return {
            "X0": matrix_to_document(as_array(X0)),
            "g": matrix_to_document(self.g),
            "orbit_point": matrix_to_document(self.point)
        }


@dataclass
class CoadjointModel:
    """Eigenframe of X0 = sum lambda_i p_i and the pinching onto the commutant of the p_i, in frame coordinates"""
    X0: SkewHermitianMatrix
    frame: np.ndarray
    eigenvalues: List[float]
    partition: BlockPartition
    E: ConditionalExpectation
    finsler_norm: NormKind = field(default_factory=lambda: schatten(2))

    def to_frame(self, g) -> np.ndarray:
        return self.frame.conj().T @ as_array(g) @ self.frame

    def from_frame(self, g) -> np.ndarray:
        return self.frame @ as_array(g) @ self.frame.conj().T

    def eigenprojections(self) -> List[np.ndarray]:
        return [self.from_frame(p) for p in self.partition.block_projections()]

    def coset(self, g) -> GCoset:
        return GCoset(self.to_frame(g), self.E)

    def point_of_coset(self, s: GCoset) -> np.ndarray:
        g = self.from_frame(s.g)
        return g @ self.X0.data @ np.linalg.inv(g)

    def tangent(self, g, cfg: Optional[SolverConfig] = None) -> TangentVector:
        return to_tangent(self.coset(g), cfg)

    def isotropy_defect(self, g) -> float:
        """Relative distance of g X0 g^{-1} from X0"""
        return relative_error(coadjoint_of(self, g).point, self.X0.data)

    def fixes_base(self, g) -> bool:
        return self.isotropy_defect(g) <= self.E.tolerances.equality_tol

    def in_isotropy_group(self, g) -> bool:
        """g in G_B, read in frame coordinates"""
        return self.E.group_defect(self.to_frame(g)) <= self.E.tolerances.equality_tol


def coadjoint_setup(X0, tolerances: Tolerances = DEFAULT_TOLERANCES) -> CoadjointModel:
    """Cluster the spectrum of X0 into eigenspaces; distinct eigenvalues closer than the gap raise GapError"""
    X0 = X0 if isinstance(X0, SkewHermitianMatrix) else SkewHermitianMatrix(X0, tolerances)
    values, frame = np.linalg.eigh(-1j * X0.data)
    scale = 1.0 + float(np.max(np.abs(values)))
    merge = tolerances.herm_tol * scale
    sizes = [1]
    centers = [values[0]]
    for previous, current in zip(values[:-1], values[1:]):
        step = current - previous
        if step <= merge:
            sizes[-1] += 1
        elif step < tolerances.gap:
            raise GapError(
                f"Eigenvalues {previous:.12g}i and {current:.12g}i are {step:.3e} apart, below gap {tolerances.gap:.1e}"
            )
        else:
            sizes.append(1)
            centers.append(current)
    partition = BlockPartition(X0.dim, tuple(sizes))
    logger.debug(f"Coadjoint base with eigenvalues {[round(c, 6) for c in centers]} and multiplicities {sizes}")
    return CoadjointModel(
        X0=X0,
        frame=frame,
        eigenvalues=[float(c) for c in centers],
        partition=partition,
        E=ConditionalExpectation(partition, tolerances),
    )


def coadjoint_of(model: CoadjointModel, g) -> CoadjointPoint:
    """g X0 g^{-1}"""
    array = as_array(g)
    return CoadjointPoint(point=array @ model.X0.data @ inverse(array), g=array)
