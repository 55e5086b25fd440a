"""
Cosets of G_A/G_B and U_A/U_B, the bundle U_A x_{U_B} p_E and its tangent model U_A x_{U_B} u_E.

A coset is stored through a representative; equality is decided by membership of
the quotient of representatives in G_B (resp. U_B), never through a canonical form.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from core.errors import RoleError
from core.matrices import (
    HermitianMatrix,
    Invertible,
    NormKind,
    SkewHermitianMatrix,
    Unitary,
    as_array,
    expm_h,
    norm,
    relative_error,
    sigma,
)
from expectations.conditional import ConditionalExpectation
from splitting.cpr import SolverConfig, cpr_split
from utils.document_utils import matrix_to_document

logger = logging.getLogger(__name__)


def _kernel_component(E: ConditionalExpectation, X: np.ndarray, name: str) -> np.ndarray:
    defect = E.kernel_defect(X)
    if defect > E.tolerances.repair_limit:
        raise RoleError(f"{name} is not in Ker E (relative defect {defect:.3e})")
    return X - E(X)


class GCoset:
    """g G_B"""

    __hash__ = None

    def __init__(self, g, E: ConditionalExpectation):
        self.g = g if isinstance(g, Invertible) else Invertible(g, E.tolerances)
        self.E = E

    def distance(self, other: "GCoset") -> float:
        """Distance of g^{-1} g' from G_B"""
        return self.E.group_defect(np.linalg.solve(self.g.data, other.g.data))

    def same_as(self, other: "GCoset", tol: Optional[float] = None) -> bool:
        tol = self.E.tolerances.equality_tol if tol is None else tol
        return self.distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, GCoset):
            return NotImplemented
        return self.same_as(other)

    def translate(self, w) -> "GCoset":
        """w g G_B"""
        return GCoset(as_array(w) @ self.g.data, self.E)

    @classmethod
    def identity(cls, E: ConditionalExpectation) -> "GCoset":
        return cls(np.eye(E.dim), E)


class UCoset:
    """u U_B"""

    __hash__ = None

    def __init__(self, u, E: ConditionalExpectation):
        self.u = u if isinstance(u, Unitary) else Unitary(u, E.tolerances)
        self.E = E

    def distance(self, other: "UCoset") -> float:
        return self.E.group_defect(self.u.data.conj().T @ other.u.data)

    def same_as(self, other: "UCoset", tol: Optional[float] = None) -> bool:
        tol = self.E.tolerances.equality_tol if tol is None else tol
        return self.distance(other) <= tol

    def __eq__(self, other):
        if not isinstance(other, UCoset):
            return NotImplemented
        return self.same_as(other)

    def translate(self, w) -> "UCoset":
        return UCoset(as_array(w) @ self.u.data, self.E)

    def as_gcoset(self) -> GCoset:
        """The inclusion U_A/U_B -> G_A/G_B"""
        return GCoset(self.u.data, self.E)


@dataclass(frozen=True, eq=False)
class BundlePoint:
    """[(u, X)] with X in p_E; (u, X) ~ (u v^{-1}, Ad_v X) for v in U_B"""
    u: Unitary
    X: HermitianMatrix
    E: ConditionalExpectation

    @classmethod
    def build(cls, u, X, E: ConditionalExpectation) -> "BundlePoint":
        u = u if isinstance(u, Unitary) else Unitary(u, E.tolerances)
        X = _kernel_component(E, as_array(HermitianMatrix(X, E.tolerances)), "Bundle fiber X")
        return cls(u, HermitianMatrix(X, E.tolerances), E)

    def translate(self, w) -> "BundlePoint":
        return BundlePoint(Unitary(as_array(w) @ self.u.data, self.E.tolerances), self.X, self.E)

    def act(self, v) -> "BundlePoint":
        """v . (u, X) = (u v^{-1}, Ad_v X)"""
        v = as_array(v)
        return BundlePoint.build(self.u.data @ v.conj().T, v @ self.X.data @ v.conj().T, self.E)

    def to_document(self) -> dict:
        return {"u": matrix_to_document(self.u.data), "X": matrix_to_document(self.X.data)}


@dataclass(frozen=True, eq=False)
class TangentVector:
    """[(u, W)] with W in u_E, a tangent vector of U_A/U_B at u U_B"""
    u: Unitary
    W: SkewHermitianMatrix
    E: ConditionalExpectation

    @classmethod
    def build(cls, u, W, E: ConditionalExpectation) -> "TangentVector":
        u = u if isinstance(u, Unitary) else Unitary(u, E.tolerances)
        W = _kernel_component(E, as_array(SkewHermitianMatrix(W, E.tolerances)), "Tangent W")
        return cls(u, SkewHermitianMatrix(W, E.tolerances), E)

    @property
    def base(self) -> UCoset:
        return UCoset(self.u, self.E)

    def negated(self) -> "TangentVector":
        return TangentVector(self.u, SkewHermitianMatrix(-self.W.data, self.E.tolerances), self.E)

    def translate(self, w) -> "TangentVector":
        return TangentVector(Unitary(as_array(w) @ self.u.data, self.E.tolerances), self.W, self.E)

    def act(self, v) -> "TangentVector":
        v = as_array(v)
        return TangentVector.build(self.u.data @ v.conj().T, v @ self.W.data @ v.conj().T, self.E)

    def magnitude(self, kind: NormKind) -> float:
        """Norm of the representative W; Ad_{U_B}-invariant so well defined on the class"""
        return norm(self.W, kind)

    def is_zero(self, tol: Optional[float] = None) -> bool:
        tol = self.E.tolerances.equality_tol if tol is None else tol
        return float(np.linalg.norm(self.W.data, "fro")) <= tol

    def to_document(self) -> dict:
        return {"u": matrix_to_document(self.u.data), "W": matrix_to_document(self.W.data)}


# ---------------------------------------------------------------------------
# The bundle diffeomorphism and its companions
# ---------------------------------------------------------------------------

def compose(pt: BundlePoint) -> GCoset:
    """[(u, X)] -> u e^X G_B"""
    return GCoset(pt.u.data @ expm_h(pt.X), pt.E)


def coset_reduce(s: GCoset, cfg: Optional[SolverConfig] = None) -> BundlePoint:
    """u e^X G_B -> [(u, X)] through the CPR splitting of the representative"""
    factors = cpr_split(s.g, s.E, cfg)
    return BundlePoint.build(factors.u, factors.X_list[0], s.E)


def bundle_to_coset(pt: BundlePoint) -> GCoset:
    return compose(pt)


def _recovered_v(a_u: Unitary, b_u: Unitary) -> np.ndarray:
    return b_u.data.conj().T @ a_u.data


def _class_distance(E: ConditionalExpectation, a_u: Unitary, a_fiber, b_u: Unitary, b_fiber) -> float:
    v = _recovered_v(a_u, b_u)
    return max(E.group_defect(v), relative_error(v @ as_array(a_fiber) @ v.conj().T, b_fiber))


def bundle_distance(a: BundlePoint, b: BundlePoint) -> float:
    return _class_distance(a.E, a.u, a.X, b.u, b.X)


def tangent_distance(a: TangentVector, b: TangentVector) -> float:
    return _class_distance(a.E, a.u, a.W, b.u, b.W)


def bundle_equal(a: BundlePoint, b: BundlePoint, tol: Optional[float] = None) -> bool:
    """a ~ b iff v = b.u^{-1} a.u lies in U_B and b.X = Ad_v(a.X)"""
    tol = a.E.tolerances.equality_tol if tol is None else tol
    return bundle_distance(a, b) <= tol


def tangent_equal(a: TangentVector, b: TangentVector, tol: Optional[float] = None) -> bool:
    tol = a.E.tolerances.equality_tol if tol is None else tol
    return tangent_distance(a, b) <= tol


def project_to_base(pt: BundlePoint) -> UCoset:
    """[(u, X)] -> u U_B"""
    return UCoset(pt.u, pt.E)


def sigma_G(s: GCoset) -> GCoset:
    """g G_B -> (g*)^{-1} G_B"""
    return GCoset(sigma(s.g), s.E)


def tau_G(pt: BundlePoint) -> BundlePoint:
    """[(u, X)] -> [(u, -X)]"""
    return BundlePoint(pt.u, HermitianMatrix(-pt.X.data, pt.E.tolerances), pt.E)


def is_sigma_fixed(s: GCoset, tol: Optional[float] = None) -> bool:
    return sigma_G(s).same_as(s, tol)


def retract(pt: BundlePoint, t: float) -> BundlePoint:
    """[(u, X)] -> [(u, tX)] for t in [0, 1]"""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"Retraction parameter must lie in [0, 1], got {t}")
    return BundlePoint(pt.u, HermitianMatrix(t * pt.X.data, pt.E.tolerances), pt.E)


def to_tangent(s: GCoset, cfg: Optional[SolverConfig] = None) -> TangentVector:
    """g G_B -> [(u, X)] -> [(u, iX)]"""
    pt = coset_reduce(s, cfg)
    return TangentVector.build(pt.u, 1j * pt.X.data, s.E)


def from_tangent(v: TangentVector) -> GCoset:
    """[(u, W)] -> u e^{-iW} G_B"""
    return GCoset(v.u.data @ expm_h(-1j * v.W.data), v.E)


def tangent_at_base(E: ConditionalExpectation, W) -> np.ndarray:
    """(1 - E) W, the tangent of G_A/G_B at the base point as Ker E"""
    array = as_array(W)
    return array - E(array)


def kernel_decomposition(E: ConditionalExpectation, K) -> Tuple[SkewHermitianMatrix, HermitianMatrix]:
    """Ker E = u_E + p_E: K -> (skew part, Hermitian part)"""
    array = _kernel_component(E, as_array(K), "K")
    return (
        SkewHermitianMatrix(0.5 * (array - array.conj().T), E.tolerances),
        HermitianMatrix(0.5 * (array + array.conj().T), E.tolerances),
    )
