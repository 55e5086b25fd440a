"""
Conditional expectations onto block-diagonal subalgebras (pinchings and corners)
and their verification against the axioms of a reductive structure with involution
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from core.errors import RoleError
from core.matrices import (
    DEFAULT_TOLERANCES,
    STANDARD_NORMS,
    HermitianMatrix,
    SkewHermitianMatrix,
    SquareMatrix,
    Tolerances,
    as_array,
    haar_unitary_array,
    norm,
    random_hermitian_array,
    random_invertible_array,
    relative_error,
)
from expectations.partitions import BlockPartition

logger = logging.getLogger(__name__)


class ConditionalExpectation:
    """E(X) = sum_i p_i X p_i over the blocks of a partition; the corner remainder maps to zero"""

    def __init__(self, partition: BlockPartition, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.partition = partition
        self.tolerances = tolerances
        self._mask = partition.mask
        self._remainder = partition.remainder_projection()

    @property
    def dim(self) -> int:
        return self.partition.dim

    @property
    def kind(self) -> str:
        if self.partition.corner_flag:
            return "corner"
        if len(self.partition.blocks) == 1:
            return "identity"
        return "pinching"

    def __call__(self, X) -> np.ndarray:
        array = as_array(X)
        if array.shape != (self.dim, self.dim):
            raise RoleError(f"Expectation of dim {self.dim} applied to matrix of shape {array.shape}")
        return np.where(self._mask, array, 0)

    def __repr__(self):
        return f"ConditionalExpectation({self.kind}, dim={self.dim}, blocks={list(self.partition.blocks)})"

    # membership ------------------------------------------------------------

    def algebra_defect(self, X) -> float:
        array = as_array(X)
        return float(np.linalg.norm(array - self(array), "fro") / (1.0 + np.linalg.norm(array, "fro")))

    def contains(self, X) -> bool:
        """X in B"""
        return self.algebra_defect(X) <= self.tolerances.membership_tol

    def group_defect(self, b) -> float:
        """Distance of b from the group G_B (identity on the corner remainder)"""
        array = as_array(b)
        return float(
            np.linalg.norm(array - self(array) - self._remainder, "fro") / (1.0 + np.linalg.norm(array, "fro"))
        )

    def contains_group(self, b) -> bool:
        return self.group_defect(b) <= self.tolerances.membership_tol

    def kernel_defect(self, X) -> float:
        array = as_array(X)
        return float(np.linalg.norm(self(array), "fro") / (1.0 + np.linalg.norm(array, "fro")))

    # sampling --------------------------------------------------------------

    def _block_fill(self, rng, builder) -> np.ndarray:
        result = np.zeros((self.dim, self.dim), dtype=complex)
        for start, stop in self.partition.intervals:
            result[start:stop, start:stop] = builder(rng, stop - start)
        return result

    def random_hermitian(self, rng) -> np.ndarray:
        """Element of p_B"""
        return self._block_fill(rng, random_hermitian_array)

    def random_algebra(self, rng) -> np.ndarray:
        """General (complex) element of B"""
        return self._block_fill(
            rng, lambda r, n: r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))
        )

    def random_group(self, rng) -> np.ndarray:
        """Invertible element of G_B"""
        return self._block_fill(rng, random_invertible_array) + self._remainder

    def random_unitary(self, rng) -> np.ndarray:
        """Element of U_B"""
        return self._block_fill(rng, haar_unitary_array) + self._remainder

    def random_kernel_hermitian(self, rng) -> np.ndarray:
        """Element of p_E = Ker E intersected with the Hermitian matrices"""
        X = random_hermitian_array(rng, self.dim)
        return X - self(X)


def pinch(E: ConditionalExpectation, X):
    """E(X), keeping the Hermitian / skew-Hermitian role of X"""
    result = E(X)
    if isinstance(X, SkewHermitianMatrix):
        return SkewHermitianMatrix(result, X.tolerances)
    if isinstance(X, HermitianMatrix):
        return HermitianMatrix(result, X.tolerances)
    return SquareMatrix(result)


def split_spaces(E: ConditionalExpectation, X) -> Tuple[SquareMatrix, SquareMatrix]:
    """X = Y + Z with Y = E(X) in p_B (u_B) and Z = X - E(X) in p_E (u_E)"""
    array = as_array(X)
    Y = E(array)
    Z = array - Y
    if isinstance(X, SkewHermitianMatrix):
        return SkewHermitianMatrix(Y, X.tolerances), SkewHermitianMatrix(Z, X.tolerances)
    if not isinstance(X, HermitianMatrix):
        X = HermitianMatrix(array)
    return HermitianMatrix(Y, X.tolerances), HermitianMatrix(Z, X.tolerances)


@dataclass
class ExpectationReport:
    """Max residual per axiom over the sampled inputs"""
    kind: str
    partition: str
    samples: int
    seed: int
    threshold: float
    residuals: Dict[str, float] = field(default_factory=dict)
    not_applicable: List[str] = field(default_factory=list)

    @property
    def passed(self) -> Dict[str, bool]:
        return {name: value <= self.threshold for name, value in self.residuals.items()}

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def checks(self) -> List[Tuple[str, bool]]:
        return sorted(self.passed.items())

    def to_document(self) -> dict:
        return {
            "kind": self.kind,
            "partition": self.partition,
            "samples": self.samples,
            "seed": self.seed,
            "threshold": self.threshold,
            "residuals": dict(sorted(self.residuals.items())),
            "passed": dict(sorted(self.passed.items())),
            "not_applicable": sorted(self.not_applicable),
        }


def _track(residuals: Dict[str, float], name: str, value: float):
    residuals[name] = max(residuals.get(name, 0.0), float(value))


def verify_expectation(E: ConditionalExpectation, samples: int, seed: int,
                       tolerances: Tolerances = DEFAULT_TOLERANCES) -> ExpectationReport:
    """Check idempotence, the bimodule (Tomiyama) property, *-compatibility, Ad_{G_B}-equivariance,
    sigma-compatibility, norm-one contraction, kernel invariance and trace preservation"""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    report = ExpectationReport(
        kind=E.kind,
        partition=E.partition.to_text(),
        samples=samples,
        seed=seed,
        threshold=tolerances.check_tol,
    )
    residuals = report.residuals
    trace_applies = not E.partition.corner_flag
    if not trace_applies:
        report.not_applicable.append("trace")

    for _ in range(samples):
        a = rng.standard_normal((E.dim, E.dim)) + 1j * rng.standard_normal((E.dim, E.dim))
        b1, b2 = E.random_algebra(rng), E.random_algebra(rng)
        g = E.random_group(rng)
        g_inv = np.linalg.inv(g)
        Ea = E(a)

        _track(residuals, "idempotence", relative_error(E(Ea), Ea))
        _track(residuals, "tomiyama", relative_error(E(b1 @ a @ b2), b1 @ Ea @ b2))
        _track(residuals, "star", relative_error(E(a.conj().T), Ea.conj().T))
        _track(residuals, "ad_equivariance", relative_error(E(g @ a @ g_inv), g @ Ea @ g_inv))
        _track(residuals, "sigma_compatibility", relative_error(E(-a.conj().T), -Ea.conj().T))

        kernel_element = a - Ea
        _track(residuals, "kernel_invariance", E.kernel_defect(g @ kernel_element @ g_inv))

        sigma_g = np.linalg.inv(g.conj().T)
        _track(residuals, "sigma_invariant_subgroup", E.group_defect(sigma_g))

        X = HermitianMatrix(0.5 * (a + a.conj().T))
        EX = E(X)
        for kind in STANDARD_NORMS:
            full = norm(X, kind)
            _track(residuals, f"contraction:{kind.label}", max(0.0, (norm(EX, kind) - full) / max(1.0, full)))

        if trace_applies:
            _track(residuals, "trace", abs(np.trace(Ea) - np.trace(a)) / max(1.0, abs(np.trace(a))))

    failed = [name for name, ok in report.passed.items() if not ok]
    if failed:
        logger.warning(f"Expectation {E!r} failed axioms: {', '.join(sorted(failed))}")
    else:
        logger.debug(f"Expectation {E!r} passed all axioms over {samples} samples")
    return report


def sigma_invariant_subgroup(E: ConditionalExpectation, samples: int, seed: int) -> float:
    """Max distance of sigma(b) = (b*)^{-1} from G_B over sampled b in G_B"""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        b = E.random_group(rng)
        worst = max(worst, E.group_defect(np.linalg.inv(b.conj().T)))
    return worst
