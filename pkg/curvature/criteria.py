"""
Semi-negative curvature criteria for the Finsler norms on the Hermitian matrices:

    (2) -(ad_X)^2 is dissipative:          ||(1 + t (ad_X)^2) Z|| >= ||Z||  for t > 0
    (3) 1 + (ad_X)^2 is expansive
    (4) sinh(ad_X)/ad_X is expansive

Frobenius norms get exact spectral certificates; the other norms are sampled.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from configuration.config import CURVATURE
from core.matrices import FROBENIUS, HermitianMatrix, NormKind, norm, random_hermitian_array
from curvature.operators import HermitianOperator, ad_squared, sinh_ratio

logger = logging.getLogger(__name__)

PASS_RATIO = CURVATURE["pass_ratio"]


def random_unit_hermitian(rng: np.random.Generator, dim: int, kind: NormKind = FROBENIUS) -> np.ndarray:
    """Gaussian Hermitian matrix normalized in the given norm"""
    Z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    Z = 0.5 * (Z + Z.conj().T)
    return Z / norm(Z, kind)


def expansivity_check(T: HermitianOperator, kind: NormKind, samples: int, seed: int) -> float:
    """min over sampled nonzero Hermitian Z of ||T Z|| / ||Z||"""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(samples):
        Z = random_unit_hermitian(rng, T.dim, kind)
        worst = min(worst, norm(T.apply(Z), kind) / norm(Z, kind))
    return float(worst)


@dataclass
class DissipativityReport:
    norm: str
    samples: int
    t_grid: Sequence[float]
    min_ratio: float
    ratios_by_t: Dict[float, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.min_ratio >= PASS_RATIO


def dissipativity_check(X, kind: NormKind, samples: int, t_grid: Sequence[float] = CURVATURE["t_grid"],
                        seed: int = 0, operator: Optional[HermitianOperator] = None) -> DissipativityReport:
    """||(1 - tA) Z|| >= ||Z|| with A = -(ad_X)^2, for sampled Z and every t in the grid"""
    if any(t <= 0 for t in t_grid):
        raise ValueError(f"t_grid must lie in (0, inf), got {list(t_grid)}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    operator = operator or ad_squared(X)
    rng = np.random.default_rng(seed)
    ratios = {float(t): np.inf for t in t_grid}
    for _ in range(samples):
        Z = random_unit_hermitian(rng, operator.dim, kind)
        base = norm(Z, kind)
        curved = operator.apply(Z)
        for t in ratios:
            ratios[t] = min(ratios[t], norm(Z + t * curved, kind) / base)
    return DissipativityReport(
        norm=kind.label,
        samples=samples,
        t_grid=tuple(ratios),
        min_ratio=float(min(ratios.values())),
        ratios_by_t={t: float(r) for t, r in ratios.items()},
    )


@dataclass
class CurvatureReport:
    """Per-criterion outcome of the semi-negative curvature checks over sampled base points X"""
    dim: int
    norm: str
    samples: int
    seed: int
    bases: int
    min_ratios: Dict[str, float] = field(default_factory=dict)
    spectral_bounds: Dict[str, float] = field(default_factory=dict)
    certified: str = "sampled"

    @property
    def passed(self) -> Dict[str, bool]:
        return {name: ratio >= PASS_RATIO for name, ratio in self.min_ratios.items()}

    @property
    def consistent(self) -> bool:
        """The three criteria are equivalent, so they must agree"""
        return len(set(self.passed.values())) <= 1

    @property
    def all_passed(self) -> bool:
        spectral_ok = all(
            value >= -1e-10 if name == "ad_squared_min_eigenvalue" else value >= 1 - 1e-12
            for name, value in self.spectral_bounds.items()
        )
        return all(self.passed.values()) and self.consistent and spectral_ok

    def checks(self):
        checks = [(f"criterion {name}", ok) for name, ok in sorted(self.passed.items())]
        checks.append(("criteria agree", self.consistent))
        return checks

    def to_document(self) -> dict:
        return {
            "dim": self.dim,
            "norm": self.norm,
            "samples": self.samples,
            "seed": self.seed,
            "bases": self.bases,
            "certified": self.certified,
            "min_ratios": dict(sorted(self.min_ratios.items())),
            "spectral_bounds": dict(sorted(self.spectral_bounds.items())),
            "passed": dict(sorted(self.passed.items())),
            "consistent": self.consistent,
            "all_passed": self.all_passed
        }


def _track_min(table: Dict[str, float], name: str, value: float):
    table[name] = min(table.get(name, np.inf), float(value))


def curvature_certificate(dim: int, kind: NormKind, samples: int, seed: int,
                          t_grid: Sequence[float] = CURVATURE["t_grid"],
                          bases: int = CURVATURE["bases"]) -> CurvatureReport:
    """Run criteria (2), (3) and (4) over `bases` random Hermitian X with `samples` directions each"""
    rng = np.random.default_rng(seed)
    report = CurvatureReport(
        dim=dim,
        norm=kind.label,
        samples=samples,
        seed=seed,
        bases=bases,
        certified="spectral" if kind == FROBENIUS else "sampled",
    )
    for index in range(bases):
        X = HermitianMatrix(random_hermitian_array(rng, dim))
        squared = ad_squared(X)
        expanded = squared.plus_identity()
        ratio = sinh_ratio(X)
        sub_seed = int(rng.integers(0, 2 ** 31 - 1))

        dissipative = dissipativity_check(X, kind, samples, t_grid, sub_seed, operator=squared)
        _track_min(report.min_ratios, "dissipativity", dissipative.min_ratio)
        _track_min(report.min_ratios, "one_plus_ad_squared", expansivity_check(expanded, kind, samples, sub_seed))
        _track_min(report.min_ratios, "sinh_ratio", expansivity_check(ratio, kind, samples, sub_seed))

        _track_min(report.spectral_bounds, "ad_squared_min_eigenvalue", squared.eigenvalues.min())
        _track_min(report.spectral_bounds, "one_plus_ad_squared_frobenius", expanded.frobenius_lower_bound())
        _track_min(report.spectral_bounds, "sinh_ratio_frobenius", ratio.frobenius_lower_bound())
        logger.debug(f"Curvature base {index + 1}/{bases} (dim {dim}, {kind.label}): {report.min_ratios}")

    if not report.all_passed:
        logger.warning(f"Curvature certificate failed for dim {dim}, norm {kind.label}: {report.to_document()}")
    return report
