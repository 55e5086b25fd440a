"""
Block-corner embeddings g -> diag(g, I_m) as morphisms of reductive structures,
and the check that they commute with the identification G_A/G_B = T(U_A/U_B)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.errors import ConfigurationError
from core.matrices import as_array, relative_error
from expectations.conditional import ConditionalExpectation
from expectations.partitions import BlockPartition
from homogeneous.cosets import GCoset, TangentVector, tangent_distance, to_tangent
from splitting.cpr import SolverConfig

logger = logging.getLogger(__name__)


class BlockEmbedding:
    """alpha(g) = diag(g, I_m) with alpha_*(X) = diag(X, 0), into the algebra of a refined-by-extension partition"""

    def __init__(self, source: ConditionalExpectation, extra: int, target: Optional[BlockPartition] = None):
        if extra < 0:
            raise ConfigurationError(f"Embedding needs extra >= 0, got {extra}")
        target = target or source.partition.extended(extra)
        self._validate(source.partition, extra, target)
        self.source = source
        self.extra = extra
        self.target = ConditionalExpectation(target, source.tolerances)

    @staticmethod
    def _validate(source: BlockPartition, extra: int, target: BlockPartition):
        if target.dim != source.dim + extra:
            raise ConfigurationError(
                f"Target partition has dim {target.dim}, expected {source.dim} + {extra}"
            )
        if target.remainder != source.remainder:
            raise ConfigurationError(
                f"Target remainder {target.remainder} differs from source remainder {source.remainder}"
            )
        leading = target.blocks[:len(source.blocks)]
        if leading != source.blocks:
            raise ConfigurationError(
                f"Target blocks {list(target.blocks)} do not restrict to source blocks {list(source.blocks)}"
            )

    @property
    def dim(self) -> int:
        return self.source.dim + self.extra

    def group(self, g) -> np.ndarray:
        array = as_array(g)
        result = np.eye(self.dim, dtype=complex)
        result[:self.source.dim, :self.source.dim] = array
        return result

    def lie(self, X) -> np.ndarray:
        array = as_array(X)
        result = np.zeros((self.dim, self.dim), dtype=complex)
        result[:self.source.dim, :self.source.dim] = array
        return result

    def coset(self, s: GCoset) -> GCoset:
        """alpha_G(g G_B) = alpha(g) G_B~"""
        return GCoset(self.group(s.g), self.target)

    def tangent(self, v: TangentVector) -> TangentVector:
        """[(u, W)] -> [(alpha(u), alpha_*(W))]"""
        return TangentVector.build(self.group(v.u), self.lie(v.W), self.target)

    def expectation_residual(self, samples: int, seed: int) -> float:
        """Max relative gap of E~ o alpha_* against alpha_* o E over sampled X"""
        rng = np.random.default_rng(seed)
        dim = self.source.dim
        worst = 0.0
        for _ in range(samples):
            X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            worst = max(worst, relative_error(self.target(self.lie(X)), self.lie(self.source(X))))
        return worst


@dataclass
class PushforwardReport:
    source_dim: int
    target_dim: int
    tangent_residual: float
    expectation_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.tangent_residual <= self.threshold and self.expectation_residual <= self.threshold

    def to_document(self) -> dict:
        return {
            "source_dim": self.source_dim,
            "target_dim": self.target_dim,
            "tangent_residual": self.tangent_residual,
            "expectation_residual": self.expectation_residual,
            "threshold": self.threshold,
            "passed": self.passed
        }


def pushforward_check(embedding: BlockEmbedding, s: GCoset, cfg: Optional[SolverConfig] = None,
                      samples: int = 10, seed: int = 0) -> PushforwardReport:
    """Compare to_tangent(alpha_G(s)) with alpha_U*(to_tangent(s))"""
    if s.E.partition != embedding.source.partition:
        raise ConfigurationError("Coset and embedding use different partitions")
    image_first = to_tangent(embedding.coset(s), cfg)
    tangent_first = embedding.tangent(to_tangent(s, cfg))
    residual = tangent_distance(image_first, tangent_first)
    report = PushforwardReport(
        source_dim=embedding.source.dim,
        target_dim=embedding.dim,
        tangent_residual=residual,
        expectation_residual=embedding.expectation_residual(samples, seed),
        threshold=embedding.source.tolerances.equality_tol,
    )
    logger.debug(f"Pushforward {report.source_dim}->{report.target_dim}: tangent residual {residual:.3e}")
    return report
