"""
Chains of nested block-diagonal subalgebras B_1 <= B_2 <= ... <= B_n = full algebra
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.errors import ConfigurationError
from core.matrices import DEFAULT_TOLERANCES, Tolerances, relative_error
from expectations.conditional import ConditionalExpectation
from expectations.partitions import BlockPartition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExpectationChain:
    """Partitions Q_1, ..., Q_{n-1} listed finest-first; level n is the full algebra.

    E_k (2 <= k <= n) pinches the level-k algebra onto the subalgebra of Q_{k-1}.
    """
    dim: int
    partitions: Tuple[BlockPartition, ...]
    tolerances: Tolerances = DEFAULT_TOLERANCES

    def __post_init__(self):
        object.__setattr__(self, "partitions", tuple(self.partitions))
        if not self.partitions:
            raise ConfigurationError("A chain needs at least one partition")
        for position, partition in enumerate(self.partitions):
            if partition.dim != self.dim:
                raise ConfigurationError(
                    f"Chain partition {position + 1} has dim {partition.dim}, expected {self.dim}"
                )
        for position in range(len(self.partitions) - 1):
            finer, coarser = self.partitions[position], self.partitions[position + 1]
            if not finer.refines(coarser):
                raise ConfigurationError(
                    f"Chain partition {position + 1} ({finer.to_text()}) does not refine "
                    f"partition {position + 2} ({coarser.to_text()})"
                )

    @property
    def depth(self) -> int:
        return len(self.partitions) + 1

    def _check_level(self, k: int, lowest: int = 1):
        if not lowest <= k <= self.depth:
            raise IndexError(f"Chain level {k} outside [{lowest}, {self.depth}]")

    def partition(self, k: int) -> BlockPartition:
        """Q_k; Q_n is the full one-block partition"""
        self._check_level(k)
        if k == self.depth:
            return BlockPartition.full(self.dim)
        return self.partitions[k - 1]

    def level_expectation(self, k: int) -> ConditionalExpectation:
        """Pinching onto B_k itself (membership tests for the level-k algebra)"""
        return ConditionalExpectation(self.partition(k), self.tolerances)

    def expectation(self, k: int) -> ConditionalExpectation:
        """E_k: B_k -> B_{k-1}"""
        self._check_level(k, lowest=2)
        return ConditionalExpectation(self.partition(k - 1), self.tolerances)

    def expectations(self) -> List[ConditionalExpectation]:
        """E_2, ..., E_n"""
        return [self.expectation(k) for k in range(2, self.depth + 1)]

    def truncated(self, depth: int) -> "ExpectationChain":
        """Chain B_1 <= ... <= B_depth seen inside the full algebra"""
        if not 2 <= depth <= self.depth:
            raise IndexError(f"Cannot truncate a depth {self.depth} chain to depth {depth}")
        return ExpectationChain(self.dim, self.partitions[:depth - 1], self.tolerances)

    def nesting_residual(self, samples: int, seed: int) -> float:
        """Max defect of B_k <= B_{k+1} over sampled elements of each B_k"""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for k in range(1, self.depth):
            inner, outer = self.level_expectation(k), self.level_expectation(k + 1)
            for _ in range(samples):
                worst = max(worst, outer.algebra_defect(inner.random_algebra(rng)))
        return worst

    @classmethod
    def single(cls, partition: BlockPartition, tolerances: Tolerances = DEFAULT_TOLERANCES) -> "ExpectationChain":
        """Depth-2 chain B_1 <= full algebra"""
        return cls(partition.dim, (partition,), tolerances)

    @classmethod
    def parse(cls, text: str, dim: int, tolerances: Tolerances = DEFAULT_TOLERANCES) -> "ExpectationChain":
        """Parse 'p1;p2;...' finest-first, each part in the partition text format"""
        parts = [part.strip() for part in text.split(";") if part.strip()]
        if not parts:
            raise ConfigurationError(f"Chain {text!r} is empty")
        partitions = []
        for position, part in enumerate(parts):
            try:
                partitions.append(BlockPartition.parse(part, dim))
            except ConfigurationError as exc:
                raise ConfigurationError(f"Chain {text!r}, partition {position + 1}: {exc}")
        return cls(dim, tuple(partitions), tolerances)

    def to_text(self) -> str:
        return ";".join(partition.to_text() for partition in self.partitions)

    def to_document(self) -> dict:
        return {"dim": self.dim, "partitions": [list(partition.blocks) for partition in self.partitions]}

    @classmethod
    def from_document(cls, document: dict, tolerances: Tolerances = DEFAULT_TOLERANCES) -> "ExpectationChain":
        try:
            dim = int(document["dim"])
            partitions = tuple(BlockPartition(dim, tuple(blocks)) for blocks in document["partitions"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"Malformed chain document: {exc}")
        return cls(dim, partitions, tolerances)


def chain_compose(chain: ExpectationChain, k: int, j: int) -> ConditionalExpectation:
    """F_{k,j} = E_{j+1} o ... o E_k, which is the pinching onto Q_j"""
    if not 1 <= j < k <= chain.depth:
        raise IndexError(f"chain_compose needs 1 <= j < k <= {chain.depth}, got k={k}, j={j}")
    return chain.level_expectation(j)


def composition_residual(chain: ExpectationChain, k: int, j: int, samples: int, seed: int) -> float:
    """Max relative gap between F_{k,j} and the iterated composition E_{j+1}(...E_k(X))"""
    composed = chain_compose(chain, k, j)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        X = rng.standard_normal((chain.dim, chain.dim)) + 1j * rng.standard_normal((chain.dim, chain.dim))
        iterated = X
        for level in range(k, j, -1):
            iterated = chain.expectation(level)(iterated)
        worst = max(worst, relative_error(composed(X), iterated))
    logger.debug(f"F_{{{k},{j}}} composition residual {worst:.3e} over {samples} samples")
    return worst
