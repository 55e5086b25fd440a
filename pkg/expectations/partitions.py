"""
Block partitions of C^n defining the block-diagonal subalgebras B
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from core.errors import ConfigurationError


@dataclass(frozen=True)
class BlockPartition:
    """Ordered block sizes b_1..b_m of a dim x dim algebra.

    When sum(b_k) < dim the partition is a corner: the remainder block occupies
    the leading dim - sum(b_k) coordinates and is sent to zero by the expectation.
    """
    dim: int
    blocks: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if self.dim < 1:
            raise ConfigurationError(f"Partition dim must be >= 1, got {self.dim}")
        if not self.blocks:
            raise ConfigurationError("Partition needs at least one block")
        bad = [index for index, size in enumerate(self.blocks) if size < 1]
        if bad:
            raise ConfigurationError(f"Block sizes must be >= 1 (position {bad[0]}: {self.blocks[bad[0]]})")
        if sum(self.blocks) > self.dim:
            raise ConfigurationError(f"Blocks {list(self.blocks)} exceed dim {self.dim}")

    @property
    def corner_flag(self) -> bool:
        return sum(self.blocks) < self.dim

    @property
    def remainder(self) -> int:
        return self.dim - sum(self.blocks)

    @property
    def intervals(self) -> List[Tuple[int, int]]:
        """Coordinate ranges [start, stop) of the blocks, after the remainder"""
        start = self.remainder
        ranges = []
        for size in self.blocks:
            ranges.append((start, start + size))
            start += size
        return ranges

    @property
    def mask(self) -> np.ndarray:
        """Boolean mask of the block-diagonal subalgebra"""
        mask = np.zeros((self.dim, self.dim), dtype=bool)
        for start, stop in self.intervals:
            mask[start:stop, start:stop] = True
        return mask

    def block_projections(self) -> List[np.ndarray]:
        projections = []
        for start, stop in self.intervals:
            projection = np.zeros((self.dim, self.dim), dtype=complex)
            projection[start:stop, start:stop] = np.eye(stop - start)
            projections.append(projection)
        return projections

    def remainder_projection(self) -> np.ndarray:
        projection = np.zeros((self.dim, self.dim), dtype=complex)
        projection[:self.remainder, :self.remainder] = np.eye(self.remainder)
        return projection

    def refines(self, other: "BlockPartition") -> bool:
        """Every block of self lies inside one block of other"""
        if self.dim != other.dim:
            return False
        return all(
            any(o_start <= start and stop <= o_stop for o_start, o_stop in other.intervals)
            for start, stop in self.intervals
        )

    def extended(self, extra: int) -> "BlockPartition":
        """Partition of dim + extra with one more block of size extra appended"""
        if extra == 0:
            return self
        return BlockPartition(self.dim + extra, self.blocks + (extra,))

    @classmethod
    def full(cls, dim: int) -> "BlockPartition":
        return cls(dim, (dim,))

    @classmethod
    def diagonal(cls, dim: int) -> "BlockPartition":
        return cls(dim, (1,) * dim)

    @classmethod
    def parse(cls, text: str, dim: int) -> "BlockPartition":
        """Parse 'b1,b2,...' with an optional trailing '+' marking a corner partition"""
        items = [item.strip() for item in text.split(",") if item.strip()]
        corner = bool(items) and items[-1] == "+"
        if corner:
            items = items[:-1]
        blocks = []
        for position, item in enumerate(items):
            try:
                blocks.append(int(item))
            except ValueError:
                raise ConfigurationError(f"Partition {text!r}: entry {position + 1} ({item!r}) is not an integer")
        partition = cls(dim, tuple(blocks))
        if corner and not partition.corner_flag:
            raise ConfigurationError(f"Partition {text!r}: '+' given but blocks fill dim {dim}")
        if not corner and partition.corner_flag:
            raise ConfigurationError(
                f"Partition {text!r}: blocks sum to {sum(blocks)} < dim {dim}; append ',+' for a corner"
            )
        return partition

    def to_text(self) -> str:
        text = ",".join(str(b) for b in self.blocks)
        return f"{text},+" if self.corner_flag else text

    def to_document(self) -> dict:
        return {"dim": self.dim, "blocks": list(self.blocks), "corner": self.corner_flag}

    @classmethod
    def from_document(cls, document: dict) -> "BlockPartition":
        try:
            partition = cls(int(document["dim"]), tuple(document["blocks"]))
            declared = bool(document.get("corner", False))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"Malformed partition document: {exc}")
        if declared != partition.corner_flag:
            raise ConfigurationError(
                f"Partition document declares corner={declared} but blocks {list(partition.blocks)} "
                f"give corner={partition.corner_flag} in dim {partition.dim}"
            )
        return partition


def default_partitions(dim: int) -> List[BlockPartition]:
    """Diagonal, halves and corner partitions used by the verification suites"""
    partitions = [BlockPartition.diagonal(dim)]
    if dim >= 3:
        half = dim // 2
        partitions.append(BlockPartition(dim, (half, dim - half)))
    if dim >= 2:
        partitions.append(BlockPartition(dim, (dim - 1,)))
    return partitions


