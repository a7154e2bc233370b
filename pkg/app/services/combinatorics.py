import itertools
from dataclasses import dataclass
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from app.utils.errors import ParameterError


@dataclass(frozen=True)
class Partition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts or any(p < 1 for p in parts):
            raise ParameterError(f"Partition parts must be positive integers, got {self.parts}.")
        if list(parts) != sorted(parts, reverse=True):
            raise ParameterError(f"Partition parts must be sorted descending, got {parts}.")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def nu(self) -> int:
        return len(self.parts)

    @property
    def unit_parts(self) -> int:
        return sum(1 for p in self.parts if p == 1)

    def offsets(self) -> List[int]:
        """Index of the first 2x2 pair of every block."""
        return [sum(self.parts[:k]) for k in range(self.nu)]

    def blocks(self) -> List[range]:
        """Pair labels belonging to each block."""
        return [range(o, o + mu) for o, mu in zip(self.offsets(), self.parts)]

    def __iter__(self):
        return iter(self.parts)

    def __str__(self):
        return "(" + ",".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Combination:
    d1: int
    d2: int
    indices: Tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not 1 <= self.d1 <= self.d2:
            raise ParameterError(f"Need 1 <= d1 <= d2, got d1={self.d1}, d2={self.d2}.")
        if len(idx) != self.d1:
            raise ParameterError(f"Combination must select {self.d1} indices, got {len(idx)}.")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ParameterError(f"Combination indices must be strictly increasing, got {idx}.")
        if idx[0] < 0 or idx[-1] >= self.d2:
            raise ParameterError(f"Combination indices must lie in [0, {self.d2 - 1}], got {idx}.")
        object.__setattr__(self, "indices", idx)

    def kernel_indices(self) -> Tuple[int, ...]:
        """Labels of Ker P_c in the second factor."""
        chosen = set(self.indices)
        return tuple(j for j in range(self.d2) if j not in chosen)

    def isometry(self) -> np.ndarray:
        """d2 x d1 matrix V_c mapping |k> to |indices[k]>."""
        v = np.zeros((self.d2, self.d1))
        for k, j in enumerate(self.indices):
            v[j, k] = 1.0
        return v


def _partitions(n: int, largest: int) -> Iterator[Tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in _partitions(n - k, k):
            yield (k,) + rest


def partitions(n: int) -> List[Partition]:
    """All partitions of n in reverse-lexicographic order."""
    if n < 1:
        raise ParameterError(f"Partitions need n >= 1, got {n}.")
    return [Partition(p) for p in _partitions(n, n)]


def combinations(d2: int, d1: int) -> List[Combination]:
    """All d1-subsets of range(d2) in lexicographic order."""
    if not 1 <= d1 <= d2:
        raise ParameterError(f"Need 1 <= d1 <= d2, got d1={d1}, d2={d2}.")
    return [Combination(d1, d2, c) for c in itertools.combinations(range(d2), d1)]


def embedding_operator(c: Combination) -> np.ndarray:
    """Projector P_c onto Im P_c = span{|j> : j in c}."""
    v = c.isometry()
    return v @ v.T


def parse_partition(parts: Sequence[int]) -> Partition:
    return Partition(tuple(sorted((int(p) for p in parts), reverse=True)))
