"""Homogeneous-form generation by interior layer permutation.

Relabelling the interior layers of a cell (In and Out stay put) and applying
the same permutation to the adjacency rows and columns produces a different
(matrix, type-list) pair describing the same architecture. A cell with N_l
layers has (N_l - 2)! such forms, the identity included; training rows built
from them all inherit the source architecture's label.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

import numpy as np

from .arch_core import Architecture, require_valid
from .seeding import derive_seed

# (N_l - 2)! past this point is too large to enumerate or sample ranks from
MAX_LAYERS = 12


@dataclass(frozen=True)
class InteriorPermutation:
    """Bijection on interior positions 1..N_l-2; In and Out are fixed.

    ``mapping[k]`` is the source position whose layer lands at interior
    position k+1, matching the lexicographic order of
    ``itertools.permutations``.
    """

    mapping: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(i) for i in self.mapping))
        if sorted(self.mapping) != list(range(1, len(self.mapping) + 1)):
            raise ValueError(
                f"mapping {self.mapping} is not a bijection on interior positions"
            )

    @classmethod
    def identity(cls, n_interior: int) -> "InteriorPermutation":
        return cls(tuple(range(1, n_interior + 1)))

    @classmethod
    def from_rank(cls, rank: int, n_interior: int) -> "InteriorPermutation":
        """Permutation at a given lexicographic rank (0 = identity)."""
        total = factorial(n_interior)
        if not 0 <= rank < total:
            raise ValueError(f"rank {rank} outside [0, {total})")
        pool = list(range(1, n_interior + 1))
        out = []
        for i in range(n_interior, 0, -1):
            block = factorial(i - 1)
            out.append(pool.pop(rank // block))
            rank %= block
        return cls(tuple(out))

    @property
    def is_identity(self) -> bool:
        return self.mapping == tuple(range(1, len(self.mapping) + 1))

    def inverse(self) -> "InteriorPermutation":
        inv = [0] * len(self.mapping)
        for new_pos, src in enumerate(self.mapping, start=1):
            inv[src - 1] = new_pos
        return InteriorPermutation(tuple(inv))

    def full(self, n_layers: int) -> np.ndarray:
        """Extend to all layer indices, identity on 0 and n_layers-1."""
        if len(self.mapping) != n_layers - 2:
            raise ValueError(
                f"permutation covers {len(self.mapping)} interior positions, "
                f"architecture has {n_layers - 2}"
            )
        return np.array((0,) + self.mapping + (n_layers - 1,), dtype=np.intp)


@dataclass(frozen=True)
class AugmentationBatch:
    """All generated forms of one source architecture, original first."""

    source: Architecture
    members: tuple[Architecture, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def count(self) -> int:
        return len(self.members)


def _permute_unchecked(arch: Architecture, p: InteriorPermutation) -> Architecture:
    full = p.full(arch.n_layers)
    adj = arch.adjacency[np.ix_(full, full)]
    types = tuple(arch.types[i] for i in full)
    return Architecture(adj, types)


def permute(arch: Architecture, p: InteriorPermutation) -> Architecture:
    """Apply an interior permutation to types and adjacency together.

    Position i of the result holds the source's layer p(i): the type list is
    gathered through p and the adjacency is re-indexed by p on both axes, so
    the result is the same graph under a vertex relabelling.
    """
    require_valid(arch, augmented=True)
    return _permute_unchecked(arch, p)


def augment_all(
    arch: Architecture,
    limit: int | None = None,
    seed: int = 0,
    dedup: bool = False,
) -> AugmentationBatch:
    """Generate homogeneous forms of a valid, padded architecture.

    With ``limit=None`` every one of the (N_l - 2)! interior permutations is
    applied in lexicographic order, identity first. With a limit, the batch
    is the original plus ``limit`` forms drawn uniformly (seeded, without
    replacement) from the rest, kept in lexicographic order; ``limit=0``
    therefore returns the original alone. Bit-identical members arising
    from repeated layer types are kept unless ``dedup`` is set.
    """
    require_valid(arch)
    n = arch.n_layers
    if n > MAX_LAYERS:
        raise ValueError(
            f"{n} layers would mean {n - 2}! permutations; "
            f"the ceiling is {MAX_LAYERS} layers"
        )
    n_interior = n - 2
    total = factorial(n_interior)

    if limit is None:
        # itertools yields mappings in the same lexicographic order that
        # from_rank indexes, identity first
        perms = (
            InteriorPermutation(m)
            for m in itertools.permutations(range(1, n - 1))
        )
    else:
        if limit < 0:
            raise ValueError("limit must be non-negative")
        n_extra = min(limit, total - 1)
        rng = np.random.default_rng(derive_seed(seed, "augment-sample"))
        extra = rng.choice(total - 1, size=n_extra, replace=False) + 1
        ranks = [0] + sorted(int(r) for r in extra)
        perms = (InteriorPermutation.from_rank(r, n_interior) for r in ranks)

    # permutation of a valid architecture cannot break the relabelling
    # invariants, so members skip per-form validation
    members = [_permute_unchecked(arch, p) for p in perms]
    if dedup:
        seen: set[Architecture] = set()
        kept = []
        for m in members:
            if m not in seen:
                seen.add(m)
                kept.append(m)
        members = kept
    return AugmentationBatch(arch, tuple(members))


def label_propagate(
    batch: AugmentationBatch, y: float
) -> list[tuple[Architecture, float]]:
    """Pair every member of the batch with the source's performance value."""
    if not batch.members:
        raise ValueError("batch has no members")
    return [(m, y) for m in batch.members]
