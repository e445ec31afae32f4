"""Fixed-length feature vectors for architectures.

Two schemes share the same geometry-first layout. The one-hot scheme drops
the trivially-zero parts of the adjacency matrix (In's inbound column, Out's
outbound row), flattens the rest, and appends a one-hot block per interior
layer type. The hard scheme is the older integer baseline: layer types are
mapped to small integers, broadcast across the full adjacency matrix, and
multiplied in elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arch_core import IN, OUT, Architecture, LayerType, Space, require_valid

SCHEME_ONEHOT = "onehot"
SCHEME_HARD = "hard"


@dataclass(frozen=True)
class EncodedVector:
    """Feature vector plus the scheme and space that define its layout."""

    values: np.ndarray
    scheme: str
    space: Space

    def __post_init__(self):
        v = np.asarray(self.values)
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.scheme not in (SCHEME_ONEHOT, SCHEME_HARD):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def __len__(self) -> int:
        return self.values.size


def onehot_length(space: Space) -> int:
    n = space.n_layers
    return (n - 1) ** 2 + (n - 2) * space.n_types


def hard_length(space: Space) -> int:
    return space.n_layers**2


def reduce(arch: Architecture) -> tuple[np.ndarray, tuple[LayerType, ...]]:
    """Strip the structurally-zero parts of a padded architecture.

    Drops the adjacency's first column (no edge enters In) and last row (no
    edge leaves Out), and drops In/Out from the type list. Nothing else is
    removed, so :func:`reconstruct` inverts this exactly.
    """
    n = arch.n_layers
    if n < 2:
        raise ValueError("architecture has no In/Out pair to reduce")
    require_valid(arch, augmented=True)
    return arch.adjacency[: n - 1, 1:], arch.types[1:-1]


def reconstruct(
    reduced_adj: np.ndarray, reduced_types: tuple[LayerType, ...]
) -> Architecture:
    """Reattach In/Out around a reduced (adjacency, types) pair."""
    reduced_adj = np.asarray(reduced_adj)
    m = reduced_adj.shape[0]
    if reduced_adj.shape != (m, m) or m != len(reduced_types) + 1:
        raise ValueError("reduced matrix and type list sizes disagree")
    n = m + 1
    adj = np.zeros((n, n), dtype=np.int8)
    adj[: n - 1, 1:] = reduced_adj
    return Architecture(adj, (IN,) + tuple(reduced_types) + (OUT,))


def one_hot(types: tuple[LayerType, ...], n_types: int) -> np.ndarray:
    """Concatenate one unit (or zero, for Null) block per layer type.

    Operation op_id maps to the unit vector with a one at op_id; Null maps
    to an all-zero block of the same width. In/Out must already have been
    reduced away.
    """
    out = np.zeros(len(types) * n_types, dtype=np.int8)
    for i, t in enumerate(types):
        if t.is_null:
            continue
        if not t.is_op:
            raise ValueError(f"type list still contains {t.tag!r}; reduce first")
        if t.op_id >= n_types:
            raise ValueError(f"op_id {t.op_id} outside vocabulary of {n_types}")
        out[i * n_types + t.op_id] = 1
    return out


def encode_onehot(
    arch: Architecture, space: Space, checked: bool = True
) -> EncodedVector:
    """Reduced adjacency flattened row-major, then one-hot type blocks.

    ``checked=False`` skips revalidation for callers that already hold a
    valid architecture (augmentation batches).
    """
    _check_size(arch, space)
    if checked:
        require_valid(arch, augmented=True)
    n = arch.n_layers
    adj_part = arch.adjacency[: n - 1, 1:].reshape(-1)
    type_part = one_hot(arch.types[1:-1], space.n_types)
    return EncodedVector(
        np.concatenate([adj_part, type_part]), SCHEME_ONEHOT, space
    )


def hard_int_map(types: tuple[LayerType, ...], n_types: int) -> np.ndarray:
    """Integer codes for the hard scheme: ops are 1..N_t, everything else 0.

    In, Out, and Null all code to zero; only zero keeps the value range
    inside {0, ..., N_t} without colliding with an operation.
    """
    out = np.zeros(len(types), dtype=np.int8)
    for i, t in enumerate(types):
        if t.is_op:
            if t.op_id >= n_types:
                raise ValueError(
                    f"op_id {t.op_id} outside vocabulary of {n_types}"
                )
            out[i] = t.op_id + 1
    return out


def encode_hard(
    arch: Architecture,
    space: Space,
    orientation: str = "row",
    checked: bool = True,
) -> EncodedVector:
    """Integer-coded types broadcast into the adjacency matrix, flattened.

    ``orientation`` picks the broadcast direction, which nothing pins down
    intrinsically: "row" replicates the code vector along rows so entry
    (i, j) carries the target layer's code, "col" replicates along columns
    so it carries the source layer's code.
    """
    _check_size(arch, space)
    if checked:
        require_valid(arch, augmented=True)
    codes = hard_int_map(arch.types, space.n_types)
    if orientation == "row":
        grid = arch.adjacency * codes[np.newaxis, :]
    elif orientation == "col":
        grid = arch.adjacency * codes[:, np.newaxis]
    else:
        raise ValueError(f"orientation must be 'row' or 'col', got {orientation!r}")
    return EncodedVector(grid.reshape(-1), SCHEME_HARD, space)


def feature_matrix(
    archs,
    space: Space,
    scheme: str = SCHEME_ONEHOT,
    orientation: str = "row",
    checked: bool = True,
) -> np.ndarray:
    """Stack encodings of many architectures into one float matrix."""
    if scheme == SCHEME_ONEHOT:
        rows = [encode_onehot(a, space, checked=checked).values for a in archs]
        width = onehot_length(space)
    elif scheme == SCHEME_HARD:
        rows = [
            encode_hard(a, space, orientation=orientation, checked=checked).values
            for a in archs
        ]
        width = hard_length(space)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not rows:
        return np.empty((0, width), dtype=np.float64)
    return np.stack(rows).astype(np.float64)


def _check_size(arch: Architecture, space: Space) -> None:
    if arch.n_layers != space.n_layers:
        raise ValueError(
            f"architecture has {arch.n_layers} layers, space "
            f"{space.name!r} expects {space.n_layers}; pad first"
        )
