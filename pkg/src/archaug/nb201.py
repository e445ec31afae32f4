"""Edge-labelled cells rewritten as operation-on-vertex DAGs.

Some benchmark spaces put the operation on the EDGE between computation
nodes rather than on the node itself. The rest of this package wants the
vertex form, so each labelled edge becomes an operation vertex whose wiring
follows the edge's endpoints (the line graph of the cell). Edges labelled
``none`` vanish, vertices that end up off every In->Out path are dropped,
and the result is padded with Null layers to the space's layer count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .arch_core import IN, OUT, Architecture, Space, op, pad

NONE_OP = "none"
OPS_201 = ("skip_connect", "conv1x1", "conv3x3", "avgpool3x3")


class DegenerateCellError(ValueError):
    """Raised when a cell keeps no In->Out path after none-edges drop out."""


def op_vocab_201() -> Space:
    """The 4-node edge-cell space in vertex form: 8 layers, 4 op types."""
    return Space("nb201", 8, OPS_201)


@dataclass(frozen=True)
class EdgeCell:
    """Complete edge labelling of a small DAG cell.

    Node 0 is the cell input and node ``n_nodes - 1`` the output; every
    ordered pair (i, j) with i < j carries exactly one operation name,
    ``none`` meaning the edge is absent.
    """

    n_nodes: int
    edge_ops: tuple[tuple[int, int, str], ...]

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("a cell needs an input and an output node")
        want = [(i, j) for i in range(self.n_nodes) for j in range(i + 1, self.n_nodes)]
        entries = tuple(sorted((int(i), int(j), str(name)) for i, j, name in self.edge_ops))
        if [(i, j) for i, j, _ in entries] != want:
            raise ValueError(
                f"edge_ops must cover each pair i<j of {self.n_nodes} nodes exactly once"
            )
        object.__setattr__(self, "edge_ops", entries)

    @classmethod
    def from_mapping(
        cls, mapping: Mapping, n_nodes: int = 4
    ) -> "EdgeCell":
        """Build from {(i, j): name} or {"i-j": name} style mappings."""
        entries = []
        for key, name in mapping.items():
            if isinstance(key, str):
                i, j = (int(part) for part in key.split("-"))
            else:
                i, j = key
            entries.append((i, j, name))
        return cls(n_nodes, tuple(entries))

    def to_mapping(self) -> dict[str, str]:
        return {f"{i}-{j}": name for i, j, name in self.edge_ops}


def to_standard_dag(cell: EdgeCell, space: Space | None = None) -> Architecture:
    """Rewrite an edge cell in vertex form, pruned and padded.

    Kept edges, in lexicographic (i, j) order, become operation vertices
    between In and Out. The vertex for edge (i, j) receives from In when
    i = 0 and from every vertex of an edge (k, i); it feeds Out when j is
    the cell output and every vertex of an edge (j, m). Lexicographic order
    makes the matrix upper-triangular, since (k, i) always sorts before
    (i, m). Vertices that sit on no In->Out path are removed before padding.
    """
    space = space if space is not None else op_vocab_201()
    last = cell.n_nodes - 1
    live = [
        (i, j, name) for i, j, name in cell.edge_ops if name != NONE_OP
    ]
    for _, _, name in live:
        if name not in space.op_vocab:
            raise ValueError(f"operation {name!r} not in space {space.name!r}")

    # adjacency over [In] + live edge-vertices + [Out]
    m = len(live) + 2
    adj = np.zeros((m, m), dtype=np.int8)
    for a, (i, j, _) in enumerate(live, start=1):
        if i == 0:
            adj[0, a] = 1
        if j == last:
            adj[a, m - 1] = 1
        for b, (k, l, _) in enumerate(live, start=1):
            if l == i:
                adj[b, a] = 1

    fwd = _reach(adj, 0, forward=True)
    bwd = _reach(adj, m - 1, forward=False)
    if not (fwd[m - 1] and bwd[0]):
        raise DegenerateCellError(
            "cell has no In->Out path once none edges are removed"
        )
    keep = [0] + [
        a for a in range(1, m - 1) if fwd[a] and bwd[a]
    ] + [m - 1]
    adj = adj[np.ix_(keep, keep)]
    kept_ops = [live[a - 1][2] for a in keep[1:-1]]

    if len(kept_ops) + 2 > space.n_layers:
        raise ValueError(
            f"{len(kept_ops)} operation vertices exceed space "
            f"{space.name!r} with {space.n_layers} layers"
        )
    types = (
        (IN,)
        + tuple(op(space.op_vocab.index(name)) for name in kept_ops)
        + (OUT,)
    )
    return pad(Architecture(adj, types), space.n_layers)


def _reach(adj: np.ndarray, start: int, forward: bool) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        v = stack.pop()
        nbrs = np.flatnonzero(adj[v] if forward else adj[:, v])
        for w in nbrs:
            if not seen[w]:
                seen[w] = True
                stack.append(int(w))
    return seen
