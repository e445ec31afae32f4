"""Canonical cell-architecture representation and graph utilities.

A cell is a DAG: vertices are layers, edges are tensor connections. Layer 0
is the single input (``In``), the last layer is the single output (``Out``),
and interior layers carry operations from a space's vocabulary or are
``Null`` padding. The adjacency matrix entry (i, j) marks an edge from layer
i's output into layer j's input.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from math import factorial

import numpy as np

TAG_IN = "in"
TAG_OUT = "out"
TAG_OP = "op"
TAG_NULL = "null"

# class products beyond this would make the exhaustive bijection search hang
_ISO_SEARCH_CEILING = 5_000_000


class InvalidArchitectureError(ValueError):
    """Raised when an operation requires a valid architecture and gets none."""


class SamplingError(RuntimeError):
    """Raised when no valid architecture can be drawn within the retry bound."""


@dataclass(frozen=True)
class LayerType:
    """One entry of the layer type list: In, Out, Null, or an operation."""

    tag: str
    op_id: int = -1

    def __post_init__(self):
        if self.tag not in (TAG_IN, TAG_OUT, TAG_OP, TAG_NULL):
            raise ValueError(f"unknown layer tag {self.tag!r}")
        if self.tag == TAG_OP and self.op_id < 0:
            raise ValueError("operation layers need op_id >= 0")
        if self.tag != TAG_OP and self.op_id != -1:
            raise ValueError(f"{self.tag} layers carry no op_id")

    @property
    def is_op(self) -> bool:
        return self.tag == TAG_OP

    @property
    def is_null(self) -> bool:
        return self.tag == TAG_NULL


IN = LayerType(TAG_IN)
OUT = LayerType(TAG_OUT)
NULL = LayerType(TAG_NULL)


def op(op_id: int) -> LayerType:
    """Operation layer with the given vocabulary index."""
    return LayerType(TAG_OP, op_id)


@dataclass(frozen=True)
class Space:
    """A cell search space: fixed layer count and operation vocabulary."""

    name: str
    n_layers: int
    op_vocab: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "op_vocab", tuple(self.op_vocab))
        if self.n_layers < 2:
            raise ValueError("a space needs at least In and Out layers")
        if len(set(self.op_vocab)) != len(self.op_vocab):
            raise ValueError("op_vocab entries must be unique")
        if not self.op_vocab:
            raise ValueError("op_vocab must not be empty")

    @property
    def n_types(self) -> int:
        return len(self.op_vocab)


NB101_OPS = ("conv1x1", "conv3x3", "maxpool3x3")


def space_nb101() -> Space:
    """The 7-layer, 3-operation space of NAS-Bench-101 style cells."""
    return Space("nb101", 7, NB101_OPS)


def space_synthetic() -> Space:
    """Synthetic benchmark space; same geometry as the NB-101 space."""
    return Space("synthetic", 7, NB101_OPS)


@dataclass(frozen=True, eq=False)
class Architecture:
    """Immutable (adjacency, layer-type list) pair.

    The adjacency matrix is stored exactly as given (homogeneous forms keep
    their permuted matrices); semantic checks live in :func:`validate`.
    """

    adjacency: np.ndarray
    types: tuple[LayerType, ...]

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.int8)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if adj.shape[0] != len(self.types):
            raise ValueError(
                f"adjacency is {adj.shape[0]}x{adj.shape[0]} but the type "
                f"list has {len(self.types)} entries"
            )
        if adj.size and not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        adj = adj.copy()
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "types", tuple(self.types))

    @property
    def n_layers(self) -> int:
        return len(self.types)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Architecture):
            return NotImplemented
        return self.types == other.types and np.array_equal(
            self.adjacency, other.adjacency
        )

    def __hash__(self) -> int:
        return hash((self.types, self.adjacency.tobytes()))

    def __repr__(self) -> str:
        tags = ",".join(
            str(t.op_id) if t.is_op else t.tag for t in self.types
        )
        return f"Architecture(n={self.n_layers}, types=[{tags}])"


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`: empty violation list means valid."""

    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _reachability(adj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices reachable from In (forward) and reaching Out (backward)."""
    n = adj.shape[0]
    fwd = np.zeros(n, dtype=bool)
    fwd[0] = True
    stack = [0]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(adj[v]):
            if not fwd[w]:
                fwd[w] = True
                stack.append(int(w))
    bwd = np.zeros(n, dtype=bool)
    bwd[n - 1] = True
    stack = [n - 1]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(adj[:, v]):
            if not bwd[w]:
                bwd[w] = True
                stack.append(int(w))
    return fwd, bwd


def _has_cycle(adj: np.ndarray) -> bool:
    # Kahn's algorithm; permuted matrices are no longer triangular, so
    # acyclicity has to be checked directly.
    indeg = adj.sum(axis=0).astype(np.int64)
    queue = [int(v) for v in np.flatnonzero(indeg == 0)]
    seen = 0
    while queue:
        v = queue.pop()
        seen += 1
        for w in np.flatnonzero(adj[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(int(w))
    return seen != adj.shape[0]


def validate(arch: Architecture, augmented: bool = False) -> ValidationReport:
    """Check the architecture invariants and report every violation.

    With ``augmented=True`` the strict upper-triangularity and the
    Null-suffix placement checks are skipped (homogeneous forms permute
    interior layers, so their matrices are relabelled); acyclicity is then
    verified directly instead.
    """
    adj = arch.adjacency
    types = arch.types
    n = arch.n_layers
    bad: list[str] = []

    if types[0] != IN:
        bad.append("first layer must be In")
    if types[-1] != OUT:
        bad.append("last layer must be Out")
    for i, t in enumerate(types[1:-1], start=1):
        if t.tag in (TAG_IN, TAG_OUT):
            bad.append(f"interior layer {i} has placeholder type {t.tag}")

    if not augmented:
        if np.tril(adj).any():
            bad.append("adjacency is not strictly upper-triangular")
        nulls = [i for i in range(1, n - 1) if types[i].is_null]
        if nulls and nulls != list(range(n - 1 - len(nulls), n - 1)):
            bad.append("Null layers must form a suffix of the interior")
    else:
        if np.diag(adj).any():
            bad.append("adjacency has self-loops")
        elif _has_cycle(adj):
            bad.append("adjacency has a cycle")

    if adj[:, 0].any():
        bad.append("In layer has inbound edges")
    if adj[-1, :].any():
        bad.append("Out layer has outbound edges")

    for i in range(n):
        if types[i].is_null and (adj[i, :].any() or adj[:, i].any()):
            bad.append(f"Null layer {i} has edges")

    if not bad:
        fwd, bwd = _reachability(adj)
        if not (fwd[-1] and bwd[0]):
            bad.append("no In->Out path exists")
        for i in range(1, n - 1):
            if not types[i].is_null and not (fwd[i] and bwd[i]):
                bad.append(f"interior layer {i} lies on no In->Out path")

    return ValidationReport(tuple(bad))


def require_valid(arch: Architecture, augmented: bool = False) -> None:
    """Raise :class:`InvalidArchitectureError` unless ``validate`` passes."""
    report = validate(arch, augmented=augmented)
    if not report.ok:
        raise InvalidArchitectureError("; ".join(report.violations))


def pad(arch: Architecture, target_n: int) -> Architecture:
    """Grow the architecture to ``target_n`` layers with Null padding.

    New Null layers (all-zero rows and columns) are inserted at the
    penultimate position, directly before Out; existing edges keep their
    endpoints under the induced index shift.
    """
    n = arch.n_layers
    if n > target_n:
        raise ValueError(f"cannot pad {n} layers down to {target_n}")
    if n == target_n:
        return arch
    require_valid(arch)
    adj = np.zeros((target_n, target_n), dtype=np.int8)
    adj[: n - 1, : n - 1] = arch.adjacency[: n - 1, : n - 1]
    adj[: n - 1, target_n - 1] = arch.adjacency[: n - 1, n - 1]
    types = arch.types[:-1] + (NULL,) * (target_n - n) + (OUT,)
    return Architecture(adj, types)


def strip_nulls(arch: Architecture) -> Architecture:
    """Drop Null layers, keeping the induced subgraph on the rest."""
    keep = [i for i, t in enumerate(arch.types) if not t.is_null]
    adj = arch.adjacency[np.ix_(keep, keep)]
    return Architecture(adj, tuple(arch.types[i] for i in keep))


def _interior_classes(types: tuple[LayerType, ...]) -> dict[LayerType, list[int]]:
    groups: dict[LayerType, list[int]] = defaultdict(list)
    for i, t in enumerate(types[1:-1], start=1):
        groups[t].append(i)
    return groups


def _class_keys(groups) -> list[LayerType]:
    return sorted(groups, key=lambda t: (t.tag, t.op_id))


def _check_search_size(groups) -> None:
    total = 1
    for positions in groups.values():
        total *= factorial(len(positions))
    if total > _ISO_SEARCH_CEILING:
        raise ValueError(
            f"exhaustive bijection search over {total} candidates is infeasible"
        )


def isomorphic(a: Architecture, b: Architecture) -> bool:
    """True iff a bijection fixing In and Out maps one onto the other.

    The bijection must preserve layer types and edges, so the exhaustive
    search only enumerates type-preserving assignments of interior vertices;
    Null layers are stripped first (they carry no structure).
    """
    require_valid(a, augmented=True)
    require_valid(b, augmented=True)
    sa, sb = strip_nulls(a), strip_nulls(b)
    n = sa.n_layers
    if n != sb.n_layers:
        return False
    ga, gb = _interior_classes(sa.types), _interior_classes(sb.types)
    if {t: len(v) for t, v in ga.items()} != {t: len(v) for t, v in gb.items()}:
        return False
    _check_search_size(ga)
    keys = _class_keys(ga)
    perm = np.empty(n, dtype=np.intp)
    perm[0] = 0
    perm[n - 1] = n - 1
    adj_a, adj_b = sa.adjacency, sb.adjacency
    for combo in itertools.product(
        *(itertools.permutations(gb[t]) for t in keys)
    ):
        for t, assigned in zip(keys, combo):
            for a_pos, b_pos in zip(ga[t], assigned):
                perm[a_pos] = b_pos
        if np.array_equal(adj_b[np.ix_(perm, perm)], adj_a):
            return True
    return False


def canonical_key(arch: Architecture) -> bytes:
    """Isomorphism-invariant lookup key.

    The key is the lexicographically smallest (types, adjacency) encoding
    over all interior permutations of the Null-stripped graph. Sorting the
    interior types first means only within-type permutations can produce
    the minimum, which keeps the enumeration small for mixed-type cells.
    """
    require_valid(arch, augmented=True)
    s = strip_nulls(arch)
    n = s.n_layers
    groups = _interior_classes(s.types)
    _check_search_size(groups)
    keys = _class_keys(groups)
    sorted_ops = bytes(
        t.op_id for t in sorted(s.types[1:-1], key=lambda t: (t.tag, t.op_id))
    )
    header = bytes([n]) + sorted_ops
    perm = np.empty(n, dtype=np.intp)
    perm[0] = 0
    perm[n - 1] = n - 1
    best: bytes | None = None
    for combo in itertools.product(
        *(itertools.permutations(groups[t]) for t in keys)
    ):
        pos = 1
        for assigned in combo:
            for src in assigned:
                perm[pos] = src
                pos += 1
        blob = s.adjacency[np.ix_(perm, perm)].tobytes()
        if best is None or blob < best:
            best = blob
    return header + (best or b"")


def longest_path_edges(arch: Architecture) -> int:
    """Edge count of the longest In->Out path (DAG dynamic program)."""
    require_valid(arch, augmented=True)
    adj = arch.adjacency
    n = arch.n_layers
    indeg = adj.sum(axis=0).astype(np.int64)
    order = [int(v) for v in np.flatnonzero(indeg == 0)]
    dist = np.full(n, -1, dtype=np.int64)
    dist[0] = 0
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for w in np.flatnonzero(adj[v]):
            if dist[v] >= 0 and dist[v] + 1 > dist[w]:
                dist[w] = dist[v] + 1
            indeg[w] -= 1
            if indeg[w] == 0:
                order.append(int(w))
    return int(dist[n - 1])


def random_architecture(
    space: Space,
    rng: np.random.Generator,
    interior_ops: int | None = None,
    max_tries: int = 10_000,
) -> Architecture:
    """Draw a valid architecture, padded to the space's layer count.

    The operation-layer count is uniform over 0..n_layers-2 (redrawn per
    attempt unless pinned by ``interior_ops``); types and upper-triangular
    edge bits are uniform, rejection-sampled until every operation layer
    lies on an In->Out path.
    """
    max_interior = space.n_layers - 2
    if interior_ops is not None and not 0 <= interior_ops <= max_interior:
        raise ValueError(f"interior_ops must lie in [0, {max_interior}]")
    for _ in range(max_tries):
        k = (
            interior_ops
            if interior_ops is not None
            else int(rng.integers(0, max_interior + 1))
        )
        m = k + 2
        types = (
            (IN,)
            + tuple(op(int(o)) for o in rng.integers(0, space.n_types, size=k))
            + (OUT,)
        )
        adj = np.triu(rng.integers(0, 2, size=(m, m), dtype=np.int8), 1)
        arch = Architecture(adj, types)
        if validate(arch).ok:
            return pad(arch, space.n_layers)
    raise SamplingError(
        f"no valid architecture found in {max_tries} draws from {space.name}"
    )
