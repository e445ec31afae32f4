"""Dataset records, JSONL persistence, splits, synthetic benchmarks, model files.

Benchmark entries are one JSON object per line. Vertex-form spaces store an
adjacency matrix plus verbal op names (with ``input``/``output``/``null``
markers); the edge-form space stores an ``edge_ops`` mapping instead. All
sampling here is deterministic given the caller's seed.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass

import numpy as np

from .arch_core import (
    IN,
    NULL,
    OUT,
    Architecture,
    Space,
    canonical_key,
    longest_path_edges,
    op,
    pad,
    random_architecture,
    require_valid,
)
from .augment import augment_all, label_propagate
from .encode import encode_hard, encode_onehot
from .nb201 import DegenerateCellError, EdgeCell, to_standard_dag
from .regress import (
    ORIGIN_AUGMENTED,
    ORIGIN_ORIGINAL,
    ForestModel,
    KnnModel,
    LinearModel,
    TrainingSet,
    Tree,
)
from .seeding import derive_seed

logger = logging.getLogger(__name__)

SPACES = ("nb101", "nb201", "synthetic")
MARK_IN = "input"
MARK_OUT = "output"
MARK_NULL = "null"

MODEL_FORMAT = "archaug-model"
MODEL_VERSION = 1


class SchemaError(ValueError):
    """A JSONL line that does not satisfy the record schema."""


@dataclass(frozen=True)
class BenchRecord:
    """One benchmarked architecture with its measured accuracies."""

    id: str
    space: str
    val_acc: float
    test_acc: float | None = None
    adjacency: tuple[tuple[int, ...], ...] | None = None
    ops: tuple[str, ...] | None = None
    edge_ops: tuple[tuple[int, int, str], ...] | None = None

    def __post_init__(self):
        if self.space not in SPACES:
            raise ValueError(f"unknown space {self.space!r}")
        if not 0.0 <= self.val_acc <= 1.0:
            raise ValueError(f"val_acc {self.val_acc} outside [0, 1]")
        if self.test_acc is not None and not 0.0 <= self.test_acc <= 1.0:
            raise ValueError(f"test_acc {self.test_acc} outside [0, 1]")
        matrix_form = self.adjacency is not None or self.ops is not None
        edge_form = self.edge_ops is not None
        if matrix_form == edge_form:
            raise ValueError(
                "record needs exactly one of (adjacency, ops) or edge_ops"
            )
        if edge_form:
            if self.space != "nb201":
                raise ValueError(f"edge_ops form requires space nb201, got {self.space}")
            object.__setattr__(
                self,
                "edge_ops",
                tuple(sorted((int(i), int(j), str(o)) for i, j, o in self.edge_ops)),
            )
        else:
            if self.adjacency is None or self.ops is None:
                raise ValueError("matrix form needs both adjacency and ops")
            adj = tuple(tuple(int(v) for v in row) for row in self.adjacency)
            ops = tuple(str(o) for o in self.ops)
            if len(adj) != len(ops) or any(len(r) != len(ops) for r in adj):
                raise ValueError("adjacency shape does not match ops length")
            object.__setattr__(self, "adjacency", adj)
            object.__setattr__(self, "ops", ops)

    def to_json(self) -> dict:
        out: dict = {"id": self.id, "space": self.space, "val_acc": self.val_acc}
        if self.test_acc is not None:
            out["test_acc"] = self.test_acc
        if self.edge_ops is not None:
            out["edge_ops"] = {f"{i}-{j}": o for i, j, o in self.edge_ops}
        else:
            out["adjacency"] = [list(r) for r in self.adjacency]
            out["ops"] = list(self.ops)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "BenchRecord":
        if not isinstance(obj, dict):
            raise ValueError("record must be a JSON object")
        for key in ("id", "space", "val_acc"):
            if key not in obj:
                raise ValueError(f"missing field {key!r}")
        known = {"id", "space", "val_acc", "test_acc", "adjacency", "ops", "edge_ops"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown fields {sorted(extra)}")
        edge_ops = None
        if "edge_ops" in obj:
            if not isinstance(obj["edge_ops"], dict):
                raise ValueError("edge_ops must be an object")
            entries = []
            for key, name in obj["edge_ops"].items():
                try:
                    i, j = (int(p) for p in key.split("-"))
                except Exception as exc:
                    raise ValueError(f"bad edge key {key!r}") from exc
                entries.append((i, j, name))
            edge_ops = tuple(entries)
        return cls(
            id=str(obj["id"]),
            space=str(obj["space"]),
            val_acc=float(obj["val_acc"]),
            test_acc=None if obj.get("test_acc") is None else float(obj["test_acc"]),
            adjacency=(
                tuple(tuple(r) for r in obj["adjacency"])
                if "adjacency" in obj
                else None
            ),
            ops=tuple(obj["ops"]) if "ops" in obj else None,
            edge_ops=edge_ops,
        )


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/test sample sizes plus the seed that draws them."""

    n_train: int
    n_test: int
    seed: int

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 0:
            raise ValueError("n_train must be >= 1 and n_test >= 0")


def load_jsonl(path, skip_degenerate: bool = True) -> list[BenchRecord]:
    """Parse one record per line; schema problems name the offending line.

    Edge-form records whose cells keep no In->Out path are skipped (with a
    logged count) rather than rejected, since benchmarks do contain them.
    """
    records = []
    n_degenerate = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            try:
                rec = BenchRecord.from_json(obj)
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from exc
            if rec.edge_ops is not None and skip_degenerate:
                try:
                    cell = EdgeCell(_edge_cell_nodes(rec.edge_ops), rec.edge_ops)
                    to_standard_dag(cell)
                except DegenerateCellError:
                    n_degenerate += 1
                    continue
                except ValueError as exc:
                    raise SchemaError(f"line {lineno}: {exc}") from exc
            records.append(rec)
    if n_degenerate:
        logger.warning("skipped %d degenerate edge-form records", n_degenerate)
    return records


def write_jsonl(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), sort_keys=True))
            fh.write("\n")


def _edge_cell_nodes(edge_ops) -> int:
    return max(j for _, j, _ in edge_ops) + 1


def to_architecture(record: BenchRecord, space: Space, strict: bool = True) -> Architecture:
    """Record to validated Architecture, padded to the space's layer count.

    ``strict=False`` accepts relabelled rows (as written by augmentation),
    which satisfy the relaxed acyclic contract but not layer ordering.
    """
    if record.edge_ops is not None:
        cell = EdgeCell(_edge_cell_nodes(record.edge_ops), record.edge_ops)
        return to_standard_dag(cell, space)
    types = []
    for name in record.ops:
        if name == MARK_IN:
            types.append(IN)
        elif name == MARK_OUT:
            types.append(OUT)
        elif name == MARK_NULL:
            types.append(NULL)
        elif name in space.op_vocab:
            types.append(op(space.op_vocab.index(name)))
        else:
            raise ValueError(f"op {name!r} not in space {space.name!r}")
    arch = Architecture(np.array(record.adjacency, dtype=np.int8), tuple(types))
    require_valid(arch, augmented=not strict)
    return pad(arch, space.n_layers)


def split(records, spec: SplitSpec):
    """Disjoint uniform train/test subsets, deterministic under the seed."""
    n = len(records)
    if spec.n_train + spec.n_test > n:
        raise ValueError(
            f"requested {spec.n_train}+{spec.n_test} records from {n}"
        )
    rng = np.random.default_rng(derive_seed(spec.seed, "split"))
    pick = rng.choice(n, size=spec.n_train + spec.n_test, replace=False)
    train = [records[int(i)] for i in pick[: spec.n_train]]
    test = [records[int(i)] for i in pick[spec.n_train :]]
    return train, test


OP_WEIGHT_BASE = 0.05
OP_WEIGHT_STEP = -0.02
PATH_WEIGHTS = (0.04, -0.005)
EDGE_WEIGHTS = (0.008, -0.0005)
SCORE_OFFSET = 0.5


def synthetic_score(arch: Architecture) -> float:
    """Noiseless synthetic accuracy from permutation-invariant structure.

    The score is a fixed quadratic in the op-type counts, the longest
    In->Out path length, and the edge count. Every input is invariant under
    interior relabelling, so all homogeneous forms of an architecture share
    the score; that invariance is the signal the predictor has to find.
    """
    counts: dict[int, int] = {}
    for t in arch.types:
        if t.is_op:
            counts[t.op_id] = counts.get(t.op_id, 0) + 1
    g = SCORE_OFFSET
    for op_id, c in counts.items():
        g += (OP_WEIGHT_BASE + OP_WEIGHT_STEP * op_id) * c
    path = longest_path_edges(arch)
    edges = int(arch.adjacency.sum())
    g += PATH_WEIGHTS[0] * path + PATH_WEIGHTS[1] * path * path
    g += EDGE_WEIGHTS[0] * edges + EDGE_WEIGHTS[1] * edges * edges
    return float(min(1.0, max(0.0, g)))


def gen_synthetic(
    space: Space, n: int, seed: int, noise_sd: float = 0.01
) -> list[BenchRecord]:
    """Draw n structurally distinct architectures with synthetic labels.

    Distinctness is up to interior relabelling (canonical key), so the same
    architecture never appears twice under different representations.
    val_acc and test_acc get independent noise draws around the same score.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(derive_seed(seed, "gen-synthetic"))
    seen: set[bytes] = set()
    records: list[BenchRecord] = []
    budget = 200 * n + 5000
    for _ in range(budget):
        if len(records) == n:
            break
        arch = random_architecture(space, rng)
        key = canonical_key(arch)
        if key in seen:
            continue
        seen.add(key)
        score = synthetic_score(arch)
        val = float(np.clip(score + rng.normal(0.0, noise_sd), 0.0, 1.0))
        test = float(np.clip(score + rng.normal(0.0, noise_sd), 0.0, 1.0))
        records.append(
            BenchRecord(
                id=f"syn-{len(records):05d}",
                space=space.name if space.name in SPACES else "synthetic",
                val_acc=val,
                test_acc=test,
                adjacency=tuple(tuple(int(v) for v in row) for row in arch.adjacency),
                ops=tuple(_op_name(t, space) for t in arch.types),
            )
        )
    if len(records) < n:
        raise ValueError(
            f"space {space.name!r} yielded only {len(records)} distinct "
            f"architectures of {n} requested"
        )
    return records


def _op_name(t, space: Space) -> str:
    if t == IN:
        return MARK_IN
    if t == OUT:
        return MARK_OUT
    if t.is_null:
        return MARK_NULL
    return space.op_vocab[t.op_id]


def from_architecture(
    arch: Architecture, space: Space, id: str, val_acc: float,
    test_acc: float | None = None,
) -> BenchRecord:
    """Matrix-form record for an architecture; inverse of to_architecture."""
    return BenchRecord(
        id=id,
        space=space.name,
        val_acc=val_acc,
        test_acc=test_acc,
        adjacency=tuple(tuple(int(v) for v in row) for row in arch.adjacency),
        ops=tuple(_op_name(t, space) for t in arch.types),
    )


def build_training_set(
    records,
    space: Space,
    scheme: str = "onehot",
    augment: bool = True,
    limit: int | None = None,
    seed: int = 0,
    label: str = "val",
    orientation: str = "row",
    strict: bool = True,
) -> TrainingSet:
    """Records to (features, labels): convert, optionally augment, encode.

    Augmented rows carry their source's label and an ``augmented`` origin
    tag; originals always come first within each record's block. Reading a
    file that was augmented beforehand needs ``strict=False`` (and no
    second augmentation pass, which only accepts canonical layer order).
    """
    vectors = []
    labels = []
    origin = []
    for i, rec in enumerate(records):
        arch = to_architecture(rec, space, strict=strict)
        y = _label_of(rec, label)
        if augment:
            batch = augment_all(arch, limit=limit, seed=derive_seed(seed, "augment", i))
            for j, (member, y_m) in enumerate(label_propagate(batch, y)):
                vectors.append(_encode(member, space, scheme, orientation))
                labels.append(y_m)
                origin.append(ORIGIN_ORIGINAL if j == 0 else ORIGIN_AUGMENTED)
        else:
            vectors.append(_encode(arch, space, scheme, orientation))
            labels.append(y)
            origin.append(ORIGIN_ORIGINAL)
    X = np.stack(vectors).astype(np.float64)
    return TrainingSet(X, np.asarray(labels), tuple(origin), len(records))


def _label_of(rec: BenchRecord, label: str) -> float:
    if label == "val":
        return rec.val_acc
    if label == "test":
        if rec.test_acc is None:
            raise ValueError(f"record {rec.id} has no test_acc")
        return rec.test_acc
    raise ValueError(f"label must be 'val' or 'test', got {label!r}")


def _encode(arch, space, scheme, orientation) -> np.ndarray:
    # members of an augmentation batch are valid by construction
    if scheme == "onehot":
        return encode_onehot(arch, space, checked=False).values
    if scheme == "hard":
        return encode_hard(arch, space, orientation=orientation, checked=False).values
    raise ValueError(f"unknown scheme {scheme!r}")


def _b64(arr: np.ndarray) -> dict:
    c = np.ascontiguousarray(arr)
    le = c.astype(c.dtype.newbyteorder("<"), copy=False)
    return {
        "dtype": str(c.dtype),
        "shape": list(c.shape),
        "data": base64.b64encode(le.tobytes()).decode("ascii"),
    }


def _unb64(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    dtype = np.dtype(obj["dtype"]).newbyteorder("<")
    arr = np.frombuffer(raw, dtype=dtype).reshape(obj["shape"])
    return arr.astype(np.dtype(obj["dtype"]), copy=True)


def _model_payload(model):
    if isinstance(model, ForestModel):
        meta = {
            "kind": "forest",
            "n_trees": model.n_trees,
            "max_features": model.max_features,
            "min_samples_split": model.min_samples_split,
            "max_depth": model.max_depth,
            "bootstrap": model.bootstrap,
            "seed": model.seed,
            "n_features": model.n_features,
            "y_min": model.y_min,
            "y_max": model.y_max,
        }
        arrays = {}
        for t, tree in enumerate(model.trees):
            arrays[f"tree{t}/feature"] = tree.feature
            arrays[f"tree{t}/threshold"] = tree.threshold
            arrays[f"tree{t}/left"] = tree.left
            arrays[f"tree{t}/right"] = tree.right
            arrays[f"tree{t}/value"] = tree.value
        return meta, arrays
    if isinstance(model, LinearModel):
        meta = {
            "kind": "linear",
            "intercept": model.intercept,
            "n_features": model.n_features,
        }
        return meta, {"coef": model.coef}
    if isinstance(model, KnnModel):
        meta = {"kind": "knn", "k": model.k, "n_features": model.n_features}
        return meta, {"features": model.features, "labels": model.labels}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _model_from_payload(meta: dict, arrays: dict):
    kind = meta["kind"]
    if kind == "forest":
        trees = []
        for t in range(meta["n_trees"]):
            trees.append(
                Tree(
                    feature=arrays[f"tree{t}/feature"],
                    threshold=arrays[f"tree{t}/threshold"],
                    left=arrays[f"tree{t}/left"],
                    right=arrays[f"tree{t}/right"],
                    value=arrays[f"tree{t}/value"],
                )
            )
        return ForestModel(
            trees=tuple(trees),
            n_trees=meta["n_trees"],
            max_features=meta["max_features"],
            min_samples_split=meta["min_samples_split"],
            max_depth=meta["max_depth"],
            bootstrap=meta["bootstrap"],
            seed=meta["seed"],
            n_features=meta["n_features"],
            y_min=meta["y_min"],
            y_max=meta["y_max"],
        )
    if kind == "linear":
        return LinearModel(
            coef=arrays["coef"],
            intercept=meta["intercept"],
            n_features=meta["n_features"],
        )
    if kind == "knn":
        return KnnModel(
            features=arrays["features"],
            labels=arrays["labels"],
            k=meta["k"],
            n_features=meta["n_features"],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path, extras: dict | None = None) -> None:
    """Write a model file: .npz paths get the binary form, others JSON.

    Both forms carry the same versioned payload and restore bit-identical
    predictions; the binary form is the compact choice for large forests.
    ``extras`` rides along untouched (the CLI stores encoding settings
    there so evaluation never has to guess them).
    """
    meta, arrays = _model_payload(model)
    path = str(path)
    header = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "meta": meta}
    if extras:
        header["extras"] = extras
    if path.endswith(".npz"):
        manifest = json.dumps(header, sort_keys=True)
        payload = {
            key.replace("/", "__"): value for key, value in arrays.items()
        }
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh,
                __manifest__=np.frombuffer(manifest.encode(), dtype=np.uint8),
                **payload,
            )
        return
    doc = dict(header)
    doc["arrays"] = {key: _b64(value) for key, value in arrays.items()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path, with_extras: bool = False):
    """Restore a model saved by :func:`save_model` (format sniffed)."""
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"PK":
        with np.load(path) as npz:
            manifest = json.loads(bytes(npz["__manifest__"]).decode())
            _check_model_header(manifest)
            arrays = {
                key.replace("__", "/"): npz[key].copy()
                for key in npz.files
                if key != "__manifest__"
            }
        doc = manifest
    else:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        _check_model_header(doc)
        arrays = {key: _unb64(value) for key, value in doc["arrays"].items()}
    model = _model_from_payload(doc["meta"], arrays)
    if with_extras:
        return model, doc.get("extras", {})
    return model


def _check_model_header(doc) -> None:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a model file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
