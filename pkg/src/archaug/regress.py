"""Regression models mapping encoded architectures to accuracy.

The main model is a from-scratch random forest: CART regression trees with
variance-reduction splits, bootstrap resampling, and deterministic seeding
throughout. Linear least squares and k-nearest-neighbors serve as baseline
comparisons. All fitting is invariant to training-row order: rows are
brought into a canonical order before any random draw depends on them.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._tree import MAX_BUCKETS, grow_tree, predict_tree
from .seeding import derive_seed

ORIGIN_ORIGINAL = "original"
ORIGIN_AUGMENTED = "augmented"


def _frozen_f64(arr, ndim: int) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    if out.ndim != ndim:
        raise ValueError(f"expected {ndim}-dimensional array, got {out.ndim}")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TrainingSet:
    """Feature matrix, labels, and per-row provenance tags."""

    features: np.ndarray
    labels: np.ndarray
    origin: tuple[str, ...]
    n_original: int

    def __post_init__(self):
        X = _frozen_f64(self.features, 2)
        y = _frozen_f64(self.labels, 1)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "origin", tuple(self.origin))
        if X.shape[0] != y.size or X.shape[0] != len(self.origin):
            raise ValueError("features, labels, and origin row counts disagree")
        if not np.isfinite(y).all():
            raise ValueError("labels contain non-finite values")
        bad = {t for t in self.origin} - {ORIGIN_ORIGINAL, ORIGIN_AUGMENTED}
        if bad:
            raise ValueError(f"unknown origin tags {sorted(bad)}")
        n_orig = sum(t == ORIGIN_ORIGINAL for t in self.origin)
        if self.n_original != n_orig:
            raise ValueError(
                f"n_original is {self.n_original} but {n_orig} rows are tagged original"
            )

    @classmethod
    def from_arrays(cls, features, labels, origin=None) -> "TrainingSet":
        X = np.asarray(features, dtype=np.float64)
        if origin is None:
            origin = (ORIGIN_ORIGINAL,) * X.shape[0]
        origin = tuple(origin)
        return cls(X, labels, origin, sum(t == ORIGIN_ORIGINAL for t in origin))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters; the defaults are the evaluation contract."""

    n_trees: int = 100
    max_features: int | None = None  # None: consider every feature
    min_samples_split: int = 2
    max_depth: int | None = None  # None: grow until pure
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be at least 2")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")


@dataclass(frozen=True)
class Tree:
    """One grown tree as flat arrays; feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[Tree, ...]
    n_trees: int
    max_features: int
    min_samples_split: int
    max_depth: int  # -1 means unlimited
    bootstrap: bool
    seed: int
    n_features: int
    y_min: float
    y_max: float


@dataclass(frozen=True)
class LinearModel:
    coef: np.ndarray
    intercept: float
    n_features: int


@dataclass(frozen=True)
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    k: int
    n_features: int


def _canonical_order(X: np.ndarray, y: np.ndarray) -> list[int]:
    # row-content order, so shuffling the input cannot move any bootstrap draw
    Xc = np.ascontiguousarray(X)
    keys = [(Xc[i].tobytes(), y[i]) for i in range(Xc.shape[0])]
    return sorted(range(Xc.shape[0]), key=keys.__getitem__)


def _bucketize(X: np.ndarray):
    n, d = X.shape
    codes = np.empty((n, d), dtype=np.uint8)
    parts = []
    uoff = np.zeros(d + 1, dtype=np.int64)
    for f in range(d):
        u = np.unique(X[:, f])
        if u.size > MAX_BUCKETS:
            raise ValueError(
                f"feature {f} has {u.size} distinct values; the split search "
                f"handles at most {MAX_BUCKETS}"
            )
        codes[:, f] = np.searchsorted(u, X[:, f])
        parts.append(u)
        uoff[f + 1] = uoff[f] + u.size
    return codes, np.concatenate(parts), uoff


def fit_forest(
    data: TrainingSet,
    config: ForestConfig | None = None,
    seed: int = 0,
    n_jobs: int = 1,
) -> ForestModel:
    """Grow a seeded forest by variance-reduction CART on bootstrap samples.

    Each tree draws its bootstrap rows and split-feature stream from a
    sub-seed derived from (seed, tree index), so the result is independent
    of n_jobs and reruns are bit-identical.
    """
    config = config or ForestConfig()
    n, d = data.n, data.dim
    if n < 2:
        raise ValueError("need at least two training rows")
    if d < 1:
        raise ValueError("need at least one feature")
    mf = d if config.max_features is None else config.max_features
    if mf > d:
        raise ValueError(f"max_features {mf} exceeds feature count {d}")
    md = -1 if config.max_depth is None else config.max_depth

    order = _canonical_order(data.features, data.labels)
    X = np.ascontiguousarray(data.features[order])
    y = np.ascontiguousarray(data.labels[order])
    codes, uvals, uoff = _bucketize(X)

    def one_tree(t: int) -> Tree:
        if config.bootstrap:
            rng = np.random.default_rng(derive_seed(seed, "bootstrap", t))
            idx = np.sort(rng.integers(0, n, size=n)).astype(np.int64)
        else:
            idx = np.arange(n, dtype=np.int64)
        feat, thr, left, right, value, n_nodes = grow_tree(
            codes,
            uvals,
            uoff,
            y,
            idx,
            mf,
            config.min_samples_split,
            md,
            derive_seed(seed, "features", t),
        )
        return Tree(
            feat.copy(), thr.copy(), left.copy(), right.copy(), value.copy()
        )

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(one_tree, range(config.n_trees)))
    else:
        trees = tuple(one_tree(t) for t in range(config.n_trees))

    return ForestModel(
        trees=trees,
        n_trees=config.n_trees,
        max_features=mf,
        min_samples_split=config.min_samples_split,
        max_depth=md,
        bootstrap=config.bootstrap,
        seed=seed,
        n_features=d,
        y_min=float(y.min()),
        y_max=float(y.max()),
    )


def _check_features(X, n_features: int) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("features must be a 2-dimensional matrix")
    if X.shape[1] != n_features:
        raise ValueError(
            f"model expects {n_features} features, got {X.shape[1]}"
        )
    return X


def predict_per_tree(model: ForestModel, features) -> np.ndarray:
    """Every tree's prediction for every row, shape (n_trees, n_rows)."""
    X = _check_features(features, model.n_features)
    out = np.empty((model.n_trees, X.shape[0]), dtype=np.float64)
    for t, tree in enumerate(model.trees):
        predict_tree(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value,
            X, out[t],
        )
    return out


def predict(model, features) -> np.ndarray:
    """Predict accuracies for encoded architectures.

    Forests average the per-tree leaf values (a unanimous vote is passed
    through unchanged, keeping constants bit-exact) and stay inside the
    training-label range. The baselines use their own rules: linear output
    is unclamped, neighbor means are bounded by construction.
    """
    if isinstance(model, ForestModel):
        X = _check_features(features, model.n_features)
        m = X.shape[0]
        if m == 0:
            return np.empty(0, dtype=np.float64)
        buf = np.empty(m, dtype=np.float64)
        total = np.zeros(m, dtype=np.float64)
        mn = np.full(m, np.inf)
        mx = np.full(m, -np.inf)
        for tree in model.trees:
            predict_tree(
                tree.feature, tree.threshold, tree.left, tree.right,
                tree.value, X, buf,
            )
            total += buf
            np.minimum(mn, buf, out=mn)
            np.maximum(mx, buf, out=mx)
        out = total / model.n_trees
        agree = mn == mx
        out[agree] = mn[agree]
        return np.clip(out, model.y_min, model.y_max)
    if isinstance(model, LinearModel):
        X = _check_features(features, model.n_features)
        return X @ model.coef + model.intercept
    if isinstance(model, KnnModel):
        return _predict_knn(model, features)
    raise TypeError(f"unknown model type {type(model).__name__}")


def _predict_knn(model: KnnModel, features) -> np.ndarray:
    X = _check_features(features, model.n_features)
    n = model.features.shape[0]
    k = min(model.k, n)
    out = np.empty(X.shape[0], dtype=np.float64)
    train_sq = np.einsum("ij,ij->i", model.features, model.features)
    for lo in range(0, X.shape[0], 256):
        chunk = X[lo : lo + 256]
        d2 = (
            np.einsum("ij,ij->i", chunk, chunk)[:, None]
            - 2.0 * chunk @ model.features.T
            + train_sq[None, :]
        )
        # stable sort: equal distances resolve to the lower training row
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out[lo : lo + 256] = model.labels[nearest].mean(axis=1)
    return out


def fit_baseline(
    data: TrainingSet,
    kind: str,
    k: int = 5,
    ridge: bool = True,
    ridge_lambda: float = 1e-8,
):
    """Fit a comparison model: 'linear' least squares or 'knn'.

    The linear fit solves the normal equations; a singular system falls
    back to a small ridge term unless ``ridge`` is disabled, in which case
    it raises. One-hot blocks are linearly dependent by construction, so
    the fallback is the expected path there.
    """
    if data.n < 1:
        raise ValueError("empty training set")
    if kind == "linear":
        X = data.features
        ones = np.ones((data.n, 1))
        Xd = np.hstack([X, ones])
        G = Xd.T @ Xd
        b = Xd.T @ data.labels
        try:
            np.linalg.cholesky(G)
            w = np.linalg.solve(G, b)
        except np.linalg.LinAlgError:
            if not ridge:
                raise
            w = np.linalg.solve(G + ridge_lambda * np.eye(G.shape[0]), b)
        return LinearModel(
            coef=w[:-1].copy(), intercept=float(w[-1]), n_features=data.dim
        )
    if kind == "knn":
        if k < 1:
            raise ValueError("k must be at least 1")
        return KnnModel(
            features=data.features,
            labels=data.labels,
            k=k,
            n_features=data.dim,
        )
    raise ValueError(f"unknown baseline kind {kind!r}")
