"""Predictor-guided evolutionary search over a cell space.

The loop is aging evolution: a fixed-size population ordered by age, a
tournament picking the parent each cycle, one mutation per child, and the
oldest member leaving. The predictor stands in for real training, so the
expensive step is gone and the budget is counted in predictor calls.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .arch_core import (
    Architecture,
    Space,
    canonical_key,
    op,
    random_architecture,
    validate,
)
from .encode import feature_matrix
from .regress import predict
from .seeding import derive_seed

MUTATION_TRIES = 100


@dataclass(frozen=True)
class SearchConfig:
    """Evolution hyperparameters; the two weights steer mutation choice."""

    population: int = 100
    cycles: int = 200
    tournament: int = 10
    edge_flip_prob: float = 0.5
    type_change_prob: float = 0.5
    top_k: int = 10
    seed: int = 0
    time_budget: float | None = None  # seconds of predictor wall time

    def __post_init__(self):
        if not self.population >= self.tournament >= 1:
            raise ValueError("need population >= tournament >= 1")
        if not 1 <= self.top_k <= self.population:
            raise ValueError("need 1 <= top_k <= population")
        if self.cycles < 0:
            raise ValueError("cycles must be non-negative")
        for p in (self.edge_flip_prob, self.type_change_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("mutation probabilities must lie in [0, 1]")
        if self.edge_flip_prob + self.type_change_prob <= 0.0:
            raise ValueError("at least one mutation operator needs weight")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


@dataclass(frozen=True)
class SearchResult:
    """Best candidates, the best-so-far trace, and the evaluation count."""

    selected: tuple[tuple[Architecture, float], ...]
    history: tuple[float, ...]
    evaluations: int

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(self.selected))
        object.__setattr__(self, "history", tuple(self.history))
        scores = [s for _, s in self.selected]
        if scores != sorted(scores, reverse=True):
            raise ValueError("selected must be sorted by descending score")
        if any(b < a for a, b in zip(self.history, self.history[1:])):
            raise ValueError("history must be non-decreasing")


def model_fitness(model, space: Space, scheme: str = "onehot", orientation: str = "row"):
    """Fitness callable scoring architectures through a fitted model."""

    def fitness(archs):
        X = feature_matrix(archs, space, scheme=scheme, orientation=orientation, checked=False)
        return predict(model, X)

    return fitness


def _mutate(
    arch: Architecture, space: Space, rng: np.random.Generator, cfg: SearchConfig
) -> Architecture:
    """One valid single-point mutation; a fresh random draw if none lands.

    Edge flips act on vertex pairs that carry no Null endpoint and type
    changes act on operation layers: mutations touching a Null layer can
    never validate, so excluding them only removes guaranteed rejects. The
    random fallback keeps the loop alive from unmutatable corners (the
    bare In->Out cell has nothing to flip).
    """
    non_null = [i for i, t in enumerate(arch.types) if not t.is_null]
    op_pos = [i for i, t in enumerate(arch.types) if t.is_op]
    pairs = [
        (i, j) for a, i in enumerate(non_null) for j in non_null[a + 1 :]
    ]
    w_edge = cfg.edge_flip_prob
    w_total = cfg.edge_flip_prob + cfg.type_change_prob
    for _ in range(MUTATION_TRIES):
        if rng.random() * w_total < w_edge:
            i, j = pairs[int(rng.integers(len(pairs)))]
            adj = arch.adjacency.copy()
            adj[i, j] ^= 1
            child = Architecture(adj, arch.types)
        else:
            if not op_pos or space.n_types < 2:
                continue
            pos = op_pos[int(rng.integers(len(op_pos)))]
            cur = arch.types[pos].op_id
            new = int(rng.integers(space.n_types - 1))
            if new >= cur:
                new += 1
            types = list(arch.types)
            types[pos] = op(new)
            child = Architecture(arch.adjacency, tuple(types))
        if validate(child).ok:
            return child
    return random_architecture(space, rng)


def evolve(space: Space, model, cfg: SearchConfig, scheme: str = "onehot",
           orientation: str = "row") -> SearchResult:
    """Run aging evolution and return the top_k distinct candidates.

    ``model`` is either a fitted regression model or a callable mapping a
    list of architectures to scores. Distinctness of the selection is up to
    interior relabelling, so homogeneous forms cannot crowd the top list;
    the best-scoring form represents each architecture. The optional time
    budget counts predictor wall time only and is checked once per cycle.
    """
    fitness = model if callable(model) else model_fitness(model, space, scheme, orientation)
    rng = np.random.default_rng(derive_seed(cfg.seed, "evolve"))

    spent = 0.0

    def timed_scores(archs) -> np.ndarray:
        nonlocal spent
        t0 = time.perf_counter()
        out = np.asarray(fitness(archs), dtype=np.float64)
        spent += time.perf_counter() - t0
        if out.shape != (len(archs),):
            raise ValueError("fitness must return one score per architecture")
        return out

    population = [random_architecture(space, rng) for _ in range(cfg.population)]
    scores = list(timed_scores(population))
    evaluations = cfg.population

    # best score seen per canonical form, with arrival order for tie-breaks
    pool: dict[bytes, tuple[float, int, Architecture]] = {}

    def record(arch: Architecture, score: float) -> None:
        key = canonical_key(arch)
        prev = pool.get(key)
        if prev is None:
            pool[key] = (score, len(pool), arch)
        elif score > prev[0]:
            pool[key] = (score, prev[1], arch)

    for arch, score in zip(population, scores):
        record(arch, float(score))

    best = max(scores)
    history = []
    for _ in range(cfg.cycles):
        if cfg.time_budget is not None and spent >= cfg.time_budget:
            break
        picks = rng.choice(cfg.population, size=cfg.tournament, replace=False)
        parent = population[int(picks[np.argmax([scores[int(p)] for p in picks])])]
        child = _mutate(parent, space, rng, cfg)
        child_score = float(timed_scores([child])[0])
        evaluations += 1
        population.append(child)
        scores.append(child_score)
        population.pop(0)
        scores.pop(0)
        record(child, child_score)
        if child_score > best:
            best = child_score
        history.append(best)

    ranked = sorted(pool.values(), key=lambda item: (-item[0], item[1]))
    selected = tuple((arch, score) for score, _, arch in ranked[: cfg.top_k])
    return SearchResult(selected=selected, history=tuple(history), evaluations=evaluations)


@dataclass(frozen=True)
class GroundTruth:
    """Benchmark truth for one searched architecture."""

    id: str
    val_acc: float
    test_acc: float | None
    percentile: float
    rank: int


def query_ground_truth(
    selected, records, space: Space, label: str = "val"
) -> list[GroundTruth]:
    """Look up searched architectures in a labeled dataset.

    Lookup is relabelling-invariant: any homogeneous form finds the record
    of its architecture. Percentile is the fraction of the dataset at or
    below the hit's accuracy (the dataset best scores 100.0) and rank 1 is
    the best, ties sharing the smaller rank value.
    """
    from .data_io import to_architecture  # local import breaks the cycle

    archs = [item[0] if isinstance(item, tuple) else item for item in selected]
    if not archs:
        return []

    index: dict[bytes, object] = {}
    for rec in records:
        key = canonical_key(to_architecture(rec, space))
        index.setdefault(key, rec)

    accs = np.sort(np.array([_acc_of(r, label) for r in records]))
    n = accs.size

    missing = []
    out = []
    for pos, arch in enumerate(archs):
        rec = index.get(canonical_key(arch))
        if rec is None:
            missing.append(pos)
            continue
        acc = _acc_of(rec, label)
        at_or_below = int(np.searchsorted(accs, acc, side="right"))
        above = n - at_or_below
        out.append(
            GroundTruth(
                id=rec.id,
                val_acc=rec.val_acc,
                test_acc=rec.test_acc,
                percentile=100.0 * at_or_below / n,
                rank=above + 1,
            )
        )
    if missing:
        raise LookupError(
            f"architectures at positions {missing} are not in the dataset"
        )
    return out


def _acc_of(rec, label: str) -> float:
    if label == "val":
        return rec.val_acc
    if label == "test":
        if rec.test_acc is None:
            raise ValueError(f"record {rec.id} has no test_acc")
        return rec.test_acc
    raise ValueError(f"label must be 'val' or 'test', got {label!r}")
