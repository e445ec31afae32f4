"""Prediction quality measures: rank correlation, squared error, rank tables.

Rank correlation is the tie-corrected Kendall coefficient. Mean-of-leaves
predictors produce tied predictions routinely, so the tie-corrected form is
the one that stays comparable across models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class EvalReport:
    """Evaluation summary for one (model, test set) pair."""

    ktau: float
    mse: float
    n: int
    rank_pairs: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if not -1.0 <= self.ktau <= 1.0:
            raise ValueError(f"ktau {self.ktau} outside [-1, 1]")
        if self.mse < 0:
            raise ValueError("mse must be non-negative")
        if self.rank_pairs is not None:
            object.__setattr__(
                self, "rank_pairs", tuple(map(tuple, self.rank_pairs))
            )
            want = set(range(1, self.n + 1))
            if {a for a, _ in self.rank_pairs} != want or {
                b for _, b in self.rank_pairs
            } != want:
                raise ValueError("rank columns must be permutations of 1..n")

    def to_dict(self) -> dict:
        out = {"ktau": self.ktau, "mse": self.mse, "n": self.n}
        if self.rank_pairs is not None:
            out["rank_pairs"] = [list(p) for p in self.rank_pairs]
        return out


@njit(cache=True)
def _count_swaps(a):
    # bottom-up stable merge sort, counting strict inversions
    n = a.size
    buf = np.empty(n, a.dtype)
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    swaps += mid - i
                    buf[k] = a[j]
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = a[j]
                j += 1
                k += 1
            a[lo:hi] = buf[lo:hi]
        width *= 2
    return swaps


def _tie_pairs(sorted_vals: np.ndarray) -> int:
    # sum of t*(t-1)/2 over runs of equal values
    _, counts = np.unique(sorted_vals, return_counts=True)
    c = counts.astype(np.int64)
    return int((c * (c - 1) // 2).sum())


def _joint_tie_pairs(a: np.ndarray, b: np.ndarray) -> int:
    change = np.empty(a.size, dtype=bool)
    change[0] = True
    change[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
    starts = np.flatnonzero(change)
    counts = np.diff(np.append(starts, a.size)).astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def kendall_tau(y, y_hat) -> float:
    """Tie-corrected rank correlation in [-1, 1].

    Runs in O(n log n): sort by (y, y_hat), then merge-count the swaps the
    y_hat column needs. With pair counts C (concordant), D (discordant) and
    per-vector tie counts, the result is
    (C - D) / sqrt((pairs untied in y) * (pairs untied in y_hat)), which
    reduces to the plain pair ratio when nothing is tied.
    """
    ya = _as_vector(y, "y")
    pa = _as_vector(y_hat, "y_hat")
    n = ya.size
    if pa.size != n:
        raise ValueError(f"length mismatch: {n} vs {pa.size}")
    if n < 2:
        raise ValueError("need at least two samples")

    order = np.lexsort((pa, ya))
    ys, ps = ya[order], pa[order]

    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(ys)
    n2 = _tie_pairs(np.sort(pa))
    n3 = _joint_tie_pairs(ys, ps)
    swaps = int(_count_swaps(ps.copy()))

    denom_y = n0 - n1
    denom_p = n0 - n2
    if denom_y == 0 or denom_p == 0:
        raise ValueError("rank correlation undefined: one vector is all ties")
    con_minus_dis = n0 - n1 - n2 + n3 - 2 * swaps
    return con_minus_dis / math.sqrt(denom_y * denom_p)


def mse(y, y_hat) -> float:
    """Mean squared difference."""
    ya = _as_vector(y, "y")
    pa = _as_vector(y_hat, "y_hat")
    if ya.size != pa.size:
        raise ValueError(f"length mismatch: {ya.size} vs {pa.size}")
    if ya.size == 0:
        raise ValueError("need at least one sample")
    d = ya - pa
    return float(np.mean(d * d))


def ranks_descending(values) -> np.ndarray:
    """Rank 1 for the largest value; ties broken by lower index."""
    arr = _as_vector(values, "values")
    order = np.lexsort((np.arange(arr.size), -arr))
    out = np.empty(arr.size, dtype=np.int64)
    out[order] = np.arange(1, arr.size + 1)
    return out


def rank_table(y, y_hat) -> list[tuple[int, int]]:
    """Per-sample (true rank, predicted rank) pairs, input order preserved."""
    ya = _as_vector(y, "y")
    pa = _as_vector(y_hat, "y_hat")
    if ya.size != pa.size:
        raise ValueError(f"length mismatch: {ya.size} vs {pa.size}")
    true_r = ranks_descending(ya)
    pred_r = ranks_descending(pa)
    return [(int(a), int(b)) for a, b in zip(true_r, pred_r)]


def evaluate(y, y_hat, with_ranks: bool = False) -> EvalReport:
    """Bundle rank correlation and squared error over one test set."""
    pairs = tuple(rank_table(y, y_hat)) if with_ranks else None
    return EvalReport(
        ktau=kendall_tau(y, y_hat),
        mse=mse(y, y_hat),
        n=int(np.asarray(y).size),
        rank_pairs=pairs,
    )


def write_rank_csv(pairs, path) -> None:
    """Rank pairs as two-column CSV with a header, LF line endings."""
    with open(path, "w", newline="\n") as fh:
        fh.write("true_rank,predicted_rank\n")
        for a, b in pairs:
            fh.write(f"{a},{b}\n")
