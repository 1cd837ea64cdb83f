"""Inflated top-k selection.

After sorting, the first ``k - 1`` positions are always selected and the
ambiguity at the k-th boundary is resolved by the inflated argmax of the
sorted tail ``(w_(k), ..., w_(L))``.

Two exhaustive oracles (exponential cost, test use only) compute the same
set from its definition and from the subvector-union characterisation.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .argmax import _waterfill, inflated_argmax_indices
from .core import (
    Inflation,
    InflationLike,
    ItemSet,
    ScoresLike,
    StableRankError,
    as_inflation,
    as_scores,
    descending_order,
)

MAX_DEFINITION_L = 12
MAX_UNION_L = 10


def _check_k(k: int, L: int) -> None:
    if not 1 <= k <= L:
        raise StableRankError(f"k={k} out of range 1..{L}")


def inflated_topk_indices(values: np.ndarray, k: int, inflation: Inflation) -> list[int]:
    L = values.size
    if k == L:
        return list(range(L))
    order = descending_order(values)
    tail = inflated_argmax_indices(values[order[k - 1:]], inflation)
    return order[: k - 1].tolist() + order[k - 1:][tail].tolist()


def inflated_topk(w: ScoresLike, k: int, inflation: InflationLike) -> ItemSet:
    """Inflated top-k; always contains the plain top-k and has size >= k.

    >>> inflated_topk([1, 0.5, 0], 2, 1.0).members
    (1, 2, 3)
    """
    w = as_scores(w)
    _check_k(k, len(w))
    return ItemSet.from_zero_based(inflated_topk_indices(w.values, k, as_inflation(inflation)))


def topk_definition_oracle(w: ScoresLike, k: int, inflation: InflationLike) -> ItemSet:
    """Inflated top-k straight from the distance-to-cone definition.

    The cone for item ``j`` is a union over (k-1)-subsets ``S`` of the other
    items of convex pieces in which only coordinates outside ``S`` are
    constrained; the distance is the minimum over the pieces.
    """
    w = as_scores(w)
    inflation = as_inflation(inflation)
    L = len(w)
    _check_k(k, L)
    if L > MAX_DEFINITION_L:
        raise StableRankError(f"definition oracle is exhaustive; L={L} exceeds {MAX_DEFINITION_L}")
    values = w.values
    c = inflation.margin
    selected = []
    for j in range(L):
        others = [i for i in range(L) if i != j]
        for free in combinations(others, k - 1):
            constrained = sorted(set(others) - set(free), key=lambda i: (-values[i], i))
            raised = [float(values[i]) + c for i in constrained]
            dist, _, _ = _waterfill(float(values[j]), raised)
            if inflation.within(dist):
                selected.append(j)
                break
    return ItemSet.from_zero_based(selected)


def topk_union_oracle(w: ScoresLike, k: int, inflation: InflationLike) -> ItemSet:
    """Union of inflated argmaxes over every subvector of length >= L - k + 1."""
    w = as_scores(w)
    inflation = as_inflation(inflation)
    L = len(w)
    _check_k(k, L)
    if L > MAX_UNION_L:
        raise StableRankError(f"union oracle is exhaustive; L={L} exceeds {MAX_UNION_L}")
    selected: set[int] = set()
    for size in range(L - k + 1, L + 1):
        for sub in combinations(range(L), size):
            idx = np.array(sub)
            for pos in inflated_argmax_indices(w.values[idx], inflation):
                selected.add(int(idx[pos]))
    return ItemSet.from_zero_based(selected)
