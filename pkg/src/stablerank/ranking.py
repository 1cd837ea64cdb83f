"""Inflated full ranking: membership, enumeration and position bounds.

A permutation belongs to the inflated full ranking when, at every depth, the
item it places next is in the inflated argmax of the items not yet placed.
Enumeration is a depth-first search that branches on exactly that set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .argmax import SCREEN_SLACK, _waterfill, inflated_argmax_indices
from .core import (
    EnumerationTruncated,
    Inflation,
    InflationLike,
    ItemSet,
    Permutation,
    RankingSet,
    ScoresLike,
    StableRankError,
    as_inflation,
    as_scores,
    check_item,
    descending_order,
)
from .topk import inflated_topk_indices

DEFAULT_CAP = 10_000
MAX_SUPERSET_L = 8


@dataclass(frozen=True)
class PositionBounds:
    item: int
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if not 1 <= self.lo <= self.hi:
            raise StableRankError(f"invalid bounds lo={self.lo} hi={self.hi}")

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


def _first_in_argmax(values: np.ndarray, inflation: Inflation) -> bool:
    """Is entry 0 of ``values`` in its inflated argmax?"""
    if values.size == 1:
        return True
    c = inflation.margin
    wj = float(values[0])
    rest = values[1:]
    if wj <= rest.max() - c - SCREEN_SLACK:
        return False
    raised = np.sort(rest + c)[::-1].tolist()
    dist, _, _ = _waterfill(wj, raised)
    return inflation.within(dist)


def ranking_contains(w: ScoresLike, pi: Permutation | tuple[int, ...], inflation: InflationLike) -> bool:
    """Membership test for the inflated full ranking.

    >>> ranking_contains([1, 0.5, 0], Permutation((2, 1, 3)), 1.0)
    True
    >>> ranking_contains([1, 0.5, 0], Permutation((2, 3, 1)), 1.0)
    False
    """
    w = as_scores(w)
    inflation = as_inflation(inflation)
    pi = pi if isinstance(pi, Permutation) else Permutation(tuple(pi))
    if len(pi) != len(w):
        raise StableRankError(f"permutation length {len(pi)} does not match L={len(w)}")
    permuted = w.values[np.asarray(pi.order) - 1]
    # the last suffix has a single entry and always passes
    return all(_first_in_argmax(permuted[r:], inflation) for r in range(len(w) - 1))


def enumerate_rankings(
    w: ScoresLike, inflation: InflationLike, cap: Optional[int] = DEFAULT_CAP
) -> RankingSet:
    """All permutations in the inflated full ranking, in lexicographic order.

    Stops after ``cap`` permutations and flags the result as truncated if a
    further one exists.

    >>> [p.order for p in enumerate_rankings([1, 0.5, 0], 1.0)]
    [(1, 2, 3), (1, 3, 2), (2, 1, 3)]
    """
    w = as_scores(w)
    inflation = as_inflation(inflation)
    if cap is not None and cap < 1:
        raise StableRankError("cap must be >= 1")
    values = w.values
    found: list[tuple[int, ...]] = []
    prefix: list[int] = []
    truncated = False

    def descend(remaining: list[int]) -> bool:
        nonlocal truncated
        if len(remaining) == 1:
            if cap is not None and len(found) >= cap:
                truncated = True
                return False
            found.append(tuple(i + 1 for i in prefix + remaining))
            return True
        idx = np.asarray(remaining)
        for pos in sorted(inflated_argmax_indices(values[idx], inflation)):
            item = remaining[pos]
            prefix.append(item)
            ok = descend(remaining[:pos] + remaining[pos + 1:])
            prefix.pop()
            if not ok:
                return False
        return True

    descend(list(range(len(w))))
    return RankingSet(tuple(Permutation(p) for p in found), truncated=truncated)


def position_bounds(w: ScoresLike, j: int, inflation: InflationLike) -> PositionBounds:
    """Range of ranks item ``j`` can take in any inflated full ranking.

    >>> position_bounds([1, 0.5, 0], 3, 1.0)
    PositionBounds(item=3, lo=2, hi=3)
    """
    w = as_scores(w)
    inflation = as_inflation(inflation)
    j0 = check_item(j, len(w))
    values = w.values
    lo = next(k for k in range(1, len(w) + 1) if j0 in inflated_topk_indices(values, k, inflation))
    hi = int(np.count_nonzero(values > values[j0] - inflation.margin - SCREEN_SLACK))
    return PositionBounds(j, lo, hi)


def estimate_ranking_count(w: ScoresLike, inflation: InflationLike) -> int:
    """Product of position-interval widths.  A coarse upper bound, for warnings only."""
    w = as_scores(w)
    return math.prod(position_bounds(w, j, inflation).width for j in range(1, len(w) + 1))


def topk_via_rankings(w: ScoresLike, k: int, inflation: InflationLike, cap: Optional[int] = DEFAULT_CAP) -> ItemSet:
    """Union of the first ``k`` entries over the whole inflated full ranking."""
    w = as_scores(w)
    if not 1 <= k <= len(w):
        raise StableRankError(f"k={k} out of range 1..{len(w)}")
    rankings = enumerate_rankings(w, inflation, cap)
    if rankings.truncated:
        raise EnumerationTruncated(f"ranking enumeration exceeded cap={cap}; the union is incomplete")
    return ItemSet(tuple(item for p in rankings for item in p.order[:k]))


def prefix_consistent_superset(w: ScoresLike, inflation: InflationLike) -> RankingSet:
    """Permutations whose k-th entry lies in the inflated top-k for every k."""
    w = as_scores(w)
    inflation = as_inflation(inflation)
    L = len(w)
    if L > MAX_SUPERSET_L:
        raise StableRankError(f"superset enumeration is exhaustive; L={L} exceeds {MAX_SUPERSET_L}")
    allowed = [set(inflated_topk_indices(w.values, k, inflation)) for k in range(1, L + 1)]
    found: list[tuple[int, ...]] = []

    def descend(prefix: list[int]) -> None:
        depth = len(prefix)
        if depth == L:
            found.append(tuple(i + 1 for i in prefix))
            return
        for item in sorted(allowed[depth] - set(prefix)):
            descend(prefix + [item])

    descend([])
    return RankingSet(tuple(Permutation(p) for p in found))


def intersects(rankings: RankingSet, v: ScoresLike, inflation: InflationLike) -> Optional[bool]:
    """Does ``rankings`` share a permutation with the inflated full ranking of ``v``?

    Returns None when ``rankings`` is truncated and no shared member was found
    among the enumerated ones: emptiness is then undecidable.
    """
    v = as_scores(v)
    inflation = as_inflation(inflation)
    plain = tuple(descending_order(v.values) + 1)
    if plain in rankings:
        return True
    if any(ranking_contains(v, p, inflation) for p in rankings):
        return True
    return None if rankings.truncated else False
