"""Inflated argmax via Euclidean projection onto margin cones.

For an item ``j`` the margin cone is ``{v : v_j >= v_i + c for all i != j}``
with ``c = epsilon / sqrt(2)``.  Fixing the raised coordinate at ``t``, the
closest point clamps every violator to ``t - c``, so the squared distance is

    (t - w_j)**2 + sum_i max(0, w_i + c - t)**2,

a convex piecewise quadratic in ``t``.  Its minimiser is the average of
``w_j`` and the clamped values ``w_i + c`` for the active set, which we grow
greedily in decreasing order of ``w_i + c`` (water-filling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    TOL,
    Inflation,
    InflationLike,
    ItemSet,
    ScoresLike,
    as_inflation,
    as_scores,
    check_item,
    descending_order,
)

# The screen must stay a superset of the tolerance-inclusive argmax: an item
# at gap g below the max is inside only if g <= c + sqrt(2) * TOL.
SCREEN_SLACK = 2 * TOL


@dataclass(frozen=True)
class ConeProjection:
    distance: float
    apex: float
    pulled: ItemSet


def _waterfill(wj: float, raised: Sequence[float], skip: int = -1) -> tuple[float, float, list[int]]:
    """Project onto one margin cone.

    ``raised`` holds ``w_i + c`` sorted descending; position ``skip`` (the
    queried item itself) is ignored.  Returns the distance, the apex ``t`` and
    the positions in ``raised`` that were clamped.
    """
    t = wj
    total = wj
    active: list[int] = []
    for pos, a in enumerate(raised):
        if pos == skip:
            continue
        if a <= t:
            break
        active.append(pos)
        total += a
        t = total / (len(active) + 1)
    d2 = (t - wj) ** 2
    for pos in active:
        d2 += (raised[pos] - t) ** 2
    return math.sqrt(d2), t, active


def _screen(values: np.ndarray, margin: float) -> np.ndarray:
    return np.flatnonzero(values > values.max() - margin - SCREEN_SLACK)


def inflated_argmax_indices(values: np.ndarray, inflation: Inflation) -> list[int]:
    """0-based inflated argmax of a float array.  Hot path for the other modules."""
    if values.size == 1:
        return [0]
    c = inflation.margin
    cand = _screen(values, c)
    if cand.size == 1:
        return [int(cand[0])]
    order = descending_order(values)
    raised = (values[order] + c).tolist()
    rank_of = np.empty(values.size, dtype=np.intp)
    rank_of[order] = np.arange(values.size)
    out = []
    for j in cand.tolist():
        dist, _, _ = _waterfill(float(values[j]), raised, skip=int(rank_of[j]))
        if inflation.within(dist):
            out.append(j)
    return out


def margin_cone_distance(w: ScoresLike, j: int, inflation: InflationLike) -> ConeProjection:
    """Exact distance from ``w`` to the margin cone of item ``j`` (1-based).

    >>> round(margin_cone_distance([1, 0.5, 0], 2, 1.0).distance, 4)
    0.8536
    """
    w = as_scores(w)
    inflation = as_inflation(inflation)
    j0 = check_item(j, len(w))
    values = w.values
    others = np.array([i for i in descending_order(values + inflation.margin) if i != j0], dtype=np.intp)
    raised = (values[others] + inflation.margin).tolist()
    dist, t, active = _waterfill(float(values[j0]), raised)
    return ConeProjection(dist, t, ItemSet.from_zero_based(others[active]))


def inflated_argmax(w: ScoresLike, inflation: InflationLike) -> ItemSet:
    """Items whose margin cone lies within ``epsilon`` of ``w``.

    >>> inflated_argmax([1, 0.5, 0], 1.0).members
    (1, 2)
    """
    w = as_scores(w)
    return ItemSet.from_zero_based(inflated_argmax_indices(w.values, as_inflation(inflation)))


def candidate_screen(w: ScoresLike, inflation: InflationLike) -> ItemSet:
    """Cheap superset of the inflated argmax: items within the margin of the max."""
    w = as_scores(w)
    return ItemSet.from_zero_based(_screen(w.values, as_inflation(inflation).margin))


def is_singleton_separated(w: ScoresLike, j: int, inflation: InflationLike) -> bool:
    """True when item ``j`` leads every other item by at least the margin.

    The comparison carries the same tolerance band as the distance test, so a
    True result always coincides with ``inflated_argmax(w) == {j}``.
    """
    w = as_scores(w)
    inflation = as_inflation(inflation)
    j0 = check_item(j, len(w))
    if len(w) == 1:
        return True
    rest = np.delete(w.values, j0)
    return bool(w.values[j0] - rest.max() > inflation.margin + math.sqrt(2.0) * TOL)
