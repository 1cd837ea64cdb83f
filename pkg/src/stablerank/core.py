"""Shared value types and ordering conventions.

Item indices are 1-based everywhere in the public API (``ItemSet`` members,
``Permutation`` entries, item arguments ``j``).  Internally arrays are
0-based; conversion happens at the function boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

# Absolute slack for boundary comparisons against epsilon.  Values inside the
# band [eps - TOL, eps + TOL] count as inside: that only ever enlarges a set.
TOL = 1e-9


class StableRankError(ValueError):
    """Base class for invalid inputs to the ranking operators."""


class EnumerationTruncated(StableRankError):
    """A ranking enumeration hit its cap where the full set was required."""


@dataclass(frozen=True)
class ScoreVector:
    """Finite real scores for ``L >= 1`` items."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.size < 1:
            raise StableRankError("score vector must have at least one entry")
        if not np.all(np.isfinite(arr)):
            raise StableRankError("scores must be finite (no NaN or infinity)")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScoreVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __hash__(self) -> int:
        return hash(self.values.tobytes())

    def tolist(self) -> list[float]:
        return self.values.tolist()


ScoresLike = Union[ScoreVector, Sequence[float], np.ndarray]


def as_scores(w: ScoresLike) -> ScoreVector:
    return w if isinstance(w, ScoreVector) else ScoreVector(w)


@dataclass(frozen=True)
class Inflation:
    """Inflation level ``epsilon > 0`` and its derived margin ``epsilon / sqrt(2)``."""

    epsilon: float

    def __post_init__(self) -> None:
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps <= 0.0:
            raise StableRankError(f"epsilon must be a positive finite number, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def margin(self) -> float:
        return self.epsilon / math.sqrt(2.0)

    def within(self, dist: float) -> bool:
        """True when ``dist < epsilon`` under the inclusive tolerance band."""
        return dist <= self.epsilon + TOL


InflationLike = Union[Inflation, float]


def as_inflation(eps: InflationLike) -> Inflation:
    return eps if isinstance(eps, Inflation) else Inflation(eps)


@dataclass(frozen=True)
class ItemSet:
    """Sorted, duplicate-free set of 1-based item indices."""

    members: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        members = tuple(sorted({int(m) for m in self.members}))
        if members and members[0] < 1:
            raise StableRankError("item indices are 1-based")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_zero_based(cls, idx: Iterable[int]) -> "ItemSet":
        return cls(tuple(int(i) + 1 for i in idx))

    def __contains__(self, item: object) -> bool:
        return item in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __and__(self, other: "ItemSet") -> "ItemSet":
        return ItemSet(tuple(set(self.members) & set(other.members)))

    def __or__(self, other: "ItemSet") -> "ItemSet":
        return ItemSet(self.members + other.members)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.members)

    def zero_based(self) -> list[int]:
        return [m - 1 for m in self.members]


@dataclass(frozen=True)
class Permutation:
    """A ranking: ``order[r]`` is the 1-based item placed at rank ``r + 1``."""

    order: tuple[int, ...]
    _position: dict[int, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        order = tuple(int(x) for x in self.order)
        if sorted(order) != list(range(1, len(order) + 1)):
            raise StableRankError(f"{order} is not a permutation of 1..{len(order)}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_position", {item: r + 1 for r, item in enumerate(order)})

    @classmethod
    def identity(cls, L: int) -> "Permutation":
        return cls(tuple(range(1, L + 1)))

    def position(self, j: int) -> int:
        """1-based rank of item ``j`` (the inverse permutation)."""
        try:
            return self._position[j]
        except KeyError:
            raise StableRankError(f"item {j} out of range 1..{len(self.order)}") from None

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self) -> Iterator[int]:
        return iter(self.order)

    def __getitem__(self, r: int) -> int:
        return self.order[r]


@dataclass(frozen=True)
class RankingSet:
    """Finite set of permutations; ``truncated`` marks a capped enumeration."""

    permutations: tuple[Permutation, ...] = ()
    truncated: bool = False

    def __post_init__(self) -> None:
        seen: dict[tuple[int, ...], Permutation] = {}
        for p in self.permutations:
            p = p if isinstance(p, Permutation) else Permutation(tuple(p))
            seen.setdefault(p.order, p)
        object.__setattr__(self, "permutations", tuple(seen.values()))

    def __len__(self) -> int:
        return len(self.permutations)

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.permutations)

    def __contains__(self, pi: object) -> bool:
        order = pi.order if isinstance(pi, Permutation) else tuple(pi)  # type: ignore[arg-type]
        return any(p.order == order for p in self.permutations)

    def orders(self) -> set[tuple[int, ...]]:
        return {p.order for p in self.permutations}


def check_item(j: int, L: int) -> int:
    """Validate a 1-based item index and return it 0-based."""
    if not 1 <= j <= L:
        raise StableRankError(f"item index {j} out of range 1..{L}")
    return j - 1


def descending_order(values: np.ndarray) -> np.ndarray:
    """0-based indices sorting ``values`` descending, ties by ascending index."""
    return np.argsort(-values, kind="stable")


def sort_descending(w: ScoresLike) -> tuple[ScoreVector, Permutation]:
    """Sort scores descending; ties go to the smaller original index.

    >>> s, p = sort_descending([3, 1, 2])
    >>> s.tolist(), p.order
    ([3.0, 2.0, 1.0], (1, 3, 2))
    """
    w = as_scores(w)
    order = descending_order(w.values)
    return ScoreVector(w.values[order]), Permutation(tuple(order + 1))


def plain_topk(w: ScoresLike, k: int) -> ItemSet:
    """The usual top-k: first ``k`` items after sorting, smallest index wins ties."""
    w = as_scores(w)
    if not 1 <= k <= len(w):
        raise StableRankError(f"k={k} out of range 1..{len(w)}")
    return ItemSet.from_zero_based(descending_order(w.values)[:k])


def plain_ranking(w: ScoresLike) -> Permutation:
    return sort_descending(w)[1]
