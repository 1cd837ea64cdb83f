"""Score-learning algorithms mapping a dataset to a ScoreVector.

Every dataset type supports ``without(i)`` (1-based record removal), which is
all the leave-one-out harness needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import ScoreVector, StableRankError

DEFAULT_RATING_RANGE = (1.0, 5.0)


class BisectionError(StableRankError):
    """The ridge multiplier search did not reach the norm tolerance."""


def _check_record(i: int, n: int) -> int:
    if not 1 <= i <= n:
        raise StableRankError(f"record index {i} out of range 1..{n}")
    return i - 1


@dataclass(frozen=True)
class StabilityCertificate:
    epsilon: float
    delta: float
    kind: str = "analytic"

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise StableRankError("certificate epsilon must be positive")
        if not 0.0 <= self.delta <= 1.0:
            raise StableRankError("certificate delta must lie in [0, 1]")
        if self.kind not in ("analytic", "empirical"):
            raise StableRankError(f"unknown certificate kind {self.kind!r}")


@dataclass(frozen=True)
class VoteDataset:
    """One vote per participant, each a 1-based item index."""

    votes: tuple[int, ...]
    L: int
    item_labels: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        votes = tuple(int(v) for v in self.votes)
        if not votes:
            raise StableRankError("vote dataset is empty")
        if self.L < 1:
            raise StableRankError("L must be >= 1")
        bad = [v for v in votes if not 1 <= v <= self.L]
        if bad:
            raise StableRankError(f"vote {bad[0]} out of range 1..{self.L}")
        object.__setattr__(self, "votes", votes)

    @property
    def n(self) -> int:
        return len(self.votes)

    def without(self, i: int) -> "VoteDataset":
        i0 = _check_record(i, self.n)
        return VoteDataset(self.votes[:i0] + self.votes[i0 + 1:], self.L, self.item_labels)


@dataclass(frozen=True, eq=False)
class RatingsDataset:
    """Per-user ratings stored row-compressed.

    User ``u`` (0-based) owns ``items[indptr[u]:indptr[u+1]]`` (0-based item
    indices) with the matching ``ratings``.
    """

    indptr: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    L: int
    rating_range: tuple[float, float] = DEFAULT_RATING_RANGE
    item_labels: Optional[tuple[str, ...]] = None
    duplicate_count: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        indptr = np.asarray(self.indptr, dtype=np.int64)
        items = np.asarray(self.items, dtype=np.int64)
        ratings = np.asarray(self.ratings, dtype=float)
        if indptr.ndim != 1 or indptr.size < 2 or indptr[0] != 0 or np.any(np.diff(indptr) < 0):
            raise StableRankError("malformed user index pointer (need at least one user)")
        if indptr[-1] != items.size or items.size != ratings.size:
            raise StableRankError("ratings arrays have inconsistent lengths")
        if items.size and (items.min() < 0 or items.max() >= self.L):
            raise StableRankError(f"item index out of range 1..{self.L}")
        lo, hi = self.rating_range
        if ratings.size and (ratings.min() < lo or ratings.max() > hi or not np.all(np.isfinite(ratings))):
            raise StableRankError(f"rating outside declared range [{lo}, {hi}]")
        for name, arr in (("indptr", indptr), ("items", items), ("ratings", ratings)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_users(
        cls,
        users: Sequence[Mapping[int, float]],
        L: int,
        rating_range: tuple[float, float] = DEFAULT_RATING_RANGE,
        item_labels: Optional[tuple[str, ...]] = None,
    ) -> "RatingsDataset":
        """Build from per-user ``{item (1-based): rating}`` maps."""
        indptr = [0]
        items: list[int] = []
        ratings: list[float] = []
        for user in users:
            for item, rating in user.items():
                if not 1 <= item <= L:
                    raise StableRankError(f"item index {item} out of range 1..{L}")
                items.append(item - 1)
                ratings.append(float(rating))
            indptr.append(len(items))
        return cls(np.array(indptr), np.array(items, dtype=np.int64), np.array(ratings), L, rating_range, item_labels)

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @property
    def users(self) -> list[dict[int, float]]:
        return [
            {int(i) + 1: float(r) for i, r in zip(self.items[a:b], self.ratings[a:b])}
            for a, b in zip(self.indptr[:-1], self.indptr[1:])
        ]

    def subset(self, users: Sequence[int]) -> "RatingsDataset":
        """Dataset made of the given 0-based users, in the given order."""
        users = np.asarray(users, dtype=np.int64)
        starts, stops = self.indptr[users], self.indptr[users + 1]
        lengths = stops - starts
        take = np.concatenate([np.arange(a, b) for a, b in zip(starts, stops)]) if users.size else np.empty(0, np.int64)
        indptr = np.concatenate([[0], np.cumsum(lengths)])
        return RatingsDataset(indptr, self.items[take], self.ratings[take], self.L, self.rating_range, self.item_labels)

    def without(self, i: int) -> "RatingsDataset":
        i0 = _check_record(i, self.n)
        a, b = self.indptr[i0], self.indptr[i0 + 1]
        indptr = np.concatenate([self.indptr[:i0], self.indptr[i0 + 1:] - (b - a)])
        return RatingsDataset(
            indptr,
            np.concatenate([self.items[:a], self.items[b:]]),
            np.concatenate([self.ratings[:a], self.ratings[b:]]),
            self.L,
            self.rating_range,
            self.item_labels,
        )


@dataclass(frozen=True, eq=False)
class RegressionDataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[1] < 1:
            raise StableRankError("X must be an n x L matrix with L >= 1")
        if X.shape[0] != y.size or y.size < 1:
            raise StableRankError("X and y must have the same positive number of rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise StableRankError("regression data must be finite")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def L(self) -> int:
        return self.X.shape[1]

    def without(self, i: int) -> "RegressionDataset":
        i0 = _check_record(i, self.n)
        return RegressionDataset(np.delete(self.X, i0, axis=0), np.delete(self.y, i0))


Dataset = Union[VoteDataset, RatingsDataset, RegressionDataset]


def vote_fraction_scores(d: VoteDataset) -> tuple[ScoreVector, StabilityCertificate]:
    """Fraction of votes per item, with its analytic (sqrt(2)/n, 0) certificate.

    >>> vote_fraction_scores(VoteDataset((1, 1, 2, 3), 3))[0].tolist()
    [0.5, 0.25, 0.25]
    """
    counts = np.bincount(np.asarray(d.votes) - 1, minlength=d.L)
    return ScoreVector(counts / d.n), StabilityCertificate(math.sqrt(2.0) / d.n, 0.0, "analytic")


def shrunken_mean_scores(d: RatingsDataset) -> ScoreVector:
    """Per-item rating sum over (1 + rating count); unrated items score 0."""
    sums = np.bincount(d.items, weights=d.ratings, minlength=d.L)
    counts = np.bincount(d.items, minlength=d.L)
    return ScoreVector(sums / (1.0 + counts))


def constrained_lsq(
    X: np.ndarray, y: np.ndarray, radius: float = 1.0, tol: float = 1e-10, max_iter: int = 200
) -> np.ndarray:
    """Least squares restricted to the ball ``||beta||_2 <= radius``.

    The unconstrained minimum-norm solution is returned when it is feasible.
    Otherwise the ridge path ``beta(lam) = (X'X + lam I)^-1 X'y`` is searched
    by bisection on ``lam`` for ``||beta(lam)|| = radius``; the norm is strictly
    decreasing in ``lam``.  Both steps share one eigendecomposition of X'X.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise StableRankError("regression data must be finite")
    gram = X.T @ X
    evals, evecs = np.linalg.eigh(gram)
    evals = np.clip(evals, 0.0, None)
    proj = evecs.T @ (X.T @ y)

    cutoff = max(evals.max(), 1.0) * gram.shape[0] * np.finfo(float).eps
    keep = evals > cutoff
    coef = np.zeros_like(proj)
    coef[keep] = proj[keep] / evals[keep]
    if np.linalg.norm(coef) <= radius:
        return evecs @ coef

    def ridge_norm(lam: float) -> float:
        return float(np.linalg.norm(proj / (evals + lam)))

    hi = 1.0
    for _ in range(max_iter):
        if ridge_norm(hi) < radius:
            break
        hi *= 2.0
    else:
        raise BisectionError("could not bracket the ridge multiplier")
    lo = 0.0
    for _ in range(max_iter):
        lam = 0.5 * (lo + hi)
        gap = ridge_norm(lam) - radius
        if abs(gap) <= tol:
            return evecs @ (proj / (evals + lam))
        if gap > 0:
            lo = lam
        else:
            hi = lam
    raise BisectionError(f"ridge bisection did not converge in {max_iter} iterations")


def constrained_lsq_coef_scores(d: RegressionDataset) -> ScoreVector:
    """Absolute coefficients of unit-ball-constrained least squares."""
    return ScoreVector(np.abs(constrained_lsq(d.X, d.y)))


Scorer = Callable[[Dataset], ScoreVector]


def _vote_scores(d: VoteDataset) -> ScoreVector:
    return vote_fraction_scores(d)[0]


SCORERS: dict[str, tuple[type, Scorer]] = {
    "vote_fraction": (VoteDataset, _vote_scores),
    "shrunken_mean": (RatingsDataset, shrunken_mean_scores),
    "constrained_lsq": (RegressionDataset, constrained_lsq_coef_scores),
}


def get_scorer(name: str, dataset: Optional[Dataset] = None) -> Scorer:
    """Look up a scorer by name, checking it matches the dataset type."""
    try:
        kind, fn = SCORERS[name]
    except KeyError:
        raise StableRankError(f"unknown scorer {name!r}; choose from {sorted(SCORERS)}") from None
    if dataset is not None and not isinstance(dataset, kind):
        raise StableRankError(f"scorer {name!r} needs a {kind.__name__}, got {type(dataset).__name__}")
    return fn


def score(scorer: Callable, dataset: Dataset) -> ScoreVector:
    out = scorer(dataset)
    return out[0] if isinstance(out, tuple) else out


def loo_scores(scorer: Callable, dataset: Dataset, i: int) -> ScoreVector:
    """Scores recomputed with record ``i`` (1-based) removed."""
    if dataset.n < 2:
        raise StableRankError("leave-one-out needs n >= 2")
    return score(scorer, dataset.without(i))
