"""Leave-one-out stability harness and experiment drivers.

A trial scores the full dataset once and every leave-one-out variant once,
then measures how often the ranking output changes too much:

* top-k: removal ``i`` is unstable when the two selected sets share fewer
  than ``k`` items;
* full ranking: removal ``i`` is unstable when the two sets of permutations
  are disjoint.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .core import TOL, Inflation, InflationLike, ItemSet, ScoreVector, StableRankError, as_inflation, plain_ranking, plain_topk
from .ranking import DEFAULT_CAP, enumerate_rankings, intersects
from .scoring import (
    Dataset,
    RatingsDataset,
    RegressionDataset,
    constrained_lsq_coef_scores,
    score,
    shrunken_mean_scores,
)
from .topk import inflated_topk

METHODS = ("plain", "inflated")


@dataclass(frozen=True)
class TrialMetrics:
    delta: float
    jaccard: Optional[float]
    size: float
    undecided: int = 0
    truncated: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 1.0:
            raise StableRankError(f"delta {self.delta} outside [0, 1]")
        if self.jaccard is not None and not 0.0 <= self.jaccard <= 1.0:
            raise StableRankError(f"jaccard {self.jaccard} outside [0, 1]")
        if self.size < 0:
            raise StableRankError("size must be nonnegative")


def _mean_stderr(xs: Sequence[float]) -> tuple[Optional[float], Optional[float]]:
    if not xs:
        return None, None
    arr = np.asarray(xs, dtype=float)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    return float(arr.mean()), stderr


@dataclass(frozen=True)
class StabilityReport:
    """Per-trial metrics for one method plus the configuration that produced them."""

    trials: tuple[TrialMetrics, ...]
    config: dict[str, Any] = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.trials)

    @property
    def max_delta(self) -> Optional[float]:
        return max((t.delta for t in self.trials), default=None)

    def mean_stderr(self, metric: str) -> tuple[Optional[float], Optional[float]]:
        values = [getattr(t, metric) for t in self.trials]
        if any(v is None for v in values):
            return None, None
        return _mean_stderr(values)

    @property
    def mean_delta(self) -> Optional[float]:
        return self.mean_stderr("delta")[0]

    @property
    def mean_jaccard(self) -> Optional[float]:
        return self.mean_stderr("jaccard")[0]

    @property
    def mean_size(self) -> Optional[float]:
        return self.mean_stderr("size")[0]

    def aggregates(self) -> Optional[dict[str, dict[str, Optional[float]]]]:
        if not self.trials:
            return None
        out: dict[str, dict[str, Optional[float]]] = {"mean": {}, "stderr": {}, "max": {}}
        for metric in ("delta", "jaccard", "size"):
            mean, stderr = self.mean_stderr(metric)
            values = [getattr(t, metric) for t in self.trials]
            out["mean"][metric] = mean
            out["stderr"][metric] = stderr
            out["max"][metric] = None if mean is None else float(max(values))
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": dict(self.config),
            "per_trial": [asdict(t) for t in self.trials],
            "aggregates": self.aggregates(),
        }


@dataclass(frozen=True)
class ScoreStabilityEstimate:
    epsilon: float
    empirical_delta: float


def _loo_all(dataset: Dataset, scorer: Callable) -> tuple[ScoreVector, list[ScoreVector]]:
    if dataset.n < 2:
        raise StableRankError("leave-one-out evaluation needs n >= 2")
    full = score(scorer, dataset)
    return full, [score(scorer, dataset.without(i)) for i in range(1, dataset.n + 1)]


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise StableRankError(f"method must be one of {METHODS}, got {method!r}")


def _topk_operator(method: str, k: int, inflation: Inflation) -> Callable[[ScoreVector], ItemSet]:
    _check_method(method)
    if method == "plain":
        return lambda w: plain_topk(w, k)
    return lambda w: inflated_topk(w, k, inflation)


def topk_metrics(
    full: ScoreVector, loo: Sequence[ScoreVector], k: int, inflation: InflationLike, method: str
) -> TrialMetrics:
    """Top-k instability, Jaccard agreement and set size from precomputed scores."""
    op = _topk_operator(method, k, as_inflation(inflation))
    base = op(full).as_set()
    unstable = 0
    jaccard = 0.0
    for w in loo:
        other = op(w).as_set()
        common = len(base & other)
        unstable += common < k
        jaccard += common / len(base | other)
    n = len(loo)
    return TrialMetrics(unstable / n, jaccard / n, float(len(base)))


def fullrank_metrics(
    full: ScoreVector, loo: Sequence[ScoreVector], inflation: InflationLike, method: str, cap: Optional[int] = DEFAULT_CAP
) -> TrialMetrics:
    """Full-ranking instability and set size from precomputed scores.

    Disjointness is decided by testing members of the full-data set against
    each leave-one-out score vector; removals whose answer cannot be decided
    because the full-data set was truncated are counted in ``undecided``.
    """
    _check_method(method)
    inflation = as_inflation(inflation)
    n = len(loo)
    if method == "plain":
        base = plain_ranking(full)
        unstable = sum(plain_ranking(w) != base for w in loo)
        return TrialMetrics(unstable / n, None, 1.0)
    rankings = enumerate_rankings(full, inflation, cap)
    unstable = undecided = 0
    for w in loo:
        hit = intersects(rankings, w, inflation)
        if hit is None:
            undecided += 1
        elif not hit:
            unstable += 1
    return TrialMetrics(unstable / n, None, float(len(rankings)), undecided, rankings.truncated)


def eval_topk_trial(dataset: Dataset, scorer: Callable, k: int, inflation: InflationLike, method: str) -> TrialMetrics:
    full, loo = _loo_all(dataset, scorer)
    return topk_metrics(full, loo, k, inflation, method)


def eval_fullrank_trial(
    dataset: Dataset, scorer: Callable, inflation: InflationLike, method: str, cap: Optional[int] = DEFAULT_CAP
) -> TrialMetrics:
    full, loo = _loo_all(dataset, scorer)
    return fullrank_metrics(full, loo, inflation, method, cap)


def empirical_score_stability(dataset: Dataset, scorer: Callable, epsilon: float) -> ScoreStabilityEstimate:
    """Fraction of removals that move the scores by epsilon or more.

    Distances within the tolerance band of epsilon count as below it, the same
    resolution the inflated operators use.
    """
    if not epsilon > 0:
        raise StableRankError("epsilon must be positive")
    full, loo = _loo_all(dataset, scorer)
    moved = sum(np.linalg.norm(full.values - w.values) > epsilon + TOL for w in loo)
    return ScoreStabilityEstimate(float(epsilon), moved / len(loo))


def threads_from_env(default: int = 1) -> int:
    """Worker count from STABLERANK_THREADS (0 means one per CPU)."""
    raw = os.environ.get("STABLERANK_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise StableRankError(f"STABLERANK_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise StableRankError("STABLERANK_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _run_trials(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _trial_rng(seed_seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_seq))


def _reports(results: list[dict[str, TrialMetrics]], config: dict[str, Any]) -> dict[str, StabilityReport]:
    return {
        m: StabilityReport(tuple(r[m] for r in results), {**config, "method": m})
        for m in METHODS
    }


def _subsample_trial(trial: int, source: RatingsDataset, n: int, k: int, epsilon: float, seed_seq) -> dict[str, TrialMetrics]:
    rng = _trial_rng(seed_seq)
    sample = source.subset(rng.choice(source.n, size=n, replace=False))
    try:
        full, loo = _loo_all(sample, shrunken_mean_scores)
        return {m: topk_metrics(full, loo, k, epsilon, m) for m in METHODS}
    except (StableRankError, np.linalg.LinAlgError) as exc:
        raise StableRankError(f"trial {trial}: {exc}") from exc


def run_subsample_experiment(
    source: RatingsDataset,
    n: int,
    N: int,
    k: int,
    inflation: InflationLike,
    seed: int,
    workers: int = 1,
) -> dict[str, StabilityReport]:
    """Repeated user subsampling with shrunken-mean scores, top-k metrics.

    Returns one report per method (``plain`` and ``inflated``).
    """
    inflation = as_inflation(inflation)
    if not 2 <= n <= source.n:
        raise StableRankError(f"need 2 <= n <= {source.n} users, got n={n}")
    if N < 1:
        raise StableRankError("N must be >= 1")
    if not 1 <= k <= source.L:
        raise StableRankError(f"k={k} out of range 1..{source.L}")
    seeds = np.random.SeedSequence(seed).spawn(N)
    jobs = [(t, source, n, k, inflation.epsilon, s) for t, s in enumerate(seeds, start=1)]
    results = _run_trials(_subsample_trial, jobs, workers)
    config = {
        "experiment": "subsample_topk",
        "scorer": "shrunken_mean",
        "k": k,
        "epsilon": inflation.epsilon,
        "n": n,
        "N": N,
        "L": source.L,
        "seed": seed,
        "bit_generator": "Philox",
    }
    return _reports(results, config)


def ar1_covariance(L: int, rho: float) -> np.ndarray:
    idx = np.arange(L)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def true_coefficients(L: int) -> np.ndarray:
    """``beta_j = j / sqrt(1^2 + ... + L^2)``, a unit vector."""
    j = np.arange(1, L + 1, dtype=float)
    return j / math.sqrt(float(np.sum(j**2)))


def simulate_regression(n: int, chol: np.ndarray, beta: np.ndarray, rng: np.random.Generator) -> RegressionDataset:
    X = rng.standard_normal((n, beta.size)) @ chol.T
    y = X @ beta + rng.standard_normal(n)
    return RegressionDataset(X, y)


def _regression_trial(
    trial: int, n: int, chol: np.ndarray, beta: np.ndarray, epsilon: float, cap, seed_seq
) -> dict[str, TrialMetrics]:
    data = simulate_regression(n, chol, beta, _trial_rng(seed_seq))
    try:
        full, loo = _loo_all(data, constrained_lsq_coef_scores)
        return {m: fullrank_metrics(full, loo, epsilon, m, cap) for m in METHODS}
    except (StableRankError, np.linalg.LinAlgError) as exc:
        raise StableRankError(f"trial {trial}: {exc}") from exc


def run_regression_experiment(
    n: int = 50,
    L: int = 5,
    rho: float = 0.5,
    inflation: InflationLike = 0.05,
    N: int = 100,
    seed: int = 0,
    cap: Optional[int] = DEFAULT_CAP,
    workers: int = 1,
) -> dict[str, StabilityReport]:
    """Gaussian linear model with AR(1) features; rank |coefficients| by full ranking.

    Returns one report per method (``plain`` and ``inflated``).
    """
    inflation = as_inflation(inflation)
    if n < 2 or L < 1 or N < 1:
        raise StableRankError("need n >= 2, L >= 1 and N >= 1")
    if not -1.0 < rho < 1.0:
        raise StableRankError("rho must lie in (-1, 1)")
    chol = np.linalg.cholesky(ar1_covariance(L, rho))
    beta = true_coefficients(L)
    seeds = np.random.SeedSequence(seed).spawn(N)
    jobs = [(t, n, chol, beta, inflation.epsilon, cap, s) for t, s in enumerate(seeds, start=1)]
    results = _run_trials(_regression_trial, jobs, workers)
    config = {
        "experiment": "regression_fullrank",
        "scorer": "constrained_lsq",
        "epsilon": inflation.epsilon,
        "n": n,
        "L": L,
        "rho": rho,
        "N": N,
        "cap": cap,
        "seed": seed,
        "bit_generator": "Philox",
    }
    return _reports(results, config)
