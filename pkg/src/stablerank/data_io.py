"""CSV ingestion, synthetic ratings, and the JSON report schema.

CSV files are comma-separated UTF-8 with a required header:

* votes:   ``voter_id,item``
* ratings: ``user_id,item_id,rating``

Item labels map to indices 1..L through a declared list, or else through the
sorted distinct labels (numerically when every label is an integer).
"""

from __future__ import annotations

import csv
import json
import logging
import re
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .core import StableRankError
from .evaluation import StabilityReport, TrialMetrics
from .scoring import DEFAULT_RATING_RANGE, RatingsDataset, RegressionDataset, VoteDataset

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"
PathLike = Union[str, Path]


class DataFormatError(StableRankError):
    """A malformed input file; messages carry the 1-based line number."""


def _lines(path: PathLike) -> Iterator[tuple[int, str]]:
    raw = Path(path).read_bytes()
    for lineno, chunk in enumerate(raw.splitlines(), start=1):
        try:
            yield lineno, chunk.decode("utf-8")
        except UnicodeDecodeError:
            raise DataFormatError(f"{path}:{lineno}: not valid UTF-8") from None


def _rows(path: PathLike, header: Sequence[str]) -> Iterator[tuple[int, list[str]]]:
    lines = ((no, text) for no, text in _lines(path) if text.strip())
    first = next(lines, None)
    if first is None:
        raise DataFormatError(f"{path}: empty file (n >= 2 required)")
    no, text = first
    got = [h.strip().lower() for h in next(csv.reader([text.lstrip("﻿")]))]
    if got != list(header):
        raise DataFormatError(f"{path}:{no}: expected header {','.join(header)!r}, got {text!r}")
    for no, text in lines:
        row = [f.strip() for f in next(csv.reader([text]))]
        if len(row) != len(header) or not all(row):
            raise DataFormatError(f"{path}:{no}: expected {len(header)} non-empty fields, got {text!r}")
        yield no, row


def _item_index(labels: Iterable[str], declared: Optional[Sequence[str]]) -> dict[str, int]:
    if declared is not None:
        ordered = [str(x) for x in declared]
        if len(set(ordered)) != len(ordered):
            raise StableRankError("declared item list has duplicates")
    else:
        distinct = set(labels)
        if all(re.fullmatch(r"[+-]?\d+", x) for x in distinct):
            ordered = sorted(distinct, key=int)
        else:
            ordered = sorted(distinct)
    return {label: i + 1 for i, label in enumerate(ordered)}


def read_votes_csv(path: PathLike, items: Optional[Sequence[str]] = None) -> VoteDataset:
    """One vote per row; row order defines the participant index."""
    rows = list(_rows(path, ("voter_id", "item")))
    if len(rows) < 2:
        raise DataFormatError(f"{path}: found {len(rows)} vote(s); n >= 2 required")
    index = _item_index((r[1] for _, r in rows), items)
    votes = []
    for no, (_, item) in rows:
        if item not in index:
            raise DataFormatError(f"{path}:{no}: unknown item {item!r}")
        votes.append(index[item])
    return VoteDataset(tuple(votes), len(index), tuple(index))


def read_ratings_csv(
    path: PathLike,
    rating_range: tuple[float, float] = DEFAULT_RATING_RANGE,
    items: Optional[Sequence[str]] = None,
) -> RatingsDataset:
    """Group ratings by user in first-seen order.

    A repeated (user, item) pair keeps the last rating; repeats are counted in
    ``duplicate_count`` and logged.
    """
    lo, hi = rating_range
    rows = list(_rows(path, ("user_id", "item_id", "rating")))
    index = _item_index((r[1] for _, r in rows), items)
    users: dict[str, dict[int, float]] = {}
    duplicates = 0
    for no, (user, item, raw) in rows:
        if item not in index:
            raise DataFormatError(f"{path}:{no}: unknown item {item!r}")
        try:
            rating = float(raw)
        except ValueError:
            raise DataFormatError(f"{path}:{no}: rating {raw!r} is not a number") from None
        if not lo <= rating <= hi:
            raise DataFormatError(f"{path}:{no}: rating {rating:g} outside range [{lo:g}, {hi:g}]")
        ratings = users.setdefault(user, {})
        if index[item] in ratings:
            duplicates += 1
        ratings[index[item]] = rating
    if len(users) < 2:
        raise DataFormatError(f"{path}: found {len(users)} user(s); n >= 2 required")
    if duplicates:
        log.warning("%s: %d duplicate (user, item) pairs, kept the last rating", path, duplicates)
    d = RatingsDataset.from_users(list(users.values()), len(index), (float(lo), float(hi)), tuple(index))
    object.__setattr__(d, "duplicate_count", duplicates)
    return d


def write_ratings_csv(d: RatingsDataset, path: PathLike) -> None:
    labels = d.item_labels or tuple(str(i) for i in range(1, d.L + 1))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["user_id", "item_id", "rating"])
        for u, ratings in enumerate(d.users, start=1):
            for item, rating in ratings.items():
                out.writerow([u, labels[item - 1], f"{rating:g}"])


def read_regression_csv(path: PathLike) -> RegressionDataset:
    """Numeric CSV with a header; the last column is the response."""
    rows = []
    header: Optional[list[str]] = None
    for no, text in _lines(path):
        if not text.strip():
            continue
        fields = [f.strip() for f in text.split(",")]
        if header is None:
            header = fields
            continue
        if len(fields) != len(header):
            raise DataFormatError(f"{path}:{no}: expected {len(header)} fields")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise DataFormatError(f"{path}:{no}: non-numeric field") from None
    if header is None or len(header) < 2:
        raise DataFormatError(f"{path}: need a header with at least one feature and a response")
    if len(rows) < 2:
        raise DataFormatError(f"{path}: found {len(rows)} row(s); n >= 2 required")
    arr = np.array(rows)
    return RegressionDataset(arr[:, :-1], arr[:, -1])


def generate_synthetic_ratings(
    L: int,
    n_users: int,
    seed: int,
    sparsity: float = 0.5,
    rating_model: str = "latent",
) -> RatingsDataset:
    """Seeded synthetic 1..5 star corpus.

    Each user rates each item independently with probability ``sparsity``;
    the default 0.5 gives head items rating counts comparable to popular
    titles in a real ratings subsample.
    ``latent``: item means ~ N(3.2, 0.7), rating = round(mean + N(0, 1))
    clipped to 1..5.  ``uniform``: ratings uniform on 1..5.
    """
    if L < 1 or n_users < 1:
        raise StableRankError("L and n_users must be positive")
    if not 0.0 < sparsity <= 1.0:
        raise StableRankError("sparsity must lie in (0, 1]")
    rng = np.random.Generator(np.random.Philox(seed))
    rated = rng.random((n_users, L)) < sparsity
    if rating_model == "latent":
        means = rng.normal(3.2, 0.7, size=L)
        raw = np.rint(means[None, :] + rng.standard_normal((n_users, L)))
    elif rating_model == "uniform":
        raw = rng.integers(1, 6, size=(n_users, L)).astype(float)
    else:
        raise StableRankError(f"unknown rating model {rating_model!r}")
    stars = np.clip(raw, 1.0, 5.0)
    users, items = np.nonzero(rated)
    indptr = np.concatenate([[0], np.cumsum(rated.sum(axis=1))])
    return RatingsDataset(indptr, items, stars[users, items], L)


def convert_netflix(sources: Sequence[PathLike], out: PathLike) -> int:
    """Convert Netflix-prize per-movie text (``MovieID:`` blocks of
    ``CustomerID,Rating,Date`` lines) to the ratings CSV.  Returns the row count."""
    count = 0
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "item_id", "rating"])
        for src in sources:
            movie: Optional[str] = None
            for no, text in _lines(src):
                text = text.strip()
                if not text:
                    continue
                if text.endswith(":"):
                    movie = text[:-1]
                    continue
                fields = text.split(",")
                if movie is None or len(fields) < 2:
                    raise DataFormatError(f"{src}:{no}: expected 'MovieID:' header or 'CustomerID,Rating[,Date]'")
                writer.writerow([fields[0], movie, fields[1]])
                count += 1
    return count


def report_to_json(report: StabilityReport) -> dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, **report.to_dict()}


def write_report_json(report: StabilityReport, path: PathLike) -> None:
    # repr-based float output round-trips every double exactly
    Path(path).write_text(json.dumps(report_to_json(report), indent=2, allow_nan=False) + "\n", encoding="utf-8")


def read_report_json(path: PathLike) -> StabilityReport:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataFormatError(f"{path}: unsupported schema version {doc.get('schema_version')!r}")
    trials = tuple(TrialMetrics(**t) for t in doc["per_trial"])
    return StabilityReport(trials, doc.get("config", {}))
