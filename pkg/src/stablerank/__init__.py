"""Stable set-valued ranking: inflated argmax, inflated top-k and inflated full ranking."""

__version__ = "0.1.0"

from .argmax import ConeProjection, candidate_screen, inflated_argmax, is_singleton_separated, margin_cone_distance
from .core import (
    TOL,
    EnumerationTruncated,
    Inflation,
    ItemSet,
    Permutation,
    RankingSet,
    ScoreVector,
    StableRankError,
    plain_ranking,
    plain_topk,
    sort_descending,
)
from .data_io import (
    DataFormatError,
    convert_netflix,
    generate_synthetic_ratings,
    read_ratings_csv,
    read_regression_csv,
    read_report_json,
    read_votes_csv,
    write_ratings_csv,
    write_report_json,
)
from .evaluation import (
    StabilityReport,
    TrialMetrics,
    empirical_score_stability,
    eval_fullrank_trial,
    eval_topk_trial,
    run_regression_experiment,
    run_subsample_experiment,
)
from .ranking import (
    PositionBounds,
    enumerate_rankings,
    estimate_ranking_count,
    position_bounds,
    prefix_consistent_superset,
    ranking_contains,
    topk_via_rankings,
)
from .scoring import (
    BisectionError,
    RatingsDataset,
    RegressionDataset,
    StabilityCertificate,
    VoteDataset,
    constrained_lsq,
    constrained_lsq_coef_scores,
    get_scorer,
    loo_scores,
    shrunken_mean_scores,
    vote_fraction_scores,
)
from .topk import inflated_topk, topk_definition_oracle, topk_union_oracle
