"""Command-line interface.

Every command prints JSON (one object per line, or indented with
``--pretty``).  Exit codes: 0 success, 1 invalid flags or inputs,
2 a valid result whose ranking enumeration hit its cap.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .argmax import inflated_argmax
from .core import StableRankError, plain_ranking, plain_topk
from .data_io import (
    convert_netflix,
    generate_synthetic_ratings,
    read_ratings_csv,
    read_regression_csv,
    read_votes_csv,
    report_to_json,
    write_ratings_csv,
    write_report_json,
)
from .evaluation import (
    METHODS,
    StabilityReport,
    eval_fullrank_trial,
    eval_topk_trial,
    run_regression_experiment,
    run_subsample_experiment,
    threads_from_env,
)
from .ranking import DEFAULT_CAP, enumerate_rankings, estimate_ranking_count
from .scoring import SCORERS, get_scorer
from .topk import inflated_topk

log = logging.getLogger("stablerank")

EXIT_OK, EXIT_ERROR, EXIT_TRUNCATED = 0, 1, 2

DATA_READERS = {
    "votes": read_votes_csv,
    "ratings": read_ratings_csv,
    "regression": read_regression_csv,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; 2 is reserved for truncated results here
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"must be a positive finite number: {text!r}")
    return x


def _positive_int(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return x


def _eps_or_analytic(text: str) -> Any:
    return "analytic" if text == "analytic" else _positive_float(text)


def _parse_numbers(text: str, origin: str) -> list[float]:
    out = []
    for tok in re.split(r"[,\s]+", text.strip()):
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise StableRankError(f"{origin}: not a number: {tok!r}") from None
    if not out:
        raise StableRankError(f"{origin}: no scores given")
    return out


def _read_scores_file(path: str) -> list[float]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if lines:
        try:
            _parse_numbers(lines[0], path)
        except StableRankError:
            lines = lines[1:]  # header line
    return _parse_numbers("\n".join(lines), path)


def _scores(args: argparse.Namespace) -> list[float]:
    if args.scores_file is not None:
        return _read_scores_file(args.scores_file)
    return _parse_numbers(args.scores, "--scores")


def _emit(obj: Any, pretty: bool) -> None:
    print(json.dumps(obj, indent=2 if pretty else None, allow_nan=False))


def _cmd_argmax(args: argparse.Namespace) -> int:
    w = _scores(args)
    _emit({"argmax": list(inflated_argmax(w, args.eps).members), "epsilon": args.eps}, args.pretty)
    return EXIT_OK


def _cmd_topk(args: argparse.Namespace) -> int:
    w = _scores(args)
    out = {
        "topk": list(inflated_topk(w, args.k, args.eps).members),
        "plain": list(plain_topk(w, args.k).members),
        "k": args.k,
        "epsilon": args.eps,
    }
    _emit(out, args.pretty)
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    w = _scores(args)
    estimate = estimate_ranking_count(w, args.eps)
    if args.cap is not None and estimate > args.cap:
        log.warning("position bounds allow up to %d rankings; enumeration stops at cap=%d", estimate, args.cap)
    rankings = enumerate_rankings(w, args.eps, args.cap)
    for p in rankings:
        _emit({"ranking": list(p.order)}, args.pretty)
    _emit(
        {
            "count": len(rankings),
            "truncated": rankings.truncated,
            "plain": list(plain_ranking(w).order),
            "epsilon": args.eps,
        },
        args.pretty,
    )
    return EXIT_TRUNCATED if rankings.truncated else EXIT_OK


def _write_reports(reports: dict[str, StabilityReport], args: argparse.Namespace) -> int:
    for method, report in reports.items():
        _emit(report_to_json(report), args.pretty)
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            write_report_json(report, args.out / f"{method}.json")
    truncated = any(t.truncated for r in reports.values() for t in r.trials)
    return EXIT_TRUNCATED if truncated else EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    reader = DATA_READERS[args.format]
    dataset = reader(args.data)
    scorer = get_scorer(args.scorer, dataset)
    if args.eps == "analytic":
        if args.scorer != "vote_fraction":
            raise StableRankError("--eps analytic is only available for the vote_fraction scorer")
        eps = math.sqrt(2.0) / dataset.n
    else:
        eps = args.eps
    methods = METHODS if args.method == "both" else (args.method,)
    if args.task == "topk" and args.k is None:
        raise StableRankError("--task topk needs --k")
    reports = {}
    for m in methods:
        if args.task == "topk":
            trial = eval_topk_trial(dataset, scorer, args.k, eps, m)
        else:
            trial = eval_fullrank_trial(dataset, scorer, eps, m, args.cap)
        config = {
            "experiment": f"eval_{args.task}",
            "data": str(args.data),
            "format": args.format,
            "scorer": args.scorer,
            "method": m,
            "k": args.k,
            "epsilon": eps,
            "n": dataset.n,
            "L": dataset.L,
        }
        reports[m] = StabilityReport((trial,), config)
    return _write_reports(reports, args)


def _cmd_simulate(args: argparse.Namespace) -> int:
    reports = run_regression_experiment(
        n=args.n, L=args.L, rho=args.rho, inflation=args.eps, N=args.N, seed=args.seed,
        cap=args.cap, workers=threads_from_env(),
    )
    return _write_reports(reports, args)


def _cmd_subsample(args: argparse.Namespace) -> int:
    if args.data is not None:
        source = read_ratings_csv(args.data)
    else:
        source = generate_synthetic_ratings(args.L, args.users, args.corpus_seed, args.sparsity, args.model)
    reports = run_subsample_experiment(
        source, n=args.n, N=args.N, k=args.k, inflation=args.eps, seed=args.seed, workers=threads_from_env()
    )
    return _write_reports(reports, args)


def _cmd_synth(args: argparse.Namespace) -> int:
    data = generate_synthetic_ratings(args.L, args.users, args.seed, args.sparsity, args.model)
    write_ratings_csv(data, args.out)
    _emit({"path": str(args.out), "users": data.n, "L": data.L, "ratings": int(data.items.size)}, args.pretty)
    return EXIT_OK


def _cmd_convert(args: argparse.Namespace) -> int:
    rows = convert_netflix(args.sources, args.out)
    _emit({"path": str(args.out), "rows": rows}, args.pretty)
    return EXIT_OK


def _add_scores(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scores", help="comma-separated scores, item 1 first")
    src.add_argument("--scores-file", help="file of scores separated by commas or newlines (optional header line)")
    p.add_argument("--eps", type=_positive_float, required=True, help="inflation level epsilon > 0")


def _add_output(p: argparse.ArgumentParser, reports: bool = False) -> None:
    p.add_argument("--pretty", action="store_true", help="indent JSON output")
    if reports:
        p.add_argument("--out", type=Path, help="also write <method>.json reports into this directory")


def _add_corpus(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=_positive_int, default=200, help="number of items (default 200)")
    p.add_argument("--users", type=_positive_int, default=5000, help="number of users (default 5000)")
    p.add_argument("--sparsity", type=float, default=0.5, help="probability a user rates an item (default 0.5)")
    p.add_argument("--model", choices=("latent", "uniform"), default="latent", help="rating model (default latent)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stablerank", description="Stable set-valued ranking operators and stability experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("argmax", help="inflated argmax of a score vector")
    _add_scores(p)
    _add_output(p)
    p.set_defaults(func=_cmd_argmax)

    p = sub.add_parser("topk", help="inflated top-k of a score vector")
    _add_scores(p)
    p.add_argument("--k", type=_positive_int, required=True, help="number of items to select")
    _add_output(p)
    p.set_defaults(func=_cmd_topk)

    p = sub.add_parser("rank", help="enumerate the inflated full ranking (exit 2 if capped)")
    _add_scores(p)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP, help=f"max permutations (default {DEFAULT_CAP})")
    _add_output(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("eval", help="leave-one-out stability of one dataset")
    p.add_argument("--data", type=Path, required=True, help="input CSV")
    p.add_argument("--format", choices=sorted(DATA_READERS), required=True, help="CSV layout")
    p.add_argument("--scorer", choices=sorted(SCORERS), required=True, help="score-learning algorithm")
    p.add_argument("--method", choices=(*METHODS, "both"), default="both", help="ranking operator (default both)")
    p.add_argument("--task", choices=("topk", "fullrank"), default="topk", help="stability notion (default topk)")
    p.add_argument("--k", type=_positive_int, help="top-k size (required for --task topk)")
    p.add_argument("--eps", type=_eps_or_analytic, required=True,
                   help="epsilon > 0, or 'analytic' for sqrt(2)/n with vote_fraction")
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP, help="ranking enumeration cap (fullrank)")
    _add_output(p, reports=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", help="regression full-ranking experiment with AR(1) features")
    p.add_argument("--n", type=_positive_int, default=50, help="observations per trial (default 50)")
    p.add_argument("--L", type=_positive_int, default=5, help="number of features (default 5)")
    p.add_argument("--rho", type=float, default=0.5, help="AR(1) correlation (default 0.5)")
    p.add_argument("--eps", type=_positive_float, default=0.05, help="inflation level (default 0.05)")
    p.add_argument("--N", type=_positive_int, default=100, help="number of trials (default 100)")
    p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP, help="ranking enumeration cap")
    _add_output(p, reports=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("subsample", help="ratings top-k experiment over repeated user subsamples")
    p.add_argument("--data", type=Path, help="ratings CSV (default: a synthetic corpus)")
    _add_corpus(p)
    p.add_argument("--corpus-seed", type=int, default=0, help="seed of the synthetic corpus (default 0)")
    p.add_argument("--n", type=_positive_int, default=300, help="users per subsample (default 300)")
    p.add_argument("--N", type=_positive_int, default=20, help="number of trials (default 20)")
    p.add_argument("--k", type=_positive_int, default=20, help="top-k size (default 20)")
    p.add_argument("--eps", type=_positive_float, default=0.01, help="inflation level (default 0.01)")
    p.add_argument("--seed", type=int, default=0, help="root seed for subsampling (default 0)")
    _add_output(p, reports=True)
    p.set_defaults(func=_cmd_subsample)

    p = sub.add_parser("synth", help="write a seeded synthetic ratings CSV")
    _add_corpus(p)
    p.add_argument("--seed", type=int, default=0, help="corpus seed (default 0)")
    p.add_argument("--out", type=Path, required=True, help="output CSV path")
    _add_output(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("convert-netflix", help="convert Netflix-prize per-movie files to a ratings CSV")
    p.add_argument("sources", nargs="+", help="per-movie text files")
    p.add_argument("--out", type=Path, required=True, help="output CSV path")
    _add_output(p)
    p.set_defaults(func=_cmd_convert)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (StableRankError, OSError) as exc:
        print(f"stablerank {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
