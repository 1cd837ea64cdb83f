from __future__ import annotations

import json
import subprocess
import sys

import pytest

from stablerank.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, [json.loads(line) for line in out.out.splitlines() if line.strip()], out.err


def test_topk_worked_example(capsys):
    code, out, _ = _run(capsys, "topk", "--scores", "1,0.5,0", "--k", "2", "--eps", "1")
    assert code == 0 and out[0]["topk"] == [1, 2, 3]


def test_rank_worked_example(capsys):
    code, out, _ = _run(capsys, "rank", "--scores", "1,0.5,0", "--eps", "1")
    assert code == 0
    assert [o["ranking"] for o in out[:-1]] == [[1, 2, 3], [1, 3, 2], [2, 1, 3]]
    assert out[-1]["count"] == 3 and out[-1]["truncated"] is False


def test_argmax_separated(capsys):
    code, out, _ = _run(capsys, "argmax", "--scores", "10,0,-10", "--eps", "0.1")
    assert code == 0 and out[0]["argmax"] == [1]


def test_rank_truncated_exits_2(capsys, caplog):
    code, out, _ = _run(capsys, "rank", "--scores", "0,0,0,0,0", "--eps", "1", "--cap", "4")
    assert code == 2 and out[-1]["truncated"] is True and len(out) == 5
    assert "cap=4" in caplog.text


def test_scores_file_with_header(tmp_path, capsys):
    p = tmp_path / "w.csv"
    p.write_text("score\n1\n0.5\n0\n")
    code, out, _ = _run(capsys, "topk", "--scores-file", str(p), "--k", "3", "--eps", "1")
    assert code == 0 and out[0]["topk"] == [1, 2, 3]


@pytest.mark.parametrize(
    "argv",
    [
        ["topk", "--scores", "1,2", "--k", "2", "--eps", "1", "--bogus"],
        ["topk", "--scores", "1,2", "--k", "2", "--eps", "-1"],
        ["argmax", "--eps", "1"],
        ["topk", "--scores", "1,2", "--k", "3", "--eps", "1"],
        ["argmax", "--scores", "1,x", "--eps", "1"],
    ],
)
def test_flag_errors_exit_1(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_eval_votes_analytic(tmp_path, capsys):
    p = tmp_path / "v.csv"
    p.write_text("voter_id,item\n" + "".join(f"{i},{1 + i % 3}\n" for i in range(11)))
    code, out, _ = _run(
        capsys, "eval", "--data", str(p), "--format", "votes", "--scorer", "vote_fraction",
        "--method", "inflated", "--k", "1", "--eps", "analytic", "--out", str(tmp_path / "rep"),
    )
    assert code == 0
    assert out[0]["per_trial"][0]["delta"] == 0.0
    assert (tmp_path / "rep" / "inflated.json").exists()


def test_eval_ratings_plain(tmp_path, capsys):
    p = tmp_path / "r.csv"
    assert main(["synth", "--L", "10", "--users", "30", "--seed", "1", "--out", str(p)]) == 0
    capsys.readouterr()
    code, out, _ = _run(
        capsys, "eval", "--data", str(p), "--format", "ratings", "--scorer", "shrunken_mean",
        "--method", "plain", "--k", "3", "--eps", "0.01",
    )
    assert code == 0 and 0.0 <= out[0]["per_trial"][0]["delta"] <= 1.0


def test_eval_scorer_mismatch(tmp_path, capsys):
    p = tmp_path / "v.csv"
    p.write_text("voter_id,item\na,1\nb,2\n")
    code, _, err = _run(
        capsys, "eval", "--data", str(p), "--format", "votes", "--scorer", "shrunken_mean", "--k", "1", "--eps", "1"
    )
    assert code == 1 and "needs a RatingsDataset" in err


def test_simulate_is_deterministic(capsys):
    a = _run(capsys, "simulate", "--N", "1", "--seed", "4")
    b = _run(capsys, "simulate", "--N", "1", "--seed", "4")
    assert a == b
    assert [o["config"]["method"] for o in a[1]] == ["plain", "inflated"]
    assert a[1][0]["config"]["n"] == 50 and a[1][0]["config"]["L"] == 5


def test_simulate_independent_features(capsys):
    code, out, _ = _run(capsys, "simulate", "--N", "1", "--rho", "0")
    assert code == 0 and out[0]["config"]["rho"] == 0.0


def test_subsample_synthetic(capsys):
    code, out, _ = _run(capsys, "subsample", "--L", "20", "--users", "100", "--n", "30", "--N", "2", "--k", "3")
    assert code == 0 and len(out) == 2 and out[1]["config"]["k"] == 3


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "stablerank", "simulate", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for flag in ("--n", "--L", "--rho", "--eps", "--N", "--seed", "--pretty"):
        assert flag in res.stdout
