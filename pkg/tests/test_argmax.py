from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from stablerank import (
    StableRankError,
    candidate_screen,
    inflated_argmax,
    is_singleton_separated,
    margin_cone_distance,
)
from stablerank.core import TOL

scores = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=8)
eps_st = st.floats(0.01, 5.0)


def test_worked_example():
    assert inflated_argmax([1, 0.5, 0], 1.0).members == (1, 2)
    proj = margin_cone_distance([1, 0.5, 0], 3, 1.0)
    assert proj.distance == pytest.approx(1.2411, abs=1e-4)


def test_separated_leader_is_singleton():
    assert inflated_argmax([10, 0, -10], 0.1).members == (1,)
    assert is_singleton_separated([10, 0, -10], 1, 0.1)


def test_all_tied_returns_everything():
    assert inflated_argmax([2.0] * 5, 0.3).members == (1, 2, 3, 4, 5)


def test_single_item():
    assert inflated_argmax([3.0], 1.0).members == (1,)
    assert margin_cone_distance([3.0], 1, 1.0).distance == 0.0


def test_invalid_item_index():
    with pytest.raises(StableRankError):
        margin_cone_distance([1, 2], 3, 1.0)


def test_pair_boundary_at_margin():
    # two items at gap g: distance (g + c) / sqrt(2), equal to eps exactly at g = c
    eps = 0.4
    c = eps / math.sqrt(2)
    assert inflated_argmax([c * 0.999, 0.0], eps).members == (1, 2)
    assert inflated_argmax([c * 1.001, 0.0], eps).members == (1,)
    # exactly at the boundary the tolerance band keeps the runner-up
    assert inflated_argmax([c, 0.0], eps).members == (1, 2)


@given(scores, eps_st)
def test_distance_matches_kkt_oracle(w, eps):
    for j in range(len(w)):
        got = margin_cone_distance(w, j + 1, eps).distance
        assert got == pytest.approx(oracles.cone_distance_kkt(w, j, eps), abs=1e-9)


@pytest.mark.parametrize("seed", range(25))
def test_distance_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    L = int(rng.integers(2, 9))
    w = rng.normal(size=L)
    eps = float(rng.uniform(0.05, 2.0))
    j = int(rng.integers(L))
    assert margin_cone_distance(w, j + 1, eps).distance == pytest.approx(
        oracles.cone_distance_cvxpy(w, j, eps), abs=1e-6
    )


@given(scores, eps_st)
def test_projection_lands_in_cone(w, eps):
    c = eps / math.sqrt(2)
    w = np.asarray(w)
    for j in range(w.size):
        proj = margin_cone_distance(w, j + 1, eps)
        v = w.copy()
        v[j] = proj.apex
        for i in proj.pulled:
            v[i - 1] = proj.apex - c
        assert np.all(v[j] - np.delete(v, j) >= c - 1e-9)
        assert np.linalg.norm(v - w) == pytest.approx(proj.distance, abs=1e-9)


@given(scores, eps_st)
def test_argmax_contains_plain_argmax_and_lies_in_screen(w, eps):
    sel = inflated_argmax(w, eps)
    assert int(np.argmax(w)) + 1 in sel
    assert set(sel) <= set(candidate_screen(w, eps))


@given(scores, eps_st)
def test_argmax_matches_oracle(w, eps):
    assert set(inflated_argmax(w, eps).zero_based()) == oracles.argmax_oracle(w, eps)


@given(scores, eps_st, st.randoms(use_true_random=False))
def test_permutation_equivariance(w, eps, rnd):
    perm = list(range(len(w)))
    rnd.shuffle(perm)
    permuted = [w[p] for p in perm]
    before = set(inflated_argmax(w, eps))
    after = {perm[i - 1] + 1 for i in inflated_argmax(permuted, eps)}
    assert before == after


@given(scores, eps_st, st.floats(-100, 100), st.floats(0.1, 10))
def test_shift_and_scale(w, eps, shift, scale):
    w = np.asarray(w)
    base = inflated_argmax(w, eps)
    assert inflated_argmax(w + shift, eps) == base or _near_boundary(w, eps)
    assert inflated_argmax(scale * w, scale * eps) == base or _near_boundary(w, eps)


def _near_boundary(w, eps):
    return any(abs(margin_cone_distance(w, j + 1, eps).distance - eps) < 1e-6 for j in range(len(w)))


@given(scores, eps_st)
def test_singleton_separation_agrees_with_argmax(w, eps):
    for j in range(1, len(w) + 1):
        if is_singleton_separated(w, j, eps):
            assert inflated_argmax(w, eps).members == (j,)


@given(scores, eps_st, st.floats(0, 1))
def test_overlap_for_nearby_vectors(w, eps, frac):
    rng = np.random.default_rng(len(w))
    w = np.asarray(w)
    d = rng.normal(size=w.size)
    d *= frac * eps * (1 - 1e-9) / max(np.linalg.norm(d), 1e-300)
    assert set(inflated_argmax(w, eps)) & set(inflated_argmax(w + d, eps))


def test_tolerance_band_constant():
    assert TOL == 1e-9
