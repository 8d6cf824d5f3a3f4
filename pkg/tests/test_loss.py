import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eyeglass_synth.errors import InvalidArgument, MiningError
from eyeglass_synth.loss import (Embedding, PairSets, as_batch, cosine_similarity,
                                 gaussian_clusters, loss_gradient, mine_pairs,
                                 mining_contrastive_loss, separation, similarity_matrix,
                                 toy_train)

from oracles import brute_force_mining, gradient_check, random_batch, resummed_loss


# -- cosine ------------------------------------------------------------------

def test_cosine_examples():
    v = np.array([0.3, -2.0, 5.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-15)
    assert cosine_similarity((1, 0), (0, 1)) == 0.0
    expect = -12 / (math.sqrt(14) * math.sqrt(77))
    assert cosine_similarity((1, 2, 3), (-4, 5, -6)) == pytest.approx(expect, abs=1e-15)
    assert expect == pytest.approx(-0.365487, abs=1e-6)
    with pytest.raises(InvalidArgument):
        cosine_similarity((0, 0), (1, 0))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4),
       st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_cosine_symmetric_and_bounded(a, b):
    if np.linalg.norm(a) < 1e-6 or np.linalg.norm(b) < 1e-6:
        return
    s = cosine_similarity(a, b)
    assert s == cosine_similarity(b, a)
    assert -1.0 <= s <= 1.0


def test_embedding_validation():
    with pytest.raises(InvalidArgument):
        Embedding(np.zeros(4), "a")
    with pytest.raises(InvalidArgument):
        Embedding([1.0, np.nan], "a")
    feats, labels = as_batch([Embedding([1, 0], "a"), Embedding([0, 1], "b")])
    assert feats.shape == (2, 2) and labels == ["a", "b"]


# -- mining --------------------------------------------------------------------

def test_full_fractions_take_everything():
    X, labels = random_batch(np.random.default_rng(0), n=8)
    sets = mine_pairs(X, labels, 1.0, 1.0)
    pos = [(i, j) for i, j in itertools.combinations(range(8), 2) if labels[i] == labels[j]]
    neg = [(i, j) for i, j in itertools.combinations(range(8), 2) if labels[i] != labels[j]]
    assert sorted(sets.positive) == pos and sorted(sets.negative) == neg


def test_four_embedding_hand_case():
    X = np.array([[1.0, 0.0], [0.6, 0.8], [0.0, 1.0], [-1.0, 0.2]])
    labels = ["a", "a", "b", "b"]
    sets = mine_pairs(X, labels, 0.5, 0.5)
    # positives: (0,1)=0.6, (2,3)=0.196 -> hardest is (2,3)
    # negatives: (0,2)=0, (0,3)=-0.98, (1,2)=0.8, (1,3)=-0.43 -> hardest two (1,2), (0,2)
    assert sets.positive == ((2, 3),)
    assert sets.negative == ((1, 2), (0, 2))


def test_antipodal_positive_always_mined():
    X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.5, 0.5], [0.4, 0.6], [0.0, 1.0]])
    labels = ["a", "a", "b", "b", "b"]
    for rho in (0.01, 0.3, 1.0):
        assert (0, 1) in mine_pairs(X, labels, rho, 0.5).positive


def test_mining_matches_exhaustive_enumeration():
    rng = np.random.default_rng(1)
    for _ in range(200):
        X, labels = random_batch(rng)
        rho_p, rho_n = rng.choice([0.1, 0.25, 0.5, 0.75, 1.0], 2)
        sets = mine_pairs(X, labels, rho_p, rho_n)
        p, n = brute_force_mining(X, labels, rho_p, rho_n)
        assert list(sets.positive) == p and list(sets.negative) == n


def test_mining_ties_go_to_smaller_pair():
    X = np.array([[1.0, 0.0]] * 4)
    sets = mine_pairs(X, ["a", "a", "b", "b"], 0.5, 0.5)
    assert sets.positive == ((0, 1),)
    assert sets.negative == ((0, 2), (0, 3))


def test_mining_errors():
    X = np.eye(3)
    with pytest.raises(MiningError):
        mine_pairs(X, ["a", "b", "c"])
    with pytest.raises(MiningError):
        mine_pairs(X, ["a", "a", "a"])
    with pytest.raises(InvalidArgument):
        mine_pairs(X, ["a", "a", "b"], 0.0, 0.5)


# -- loss --------------------------------------------------------------------

def test_loss_trivial_values():
    X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    labels = ["a", "a", "b"]
    best = PairSets(((0, 1),), ((0, 2),))
    assert mining_contrastive_loss(X, labels, best) == -0.5
    Y = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    worst = PairSets(((0, 1),), ((1, 2),))
    assert mining_contrastive_loss(Y, ["a", "a", "b"], worst) == 0.5


def test_loss_matches_resummation():
    rng = np.random.default_rng(2)
    for _ in range(100):
        X, labels = random_batch(rng)
        sets = mine_pairs(X, labels, 0.5, 0.5)
        assert abs(mining_contrastive_loss(X, labels, sets) - resummed_loss(X, sets)) < 1e-12


def test_pair_set_validation():
    labels = ["a", "a", "b"]
    X = np.eye(3)
    for sets in (PairSets((), ((0, 2),)), PairSets(((0, 2),), ((0, 2),)),
                 PairSets(((0, 1),), ((0, 1),)), PairSets(((0, 1),), ()),
                 PairSets(((0, 2),), ((1, 2),))):
        with pytest.raises(InvalidArgument):
            mining_contrastive_loss(X, labels, sets)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_loss_bounded(seed):
    X, labels = random_batch(np.random.default_rng(seed))
    assert -1.0 <= mining_contrastive_loss(X, labels, mine_pairs(X, labels)) <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100.0))
def test_loss_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    X, labels = random_batch(rng)
    sets = mine_pairs(X, labels)
    Y = X.copy()
    Y[int(rng.integers(len(X)))] *= c
    assert mining_contrastive_loss(Y, labels, sets) == pytest.approx(
        mining_contrastive_loss(X, labels, sets), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_loss_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    X, labels = random_batch(rng)
    perm = rng.permutation(len(X))
    Xp, lp = X[perm], [labels[k] for k in perm]
    a = mining_contrastive_loss(X, labels, mine_pairs(X, labels))
    b = mining_contrastive_loss(Xp, lp, mine_pairs(Xp, lp))
    assert a == pytest.approx(b, abs=1e-12)


def test_similarity_matrix_matches_pairwise():
    X, _ = random_batch(np.random.default_rng(3), n=6)
    S = similarity_matrix(X)
    for i, j in itertools.product(range(6), repeat=2):
        assert S[i, j] == pytest.approx(cosine_similarity(X[i], X[j]), abs=1e-14)


# -- gradient ----------------------------------------------------------------

def test_gradient_matches_finite_differences():
    assert gradient_check(mine_pairs, mining_contrastive_loss, loss_gradient, batches=20) < 1e-5


def test_gradient_zero_at_self_similarity():
    X = np.array([[1.0, 2.0], [1.0, 2.0], [2.0, -1.0]])
    g = loss_gradient(X, ["a", "a", "b"], PairSets(((0, 1),), ((0, 2),)))
    # the positive pair sits at its maximum, so only the negative term contributes
    expect = 0.5 * (X[2] / (5.0) - 0.0 * X[0])
    np.testing.assert_allclose(g[1], 0.0, atol=1e-15)
    np.testing.assert_allclose(g[0], expect, atol=1e-15)


@pytest.mark.parametrize("c", [0.1, 3.0, 250.0])
def test_gradient_scales_inversely(c):
    X, labels = random_batch(np.random.default_rng(5), n=8)
    sets = mine_pairs(X, labels)
    Y = X.copy()
    Y[2] *= c
    g0, g1 = loss_gradient(X, labels, sets), loss_gradient(Y, labels, sets)
    np.testing.assert_allclose(g1[2], g0[2] / c, rtol=1e-9, atol=1e-15)


# -- toy training ------------------------------------------------------------

def test_toy_training_improves_separation():
    X, labels = gaussian_clusters(seed=0)
    res = toy_train(X, labels, steps=500, lr=0.1)
    assert len(res.loss) == len(res.separation) == 501
    assert res.separation[-1] > res.separation[0]
    assert res.loss[-1] < res.loss[0]


def test_toy_zero_learning_rate_is_constant():
    X, labels = gaussian_clusters(seed=1)
    res = toy_train(X, labels, steps=20, lr=0.0)
    assert len(set(res.loss)) == 1 and len(set(res.separation)) == 1
    np.testing.assert_array_equal(res.W, np.eye(8))


def test_toy_separated_clusters_do_not_collapse():
    rng = np.random.default_rng(2)
    # opposite clusters sit at the loss minimum -1
    X = np.vstack([[5, 0] + 0.01 * rng.normal(size=(6, 2)), [-5, 0] + 0.01 * rng.normal(size=(6, 2))])
    labels = ["a"] * 6 + ["b"] * 6
    res = toy_train(X, labels, steps=100, lr=0.1)
    assert res.loss[0] < -0.999 and max(res.loss) < -0.999
    # orthogonal clusters give -0.5 and stay there or improve
    Y = np.vstack([[5, 0] + 0.01 * rng.normal(size=(6, 2)), [0, 5] + 0.01 * rng.normal(size=(6, 2))])
    res = toy_train(Y, labels, steps=100, lr=0.1)
    assert res.loss[0] == pytest.approx(-0.5, abs=0.01)
    assert res.loss[-1] <= res.loss[0] + 1e-9
    assert res.separation[-1] >= res.separation[0] - 1e-9


def test_toy_train_input_checks():
    with pytest.raises(InvalidArgument):
        toy_train(np.eye(3), ["a", "a", "b"], steps=1)


def test_separation_definition():
    X = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    assert separation(X, ["a", "a", "b", "b"]) == 1.0
