import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphlcd.predictor import (CLAMPED, LITERAL, Classifier, PairScore, TemporalConfig, combined_similarity,
                                predict_candidates, temporal_constraint, train_classifier, zero_penalty_gap)
from graphlcd.scenegraph import SceneGraph

LIT = TemporalConfig(mode=LITERAL)
G = SceneGraph.from_structure([1, 2, 2], [(0, 1), (0, 2)])


def test_temporal_examples():
    assert temporal_constraint(0, 2, TemporalConfig(beta_s=0.25, mode=LITERAL)) == 0.0
    assert temporal_constraint(0, 10, LIT) == pytest.approx(math.log(30))
    assert temporal_constraint(0, 10, LIT) == pytest.approx(3.4012, abs=5e-5)
    assert temporal_constraint(5, 6, TemporalConfig()) == pytest.approx(1.2040, abs=5e-5)
    with pytest.raises(ValueError):
        temporal_constraint(3, 3)


def test_combined_examples():
    g = SceneGraph.from_structure([1, 2, 3], [(0, 1)])
    other = SceneGraph.from_structure([1, 2, 4], [(0, 1)])
    ps = combined_similarity(g, other, 0, 100, 1)
    assert ps.tc == 0.0 and ps.s == ps.k_norm
    lit = combined_similarity(g, other, 0, 10, 1, TemporalConfig(mode=LITERAL))
    assert lit.s == pytest.approx(lit.k_norm - 2 * math.log(30))
    for mode in (LITERAL, CLAMPED):
        assert combined_similarity(G, G, 0, 2, 50, TemporalConfig(beta_s=0.25, mode=mode)).s == 1.0
    with pytest.raises(ValueError):
        combined_similarity(G, G, 4, 4, 1)
    anchorless = SceneGraph(0, G.nodes, G.edges, usable=False)
    with pytest.raises(ValueError):
        combined_similarity(anchorless, G, 0, 40, 1)


def test_combined_arithmetic_example():
    # k_norm = 0.8 comes from a constructed PairScore; alpha = 2, literal, |i-j| = 10
    s = 0.8 - 2 * temporal_constraint(0, 10, LIT)
    assert s == pytest.approx(-6.0024, abs=1e-4)


@given(st.floats(0.05, 0.95), st.integers(1, 500))
def test_temporal_properties(beta, gap):
    lit, cl = TemporalConfig(beta_s=beta, mode=LITERAL), TemporalConfig(beta_s=beta)
    assert temporal_constraint(0, gap, lit) == pytest.approx(math.log(beta * gap * gap), abs=1e-12)
    assert temporal_constraint(0, gap, lit) == temporal_constraint(gap + 7, 7, lit)
    assert temporal_constraint(0, gap, cl) >= temporal_constraint(0, gap + 1, cl)
    if gap >= zero_penalty_gap(beta):
        assert temporal_constraint(0, gap, cl) == 0.0
    # literal S strictly decreases with the gap at fixed k_norm
    assert 0.5 - 2 * temporal_constraint(0, gap, lit) > 0.5 - 2 * temporal_constraint(0, gap + 1, lit)


def test_config_validation():
    for kw in ({"beta_s": 0}, {"beta_s": 1}, {"alpha": 0}, {"mode": "x"}, {"min_gap": 0}):
        with pytest.raises(ValueError):
            TemporalConfig(**kw)


def relative_error(a, n):
    return abs(a - n) / max(1e-8, abs(a) + abs(n))


def test_gradient_check():
    rng = np.random.default_rng(3)
    clf = Classifier.init((5, 16, 16, 1), seed=5)
    X = rng.normal(size=(12, 5))
    y = (rng.random(12) > 0.5).astype(float)
    gw, gb = clf.gradients(X, y)
    eps = 1e-5
    worst = 0.0
    for params, grads in ((clf.weights, gw), (clf.biases, gb)):
        for p, g in zip(params, grads):
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + eps
                up = clf.loss(X, y)
                p[idx] = old - eps
                down = clf.loss(X, y)
                p[idx] = old
                worst = max(worst, relative_error(g[idx], (up - down) / (2 * eps)))
    assert worst < 1e-4


def blobs(seed=1, n=100):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-1.5, 0.5, size=(n, 5)), rng.normal(1.5, 0.5, size=(n, 5))])
    y = np.r_[np.zeros(n), np.ones(n)]
    return X, y


def test_training_separable_blobs():
    X, y = blobs()
    clf = train_classifier(X, y, epochs=500, lr=0.01, seed=1)
    assert clf.history[-1] < 0.2
    assert clf.loss(X, y) == clf.history[-1]


def test_zero_epochs_and_zero_lr_untouched():
    X, y = blobs(n=10)
    init = Classifier.init((5, 16, 16, 1), seed=4)
    for clf in (train_classifier(X, y, epochs=0, seed=4), train_classifier(X, y, epochs=3, lr=0.0, seed=4)):
        assert all(np.array_equal(a, b) for a, b in zip(clf.weights, init.weights))
        assert all(np.array_equal(a, b) for a, b in zip(clf.biases, init.biases))


def test_training_deterministic_and_roundtrip(tmp_path):
    X, y = blobs(n=20)
    a = train_classifier(X, y, epochs=5, seed=2, batch_size=4)
    b = train_classifier(X, y, epochs=5, seed=2, batch_size=4)
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X))
    a.save(tmp_path / "c.txt")
    assert np.array_equal(Classifier.load(tmp_path / "c.txt").predict_proba(X), a.predict_proba(X))
    with pytest.raises(ValueError):
        train_classifier(X[:, :3], y)


@given(st.lists(st.lists(st.floats(-1e6, 1e6), min_size=5, max_size=5), min_size=1, max_size=5))
def test_proba_open_interval(rows):
    p = Classifier.init(seed=0).predict_proba(np.array(rows))
    assert ((p > 0) & (p < 1)).all()


def ps(i, j, s):
    return PairScore(i, j, 0, s, 0.0, s)


class ConstantStub(Classifier):
    def __init__(self):
        pass

    def predict_proba(self, X):
        return np.full(len(X), 0.9)


def test_predict_candidates_examples():
    scores = [ps(10, 100, 0.9), ps(11, 100, 0.2)]
    assert predict_candidates(scores, None, 0.5) == [(10, 100)]
    assert predict_candidates([ps(95, 100, 5.0)], None, 0.5) == []
    assert predict_candidates(scores + [ps(95, 100, 1.0)], ConstantStub(), 0.5) == [(10, 100), (11, 100)]


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(51, 200), st.floats(-2, 2)), max_size=20), st.randoms())
def test_predict_order_independent(items, r):
    scores = [ps(i, j, s) for i, j, s in items]
    shuffled = list(scores)
    r.shuffle(shuffled)
    out = predict_candidates(scores)
    assert out == predict_candidates(shuffled) == sorted(out)
