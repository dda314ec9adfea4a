import itertools
import math
import random

import pytest
from hypothesis import given, strategies as st

from graphlcd.labelmatch import (NormalizedDetection, assignment_cost, hausdorff_distance, match_labels,
                                 normalize_detections)

from conftest import det


def nd(label_id, x=0.5, y=0.5):
    return NormalizedDetection(label_id, x, y, 0.1, 0.1, 0.9)


def test_normalize_examples():
    (a,) = normalize_detections([det("cup", (300, 220, 340, 260))], 640, 480)
    assert (a.ncx, a.ncy) == (0.5, 0.5)
    (b,) = normalize_detections([det("cup", (600, 440, 680, 520))], 1280, 960)
    assert (b.ncx, b.ncy) == (0.5, 0.5)
    (c,) = normalize_detections([det("cup", (0, 0, 64, 48))], 640, 480)
    assert (c.nw, c.nh) == (0.1, 0.1)
    with pytest.raises(ValueError):
        normalize_detections([], 0, 480)


def test_identical_sets_accepted():
    a = [nd(1), nd(2), nd(3)]
    m = match_labels(a, list(a))
    assert m.mismatch_fraction == 0.0 and m.accepted


def test_tolerance_boundary():
    five = [nd(k) for k in range(1, 6)]
    m3 = match_labels(five, [nd(1), nd(2), nd(3)])
    assert m3.mismatch_fraction == pytest.approx(0.4) and m3.accepted
    m2 = match_labels(five, [nd(1), nd(2)])
    assert m2.mismatch_fraction == pytest.approx(0.6) and not m2.accepted


def test_empty_frames_rejected():
    assert not match_labels([], []).accepted
    assert not match_labels([nd(1)], []).accepted


def test_duplicate_labels_optimal_against_permutations():
    r = random.Random(4)
    for _ in range(200):
        na, nb = r.randint(1, 4), r.randint(1, 4)
        a = [nd(1, r.random(), r.random()) for _ in range(na)]
        b = [nd(1, r.random(), r.random()) for _ in range(nb)]
        m = match_labels(a, b)
        got = assignment_cost(a, b, m.correspondences)
        if na <= nb:
            best = min(sum(math.dist((a[i].ncx, a[i].ncy), (b[j].ncx, b[j].ncy)) for i, j in zip(range(na), p))
                       for p in itertools.permutations(range(nb), na))
        else:
            best = min(sum(math.dist((a[i].ncx, a[i].ncy), (b[j].ncx, b[j].ncy)) for i, j in zip(p, range(nb)))
                       for p in itertools.permutations(range(na), nb))
        assert got == pytest.approx(best, abs=1e-12)
        assert len(m.correspondences) == min(na, nb)


def test_correspondences_same_label():
    a = [nd(1), nd(2), nd(2), nd(4)]
    b = [nd(2), nd(4), nd(5)]
    m = match_labels(a, b)
    assert all(a[i].label_id == b[j].label_id for i, j in m.correspondences)
    assert len(m.correspondences) == 2


def test_hausdorff_examples():
    assert hausdorff_distance([(0.1, 0.2), (0.3, 0.4)], [(0.1, 0.2), (0.3, 0.4)]) == 0.0
    assert hausdorff_distance([(0, 0)], [(0.3, 0.4)]) == pytest.approx(0.5)
    assert hausdorff_distance([(0, 0), (1, 0)], [(0, 0)]) == 1.0
    with pytest.raises(ValueError):
        hausdorff_distance([], [(0, 0)])


def brute_hausdorff(a, b):
    d_ab = max(min(math.dist(p, q) for q in b) for p in a)
    d_ba = max(min(math.dist(p, q) for q in a) for p in b)
    return max(d_ab, d_ba)


points = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=6)


@given(points, points)
def test_hausdorff_symmetric_and_brute(a, b):
    assert hausdorff_distance(a, b) == hausdorff_distance(b, a)
    assert hausdorff_distance(a, b) == pytest.approx(brute_hausdorff(a, b), abs=1e-12)


dets = st.lists(st.builds(nd, st.integers(1, 4), st.floats(0, 1), st.floats(0, 1)), max_size=6)


@given(dets, dets)
def test_match_symmetric(a, b):
    assert match_labels(a, b).mismatch_fraction == match_labels(b, a).mismatch_fraction


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 500), st.integers(0, 400),
                          st.integers(1, 100), st.integers(1, 60)), min_size=1, max_size=5),
       st.sampled_from([0.5, 2.0, 3.0, 0.25]))
def test_scale_invariance(specs, s):
    objs = [det("x", (x, y, x + w, y + h), lab) for lab, x, y, w, h in specs]
    scaled = [det("x", tuple(v * s for v in o.bbox), o.label_id) for o in objs]
    a = normalize_detections(objs, 640, 480)
    b = normalize_detections(scaled, 640 * s, 480 * s)
    for p, q in zip(a, b):
        for f in ("ncx", "ncy", "nw", "nh"):
            assert abs(getattr(p, f) - getattr(q, f)) <= 1e-12
