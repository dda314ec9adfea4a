import math
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphlcd.scenegraph import SceneGraph
from graphlcd.wlkernel import kernel_pair, raw_kernel, vertex_histogram, wl_kernel, wl_refine

from conftest import random_graph
from oracles import oracle_kernel, permuted, structure


def test_oracle_equivalence_random_pairs():
    rng = random.Random(7)
    for _ in range(250):
        ga, gb = random_graph(rng), random_graph(rng)
        for h in (0, 1, 2):
            assert raw_kernel(ga, gb, h) == oracle_kernel(*structure(ga), *structure(gb), h)


def test_stabilised_shortcut_matches_full_refinement():
    rng = random.Random(11)
    for _ in range(100):
        ga, gb = random_graph(rng), random_graph(rng)
        for h in (3, 8, 50):
            full = sum(vertex_histogram(a, b) for a, b in wl_refine(ga, gb, h))
            assert raw_kernel(ga, gb, h) == full


def test_path_endpoints_share_label():
    g = SceneGraph.from_structure([1, 2, 1], [(0, 1), (1, 2)])
    hists = wl_refine(g, g, 1)
    ha, _ = hists[1]
    assert sorted(ha.values()) == [1, 2]


def test_h0_uses_original_labels_only():
    ga = SceneGraph.from_structure([1, 1, 2], [(0, 1)])
    gb = SceneGraph.from_structure([1, 2, 2], [(1, 2)])
    assert raw_kernel(ga, gb, 0) == 2 * 1 + 1 * 2


def test_vertex_histogram_examples():
    assert vertex_histogram(Counter({"a": 2, "b": 1}), Counter({"a": 1, "b": 2})) == 4
    assert vertex_histogram(Counter({"a": 2}), Counter({"b": 5})) == 0
    assert vertex_histogram(Counter({"a": 3}), Counter({"a": 3})) == 9


def test_single_nodes_equal_label_h1():
    g = SceneGraph.from_structure([3], [])
    assert raw_kernel(g, g, 1) == 2


def test_identical_subgraph_shares_compressed_labels():
    ga = SceneGraph.from_structure([1, 2, 3], [(0, 1), (1, 2)])
    gb = SceneGraph.from_structure([1, 2, 3, 4], [(0, 1), (1, 2)])
    for a, b in wl_refine(ga, gb, 3):
        # first three nodes of b are the same path as a; node 3 is isolated
        assert all(b[s] >= c for s, c in a.items())


def test_kernel_identities():
    rng = random.Random(3)
    for _ in range(120):
        ga, gb = random_graph(rng), random_graph(rng)
        h = rng.randint(0, 4)
        assert abs(wl_kernel(ga, ga, h) - 1.0) <= 1e-12
        assert raw_kernel(ga, gb, h) == raw_kernel(gb, ga, h)
        assert wl_kernel(ga, gb, h) == wl_kernel(gb, ga, h)
        perm = list(range(len(ga)))
        rng.shuffle(perm)
        assert raw_kernel(permuted(ga, perm), gb, h) == raw_kernel(ga, gb, h)
        ks = [raw_kernel(ga, gb, t) for t in range(6)]
        assert all(x <= y for x, y in zip(ks, ks[1:]))


def test_normalized_in_unit_interval_and_psd():
    rng = random.Random(5)
    for _ in range(20):
        gs = [random_graph(rng) for _ in range(5)]
        K = np.array([[wl_kernel(a, b, 2) for b in gs] for a in gs])
        assert ((K >= 0) & (K <= 1)).all()
        assert np.linalg.eigvalsh(K).min() >= -1e-9


def test_kernel_pair_consistent():
    rng = random.Random(9)
    ga, gb = random_graph(rng), random_graph(rng)
    raw, norm = kernel_pair(ga, gb, 2)
    assert raw == raw_kernel(ga, gb, 2)
    expected = raw / math.sqrt(raw_kernel(ga, ga, 2) * raw_kernel(gb, gb, 2))
    assert norm == pytest.approx(expected, abs=1e-15)


def test_errors():
    g = SceneGraph.from_structure([1], [])
    empty = SceneGraph.from_structure([], [])
    with pytest.raises(ValueError):
        raw_kernel(g, empty, 1)
    with pytest.raises(ValueError):
        raw_kernel(g, g, -1)


@st.composite
def graphs(draw):
    n = draw(st.integers(1, 6))
    labels = draw(st.lists(st.integers(1, 4), min_size=n, max_size=n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=9)) if pairs else []
    return SceneGraph.from_structure(labels, edges)


@settings(max_examples=150, deadline=None)
@given(graphs(), graphs(), st.integers(0, 3))
def test_property_oracle_and_symmetry(ga, gb, h):
    k = raw_kernel(ga, gb, h)
    assert k == oracle_kernel(*structure(ga), *structure(gb), h)
    assert k == raw_kernel(gb, ga, h)
    assert 0.0 <= wl_kernel(ga, gb, h) <= 1.0
