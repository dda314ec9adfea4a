"""Weisfeiler-Lehman subgraph kernel with a vertex-histogram base kernel.

Both graphs of a comparison are relabelled through one shared label table,
so identical (label, neighbour multiset) keys receive the same compressed
id in either graph. The kernel is the sum over iterations 0..h of the
inner products of the per-iteration label histograms.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .scenegraph import SceneGraph

DEFAULT_ITERATIONS = 50

LabelHistogram = Counter


class LabelTable:
    """Compression map (label, sorted neighbour labels) -> fresh id."""

    def __init__(self, start: int):
        self._next = start
        self._table: dict[tuple[int, tuple[int, ...]], int] = {}
        self.iteration = 0

    def __len__(self) -> int:
        return len(self._table)

    def compress(self, key: tuple[int, tuple[int, ...]]) -> int:
        lab = self._table.get(key)
        if lab is None:
            lab = self._next
            self._next += 1
            self._table[key] = lab
        return lab

    def refine(self, labels: Sequence[int], adj: Sequence[Sequence[int]]) -> list[int]:
        return [self.compress((labels[v], tuple(sorted(labels[u] for u in adj[v]))))
                for v in range(len(labels))]

    def next_iteration(self) -> None:
        # fresh ids of later iterations never reuse earlier ones
        self._table.clear()
        self.iteration += 1


def _refine_pair(ga: SceneGraph, gb: SceneGraph, h: int, stop_when_stable: bool):
    la, lb = list(ga.wl_labels), list(gb.wl_labels)
    adj_a, adj_b = ga.adjacency, gb.adjacency
    table = LabelTable(start=max(la + lb, default=0) + 1)
    hists = [(Counter(la), Counter(lb))]
    n_colors = len(set(la) | set(lb))
    for _ in range(h):
        table.next_iteration()
        la = table.refine(la, adj_a)
        lb = table.refine(lb, adj_b)
        hists.append((Counter(la), Counter(lb)))
        if stop_when_stable:
            # the joint partition only ever refines; equal colour count
            # means it is final and later iterations repeat this histogram
            colors = len(table)
            if colors == n_colors:
                break
            n_colors = colors
    return hists


def wl_refine(ga: SceneGraph, gb: SceneGraph, h: int) -> list[tuple[LabelHistogram, LabelHistogram]]:
    """Per-iteration label histograms of both graphs; h+1 entries."""
    if h < 0:
        raise ValueError("h must be >= 0")
    return _refine_pair(ga, gb, h, stop_when_stable=False)


def vertex_histogram(ha: LabelHistogram, hb: LabelHistogram) -> int:
    if len(hb) < len(ha):
        ha, hb = hb, ha
    return sum(c * hb[s] for s, c in ha.items() if s in hb)


def raw_kernel(ga: SceneGraph, gb: SceneGraph, h: int = DEFAULT_ITERATIONS) -> int:
    if h < 0:
        raise ValueError("h must be >= 0")
    if len(ga) == 0 or len(gb) == 0:
        raise ValueError("wl_kernel needs two non-empty graphs")
    hists = _refine_pair(ga, gb, h, stop_when_stable=True)
    terms = [vertex_histogram(a, b) for a, b in hists]
    # iterations skipped after stabilisation all equal the last term
    return sum(terms) + (h + 1 - len(terms)) * terms[-1]


def wl_kernel(ga: SceneGraph, gb: SceneGraph, h: int = DEFAULT_ITERATIONS, normalize: bool = True) -> float | int:
    k_ab = raw_kernel(ga, gb, h)
    if not normalize:
        return k_ab
    k_aa = raw_kernel(ga, ga, h)
    k_bb = raw_kernel(gb, gb, h)
    if k_ab == k_aa == k_bb:
        return 1.0
    return min(1.0, k_ab / math.sqrt(k_aa * k_bb))


def kernel_pair(ga: SceneGraph, gb: SceneGraph, h: int = DEFAULT_ITERATIONS) -> tuple[int, float]:
    """(raw, normalized) in one call."""
    k_ab = raw_kernel(ga, gb, h)
    k_aa = raw_kernel(ga, ga, h)
    k_bb = raw_kernel(gb, gb, h)
    if k_ab == k_aa == k_bb:
        return k_ab, 1.0
    return k_ab, min(1.0, k_ab / math.sqrt(k_aa * k_bb))
