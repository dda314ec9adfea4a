"""Three-tier anchored scene graphs.

Tier 1: one anchor node per object, anchors fully connected.
Tier 2: keypoints inside a bbox, attached to one anchor, inheriting its label.
Tier 3: keypoints in the margin band around a bbox, attached with label 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

from .ingest import Detection, FrameAnnotation, Keypoint
from .labelmatch import NormalizedDetection

FLAT, TWO_TIER, THREE_TIER = "flat", "two_tier", "three_tier"
MODES = (FLAT, TWO_TIER, THREE_TIER)

NODE_DIM = 8
EDGE_DIM = 4
BACKGROUND = 0
DEFAULT_MARGIN_PX = 25


@dataclass(frozen=True)
class NodeRecord:
    node_id: int
    tier: int
    wl_label: int
    features: tuple[float, ...]


@dataclass(frozen=True)
class EdgeRecord:
    endpoints: tuple[int, int]
    features: tuple[float, ...]


@dataclass(frozen=True)
class SceneGraph:
    frame_id: int
    nodes: tuple[NodeRecord, ...]
    edges: tuple[EdgeRecord, ...]
    usable: bool = True  # False for anchor-less tiered graphs

    @cached_property
    def adjacency(self) -> list[list[int]]:
        index = {n.node_id: k for k, n in enumerate(self.nodes)}
        adj: list[list[int]] = [[] for _ in self.nodes]
        for e in self.edges:
            u, v = index[e.endpoints[0]], index[e.endpoints[1]]
            adj[u].append(v)
            adj[v].append(u)
        return adj

    @property
    def wl_labels(self) -> list[int]:
        return [n.wl_label for n in self.nodes]

    def __len__(self) -> int:
        return len(self.nodes)

    @classmethod
    def from_structure(cls, labels: Sequence[int], edges: Sequence[tuple[int, int]],
                       frame_id: int = -1) -> "SceneGraph":
        """Bare labelled graph with zero features, for kernel experiments."""
        nodes = tuple(NodeRecord(k, 1, int(lab), (0.0,) * NODE_DIM) for k, lab in enumerate(labels))
        es = tuple(EdgeRecord((int(u), int(v)), (0.0,) * EDGE_DIM) for u, v in edges)
        return cls(frame_id, nodes, es)


def _inside(x: float, y: float, bbox: Sequence[float], pad: float = 0.0) -> bool:
    x1, y1, x2, y2 = bbox
    return x1 - pad <= x <= x2 + pad and y1 - pad <= y <= y2 + pad


def assign_anchor(kp: Keypoint, objects: Sequence[Detection], margin_px: float) -> tuple[int, int] | None:
    """Pick the single anchor for a keypoint, or None.

    Returns ``(object_index, tier)``. Candidates are ranked by distance to
    the bbox centroid, then bbox area, then object index.
    """
    inside, band = [], []
    for k, d in enumerate(objects):
        if _inside(kp.x, kp.y, d.bbox):
            inside.append(k)
        elif margin_px > 0 and _inside(kp.x, kp.y, d.bbox, margin_px):
            band.append(k)
    cands, tier = (inside, 2) if inside else (band, 3)
    if not cands:
        return None

    def rank(k):
        cx, cy = objects[k].centroid
        return (kp.x - cx) ** 2 + (kp.y - cy) ** 2, objects[k].area, k

    return min(cands, key=rank), tier


def _edge(u: int, v: int, pu: tuple[float, float], pv: tuple[float, float], code: int) -> EdgeRecord:
    dx, dy = pv[0] - pu[0], pv[1] - pu[1]
    return EdgeRecord((u, v), (math.sqrt(dx * dx + dy * dy), dx, dy, float(code)))


def _bbox_of(o: NormalizedDetection, w: float, h: float) -> Detection:
    if o.detection is not None:
        return o.detection
    x1 = (o.ncx - o.nw / 2) * w
    y1 = (o.ncy - o.nh / 2) * h
    return Detection("", o.label_id, o.confidence, (x1, y1, x1 + o.nw * w, y1 + o.nh * h))


def build_graph(frame: FrameAnnotation, filtered_objects: Sequence[NormalizedDetection],
                mode: str = THREE_TIER, margin_px: float = DEFAULT_MARGIN_PX,
                vbow_weight: float = 0.0) -> SceneGraph:
    if mode not in MODES:
        raise ValueError(f"unknown graph mode {mode!r}")
    w, h = float(frame.width), float(frame.height)
    vw = float(vbow_weight)

    if mode == FLAT:
        nodes = tuple(
            NodeRecord(k, 3, BACKGROUND, (3.0, 0.0, kp.x / w, kp.y / h, 0.0, 0.0, 0.0, vw))
            for k, kp in enumerate(frame.keypoints)
        )
        return SceneGraph(frame.frame_id, nodes, (), usable=bool(nodes))

    nodes = []
    edges = []
    pos = []
    for k, o in enumerate(filtered_objects):
        nodes.append(NodeRecord(k, 1, o.label_id,
                                (1.0, float(o.label_id), o.ncx, o.ncy, o.nw, o.nh, o.confidence, vw)))
        pos.append((o.ncx, o.ncy))
    n_anchor = len(nodes)
    for u in range(n_anchor):
        for v in range(u + 1, n_anchor):
            edges.append(_edge(u, v, pos[u], pos[v], 1))

    if n_anchor:
        dets = [_bbox_of(o, w, h) for o in filtered_objects]
        margin = float(margin_px) if mode == THREE_TIER else 0.0
        for kp in frame.keypoints:
            hit = assign_anchor(kp, dets, margin)
            if hit is None:
                continue
            anchor, tier = hit
            nid = len(nodes)
            label = nodes[anchor].wl_label if tier == 2 else BACKGROUND
            p = (kp.x / w, kp.y / h)
            nodes.append(NodeRecord(nid, tier, label, (float(tier), float(label), p[0], p[1], 0.0, 0.0, 0.0, vw)))
            edges.append(_edge(anchor, nid, pos[anchor], p, tier))

    return SceneGraph(frame.frame_id, tuple(nodes), tuple(edges), usable=n_anchor > 0)


def write_graph_csv(graph: SceneGraph, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "nodes.csv").open("w") as fh:
        fh.write("node_id,tier,wl_label," + ",".join(f"f{k}" for k in range(NODE_DIM)) + "\n")
        for n in graph.nodes:
            fh.write(f"{n.node_id},{n.tier},{n.wl_label}," + ",".join(repr(x) for x in n.features) + "\n")
    with (out / "edges.csv").open("w") as fh:
        fh.write("u,v," + ",".join(f"e{k}" for k in range(EDGE_DIM)) + "\n")
        for e in graph.edges:
            u, v = e.endpoints
            fh.write(f"{u},{v}," + ",".join(repr(x) for x in e.features) + "\n")
