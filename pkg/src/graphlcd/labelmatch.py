"""Scale-invariant label matching on the normalized image plane."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .ingest import Detection

MATCH_TOLERANCE = 0.40
_EPS = 1e-12


@dataclass(frozen=True)
class NormalizedDetection:
    label_id: int
    ncx: float
    ncy: float
    nw: float
    nh: float
    confidence: float
    detection: Detection | None = None  # pixel-space source, kept for containment tests


@dataclass(frozen=True)
class MatchResult:
    correspondences: tuple[tuple[int, int], ...]
    mismatch_fraction: float
    accepted: bool

    @property
    def match_score(self) -> float:
        return 1.0 - self.mismatch_fraction

    def matched_a(self) -> list[int]:
        return sorted(a for a, _ in self.correspondences)

    def matched_b(self) -> list[int]:
        return sorted(b for _, b in self.correspondences)


def normalize_detections(objects: Sequence[Detection], width: float, height: float) -> list[NormalizedDetection]:
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    out = []
    for d in objects:
        x1, y1, x2, y2 = d.bbox
        cx, cy = d.centroid
        out.append(NormalizedDetection(
            d.label_id, cx / width, cy / height, (x2 - x1) / width, (y2 - y1) / height,
            d.confidence, d,
        ))
    return out


def match_labels(a: Sequence[NormalizedDetection], b: Sequence[NormalizedDetection],
                 tolerance: float = MATCH_TOLERANCE) -> MatchResult:
    """Pair same-label objects across two frames.

    Within each shared label the assignment minimising total centroid
    distance is chosen. The pair is accepted when at most ``tolerance`` of
    the larger object set is left unmatched (boundary inclusive).
    """
    n = max(len(a), len(b))
    if n == 0:
        return MatchResult((), 1.0, False)

    groups_a: dict[int, list[int]] = defaultdict(list)
    groups_b: dict[int, list[int]] = defaultdict(list)
    for k, d in enumerate(a):
        groups_a[d.label_id].append(k)
    for k, d in enumerate(b):
        groups_b[d.label_id].append(k)

    pairs = []
    for label in sorted(groups_a.keys() & groups_b.keys()):
        ia, ib = groups_a[label], groups_b[label]
        if len(ia) == 1 and len(ib) == 1:
            pairs.append((ia[0], ib[0]))
            continue
        pa = np.array([(a[k].ncx, a[k].ncy) for k in ia])
        pb = np.array([(b[k].ncx, b[k].ncy) for k in ib])
        cost = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=-1)
        rows, cols = linear_sum_assignment(cost)
        pairs.extend((ia[r], ib[c]) for r, c in zip(rows, cols))

    pairs.sort()
    unmatched = n - len(pairs)
    mismatch = unmatched / n
    return MatchResult(tuple(pairs), mismatch, unmatched <= tolerance * n + _EPS)


def assignment_cost(a: Sequence[NormalizedDetection], b: Sequence[NormalizedDetection],
                    correspondences: Sequence[tuple[int, int]]) -> float:
    return float(sum(np.hypot(a[i].ncx - b[j].ncx, a[i].ncy - b[j].ncy) for i, j in correspondences))


def hausdorff_distance(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]) -> float:
    if len(a) == 0 or len(b) == 0:
        raise ValueError("hausdorff_distance needs two non-empty point sets")
    pa = np.asarray(a, dtype=float).reshape(-1, 2)
    pb = np.asarray(b, dtype=float).reshape(-1, 2)
    d = np.sqrt(((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def centroids(dets: Sequence[NormalizedDetection]) -> list[tuple[float, float]]:
    return [(d.ncx, d.ncy) for d in dets]
