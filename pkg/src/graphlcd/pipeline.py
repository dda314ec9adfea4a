"""End-to-end pair scoring: filter -> label match -> graphs -> kernel -> S(i,j)."""
from __future__ import annotations

import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .config import PipelineConfig
from .ingest import Dataset, FrameAnnotation, canonical_pair
from .labelmatch import NormalizedDetection, centroids, hausdorff_distance, match_labels, normalize_detections
from .objfilter import filter_objects
from .predictor import Classifier, PairScore, combined_similarity, predict_candidates
from .scenegraph import SceneGraph, build_graph
from .vbow import Vocabulary, build_vocabulary, frame_histogram, l1_similarity, mean_tfidf_weight

log = logging.getLogger(__name__)

NO_OBJECTS_HAUSDORFF = 2 ** 0.5  # diameter of the unit normalized plane


@dataclass(frozen=True)
class FrameContext:
    frame: FrameAnnotation
    objects: tuple[NormalizedDetection, ...]
    hist: dict[int, float] | None
    vbow_weight: float


class PairScorer:
    def __init__(self, ds: Dataset, cfg: PipelineConfig, vocab: Vocabulary | None = None):
        self.cfg = cfg
        self.pair_scores = dict(ds.pair_scores or {})
        self.vocab = vocab if vocab is not None else dataset_vocabulary(ds, cfg)
        self.contexts = {f.frame_id: self._context(f) for f in ds.frames}

    def _context(self, f: FrameAnnotation) -> FrameContext:
        kept = filter_objects(f.objects, f.width, f.height, self.cfg.filter)
        objs = tuple(normalize_detections(kept, f.width, f.height))
        has_desc = any(kp.descriptor is not None for kp in f.keypoints)
        hist = None
        if f.vbow_hist is not None or (self.vocab is not None and has_desc):
            hist = frame_histogram(f, self.vocab)
        return FrameContext(f, objs, hist, mean_tfidf_weight(f, self.vocab))

    def graphs(self, i: int, j: int, objs_a=None, objs_b=None) -> tuple[SceneGraph, SceneGraph]:
        ca, cb = self.contexts[i], self.contexts[j]
        cfg = self.cfg
        ga = build_graph(ca.frame, ca.objects if objs_a is None else objs_a, cfg.mode, cfg.margin_px, ca.vbow_weight)
        gb = build_graph(cb.frame, cb.objects if objs_b is None else objs_b, cfg.mode, cfg.margin_px, cb.vbow_weight)
        return ga, gb

    def vbow(self, i: int, j: int) -> float:
        key = canonical_pair(i, j)
        if key in self.pair_scores:
            return self.pair_scores[key]
        ha, hb = self.contexts[i].hist, self.contexts[j].hist
        if ha is None or hb is None:
            return 0.0
        return l1_similarity(ha, hb)

    def score(self, i: int, j: int) -> PairScore | None:
        """PairScore for an accepted pair; None when the label gate rejects it."""
        i, j = canonical_pair(i, j)
        ca, cb = self.contexts[i], self.contexts[j]
        m = match_labels(ca.objects, cb.objects, self.cfg.match_tolerance)
        if not m.accepted:
            return None
        if self.cfg.anchor_objects == "matched":
            objs_a = [ca.objects[k] for k in m.matched_a()]
            objs_b = [cb.objects[k] for k in m.matched_b()]
        else:
            objs_a, objs_b = ca.objects, cb.objects
        ga, gb = self.graphs(i, j, objs_a, objs_b)
        if not (ga.usable and gb.usable) or len(ga) == 0 or len(gb) == 0:
            return None
        ps = combined_similarity(ga, gb, i, j, self.cfg.wl_iterations, self.cfg.temporal)
        hd = (hausdorff_distance(centroids(ca.objects), centroids(cb.objects))
              if ca.objects and cb.objects else NO_OBJECTS_HAUSDORFF)
        return replace(ps, vbow=self.vbow(i, j), label_match=m.match_score, hausdorff=hd)


def dataset_vocabulary(ds: Dataset, cfg: PipelineConfig) -> Vocabulary | None:
    """Vocabulary over the dataset's descriptors, or None when no frame needs one."""
    needs = any(f.vbow_hist is None and any(kp.descriptor is not None for kp in f.keypoints)
                for f in ds.frames)
    return build_vocabulary(ds.frames, cfg.vocab_size, cfg.seed) if needs else None


def candidate_pairs(ds: Dataset, min_gap: int) -> list[tuple[int, int]]:
    ids = ds.frame_ids()
    return [(a, b) for x, a in enumerate(ids) for b in ids[x + 1:] if b - a >= min_gap]


_WORKER_SCORER: PairScorer | None = None


def _score_chunk(pairs: Sequence[tuple[int, int]]) -> list[PairScore]:
    out = []
    for i, j in pairs:
        sc = _WORKER_SCORER.score(i, j)
        if sc is not None:
            out.append(sc)
    return out


def score_pairs(scorer: PairScorer, pairs: Iterable[tuple[int, int]], workers: int = 1,
                chunk_size: int = 2000) -> list[PairScore]:
    """Score pairs, merging worker results in canonical (i, j) order."""
    global _WORKER_SCORER
    pairs = sorted({canonical_pair(i, j) for i, j in pairs if i != j})
    _WORKER_SCORER = scorer
    log.info("scoring %d pairs with %d worker(s)", len(pairs), workers)
    try:
        if workers <= 1 or len(pairs) <= chunk_size:
            results = _score_chunk(pairs)
        else:
            chunks = [pairs[k:k + chunk_size] for k in range(0, len(pairs), chunk_size)]
            ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
            with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
                results = [sc for part in pool.map(_score_chunk, chunks) for sc in part]
    finally:
        _WORKER_SCORER = None
    results.sort(key=lambda sc: (sc.i, sc.j))
    return results


def score_dataset(ds: Dataset, cfg: PipelineConfig, pairs: Iterable[tuple[int, int]] | None = None,
                  vocab: Vocabulary | None = None) -> list[PairScore]:
    scorer = PairScorer(ds, cfg, vocab)
    if pairs is None:
        pairs = candidate_pairs(ds, cfg.min_gap)
    return score_pairs(scorer, pairs, cfg.workers)


def predict(ds: Dataset, cfg: PipelineConfig, clf: Classifier | None = None,
            scores: list[PairScore] | None = None) -> list[tuple[int, int]]:
    if scores is None:
        scores = score_dataset(ds, cfg)
    return predict_candidates(scores, clf, cfg.tau, cfg.temporal)
