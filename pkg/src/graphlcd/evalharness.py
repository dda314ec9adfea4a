"""Precision/recall, earliest detection and the graph-tier ablation."""
from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .config import PipelineConfig
from .ingest import Dataset, GroundTruth, canonical_pair
from .pipeline import PairScorer, candidate_pairs, dataset_vocabulary, score_pairs
from .predictor import Classifier, predict_candidates
from .scenegraph import MODES

REPORT_HEADER = "mode,precision,recall,tp,fp,fn,first_kf,runtime_s"


@dataclass(frozen=True)
class PRResult:
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    precision_degenerate: bool = False
    recall_degenerate: bool = False

    @property
    def degenerate(self) -> bool:
        return self.precision_degenerate or self.recall_degenerate


def _truth_pairs(truth) -> list[tuple[int, int]]:
    if isinstance(truth, GroundTruth):
        return truth.sorted_pairs()
    return sorted({canonical_pair(i, j) for i, j in truth})


def match_predictions(predicted: Iterable[tuple[int, int]], truth, tolerance: int = 0) -> dict:
    """Greedy one-to-one assignment of predictions to truth pairs.

    Predictions are visited in sorted order; each takes the nearest still
    unconsumed truth pair lying within ``tolerance`` frames on both ends.
    Returns prediction -> truth pair for the true positives.
    """
    preds = sorted({canonical_pair(i, j) for i, j in predicted})
    by_j: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for t in _truth_pairs(truth):
        by_j[t[1]].append(t)
    consumed = set()
    hits = {}
    for pi, pj in preds:
        best = None
        for tj in range(pj - tolerance, pj + tolerance + 1):
            for t in by_j.get(tj, ()):
                di, dj = abs(t[0] - pi), abs(tj - pj)
                if di > tolerance or t in consumed:
                    continue
                key = (max(di, dj), di + dj, t)
                if best is None or key < best:
                    best = key
        if best is not None:
            consumed.add(best[2])
            hits[(pi, pj)] = best[2]
    return hits


def precision_recall(predicted: Iterable[tuple[int, int]], truth, tolerance: int = 0) -> PRResult:
    preds = {canonical_pair(i, j) for i, j in predicted}
    n_truth = len(_truth_pairs(truth))
    tp = len(match_predictions(preds, truth, tolerance))
    fp = len(preds) - tp
    fn = n_truth - tp
    p_den, r_den = tp + fp, tp + fn
    return PRResult(
        tp / p_den if p_den else 0.0,
        tp / r_den if r_den else 0.0,
        tp, fp, fn,
        precision_degenerate=p_den == 0,
        recall_degenerate=r_den == 0,
    )


def first_detection(predicted: Iterable[tuple[int, int]]) -> int | None:
    js = [max(i, j) for i, j in predicted]
    return min(js) if js else None


@dataclass(frozen=True)
class ReportRow:
    mode: str
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int
    first_kf: int | None
    runtime_s: float | None = None

    def csv_line(self, with_runtime: bool = False) -> str:
        kf = "" if self.first_kf is None else str(self.first_kf)
        rt = f"{self.runtime_s:.4f}" if with_runtime and self.runtime_s is not None else ""
        return f"{self.mode},{self.precision:.4f},{self.recall:.4f},{self.tp},{self.fp},{self.fn},{kf},{rt}"


@dataclass
class EvalReport:
    rows: list[ReportRow]
    dataset_id: str = ""
    config: PipelineConfig = field(default_factory=PipelineConfig)

    def row(self, mode: str) -> ReportRow:
        return next(r for r in self.rows if r.mode == mode)

    def to_csv(self, with_runtime: bool = False) -> str:
        lines = [REPORT_HEADER] + [r.csv_line(with_runtime) for r in sorted(self.rows, key=lambda r: r.mode)]
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path, with_runtime: bool = False) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "report.csv"
        path.write_text(self.to_csv(with_runtime))
        snap = f"# dataset = {self.dataset_id}\n" + self.config.snapshot()
        (out / "config.snapshot").write_text(snap)
        return path


def evaluate_mode(ds: Dataset, cfg: PipelineConfig, clf: Classifier | None = None,
                  vocab=None) -> tuple[ReportRow, list[tuple[int, int]]]:
    if ds.ground_truth is None:
        raise ValueError("evaluation needs ground truth")
    t0 = time.perf_counter()
    scorer = PairScorer(ds, cfg, vocab)
    scores = score_pairs(scorer, candidate_pairs(ds, cfg.min_gap), cfg.workers)
    predicted = predict_candidates(scores, clf, cfg.tau, cfg.temporal)
    pr = precision_recall(predicted, ds.ground_truth, cfg.tolerance)
    row = ReportRow(cfg.mode, pr.precision, pr.recall, pr.tp, pr.fp, pr.fn,
                    first_detection(predicted), time.perf_counter() - t0)
    return row, predicted


def run_ablation(ds: Dataset, modes: Sequence[str] = MODES, cfg: PipelineConfig = PipelineConfig(),
                 out_dir: str | Path | None = None, dataset_id: str = "",
                 with_runtime: bool = False) -> EvalReport:
    if ds.ground_truth is None:
        raise ValueError("ablation needs ground truth")
    unknown = set(modes) - set(MODES)
    if unknown:
        raise ValueError(f"unknown modes {sorted(unknown)}")
    vocab = dataset_vocabulary(ds, cfg)  # shared so every mode sees identical vBoW scores
    rows = [evaluate_mode(ds, cfg.replace(mode=m), vocab=vocab)[0] for m in sorted(set(modes))]
    report = EvalReport(rows, dataset_id, cfg)
    if out_dir is not None:
        report.write(out_dir, with_runtime)
    return report
