"""Command-line front end: synth, validate, build-graphs, score, train, predict, evaluate, ablate."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import synth as synthmod
from .config import ConfigError, PipelineConfig
from .evalharness import EvalReport, ReportRow, first_detection, precision_recall, run_ablation
from .ingest import DatasetError, load_dataset, validate_dataset
from .pipeline import PairScorer, candidate_pairs, dataset_vocabulary, score_pairs
from .predictor import CLAMPED, LITERAL, Classifier, PairScore, predict_candidates, train_classifier
from .scenegraph import MODES, build_graph, write_graph_csv

log = logging.getLogger("graphlcd")

SCORE_HEADER = "i,j,k_raw,k_norm,tc,s,vbow,label_match,hausdorff"

# flag dest -> PipelineConfig field
FLAG_FIELDS = {
    "mode": "mode", "margin": "margin_px", "beta_s": "beta_s", "alpha": "alpha",
    "iterations": "wl_iterations", "tau": "tau", "min_gap": "min_gap",
    "temporal_mode": "temporal_mode", "seed": "seed", "tolerance": "tolerance", "workers": "workers",
}


def _common(needs_dataset: bool = True) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    if needs_dataset:
        p.add_argument("--dataset", required=True, help="dataset directory holding frames.jsonl")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--config", help="flat 'key = value' config file; flags override it")
    p.add_argument("--mode", choices=MODES, help="graph tiering (default three_tier)")
    p.add_argument("--margin", type=float, help="background band width in pixels (default 25)")
    p.add_argument("--beta-s", type=float, help="temporal scale beta_s (default 0.3)")
    p.add_argument("--alpha", type=float, help="temporal weight alpha (default 2)")
    p.add_argument("--iterations", type=int, help="WL iterations h (default 50)")
    p.add_argument("--tau", type=float, help="decision threshold on S(i,j) (default 0.5)")
    p.add_argument("--min-gap", type=int, help="minimum frame gap for candidates (default 30)")
    p.add_argument("--temporal-mode", choices=(LITERAL, CLAMPED), help="temporal term form (default clamped)")
    p.add_argument("--seed", type=int, help="seed for vocabulary and classifier (default 42)")
    p.add_argument("--tolerance", type=int, help="TP window in frames (default 5)")
    p.add_argument("--workers", type=int, help="worker processes for pair scoring (default 1)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphlcd", description="Semantic-graph loop closure detection.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    common = _common()

    p = sub.add_parser("synth", parents=[_common(needs_dataset=False)],
                       help="generate a synthetic benchmark dataset")
    p.add_argument("--frames", type=int, default=300, help="number of keyframes (default 300)")
    p.add_argument("--label-noise", type=float, default=0.1, help="label swap rate (default 0.1)")
    p.add_argument("--jitter", type=float, default=2.0, help="centroid jitter sigma in px (default 2)")
    p.add_argument("--dropout", type=float, default=0.0, help="detection dropout rate (default 0)")

    sub.add_parser("validate", parents=[common], help="check a dataset against its schema and bounds")

    sub.add_parser("build-graphs", parents=[common], help="export per-frame node/edge CSVs")

    p = sub.add_parser("score", parents=[common], help="score frame pairs into scores.csv")
    p.add_argument("--pairs", help="CSV with header i,j; default is all pairs at least --min-gap apart")

    p = sub.add_parser("train", parents=[common], help="fit the candidate classifier on ground truth")
    p.add_argument("--epochs", type=int, help="training epochs (default 200)")
    p.add_argument("--lr", type=float, help="learning rate (default 0.01)")

    for name, text in (("predict", "emit loop-closure candidates to candidates.csv"),
                       ("evaluate", "precision/recall and first detection into report.csv")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--classifier", help="classifier.txt from 'train'; default thresholds S at --tau")
        if name == "evaluate":
            p.add_argument("--timing", action="store_true", help="fill the runtime_s column (not byte-stable)")

    p = sub.add_parser("ablate", parents=[common], help="run flat, two_tier and three_tier side by side")
    p.add_argument("--timing", action="store_true", help="fill the runtime_s column (not byte-stable)")
    return parser


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig()
    if args.config:
        cfg = PipelineConfig.from_file(args.config, cfg)
    values = {field: getattr(args, dest, None) for dest, field in FLAG_FIELDS.items()}
    for extra in ("epochs", "lr"):
        values[extra] = getattr(args, extra, None)
    return cfg.override(values)


def _read_pairs(path: str) -> list[tuple[int, int]]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "i,j":
        raise DatasetError(f"{path}: expected header 'i,j'")
    pairs = []
    for n, ln in enumerate(lines[1:], start=2):
        try:
            i, j = (int(c) for c in ln.split(","))
        except ValueError as exc:
            raise DatasetError(f"{path} line {n}: expected two integers") from exc
        pairs.append((i, j))
    return pairs


def _write_scores(scores: list[PairScore], path: Path) -> None:
    lines = [SCORE_HEADER]
    for sc in scores:
        lines.append(f"{sc.i},{sc.j},{sc.k_raw},{sc.k_norm!r},{sc.tc!r},{sc.s!r},"
                     f"{sc.vbow!r},{sc.label_match!r},{sc.hausdorff!r}")
    path.write_text("\n".join(lines) + "\n")


def _write_candidates(pairs: list[tuple[int, int]], path: Path) -> None:
    path.write_text("i,j\n" + "".join(f"{i},{j}\n" for i, j in pairs))


def _all_scores(ds, cfg, pairs=None) -> list[PairScore]:
    scorer = PairScorer(ds, cfg)
    if pairs is None:
        pairs = candidate_pairs(ds, cfg.min_gap)
    return score_pairs(scorer, pairs, cfg.workers)


def cmd_synth(args, cfg: PipelineConfig, out: Path) -> int:
    scfg = synthmod.benchmark_config(n_frames=args.frames, label_noise_rate=args.label_noise,
                                     centroid_jitter_px=args.jitter, dropout_rate=args.dropout, seed=cfg.seed)
    if args.frames != 300:
        scfg = synthmod.scale_revisits(scfg)
    res = synthmod.generate_sequence(scfg, out)
    print(f"wrote {len(res.dataset.frames)} frames, {len(res.ground_truth)} ground-truth pairs to {out}")
    return 0


def cmd_validate(args, cfg, out) -> int:
    rep = validate_dataset(load_dataset(args.dataset))
    n_frames, n_obj, n_kp = rep.counts
    print(f"frames={n_frames} objects={n_obj} keypoints={n_kp} violations={len(rep.violations)}")
    for v in rep.violations:
        print(v)
    return 0 if rep.ok else 1


def cmd_build_graphs(args, cfg, out) -> int:
    ds = load_dataset(args.dataset)
    vocab = dataset_vocabulary(ds, cfg)
    scorer = PairScorer(ds, cfg, vocab)
    for f in ds.frames:
        ctx = scorer.contexts[f.frame_id]
        g = build_graph(f, ctx.objects, cfg.mode, cfg.margin_px, ctx.vbow_weight)
        write_graph_csv(g, out / f"frame_{f.frame_id}")
    print(f"wrote graphs for {len(ds.frames)} frames to {out}")
    return 0


def cmd_score(args, cfg, out) -> int:
    ds = load_dataset(args.dataset)
    pairs = _read_pairs(args.pairs) if args.pairs else None
    scores = _all_scores(ds, cfg, pairs)
    _write_scores(scores, out / "scores.csv")
    print(f"scored {len(scores)} accepted pairs")
    return 0


def cmd_train(args, cfg, out) -> int:
    ds = load_dataset(args.dataset)
    if ds.ground_truth is None:
        raise DatasetError("training needs groundtruth.csv")
    scores = [sc for sc in _all_scores(ds, cfg) if sc.gap >= cfg.min_gap]
    if not scores:
        raise DatasetError("no label-accepted pairs to train on")
    truth = ds.ground_truth.loop_pairs
    X = np.stack([sc.features() for sc in scores])
    y = np.array([1.0 if (sc.i, sc.j) in truth else 0.0 for sc in scores])
    clf = train_classifier(X, y, cfg.epochs, cfg.lr, cfg.seed, cfg.layer_sizes, cfg.batch_size)
    clf.save(out / "classifier.txt")
    print(f"trained on {len(y)} pairs ({int(y.sum())} positive); final loss {clf.history[-1] if clf.history else clf.loss(X, y):.6f}")
    return 0


def _classifier(args) -> Classifier | None:
    return Classifier.load(args.classifier) if getattr(args, "classifier", None) else None


def cmd_predict(args, cfg, out) -> int:
    ds = load_dataset(args.dataset)
    predicted = predict_candidates(_all_scores(ds, cfg), _classifier(args), cfg.tau, cfg.temporal)
    _write_candidates(predicted, out / "candidates.csv")
    print(f"{len(predicted)} candidates")
    return 0


def cmd_evaluate(args, cfg, out) -> int:
    ds = load_dataset(args.dataset)
    if ds.ground_truth is None:
        raise DatasetError("evaluation needs groundtruth.csv")
    t0 = time.perf_counter()
    predicted = predict_candidates(_all_scores(ds, cfg), _classifier(args), cfg.tau, cfg.temporal)
    pr = precision_recall(predicted, ds.ground_truth, cfg.tolerance)
    row = ReportRow(cfg.mode, pr.precision, pr.recall, pr.tp, pr.fp, pr.fn,
                    first_detection(predicted), time.perf_counter() - t0)
    report = EvalReport([row], str(args.dataset), cfg)
    report.write(out, args.timing)
    print(report.to_csv(args.timing), end="")
    return 0


def cmd_ablate(args, cfg, out) -> int:
    ds = load_dataset(args.dataset)
    report = run_ablation(ds, MODES, cfg, out, str(args.dataset), args.timing)
    print(report.to_csv(args.timing), end="")
    return 0


COMMANDS = {
    "synth": cmd_synth, "validate": cmd_validate, "build-graphs": cmd_build_graphs, "score": cmd_score,
    "train": cmd_train, "predict": cmd_predict, "evaluate": cmd_evaluate, "ablate": cmd_ablate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"graphlcd: error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log.info("%s: effective config\n%s", args.command, cfg.snapshot().rstrip())
    try:
        return COMMANDS[args.command](args, cfg, out)
    except (DatasetError, ValueError, OSError) as exc:
        print(f"graphlcd: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
