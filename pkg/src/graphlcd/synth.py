"""Deterministic synthetic keyframe sequences with ground-truth revisits.

The world is a list of places. Each place is a fixed layout of labelled
objects on a grid of cells, with landmark keypoints inside every box and
background landmarks either in the margin band around a box or well clear
of all boxes. The camera dwells on each place for a block of frames while
panning slowly; revisit windows replay an earlier stretch of the
trajectory with fresh detection noise.

Every random draw comes from one ``numpy.random.Generator`` (PCG64) seeded
with ``SynthConfig.seed``, consumed in a fixed order: layouts first, then
frames in index order.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import (Dataset, Detection, FrameAnnotation, GroundTruth, Keypoint, assign_label_ids,
                     write_frames, write_ground_truth)

STATIC_LABELS = (
    "book", "bottle", "chair", "clock", "cup", "keyboard",
    "laptop", "monitor", "mouse", "plant", "tv", "vase",
    "bowl", "remote", "sink", "couch", "bed", "oven", "toaster", "umbrella",
)


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    n_frames: int = 300
    width: int = 640
    height: int = 480
    n_places: int = 27
    n_labels: int = 12
    objects_per_place: tuple[int, int] = (5, 6)
    keypoints_per_object: tuple[int, int] = (3, 8)
    background_keypoints: tuple[int, int] = (4, 12)
    band_fraction: float = 0.6
    # ((source_start, source_end), (revisit_start, revisit_end)), half-open
    revisits: tuple[tuple[tuple[int, int], tuple[int, int]], ...] = (((20, 50), (250, 280)),)
    label_noise_rate: float = 0.1
    centroid_jitter_px: float = 2.0
    dropout_rate: float = 0.0
    movable_rate: float = 0.0
    pan_px_per_frame: float = 2.0
    margin_px: float = 25.0
    clearance_px: float = 10.0
    min_revisit_gap: int = 30
    seed: int = 42

    def snapshot(self) -> str:
        lines = ["# effective synth config"]
        for f in dataclasses.fields(self):
            lines.append(f"# {f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


def benchmark_config(**overrides) -> SynthConfig:
    """The bundled benchmark: 300 frames, 12 labels, one revisit, seed 42."""
    return dataclasses.replace(SynthConfig(), **overrides)


def scale_revisits(cfg: SynthConfig) -> SynthConfig:
    """Stretch the benchmark's place count and revisit windows to ``cfg.n_frames``."""
    f = cfg.n_frames / 300.0
    a, b, c = round(20 * f), round(50 * f), round(250 * f)
    return dataclasses.replace(cfg, n_places=max(1, round(27 * f)),
                               revisits=(((a, b), (c, c + (b - a))),) if b > a else ())


@dataclass
class _Object:
    label: str
    bbox: tuple[float, float, float, float]


@dataclass
class _Place:
    objects: list[_Object]
    keypoints: list[tuple[float, float, bytes]]


@dataclass
class SynthResult:
    dataset: Dataset
    ground_truth: GroundTruth
    frame_places: list[int]
    n_object_instances: int = 0
    n_label_flips: int = 0
    flipped: list[tuple[int, int]] = field(default_factory=list)  # (frame_id, object index)


def _check(cfg: SynthConfig) -> None:
    def rng_ok(r):
        return len(r) == 2 and 0 <= r[0] <= r[1]

    if cfg.n_frames < 1 or cfg.width <= 0 or cfg.height <= 0:
        raise SynthError("n_frames, width and height must be positive")
    if not 1 <= cfg.n_labels <= len(STATIC_LABELS):
        raise SynthError(f"n_labels must be in 1..{len(STATIC_LABELS)}")
    for name in ("objects_per_place", "keypoints_per_object", "background_keypoints"):
        if not rng_ok(getattr(cfg, name)):
            raise SynthError(f"{name} must be an ordered (lo, hi) range")
    for name in ("label_noise_rate", "dropout_rate", "movable_rate", "band_fraction"):
        if not 0.0 <= getattr(cfg, name) <= 1.0:
            raise SynthError(f"{name} must be in [0, 1]")
    if cfg.objects_per_place[1] < 1:
        raise SynthError("places need at least one object")
    if cfg.margin_px < 2 * cfg.clearance_px:
        raise SynthError("margin_px must be at least twice clearance_px")

    taken = set()
    for (a, b), (c, d) in cfg.revisits:
        if not (0 <= a < b <= cfg.n_frames and 0 <= c < d <= cfg.n_frames):
            raise SynthError(f"revisit window {(a, b)}->{(c, d)} outside [0, {cfg.n_frames})")
        if b - a != d - c:
            raise SynthError(f"revisit window {(a, b)}->{(c, d)}: source and revisit lengths differ")
        if c < b:
            raise SynthError(f"revisit window {(a, b)}->{(c, d)}: revisit must follow its source")
        span = set(range(c, d))
        if span & taken:
            raise SynthError("revisit windows overlap")
        taken |= span
    for (a, b), _ in cfg.revisits:
        if set(range(a, b)) & taken:
            raise SynthError(f"source window {(a, b)} overlaps a revisit window")
    if cfg.n_frames - len(taken) < cfg.n_places:
        raise SynthError("not enough non-revisit frames for every place")


def _schedule(cfg: SynthConfig) -> list[tuple[int, int, int]]:
    """Per-frame (place, step within visit, visit length)."""
    replay = {}
    for (a, _), (c, d) in cfg.revisits:
        for k in range(d - c):
            replay[c + k] = a + k
    free = [t for t in range(cfg.n_frames) if t not in replay]
    blocks = np.array_split(np.arange(len(free)), cfg.n_places)
    sched: list[tuple[int, int, int] | None] = [None] * cfg.n_frames
    for p, block in enumerate(blocks):
        for step, idx in enumerate(block):
            sched[free[idx]] = (p, step, len(block))
    for t in sorted(replay):
        sched[t] = sched[replay[t]]
    return sched


def _grid(cfg: SynthConfig) -> tuple[int, int]:
    n = cfg.objects_per_place[1]
    cols = max(1, math.ceil(math.sqrt(n * cfg.width / cfg.height)))
    rows = max(1, math.ceil(n / cols))
    return cols, rows


def _make_place(rng: np.random.Generator, cfg: SynthConfig, labels: tuple[str, ...]) -> _Place:
    cols, rows = _grid(cfg)
    cw, ch = cfg.width / cols, cfg.height / rows
    pad = cfg.margin_px + cfg.clearance_px
    min_side = 2 * cfg.clearance_px + 10
    n_obj = int(rng.integers(cfg.objects_per_place[0], cfg.objects_per_place[1] + 1))
    cells = rng.permutation(cols * rows)[:n_obj]

    objects, keypoints = [], []
    for cell in sorted(int(c) for c in cells):
        gx, gy = cell % cols, cell // cols
        inner_w, inner_h = cw - 2 * pad, ch - 2 * pad
        if inner_w < min_side or inner_h < min_side:
            raise SynthError("image too small for the requested object grid")
        bw = rng.uniform(max(min_side, 0.45 * inner_w), inner_w)
        bh = rng.uniform(max(min_side, 0.45 * inner_h), inner_h)
        x1 = gx * cw + pad + rng.uniform(0, inner_w - bw)
        y1 = gy * ch + pad + rng.uniform(0, inner_h - bh)
        label = labels[int(rng.integers(len(labels)))]
        obj = _Object(label, (x1, y1, x1 + bw, y1 + bh))
        objects.append(obj)
        c = cfg.clearance_px
        for _ in range(int(rng.integers(cfg.keypoints_per_object[0], cfg.keypoints_per_object[1] + 1))):
            keypoints.append((rng.uniform(x1 + c, x1 + bw - c), rng.uniform(y1 + c, y1 + bh - c), rng.bytes(32)))

    c, m = cfg.clearance_px, cfg.margin_px
    border = c + abs(cfg.pan_px_per_frame) * cfg.n_frames  # loose; clipped to the image below
    border = min(border, pad)
    for _ in range(int(rng.integers(cfg.background_keypoints[0], cfg.background_keypoints[1] + 1))):
        if rng.random() < cfg.band_fraction:
            x1, y1, x2, y2 = objects[int(rng.integers(len(objects)))].bbox
            d = rng.uniform(c, m - c)
            side = int(rng.integers(4))
            if side == 0:
                pt = (rng.uniform(x1, x2), y1 - d)
            elif side == 1:
                pt = (rng.uniform(x1, x2), y2 + d)
            elif side == 2:
                pt = (x1 - d, rng.uniform(y1, y2))
            else:
                pt = (x2 + d, rng.uniform(y1, y2))
            keypoints.append((pt[0], pt[1], rng.bytes(32)))
            continue
        for _ in range(100):
            x = rng.uniform(border, cfg.width - border)
            y = rng.uniform(border, cfg.height - border)
            if all(not (b[0] - m - c <= x <= b[2] + m + c and b[1] - m - c <= y <= b[3] + m + c)
                   for b in (o.bbox for o in objects)):
                keypoints.append((x, y, rng.bytes(32)))
                break
    return _Place(objects, keypoints)


def _clip_shift(bbox, dx, dy, w, h):
    x1, y1, x2, y2 = bbox
    dx = min(max(dx, -x1), w - x2)
    dy = min(max(dy, -y1), h - y2)
    return (x1 + dx, y1 + dy, x2 + dx, y2 + dy)


def generate_sequence(cfg: SynthConfig = SynthConfig(), out_dir: str | Path | None = None) -> SynthResult:
    _check(cfg)
    rng = np.random.default_rng(cfg.seed)
    labels = STATIC_LABELS[:cfg.n_labels]
    places = [_make_place(rng, cfg, labels) for _ in range(cfg.n_places)]
    sched = _schedule(cfg)
    w, h = cfg.width, cfg.height

    raw_frames = []
    flipped = []
    n_instances = 0
    for t, (p, step, length) in enumerate(sched):
        place = places[p]
        ox = cfg.pan_px_per_frame * (step - (length - 1) / 2.0)
        dets = []
        for k, obj in enumerate(place.objects):
            drop = rng.random() < cfg.dropout_rate
            noisy = rng.random() < cfg.label_noise_rate
            other = rng.integers(max(1, len(labels) - 1))
            jx, jy = rng.normal(0.0, cfg.centroid_jitter_px, size=2) if cfg.centroid_jitter_px > 0 else (0.0, 0.0)
            conf = float(rng.uniform(0.6, 0.99))
            if drop:
                continue
            label = obj.label
            if noisy and len(labels) > 1:
                label = [lab for lab in labels if lab != obj.label][int(other)]
                flipped.append((t, len(dets)))
            n_instances += 1
            dets.append((label, conf, _clip_shift(obj.bbox, ox + jx, jy, w, h)))
        if rng.random() < cfg.movable_rate:
            bw, bh = rng.uniform(0.1, 0.3) * w, rng.uniform(0.3, 0.6) * h
            x1, y1 = rng.uniform(0, w - bw), rng.uniform(0, h - bh)
            dets.append(("person", float(rng.uniform(0.6, 0.99)), (x1, y1, x1 + bw, y1 + bh)))
        kps = tuple(Keypoint(min(max(x + ox, 0.0), w), min(max(y, 0.0), h), d) for x, y, d in place.keypoints)
        raw_frames.append((t, dets, kps))

    vocab = assign_label_ids(lab for _, dets, _ in raw_frames for lab, _, _ in dets)
    frames = tuple(
        FrameAnnotation(t, w, h, tuple(Detection(lab, vocab[lab], conf, tuple(float(v) for v in bb))
                                       for lab, conf, bb in dets), kps)
        for t, dets, kps in raw_frames
    )

    frame_places = [s[0] for s in sched]
    pairs = [(i, j) for i in range(cfg.n_frames) for j in range(i + 1, cfg.n_frames)
             if frame_places[i] == frame_places[j] and j - i >= cfg.min_revisit_gap]
    short = [(i, j) for i in range(cfg.n_frames) for j in range(i + 1, min(cfg.n_frames, i + cfg.min_revisit_gap))
             if frame_places[i] == frame_places[j] and sched[i][1] == sched[j][1]]
    if short:
        raise SynthError(f"revisit pair {short[0]} closer than min_revisit_gap={cfg.min_revisit_gap}")
    gt = GroundTruth.from_pairs(pairs)
    ds = Dataset(frames, gt, None)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_frames(frames, out / "frames.jsonl")
        write_ground_truth(gt, out / "groundtruth.csv")
        (out / "config.snapshot").write_text(cfg.snapshot())
    return SynthResult(ds, gt, frame_places, n_instances, len(flipped), flipped)


def rescale_dataset(ds: Dataset, s: float) -> Dataset:
    """Uniformly rescale image sizes and every pixel coordinate by ``s``."""
    frames = []
    for f in ds.frames:
        objs = tuple(dataclasses.replace(d, bbox=tuple(v * s for v in d.bbox)) for d in f.objects)
        kps = tuple(Keypoint(k.x * s, k.y * s, k.descriptor) for k in f.keypoints)
        frames.append(FrameAnnotation(f.frame_id, f.width * s, f.height * s, objs, kps, f.vbow_hist))
    return Dataset(tuple(frames), ds.ground_truth, ds.pair_scores)
