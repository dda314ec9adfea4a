"""Dataset ingestion: frame annotations, ground-truth loops and vBoW pair scores.

On-disk layout of a dataset directory::

    frames.jsonl       one keyframe per line
    groundtruth.csv    optional, header ``i,j``
    pair_scores.csv    optional, header ``i,j,score``
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

DESCRIPTOR_BYTES = 32  # 256-bit binary descriptors

_FRAME_FIELDS = {"frame", "width", "height", "objects", "keypoints", "vbow"}
_OBJECT_FIELDS = {"label", "score", "bbox"}
_KEYPOINT_FIELDS = {"x", "y", "desc"}


class DatasetError(ValueError):
    """Raised for unreadable or malformed dataset files."""


@dataclass(frozen=True)
class Detection:
    label: str
    label_id: int
    confidence: float
    bbox: tuple[float, float, float, float]

    @property
    def centroid(self) -> tuple[float, float]:
        x1, y1, x2, y2 = self.bbox
        return (x1 + x2) / 2.0, (y1 + y2) / 2.0

    @property
    def area(self) -> float:
        x1, y1, x2, y2 = self.bbox
        return max(0.0, x2 - x1) * max(0.0, y2 - y1)


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    descriptor: bytes | None = None


@dataclass(frozen=True)
class FrameAnnotation:
    frame_id: int
    width: int
    height: int
    objects: tuple[Detection, ...] = ()
    keypoints: tuple[Keypoint, ...] = ()
    vbow_hist: Mapping[int, float] | None = None


@dataclass(frozen=True)
class GroundTruth:
    loop_pairs: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "GroundTruth":
        return cls(frozenset(canonical_pair(i, j) for i, j in pairs))

    def __len__(self) -> int:
        return len(self.loop_pairs)

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.loop_pairs)


@dataclass(frozen=True)
class Dataset:
    frames: tuple[FrameAnnotation, ...]
    ground_truth: GroundTruth | None = None
    pair_scores: Mapping[tuple[int, int], float] | None = None

    def frame_ids(self) -> list[int]:
        return [f.frame_id for f in self.frames]

    def by_id(self) -> dict[int, FrameAnnotation]:
        return {f.frame_id: f for f in self.frames}


@dataclass
class ValidationReport:
    n_frames: int = 0
    n_objects: int = 0
    n_keypoints: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.n_frames, self.n_objects, self.n_keypoints

    @property
    def ok(self) -> bool:
        return not self.violations


def canonical_pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


def assign_label_ids(labels: Iterable[str]) -> dict[str, int]:
    """Sorted vocabulary of label texts -> ids 1..n (0 is background)."""
    return {lab: k for k, lab in enumerate(sorted(set(labels)), start=1)}


# ---------------------------------------------------------------- parsing


def _warn_unknown(obj: dict, known: set[str], where: str) -> None:
    extra = sorted(set(obj) - known)
    if extra:
        log.warning("%s: ignoring unknown fields %s", where, ", ".join(extra))


def _parse_descriptor(text: str, where: str) -> bytes:
    if not isinstance(text, str) or len(text) != 2 * DESCRIPTOR_BYTES:
        raise DatasetError(f"{where}: descriptor must be {2 * DESCRIPTOR_BYTES} hex chars")
    try:
        return bytes.fromhex(text)
    except ValueError as exc:
        raise DatasetError(f"{where}: bad hex descriptor") from exc


def _parse_frame_line(raw: dict, where: str) -> dict:
    if not isinstance(raw, dict):
        raise DatasetError(f"{where}: expected a JSON object")
    _warn_unknown(raw, _FRAME_FIELDS, where)
    try:
        frame_id = int(raw["frame"])
        width = int(raw["width"])
        height = int(raw["height"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"{where}: missing or invalid frame/width/height") from exc
    if frame_id < 0:
        raise DatasetError(f"{where}: negative frame id {frame_id}")

    objects = []
    for k, obj in enumerate(raw.get("objects", [])):
        owhere = f"{where} object {k}"
        if not isinstance(obj, dict):
            raise DatasetError(f"{owhere}: expected an object")
        _warn_unknown(obj, _OBJECT_FIELDS, owhere)
        try:
            bbox = tuple(float(v) for v in obj["bbox"])
            label = str(obj["label"])
            score = float(obj.get("score", 1.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{owhere}: invalid detection") from exc
        if len(bbox) != 4:
            raise DatasetError(f"{owhere}: bbox needs 4 values")
        objects.append((label, score, bbox))

    keypoints = []
    for k, kp in enumerate(raw.get("keypoints", [])):
        kwhere = f"{where} keypoint {k}"
        if not isinstance(kp, dict):
            raise DatasetError(f"{kwhere}: expected an object")
        _warn_unknown(kp, _KEYPOINT_FIELDS, kwhere)
        try:
            x, y = float(kp["x"]), float(kp["y"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"{kwhere}: invalid coordinates") from exc
        desc = kp.get("desc")
        keypoints.append(Keypoint(x, y, None if desc is None else _parse_descriptor(desc, kwhere)))

    vbow = raw.get("vbow")
    hist = None
    if vbow is not None:
        try:
            hist = {int(w): float(v) for w, v in vbow.items()}
        except (AttributeError, TypeError, ValueError) as exc:
            raise DatasetError(f"{where}: invalid vbow histogram") from exc

    return dict(frame_id=frame_id, width=width, height=height,
                objects=objects, keypoints=tuple(keypoints), vbow_hist=hist)


def _read_frames(path: Path) -> list[FrameAnnotation]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc

    parsed = []
    seen: dict[int, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path.name} line {lineno}"
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{where}: malformed JSON ({exc.msg})") from exc
        rec = _parse_frame_line(raw, where)
        fid = rec["frame_id"]
        if fid in seen:
            raise DatasetError(f"{where}: duplicate frame_id {fid} (first seen on line {seen[fid]})")
        seen[fid] = lineno
        parsed.append(rec)

    vocab = assign_label_ids(label for rec in parsed for label, _, _ in rec["objects"])
    frames = []
    for rec in parsed:
        dets = tuple(Detection(label, vocab[label], score, bbox) for label, score, bbox in rec.pop("objects"))
        frames.append(FrameAnnotation(objects=dets, **rec))
    frames.sort(key=lambda f: f.frame_id)
    return frames


def _read_csv_rows(path: Path, header: list[str]):
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows or [c.strip() for c in rows[0]] != header:
        raise DatasetError(f"{path.name} line 1: expected header {','.join(header)}")
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(header):
            raise DatasetError(f"{path.name} line {lineno}: expected {len(header)} columns")
        yield lineno, [c.strip() for c in row]


def _parse_endpoint(cell: str) -> list[int]:
    # "a..b" is an inclusive frame range
    if ".." in cell:
        lo, hi = cell.split("..", 1)
        lo_i, hi_i = int(lo), int(hi)
        if hi_i < lo_i:
            raise ValueError("empty range")
        return list(range(lo_i, hi_i + 1))
    return [int(cell)]


def _read_ground_truth(path: Path) -> GroundTruth:
    pairs = []
    for lineno, (ci, cj) in _read_csv_rows(path, ["i", "j"]):
        try:
            ri, rj = _parse_endpoint(ci), _parse_endpoint(cj)
        except ValueError as exc:
            raise DatasetError(f"{path.name} line {lineno}: invalid pair") from exc
        if len(ri) != len(rj):
            raise DatasetError(f"{path.name} line {lineno}: loop ranges differ in length")
        pairs.extend(zip(ri, rj))
    return GroundTruth.from_pairs(pairs)


def _read_pair_scores(path: Path) -> dict[tuple[int, int], float]:
    scores = {}
    for lineno, (ci, cj, cs) in _read_csv_rows(path, ["i", "j", "score"]):
        try:
            key = canonical_pair(int(ci), int(cj))
            scores[key] = float(cs)
        except ValueError as exc:
            raise DatasetError(f"{path.name} line {lineno}: invalid score row") from exc
    return scores


def load_dataset(root: str | Path) -> Dataset:
    root = Path(root)
    frames_path = root / "frames.jsonl"
    if not frames_path.is_file():
        raise DatasetError(f"{root}: frames.jsonl not found")
    frames = _read_frames(frames_path)
    gt_path = root / "groundtruth.csv"
    ps_path = root / "pair_scores.csv"
    gt = _read_ground_truth(gt_path) if gt_path.is_file() else None
    ps = _read_pair_scores(ps_path) if ps_path.is_file() else None
    return Dataset(tuple(frames), gt, ps)


# ---------------------------------------------------------------- writing


def frame_to_json(frame: FrameAnnotation) -> dict:
    rec = {
        "frame": frame.frame_id,
        "width": frame.width,
        "height": frame.height,
        "objects": [{"label": d.label, "score": d.confidence, "bbox": list(d.bbox)} for d in frame.objects],
        "keypoints": [
            {"x": k.x, "y": k.y, **({"desc": k.descriptor.hex()} if k.descriptor is not None else {})}
            for k in frame.keypoints
        ],
    }
    if frame.vbow_hist is not None:
        rec["vbow"] = {str(w): v for w, v in sorted(frame.vbow_hist.items())}
    return rec


def write_frames(frames: Iterable[FrameAnnotation], path: Path) -> None:
    with Path(path).open("w") as fh:
        for frame in frames:
            fh.write(json.dumps(frame_to_json(frame), separators=(",", ":")) + "\n")


def write_ground_truth(gt: GroundTruth, path: Path) -> None:
    with Path(path).open("w") as fh:
        fh.write("i,j\n")
        for i, j in gt.sorted_pairs():
            fh.write(f"{i},{j}\n")


def write_pair_scores(scores: Mapping[tuple[int, int], float], path: Path) -> None:
    with Path(path).open("w") as fh:
        fh.write("i,j,score\n")
        for (i, j), s in sorted(scores.items()):
            fh.write(f"{i},{j},{s!r}\n")


def save_dataset(ds: Dataset, root: str | Path) -> Path:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_frames(ds.frames, root / "frames.jsonl")
    if ds.ground_truth is not None:
        write_ground_truth(ds.ground_truth, root / "groundtruth.csv")
    if ds.pair_scores is not None:
        write_pair_scores(ds.pair_scores, root / "pair_scores.csv")
    return root


# ---------------------------------------------------------------- validation


def validate_dataset(ds: Dataset) -> ValidationReport:
    """Collect every invariant violation; never raises."""
    rep = ValidationReport()
    seen: set[int] = set()
    prev = None
    for f in ds.frames:
        fid = f.frame_id
        rep.n_frames += 1
        rep.n_objects += len(f.objects)
        rep.n_keypoints += len(f.keypoints)
        if fid in seen:
            rep.violations.append(f"frame {fid}: duplicate frame_id")
        seen.add(fid)
        if prev is not None and fid < prev:
            rep.violations.append(f"frame {fid}: frames not sorted by frame_id")
        prev = fid
        if f.width <= 0 or f.height <= 0:
            rep.violations.append(f"frame {fid}: non-positive image size")
            continue
        for k, d in enumerate(f.objects):
            x1, y1, x2, y2 = d.bbox
            if not (x1 < x2 and y1 < y2):
                rep.violations.append(f"frame {fid}: degenerate bbox (object {k})")
            elif x1 < 0 or y1 < 0 or x2 > f.width or y2 > f.height:
                rep.violations.append(f"frame {fid}: bbox out of bounds (object {k})")
            if not 0.0 <= d.confidence <= 1.0:
                rep.violations.append(f"frame {fid}: confidence out of range (object {k})")
            if d.label_id < 1:
                rep.violations.append(f"frame {fid}: label_id must be >= 1 (object {k})")
        for k, kp in enumerate(f.keypoints):
            if not (0 <= kp.x <= f.width and 0 <= kp.y <= f.height):
                rep.violations.append(f"frame {fid}: keypoint out of bounds (keypoint {k})")
            if kp.descriptor is not None and len(kp.descriptor) != DESCRIPTOR_BYTES:
                rep.violations.append(f"frame {fid}: descriptor is not 256 bits (keypoint {k})")
        if f.vbow_hist is not None and any(v < 0 for v in f.vbow_hist.values()):
            rep.violations.append(f"frame {fid}: negative vbow weight")

    if ds.ground_truth is not None:
        for i, j in ds.ground_truth.sorted_pairs():
            if i >= j:
                rep.violations.append(f"ground truth ({i},{j}): requires i < j")
            for fid in (i, j):
                if fid not in seen:
                    rep.violations.append(f"ground truth ({i},{j}): unknown frame {fid}")
    if ds.pair_scores is not None:
        for (i, j), s in sorted(ds.pair_scores.items()):
            if i >= j:
                rep.violations.append(f"pair score ({i},{j}): requires i < j")
            if not 0.0 <= s <= 1.0:
                rep.violations.append(f"pair score ({i},{j}): score outside [0,1]")
    return rep
