"""Flat binary vocabulary and L1 bag-of-words pair scores.

Stands in for a DBoW2-style scorer when no precomputed pair scores exist.
Words are 256-bit centroids learned by k-majority clustering under Hamming
distance.
"""
from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import DESCRIPTOR_BYTES, FrameAnnotation

MAGIC = b"SBV1"
MAX_ROUNDS = 50


@dataclass(frozen=True, eq=False)
class Vocabulary:
    words: np.ndarray  # (k, 32) uint8, packed bits
    idf: np.ndarray  # (k,) float64
    seed: int | None = None

    @property
    def k(self) -> int:
        return len(self.words)

    def __eq__(self, other):
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return np.array_equal(self.words, other.words) and np.array_equal(self.idf, other.idf)

    def save(self, path: str | Path) -> None:
        with Path(path).open("wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", self.k))
            fh.write(np.ascontiguousarray(self.words, dtype=np.uint8).tobytes())
            fh.write(np.ascontiguousarray(self.idf, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        data = Path(path).read_bytes()
        if data[:4] != MAGIC:
            raise ValueError(f"{path}: not a vocabulary file")
        (k,) = struct.unpack("<I", data[4:8])
        off = 8 + k * DESCRIPTOR_BYTES
        if len(data) != off + 8 * k:
            raise ValueError(f"{path}: truncated vocabulary file")
        words = np.frombuffer(data[8:off], dtype=np.uint8).reshape(k, DESCRIPTOR_BYTES).copy()
        idf = np.frombuffer(data[off:], dtype="<f8").astype(np.float64)
        return cls(words, idf)


def _frame_bits(frame: FrameAnnotation) -> np.ndarray:
    descs = [kp.descriptor for kp in frame.keypoints if kp.descriptor is not None]
    if not descs:
        return np.zeros((0, 8 * DESCRIPTOR_BYTES), dtype=np.uint8)
    packed = np.frombuffer(b"".join(descs), dtype=np.uint8).reshape(len(descs), DESCRIPTOR_BYTES)
    return np.unpackbits(packed, axis=1)


def hamming_matrix(bits: np.ndarray, word_bits: np.ndarray) -> np.ndarray:
    a = bits.astype(np.float64)
    w = word_bits.astype(np.float64)
    return a.sum(1)[:, None] + w.sum(1)[None, :] - 2.0 * (a @ w.T)


def _nearest_word(bits: np.ndarray, word_bits: np.ndarray) -> np.ndarray:
    # argmin keeps the first minimum, so ties go to the lowest word id
    return np.argmin(hamming_matrix(bits, word_bits), axis=1)


def build_vocabulary(frames: Sequence[FrameAnnotation], k: int, seed: int = 0) -> Vocabulary:
    if k < 1:
        raise ValueError("vocabulary size k must be >= 1")
    per_frame = [_frame_bits(f) for f in frames]
    bits = np.concatenate(per_frame) if per_frame else np.zeros((0, 256), np.uint8)
    if len(bits) == 0:
        raise ValueError("no descriptors in corpus")

    rng = np.random.default_rng(seed)
    distinct = np.unique(bits, axis=0)
    take = rng.choice(len(distinct), size=min(k, len(distinct)), replace=False)
    centers = distinct[np.sort(take)]
    if len(centers) < k:
        # corpus has fewer distinct descriptors than k: pad with repeats
        centers = centers[np.arange(k) % len(centers)]
    centers = centers.copy()

    assign = None
    for _ in range(MAX_ROUNDS):
        new_assign = _nearest_word(bits, centers)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for w in range(k):
            members = bits[assign == w]
            if len(members) == 0:
                continue
            ones = members.sum(axis=0, dtype=np.int64) * 2
            n = len(members)
            centers[w] = np.where(ones > n, 1, np.where(ones < n, 0, centers[w]))

    n_frames = len(frames)
    df = np.zeros(k, dtype=np.int64)
    for fb in per_frame:
        if len(fb):
            df[np.unique(_nearest_word(fb, centers))] += 1
    idf = np.maximum(0.0, np.log(n_frames / (1.0 + df)))
    return Vocabulary(np.packbits(centers, axis=1), idf, seed)


def quantize(frame: FrameAnnotation, vocab: Vocabulary) -> np.ndarray:
    bits = _frame_bits(frame)
    if len(bits) == 0:
        return np.zeros(0, dtype=np.int64)
    return _nearest_word(bits, np.unpackbits(vocab.words, axis=1))


def l1_normalize(hist: Mapping[int, float]) -> dict[int, float]:
    total = math.fsum(v for _, v in sorted(hist.items()))  # exact, so order-independent
    if total <= 0:
        return {}
    return {w: v / total for w, v in sorted(hist.items()) if v > 0}


def frame_histogram(frame: FrameAnnotation, vocab: Vocabulary | None = None) -> dict[int, float]:
    """L1-normalized TF-IDF histogram of a frame.

    An ingested ``vbow_hist`` takes priority; otherwise descriptors are
    quantized against ``vocab``. When every word of the frame has zero idf
    the plain term-frequency histogram is returned instead.
    """
    if frame.vbow_hist is not None:
        return l1_normalize(frame.vbow_hist)
    if vocab is None:
        raise ValueError(f"frame {frame.frame_id}: no vbow histogram and no vocabulary")
    words = quantize(frame, vocab)
    tf = Counter(int(w) for w in words)
    weighted = l1_normalize({w: c * float(vocab.idf[w]) for w, c in tf.items()})
    return weighted if weighted else l1_normalize(tf)


def mean_tfidf_weight(frame: FrameAnnotation, vocab: Vocabulary | None = None) -> float:
    if frame.vbow_hist:
        return float(np.mean(list(frame.vbow_hist.values())))
    if vocab is None:
        return 0.0
    words = quantize(frame, vocab)
    return float(vocab.idf[words].mean()) if len(words) else 0.0


def l1_similarity(ha: Mapping[int, float], hb: Mapping[int, float]) -> float:
    support = sorted(ha.keys() | hb.keys())
    tv = 0.5 * sum(abs(ha.get(w, 0.0) - hb.get(w, 0.0)) for w in support)
    return min(1.0, max(0.0, 1.0 - tv))


def _usable(frame: FrameAnnotation, vocab: Vocabulary | None) -> bool:
    if frame.vbow_hist is not None:
        return True
    return vocab is not None and any(kp.descriptor is not None for kp in frame.keypoints)


def score_pair(fa: FrameAnnotation, fb: FrameAnnotation, vocab: Vocabulary | None = None,
               precomputed: float | None = None) -> float:
    if precomputed is not None:
        return float(precomputed)
    if not (_usable(fa, vocab) and _usable(fb, vocab)):
        raise ValueError(f"no vbow score source for pair ({fa.frame_id}, {fb.frame_id})")
    return l1_similarity(frame_histogram(fa, vocab), frame_histogram(fb, vocab))

