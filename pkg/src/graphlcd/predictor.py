"""Temporal constraint, combined pair similarity and the candidate classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .scenegraph import SceneGraph
from .wlkernel import kernel_pair

LITERAL, CLAMPED = "literal", "clamped"
DEFAULT_LAYERS = (5, 16, 16, 1)
GAP_SCALE = 100.0


@dataclass(frozen=True)
class TemporalConfig:
    beta_s: float = 0.3
    alpha: float = 2.0
    mode: str = CLAMPED
    min_gap: int = 30

    def __post_init__(self):
        if not 0.0 < self.beta_s < 1.0:
            raise ValueError("beta_s must be in (0, 1)")
        if not 0.0 < self.alpha < 100.0:
            raise ValueError("alpha must be in (0, 100)")
        if self.mode not in (LITERAL, CLAMPED):
            raise ValueError(f"unknown temporal mode {self.mode!r}")
        if self.min_gap < 1:
            raise ValueError("min_gap must be >= 1")


@dataclass(frozen=True)
class PairScore:
    i: int
    j: int
    k_raw: int
    k_norm: float
    tc: float  # temporal term subtracted from k_norm (log value or clamped penalty)
    s: float
    vbow: float = 0.0
    label_match: float = 0.0
    hausdorff: float = 0.0

    @property
    def gap(self) -> int:
        return abs(self.j - self.i)

    def features(self) -> np.ndarray:
        g = self.gap
        return np.array([self.k_norm, self.vbow, self.label_match, self.hausdorff, g / (g + GAP_SCALE)])


def temporal_constraint(i: int, j: int, cfg: TemporalConfig = TemporalConfig()) -> float:
    if i == j:
        raise ValueError("temporal constraint is singular for i == j")
    tc = math.log(cfg.beta_s * float(i - j) ** 2)
    if cfg.mode == LITERAL:
        return tc
    return max(0.0, -tc)


def zero_penalty_gap(beta_s: float) -> int:
    """Smallest |i-j| from which the clamped penalty is exactly zero."""
    return math.ceil(1.0 / math.sqrt(beta_s))


def combined_similarity(ga: SceneGraph, gb: SceneGraph, i: int, j: int, h: int,
                        cfg: TemporalConfig = TemporalConfig()) -> PairScore:
    if i == j:
        raise ValueError("cannot score a frame against itself")
    if not (ga.usable and gb.usable):
        raise ValueError(f"pair ({i}, {j}): anchor-less graph cannot be kernel-scored")
    if i > j:
        i, j = j, i
    k_raw, k_norm = kernel_pair(ga, gb, h)
    tc = temporal_constraint(i, j, cfg)
    return PairScore(i, j, k_raw, k_norm, tc, k_norm - cfg.alpha * tc)


# ---------------------------------------------------------------- classifier


_P_LO, _P_HI = np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class Classifier:
    sizes: tuple[int, ...]
    weights: list[np.ndarray]  # layer l: (sizes[l+1], sizes[l])
    biases: list[np.ndarray]
    seed: int | None = None
    history: list[float] = field(default_factory=list, repr=False)

    @classmethod
    def init(cls, sizes: Sequence[int] = DEFAULT_LAYERS, seed: int = 0) -> "Classifier":
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / (n_in + n_out))
            weights.append(rng.uniform(-limit, limit, size=(n_out, n_in)))
            biases.append(np.zeros(n_out))
        return cls(sizes, weights, biases, seed)

    def copy(self) -> "Classifier":
        return Classifier(self.sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.seed)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.sizes[0]:
            raise ValueError(f"expected {self.sizes[0]} input features, got {X.shape[1]}")
        return X

    def _forward(self, X):
        acts = [X]
        a = X
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            a = z if l == len(self.weights) - 1 else np.tanh(z)
            acts.append(a)
        return acts  # last entry holds output logits

    def logits(self, X) -> np.ndarray:
        return self._forward(self._check(X))[-1][:, 0]

    def predict_proba(self, X) -> np.ndarray:
        # saturated logits would round to exactly 0 or 1; keep probabilities open
        return np.clip(_sigmoid(self.logits(X)), _P_LO, _P_HI)

    def loss(self, X, y) -> float:
        """Mean binary cross-entropy, evaluated stably from logits."""
        z = self.logits(X)
        y = np.asarray(y, dtype=float)
        return float(np.mean(np.logaddexp(0.0, z) - y * z))

    def gradients(self, X, y) -> tuple[list[np.ndarray], list[np.ndarray]]:
        X = self._check(X)
        y = np.asarray(y, dtype=float).reshape(-1)
        acts = self._forward(X)
        n = len(X)
        delta = (_sigmoid(acts[-1][:, 0]) - y)[:, None] / n
        gw = [None] * len(self.weights)
        gb = [None] * len(self.biases)
        for l in range(len(self.weights) - 1, -1, -1):
            gw[l] = delta.T @ acts[l]
            gb[l] = delta.sum(axis=0)
            if l:
                delta = (delta @ self.weights[l]) * (1.0 - acts[l] ** 2)
        return gw, gb

    def save(self, path: str | Path) -> None:
        lines = [" ".join(str(s) for s in self.sizes)]
        for w, b in zip(self.weights, self.biases):
            lines.extend(" ".join(f"{x:.17g}" for x in row) for row in w)
            lines.append(" ".join(f"{x:.17g}" for x in b))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Classifier":
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        sizes = tuple(int(s) for s in lines[0].split())
        pos = 1
        weights, biases = [], []
        try:
            for n_in, n_out in zip(sizes[:-1], sizes[1:]):
                w = np.array([[float(x) for x in lines[pos + r].split()] for r in range(n_out)])
                pos += n_out
                b = np.array([float(x) for x in lines[pos].split()])
                pos += 1
                if w.shape != (n_out, n_in) or b.shape != (n_out,):
                    raise ValueError("shape mismatch")
                weights.append(w)
                biases.append(b)
        except (IndexError, ValueError) as exc:
            raise ValueError(f"{path}: malformed classifier file") from exc
        return cls(sizes, weights, biases)


def train_classifier(X, y, epochs: int = 200, lr: float = 0.01, seed: int = 0,
                     sizes: Sequence[int] = DEFAULT_LAYERS, batch_size: int = 1) -> Classifier:
    """Minibatch SGD on binary cross-entropy with a seeded shuffle schedule."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y disagree on the number of examples")
    if X.shape[1] != sizes[0]:
        raise ValueError(f"input dimension {X.shape[1]} does not match layer sizes {tuple(sizes)}")
    clf = Classifier.init(sizes, seed)
    rng = np.random.default_rng(seed + 1)
    n = len(X)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            gw, gb = clf.gradients(X[idx], y[idx])
            for l in range(len(gw)):
                clf.weights[l] -= lr * gw[l]
                clf.biases[l] -= lr * gb[l]
        clf.history.append(clf.loss(X, y))
    return clf


def predict_candidates(scores: Iterable[PairScore], clf: Classifier | None = None, tau: float = 0.5,
                       cfg: TemporalConfig = TemporalConfig()) -> list[tuple[int, int]]:
    kept = [sc for sc in scores if sc.gap >= cfg.min_gap]
    if not kept:
        return []
    if clf is not None:
        probs = clf.predict_proba(np.stack([sc.features() for sc in kept]))
        accepted = [sc for sc, p in zip(kept, probs) if p >= 0.5]
    else:
        accepted = [sc for sc in kept if sc.s >= tau]
    return sorted({(min(sc.i, sc.j), max(sc.i, sc.j)) for sc in accepted})
