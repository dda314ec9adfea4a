import itertools
import random

import pytest

from graphlcd.ingest import Detection, FrameAnnotation, Keypoint
from graphlcd.scenegraph import SceneGraph


def random_graph(rng: random.Random, max_nodes=6, max_edges=9, n_labels=4) -> SceneGraph:
    n = rng.randint(1, max_nodes)
    labels = [rng.randint(1, n_labels) for _ in range(n)]
    possible = list(itertools.combinations(range(n), 2))
    edges = rng.sample(possible, rng.randint(0, min(max_edges, len(possible))))
    return SceneGraph.from_structure(labels, edges)


def det(label, bbox, label_id=1, conf=0.9):
    return Detection(label, label_id, conf, tuple(float(v) for v in bbox))


def frame(fid=0, objects=(), keypoints=(), w=640, h=480, vbow=None):
    kps = tuple(k if isinstance(k, Keypoint) else Keypoint(*k) for k in keypoints)
    return FrameAnnotation(fid, w, h, tuple(objects), kps, vbow)


@pytest.fixture
def rng():
    return random.Random(1234)


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(n, title, ok, detail)."""

    def record(n, title, ok, detail=""):
        ACCEPTANCE_RESULTS[n] = (bool(ok), title, detail)
        assert ok, f"criterion {n} ({title}) failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title} -- {detail}")
