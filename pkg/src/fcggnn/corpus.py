"""Labeled graph collections shared by training, evaluation and export."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .features import build_feature_matrix
from .graph import DirectedGraph

SPLITS = ("train", "val", "test")


@dataclass(eq=False)
class Sample:
    graph: DirectedGraph
    label: int
    name: str = ""
    split: str = "train"
    _features: np.ndarray | None = field(default=None, repr=False)

    def features(self) -> np.ndarray:
        if self._features is None:
            self._features = build_feature_matrix(self.graph)
        return self._features


@dataclass
class Corpus:
    samples: list[Sample]
    class_names: list[str]

    def split(self, name: str) -> list[Sample]:
        if name not in SPLITS:
            raise DataError(f"unknown split {name!r}")
        return [s for s in self.samples if s.split == name]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def num_workers() -> int:
    env = os.environ.get("FCG_NUM_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DataError(f"FCG_NUM_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def featurize(samples: Sequence[Sample], workers: int | None = None) -> list[np.ndarray]:
    """Raw feature matrices for ``samples``, computed in parallel when it pays off."""
    todo = [s for s in samples if s._features is None]
    workers = num_workers() if workers is None else workers
    if todo:
        if workers > 1 and len(todo) >= 4 * workers:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                mats = list(pool.map(build_feature_matrix, [s.graph for s in todo], chunksize=8))
            for s, m in zip(todo, mats):
                s._features = m
        else:
            for s in todo:
                s.features()
    return [s.features() for s in samples]


def remap_labels(corpus: Corpus, class_names: Sequence[str]) -> Corpus:
    """Re-express labels against another class list (e.g. a trained model's)."""
    ids = {name: i for i, name in enumerate(class_names)}
    missing = sorted(set(corpus.class_names) - set(ids))
    if missing:
        raise DataError(f"classes not known to the model: {', '.join(missing)}")
    samples = [
        Sample(s.graph, ids[corpus.class_names[s.label]], s.name, s.split, s._features)
        for s in corpus.samples
    ]
    return Corpus(samples, list(class_names))
