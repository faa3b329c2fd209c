"""Seeded toy corpora for smoke tests and demos.

Three structural families are available: directed cycles, out-stars
(one hub calling every other node) and random recursive trees with edges
pointing away from the root. Node ids are shuffled so that no family can be
recognized from id order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Corpus, Sample
from .graph import DirectedGraph, to_edge_list

FAMILIES = ("cycle", "star", "tree")


def _shuffle(n: int, edges: list[tuple[int, int]], rng: np.random.Generator) -> DirectedGraph:
    perm = rng.permutation(n)
    return DirectedGraph.from_edges(n, [(perm[a], perm[b]) for a, b in edges])


def cycle_graph(n: int, rng: np.random.Generator) -> DirectedGraph:
    return _shuffle(n, [(i, (i + 1) % n) for i in range(n)], rng)


def chain_graph(n: int, rng: np.random.Generator) -> DirectedGraph:
    return _shuffle(n, [(i, i + 1) for i in range(n - 1)], rng)


def star_graph(n: int, rng: np.random.Generator) -> DirectedGraph:
    return _shuffle(n, [(0, i) for i in range(1, n)], rng)


def tree_graph(n: int, rng: np.random.Generator) -> DirectedGraph:
    return _shuffle(n, [(int(rng.integers(0, i)), i) for i in range(1, n)], rng)


_MAKERS = {"cycle": cycle_graph, "star": star_graph, "tree": tree_graph, "chain": chain_graph}


def make_graph(family: str, n: int, rng: np.random.Generator) -> DirectedGraph:
    return _MAKERS[family](n, rng)


def make_corpus(
    counts: dict[str, int] | None = None,
    families: tuple[str, ...] = FAMILIES,
    min_nodes: int = 6,
    max_nodes: int = 20,
    seed: int = 0,
) -> Corpus:
    """Balanced corpus; ``counts`` maps split -> graphs per split (split evenly across families)."""
    counts = counts or {"train": 300, "val": 60, "test": 90}
    rng = np.random.default_rng(seed)
    names = sorted(families)
    samples = []
    for split, total in counts.items():
        for i in range(total):
            family = names[i % len(names)]
            n = int(rng.integers(min_nodes, max_nodes + 1))
            samples.append(
                Sample(make_graph(family, n, rng), names.index(family), f"{split}-{i:04d}-{family}", split)
            )
    return Corpus(samples, names)


def write_corpus(corpus: Corpus, root) -> Path:
    """Lay a corpus out as ``root/<split>/<class>/<name>.edgelist`` and return ``root``."""
    root = Path(root)
    for s in corpus.samples:
        d = root / s.split / corpus.class_names[s.label]
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{s.name}.edgelist").write_text(to_edge_list(s.graph), encoding="utf-8")
    return root
