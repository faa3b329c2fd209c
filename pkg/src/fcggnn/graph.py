"""Directed function-call graphs and block-diagonal batches."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import EmptyGraphError, GraphError, ParseError


@dataclass(frozen=True, eq=False)
class Adjacency:
    """CSR neighbor lists: neighbors of ``v`` are ``indices[indptr[v]:indptr[v+1]]``."""

    indptr: np.ndarray
    indices: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row_ids(self) -> np.ndarray:
        """Owning row of every entry in ``indices``."""
        return np.repeat(np.arange(self.node_count), self.counts)

    @cached_property
    def sum_matrix(self) -> sp.csr_matrix:
        n = self.node_count
        data = np.ones(len(self.indices), dtype=np.float64)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(n, n))

    @cached_property
    def mean_matrix(self) -> sp.csr_matrix:
        counts = self.counts.astype(np.float64)
        inv = np.divide(1.0, counts, out=np.zeros_like(counts), where=counts > 0)
        return sp.diags(inv).dot(self.sum_matrix).tocsr()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Adjacency):
            return NotImplemented
        return np.array_equal(self.indptr, other.indptr) and np.array_equal(
            self.indices, other.indices
        )


def _csr(n: int, rows: np.ndarray, cols: np.ndarray) -> Adjacency:
    # rows/cols already deduplicated; lexsort gives sorted neighbor lists
    order = np.lexsort((cols, rows))
    counts = np.bincount(rows, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Adjacency(indptr, cols[order].astype(np.int64))


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed graph with ids ``0..N-1``.

    ``edges`` is an ``(E, 2)`` int array sorted by (src, dst), free of
    self-loops and duplicates. Use :meth:`from_edges` to build one.
    """

    node_count: int
    edges: np.ndarray
    csr_out: Adjacency = field(repr=False)
    csr_in: Adjacency = field(repr=False)
    sym_csr: Adjacency = field(repr=False)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]]) -> DirectedGraph:
        """Build a graph, dropping self-loops and duplicate edges."""
        if node_count < 1:
            raise EmptyGraphError("graph must have at least one node")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= node_count):
            raise GraphError(f"edge endpoint outside [0, {node_count})")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.unique(arr, axis=0) if len(arr) else arr
        src, dst = arr[:, 0], arr[:, 1]
        sym = np.unique(np.concatenate([arr, arr[:, ::-1]]), axis=0) if len(arr) else arr
        arr.setflags(write=False)
        return cls(
            node_count=node_count,
            edges=arr,
            csr_out=_csr(node_count, src, dst),
            csr_in=_csr(node_count, dst, src),
            sym_csr=_csr(node_count, sym[:, 0], sym[:, 1]),
        )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def successors(self, v: int) -> np.ndarray:
        return self.csr_out.neighbors(v)

    def predecessors(self, v: int) -> np.ndarray:
        return self.csr_in.neighbors(v)

    def neighbors(self, v: int) -> np.ndarray:
        """Symmetrized neighborhood used for message passing."""
        return self.sym_csr.neighbors(v)

    def in_degree(self) -> np.ndarray:
        return self.csr_in.counts

    def out_degree(self) -> np.ndarray:
        return self.csr_out.counts

    def relabel(self, perm: Sequence[int]) -> DirectedGraph:
        """Graph where old node ``v`` becomes ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.node_count)):
            raise GraphError("relabel expects a permutation of node ids")
        return DirectedGraph.from_edges(self.node_count, perm[self.edges])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.node_count == other.node_count and np.array_equal(self.edges, other.edges)

    __hash__ = None  # type: ignore[assignment]


def symmetrize(g: DirectedGraph) -> list[list[int]]:
    """Per-node sorted, deduplicated union of predecessors and successors."""
    return [g.neighbors(v).tolist() for v in range(g.node_count)]


def load_edge_list(text: str | Iterable[str]) -> DirectedGraph:
    """Parse ``"<src> <dst>"`` lines into a graph with compacted ids.

    Ids are remapped to ``0..N-1`` in increasing numeric order. Nodes that
    only appear in self-loops are kept as isolated nodes.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError(f"line {lineno}: expected two non-negative integers, got {raw.rstrip()!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    if not pairs:
        raise EmptyGraphError("edge list contains no nodes")
    raw_ids = np.array(pairs, dtype=object if _too_big(pairs) else np.int64)
    ids, compact = np.unique(raw_ids.ravel(), return_inverse=True)
    return DirectedGraph.from_edges(len(ids), compact.reshape(-1, 2).astype(np.int64))


def _too_big(pairs: list[tuple[int, int]]) -> bool:
    return max(max(p) for p in pairs) > np.iinfo(np.int64).max


def read_edge_list(path) -> DirectedGraph:
    with open(path, encoding="utf-8") as fh:
        try:
            return load_edge_list(fh)
        except (ParseError, EmptyGraphError) as exc:
            raise type(exc)(f"{path}: {exc}") from None


def to_edge_list(g: DirectedGraph) -> str:
    """Serialize so that :func:`load_edge_list` rebuilds ``g`` exactly.

    Isolated nodes are written as self-loops, which the loader drops while
    still registering the node id.
    """
    touched = np.zeros(g.node_count, dtype=bool)
    touched[g.edges.ravel()] = True
    rows = [(int(s), int(d)) for s, d in g.edges]
    rows += [(int(v), int(v)) for v in np.flatnonzero(~touched)]
    rows.sort()
    return "".join(f"{s} {d}\n" for s, d in rows)


@dataclass(frozen=True, eq=False)
class GraphBatch:
    merged: DirectedGraph
    segment_ids: np.ndarray
    labels: np.ndarray
    graph_count: int
    offsets: np.ndarray = field(repr=False)

    def segment(self, k: int) -> DirectedGraph:
        """Recover graph ``k`` with its original ids."""
        lo, hi = int(self.offsets[k]), int(self.offsets[k + 1])
        e = self.merged.edges
        mask = (e[:, 0] >= lo) & (e[:, 0] < hi)
        return DirectedGraph.from_edges(hi - lo, e[mask] - lo)


def batch_graphs(graphs: Sequence[tuple[DirectedGraph, int]]) -> GraphBatch:
    """Merge graphs block-diagonally, offsetting ids by cumulative node counts."""
    if not graphs:
        raise GraphError("cannot batch an empty list of graphs")
    sizes = np.array([g.node_count for g, _ in graphs], dtype=np.int64)
    offsets = np.zeros(len(graphs) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    edges = np.concatenate([g.edges + off for (g, _), off in zip(graphs, offsets[:-1])])
    merged = DirectedGraph.from_edges(int(offsets[-1]), edges)
    segment_ids = np.repeat(np.arange(len(graphs)), sizes)
    labels = np.array([int(label) for _, label in graphs], dtype=np.int64)
    return GraphBatch(merged, segment_ids, labels, len(graphs), offsets)
