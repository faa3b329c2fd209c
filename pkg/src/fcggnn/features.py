"""Centrality node features: PageRank, in/out degree, betweenness."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .graph import DirectedGraph

FEATURE_NAMES = ("pagerank", "in_degree", "out_degree", "betweenness")
STD_EPSILON = 1e-8


class PageRankConvergenceWarning(RuntimeWarning):
    pass


def pagerank(
    g: DirectedGraph, alpha: float = 0.85, tol: float = 1e-9, max_iter: int = 200
) -> np.ndarray:
    """Power iteration from the uniform vector.

    Mass sitting on dangling nodes is spread uniformly every iteration.
    Iteration stops once the L1 change drops below ``tol``; if ``max_iter``
    is hit first the last iterate is returned and a
    :class:`PageRankConvergenceWarning` is issued.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.node_count
    out_deg = g.out_degree().astype(np.float64)
    dangling = out_deg == 0
    src, dst = g.edges[:, 0], g.edges[:, 1]
    weight = np.divide(1.0, out_deg, out=np.zeros(n), where=~dangling)[src]

    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        flow = np.bincount(dst, weights=x[src] * weight, minlength=n)
        nxt = alpha * (flow + x[dangling].sum() / n) + (1.0 - alpha) / n
        delta = np.abs(nxt - x).sum()
        x = nxt
        if delta < tol:
            break
    else:
        warnings.warn(
            f"pagerank did not reach tol={tol} in {max_iter} iterations",
            PageRankConvergenceWarning,
            stacklevel=2,
        )
    return x


def degrees(g: DirectedGraph) -> tuple[np.ndarray, np.ndarray]:
    return g.in_degree().copy(), g.out_degree().copy()


def betweenness(g: DirectedGraph) -> np.ndarray:
    """Unnormalized directed betweenness (Brandes), unit edge lengths."""
    n = g.node_count
    indptr, indices = g.csr_out.indptr, g.csr_out.indices
    succ = [indices[indptr[v] : indptr[v + 1]].tolist() for v in range(n)]
    cb = [0.0] * n
    for s in range(n):
        order = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        dist = [-1] * n
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            dv = dist[v] + 1
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            coeff = (1.0 + delta[w]) / sigma[w]
            for v in preds[w]:
                delta[v] += sigma[v] * coeff
            if w != s:
                cb[w] += delta[w]
    return np.array(cb, dtype=np.float64)


def build_feature_matrix(g: DirectedGraph) -> np.ndarray:
    """Raw ``N x 4`` float64 matrix, columns in ``FEATURE_NAMES`` order."""
    indeg, outdeg = degrees(g)
    return np.column_stack([pagerank(g), indeg, outdeg, betweenness(g)]).astype(np.float64)


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray
    epsilon_guard: float = STD_EPSILON

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StandardizationStats):
            return NotImplemented
        return (
            np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
            and self.epsilon_guard == other.epsilon_guard
        )


def fit_standardizer(train_features: Sequence[np.ndarray]) -> StandardizationStats:
    """Per-column mean and population std over all training nodes pooled."""
    mats = [np.asarray(f, dtype=np.float64) for f in train_features if len(f)]
    if not mats:
        raise DataError("cannot fit standardizer on an empty feature pool")
    pooled = np.concatenate(mats, axis=0)
    return StandardizationStats(pooled.mean(axis=0), pooled.std(axis=0))


def apply_standardizer(f: np.ndarray, stats: StandardizationStats) -> np.ndarray:
    scale = np.maximum(stats.std, stats.epsilon_guard)
    return ((np.asarray(f, dtype=np.float64) - stats.mean) / scale).astype(np.float32)
