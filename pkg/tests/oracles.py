"""Independent reference implementations used only by the tests.

None of these share code paths with the package beyond building inputs.
"""

from __future__ import annotations

from collections import deque
from itertools import product

import numpy as np

from fcggnn import autodiff as ad


def brute_betweenness(n: int, edges) -> np.ndarray:
    """Enumerate every shortest s-t path explicitly and count interior visits."""
    succ = {v: sorted({d for s, d in edges if s == v and d != v}) for v in range(n)}
    cb = np.zeros(n)
    for s in range(n):
        dist = {s: 0}
        q = deque([s])
        while q:
            v = q.popleft()
            for w in succ[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    q.append(w)
        paths_to: dict[int, list[tuple[int, ...]]] = {t: [] for t in dist}

        def walk(path):
            v = path[-1]
            paths_to[v].append(path)
            for w in succ[v]:
                if dist.get(w) == len(path):
                    walk(path + (w,))

        walk((s,))
        for t, paths in paths_to.items():
            if t == s:
                continue
            for v in range(n):
                if v in (s, t):
                    continue
                through = sum(1 for p in paths if v in p)
                cb[v] += through / len(paths)
    return cb


def dense_pagerank(n: int, edges, alpha: float = 0.85, tol: float = 1e-12) -> np.ndarray:
    """Power iteration on the explicit Google matrix."""
    a = np.zeros((n, n))
    for s, d in set(map(tuple, edges)):
        if s != d:
            a[s, d] = 1.0
    out = a.sum(axis=1)
    m = np.where(out[:, None] > 0, a / np.where(out > 0, out, 1)[:, None], 1.0 / n)
    google = alpha * m.T + (1 - alpha) / n
    x = np.full(n, 1.0 / n)
    for _ in range(100_000):
        nxt = google @ x
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    raise AssertionError("oracle did not converge")


def sym_adjacency(n: int, edges) -> np.ndarray:
    a = np.zeros((n, n))
    for s, d in edges:
        if s != d:
            a[s, d] = a[d, s] = 1.0
    return a


def dense_gcn(x, a_sym, W0, W1, b):
    deg = a_sym.sum(axis=1, keepdims=True)
    mean = np.divide(a_sym @ x, deg, out=np.zeros((len(x), x.shape[1])), where=deg > 0)
    return np.maximum(x @ W0 + mean @ W1 + b, 0)


def loop_sage(x, a_sym, W_pool, b_pool, W, b):
    n = len(x)
    pooled = np.maximum(x @ W_pool + b_pool, 0)
    out = []
    for v in range(n):
        nbrs = np.flatnonzero(a_sym[v])
        agg = pooled[nbrs].max(axis=0) if len(nbrs) else np.zeros(pooled.shape[1])
        out.append(np.maximum(np.concatenate([x[v], agg]) @ W + b[0], 0))
    return np.array(out)


def dense_gin(x, a_sym, W1, b1, W2, b2, eps=0.0):
    h = (1 + eps) * x + a_sym @ x
    return np.maximum(h @ W1 + b1, 0) @ W2 + b2


def dense_model(cfg, weights, x, n, edges):
    """Whole forward pass for one graph in float64."""
    w = {k: v.astype(np.float64) for k, v in weights.items()}
    a = sym_adjacency(n, edges)
    h = np.asarray(x, dtype=np.float64)
    layers = []
    for i in range(cfg.num_layers):
        p = f"layer{i}."
        if cfg.layer_kind == "gcn":
            h = dense_gcn(h, a, w[p + "W0"], w[p + "W1"], w[p + "b"])
        elif cfg.layer_kind == "sage":
            h = loop_sage(h, a, w[p + "W_pool"], w[p + "b_pool"], w[p + "W"], w[p + "b"])
        else:
            h = dense_gin(h, a, w[p + "W1"], w[p + "b1"], w[p + "W2"], w[p + "b2"], cfg.gin_epsilon)
        layers.append(h)
    final = np.concatenate(layers, axis=1) @ w["jk.W"] + w["jk.b"]
    r = final.max(axis=0, keepdims=True)
    logits = np.maximum(r @ w["head.W1"] + w["head.b1"], 0) @ w["head.W2"] + w["head.b2"]
    return logits, r


def finite_difference_check(loss_fn, arrays: dict[str, np.ndarray], h: float = 1e-3, per_array: bool = False):
    """Central differences for every entry of ``arrays`` (mutated in place and restored).

    ``loss_fn(tensors)`` must build the scalar loss from a name -> Tensor map.
    Coordinates whose +-h evaluations take a different branch of some
    piecewise op (ReLU mask, max argmax) than the base point are skipped:
    there the function is not differentiable on [x-h, x+h].

    Returns ``(analytic, numeric, skipped, total)`` with flat vectors over
    the compared coordinates. With ``per_array`` the first two items are
    instead dicts mapping each array name to its own pair of vectors.
    """

    def run(with_grad: bool):
        tensors = {k: ad.Tensor(v, requires_grad=True) for k, v in arrays.items()}
        with ad.GradientTape() as tape:
            loss = loss_fn(tensors)
        if with_grad:
            tape.backward(loss)
        return loss.item(), tape.branch_signature(), tensors

    def same(s1, s2):
        return len(s1) == len(s2) and all(np.array_equal(a, b) for a, b in zip(s1, s2))

    _, base_sig, tensors = run(True)
    analytic: dict[str, list] = {}
    numeric: dict[str, list] = {}
    skipped = total = 0
    for name, arr in arrays.items():
        analytic[name], numeric[name] = [], []
        grad = tensors[name].grad
        grad = np.zeros(arr.shape) if grad is None else grad
        for idx in product(*map(range, arr.shape)):
            orig = arr[idx]
            arr[idx] = orig + h
            hi = float(arr[idx])
            up, sig_up, _ = run(False)
            arr[idx] = orig - h
            lo = float(arr[idx])
            down, sig_down, _ = run(False)
            arr[idx] = orig
            total += 1
            if not (same(base_sig, sig_up) and same(base_sig, sig_down)):
                skipped += 1
                continue
            analytic[name].append(grad[idx])
            # storage rounding makes the realized step differ slightly from 2h
            numeric[name].append((up - down) / (hi - lo))
    if per_array:
        a = {k: np.array(v) for k, v in analytic.items()}
        n = {k: np.array(v) for k, v in numeric.items()}
        return a, n, skipped, total
    flat = [np.array(sum(d.values(), [])) for d in (analytic, numeric)]
    return flat[0], flat[1], skipped, total


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(a - b) / scale) if scale > 0 else 0.0
