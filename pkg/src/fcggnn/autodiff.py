"""Dense 2-D tensors with a define-by-run reverse-mode tape.

Values are stored as float32. Every primitive computes in float64 and rounds
the result, so reductions accumulate at 64-bit. Gradients are float64.

Usage::

    with GradientTape() as tape:
        loss = softmax_cross_entropy(matmul(x, w), labels)
    tape.backward(loss)
    w.grad
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeError
from .graph import Adjacency

_ACTIVE: list[GradientTape] = []

# Storage precision of tensor values; tests may raise it to float64.
DTYPE = np.float32


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "tape_node")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=DTYPE)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.tape_node: _Record | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item() needs a 1x1 tensor")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


@dataclass(eq=False)
class _Record:
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]
    # branch taken by piecewise ops (relu mask, max argmax)
    branch: np.ndarray | None = None


@dataclass(eq=False)
class GradientTape:
    records: list[_Record] = field(default_factory=list)
    consumed: bool = False

    def __enter__(self) -> GradientTape:
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.remove(self)

    def backward(self, loss: Tensor) -> None:
        backward(self, loss)

    def branch_signature(self) -> list[np.ndarray]:
        """Branches taken by every piecewise op; equal signatures mean the
        recorded function is smooth between the two evaluation points."""
        return [r.branch for r in self.records if r.branch is not None]


def backward(tape: GradientTape, loss: Tensor) -> None:
    """Reverse sweep over ``tape``; gradients accumulate on ``.grad``."""
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if tape.consumed:
        raise RuntimeError("tape was already used for a backward pass")
    if loss.tape_node is None or loss.tape_node not in tape.records:
        raise RuntimeError("loss was not recorded on this tape")
    tape.consumed = True
    loss.grad = np.ones((1, 1))
    for rec in reversed(tape.records):
        upstream = rec.output.grad
        if upstream is None:
            continue
        for inp, g in zip(rec.inputs, rec.backward(upstream)):
            if g is None or not inp.requires_grad:
                continue
            if inp.grad is None:
                inp.grad = np.array(g, dtype=np.float64)
            else:
                inp.grad += g


def _result(value: np.ndarray, inputs: tuple[Tensor, ...], grad_fn, branch=None) -> Tensor:
    with np.errstate(over="ignore"):
        out = Tensor(value)
    if not np.isfinite(out.data).all():
        raise FloatingPointError("non-finite value produced by tensor op")
    if _ACTIVE and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        rec = _Record(out, inputs, grad_fn, branch)
        out.tape_node = rec
        _ACTIVE[-1].records.append(rec)
    return out


def _f64(t: Tensor) -> np.ndarray:
    return t.data.astype(np.float64)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch {a.shape} x {b.shape}")
    av, bv = _f64(a), _f64(b)
    return _result(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeError(f"add shape mismatch {a.shape} vs {b.shape}")
    return _result(_f64(a) + _f64(b), (a, b), lambda g: (g, g))


def scale(a: Tensor, factor: float) -> Tensor:
    return _result(_f64(a) * factor, (a,), lambda g: (g * factor,))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    if b.shape != (1, x.shape[1]):
        raise ShapeError(f"bias shape {b.shape} does not fit {x.shape}")
    return _result(_f64(x) + _f64(b), (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _result(np.where(mask, _f64(x), 0.0), (x,), lambda g: (g * mask,), mask)


def concat_cols(xs: Sequence[Tensor]) -> Tensor:
    if not xs:
        raise ShapeError("concat_cols needs at least one tensor")
    rows = {t.shape[0] for t in xs}
    if len(rows) != 1:
        raise ShapeError(f"concat_cols row mismatch: {sorted(rows)}")
    bounds = np.cumsum([0] + [t.shape[1] for t in xs])

    def grad_fn(g):
        return tuple(g[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))

    return _result(np.concatenate([_f64(t) for t in xs], axis=1), tuple(xs), grad_fn)


def _check_adjacency(neigh: Adjacency, x: Tensor) -> None:
    n = x.shape[0]
    if neigh.node_count != n:
        raise ShapeError(f"adjacency has {neigh.node_count} rows, tensor has {n}")
    if len(neigh.indices) and (neigh.indices.min() < 0 or neigh.indices.max() >= n):
        raise IndexError("neighbor id out of range")


def sparse_apply(neigh: Adjacency, x: Tensor, mode: str = "sum") -> Tensor:
    """Row ``v`` = sum (or mean) of ``x[u]`` over ``u`` in ``neigh(v)``.

    Nodes without neighbors get a zero row in both modes.
    """
    _check_adjacency(neigh, x)
    if mode == "sum":
        mat = neigh.sum_matrix
    elif mode == "mean":
        mat = neigh.mean_matrix
    else:
        raise ValueError(f"unknown sparse_apply mode {mode!r}")
    return _result(mat @ _f64(x), (x,), lambda g: (mat.T @ g,))


def _grouped_max(values: np.ndarray, group: np.ndarray, count: int):
    """Column-wise max per group.

    Returns ``(out, arg)`` where ``arg[k, c]`` is the lowest row of ``values``
    attaining the max, or -1 for empty groups (whose ``out`` row is zero).
    """
    d = values.shape[1]
    out = np.zeros((count, d))
    arg = np.full((count, d), -1, dtype=np.int64)
    if len(values) == 0:
        return out, arg
    order = np.argsort(group, kind="stable")
    sg = group[order]
    starts = np.flatnonzero(np.r_[True, sg[1:] != sg[:-1]])
    present = sg[starts]
    sv = values[order]
    mx = np.maximum.reduceat(sv, starts, axis=0)
    rowpos = np.where(sv == mx[np.searchsorted(present, sg)], np.arange(len(sg))[:, None], len(sg))
    first = np.minimum.reduceat(rowpos, starts, axis=0)
    out[present] = mx
    arg[present] = order[first]
    return out, arg


def _max_result(values: Tensor, src_rows: np.ndarray, group: np.ndarray, count: int,
                gathered: np.ndarray) -> Tensor:
    out, arg = _grouped_max(gathered, group, count)
    n, d = values.shape

    def grad_fn(g):
        dx = np.zeros((n, d))
        k, c = np.nonzero(arg >= 0)
        np.add.at(dx, (src_rows[arg[k, c]], c), g[k, c])
        return (dx,)

    return _result(out, (values,), grad_fn, arg)


def segment_max(x: Tensor, segment_ids, num_segments: int) -> Tensor:
    """``out[g, c]`` = max of ``x[v, c]`` over rows with ``segment_ids[v] == g``.

    The gradient goes to one row per ``(g, c)``: the lowest index among ties.
    """
    seg = np.asarray(segment_ids, dtype=np.int64)
    if seg.shape != (x.shape[0],):
        raise ShapeError("segment_ids must have one entry per row")
    if len(seg) and (seg.min() < 0 or seg.max() >= num_segments):
        raise IndexError("segment id out of range")
    if np.any(np.bincount(seg, minlength=num_segments) == 0):
        raise ValueError("segment_max: empty segment")
    return _max_result(x, np.arange(x.shape[0]), seg, num_segments, _f64(x))


def neighbor_max(neigh: Adjacency, x: Tensor) -> Tensor:
    """Element-wise max of ``x[u]`` over ``neigh(v)``; empty neighborhoods give zeros."""
    _check_adjacency(neigh, x)
    src = neigh.indices
    return _max_result(x, src, neigh.row_ids(), x.shape[0], _f64(x)[src])


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)``."""
    labels = np.asarray(labels, dtype=np.int64)
    b, c = logits.shape
    if labels.shape != (b,):
        raise ShapeError(f"expected {b} labels, got shape {labels.shape}")
    if len(labels) and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"label outside [0, {c})")
    z = _f64(logits)
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(b)
    loss = np.mean(logsum - z[rows, labels])

    def grad_fn(g):
        p = softmax(logits.data)
        p[rows, labels] -= 1.0
        return (p * (g[0, 0] / b),)

    return _result(np.array([[loss]]), (logits,), grad_fn)


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {name!r}")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros(p.shape)
        m = state.m.setdefault(name, np.zeros(p.shape))
        v = state.v.setdefault(name, np.zeros(p.shape))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        step = lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p[...] = (p.astype(np.float64) - step).astype(p.dtype)
