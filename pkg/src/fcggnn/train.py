"""Supervised training with best-validation checkpointing, evaluation, prediction."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .corpus import Corpus, Sample, featurize
from .errors import DataError, TrainingError
from .features import apply_standardizer, build_feature_matrix, fit_standardizer
from .gnn import ModelConfig, ModelParams, as_tensors, init_params, model_forward
from .graph import DirectedGraph, batch_graphs
from .metrics import MetricsReport, compute_metrics

log = logging.getLogger(__name__)

DEFAULT_LEARNING_RATES = (0.001, 0.0001)
SELECTION_METRICS = ("accuracy", "weighted_f1")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    selection_metric: str = "weighted_f1"
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.selection_metric not in SELECTION_METRICS:
            raise ValueError(f"selection_metric must be one of {SELECTION_METRICS}")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_metric: list[float] = field(default_factory=list)
    wall_clock: list[float] = field(default_factory=list, compare=False)
    best_epoch: int = -1


def stratified_holdout(samples: Sequence[Sample], fraction: float, seed: int):
    """Split off ``fraction`` of every class (at least one sample when the class has two)."""
    rng = np.random.default_rng(seed)
    labels = np.array([s.label for s in samples])
    held = np.zeros(len(samples), dtype=bool)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        k = int(round(fraction * len(idx)))
        if len(idx) > 1:
            k = min(max(k, 1), len(idx) - 1)
        else:
            k = 0
        held[rng.permutation(idx)[:k]] = True
    keep = [s for s, h in zip(samples, held) if not h]
    out = [s for s, h in zip(samples, held) if h]
    return keep, out


def _standardized(samples: Sequence[Sample], stats) -> list[np.ndarray]:
    return [apply_standardizer(f, stats) for f in featurize(samples)]


def _forward_all(params: ModelParams, graphs: Sequence[DirectedGraph],
                 feats: Sequence[np.ndarray], batch_size: int = 256):
    logits, embs = [], []
    for lo in range(0, len(graphs), batch_size):
        chunk = [(g, 0) for g in graphs[lo : lo + batch_size]]
        batch = batch_graphs(chunk)
        lg, emb = model_forward(batch, np.concatenate(feats[lo : lo + batch_size]), params)
        logits.append(lg.data)
        embs.append(emb.data)
    return np.concatenate(logits), np.concatenate(embs)


def _metric(report: MetricsReport, name: str) -> float:
    return report.accuracy if name == "accuracy" else report.weighted.f1


def _check_labels(train: Sequence[Sample], others: Sequence[Sample], num_classes: int) -> None:
    seen = {s.label for s in train}
    if min(seen) < 0 or max(seen) >= num_classes:
        raise DataError(f"training labels must lie in [0, {num_classes})")
    unknown = sorted({s.label for s in others} - seen)
    if unknown:
        raise DataError(f"labels {unknown} appear in val/test but not in train")


def fit(
    dataset: Corpus | Sequence[Sample],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    on_epoch: Callable[[int, float, float], None] | None = None,
) -> tuple[ModelParams, TrainHistory]:
    """Train and return the parameters of the best validation epoch.

    When the dataset has no ``val`` samples, a stratified ``val_fraction``
    of the training split is held out for model selection.
    """
    samples = dataset.samples if isinstance(dataset, Corpus) else list(dataset)
    train = [s for s in samples if s.split == "train"]
    val = [s for s in samples if s.split == "val"]
    test = [s for s in samples if s.split == "test"]
    if not train:
        raise DataError("training split is empty")
    if not val:
        train, val = stratified_holdout(train, train_cfg.val_fraction, train_cfg.seed)
        if not val:
            raise DataError("training split too small to hold out validation graphs")
    _check_labels(train, val + test, model_cfg.num_classes)

    stats = fit_standardizer(featurize(train))
    train_x = _standardized(train, stats)
    val_x = _standardized(val, stats)
    val_graphs = [s.graph for s in val]
    val_y = np.array([s.label for s in val])

    params = init_params(model_cfg, stats)
    if isinstance(dataset, Corpus):
        params.class_names = list(dataset.class_names)
    state = ad.AdamState()
    rng = np.random.default_rng(train_cfg.seed)
    history = TrainHistory()
    best: ModelParams | None = None
    best_score = -np.inf
    start = time.perf_counter()

    for epoch in range(train_cfg.epochs):
        order = rng.permutation(len(train))
        loss_sum = 0.0
        for lo in range(0, len(order), train_cfg.batch_size):
            idx = order[lo : lo + train_cfg.batch_size]
            batch = batch_graphs([(train[i].graph, train[i].label) for i in idx])
            x = np.concatenate([train_x[i] for i in idx])
            tensors = as_tensors(params, requires_grad=True)
            try:
                with ad.GradientTape() as tape:
                    logits, _ = model_forward(batch, x, tensors, model_cfg)
                    loss = ad.softmax_cross_entropy(logits, batch.labels)
                tape.backward(loss)
            except FloatingPointError as exc:
                raise TrainingError(
                    f"non-finite values at epoch {epoch}, batch starting {lo}: {exc}"
                ) from exc
            grads = {k: t.grad for k, t in tensors.items() if t.grad is not None}
            ad.adam_step(params.weights, grads, state, train_cfg.lr)
            loss_sum += loss.item() * len(idx)

        epoch_loss = loss_sum / len(train)
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"loss became {epoch_loss} at epoch {epoch}")
        logits, _ = _forward_all(params, val_graphs, val_x)
        report = compute_metrics(val_y, predict_labels(logits), model_cfg.num_classes)
        score = _metric(report, train_cfg.selection_metric)
        history.train_loss.append(epoch_loss)
        history.val_metric.append(score)
        history.wall_clock.append(time.perf_counter() - start)
        if score > best_score:
            best_score = score
            best = params.copy()
            history.best_epoch = epoch
        log.debug("epoch %d loss %.6f val %.4f", epoch, epoch_loss, score)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss, score)

    assert best is not None
    return best, history


def predict_labels(logits: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    return np.argmax(logits, axis=1)


def evaluate(params: ModelParams, split: Sequence[Sample]) -> MetricsReport:
    if not split:
        raise DataError("cannot evaluate an empty split")
    logits, _ = forward_samples(params, split)
    labels = np.array([s.label for s in split])
    return compute_metrics(labels, predict_labels(logits), params.config.num_classes)


def forward_samples(params: ModelParams, samples: Sequence[Sample]):
    """Logits and whole-graph embeddings for every sample, in order."""
    if params.stats is None:
        raise DataError("model has no standardization statistics")
    feats = _standardized(samples, params.stats)
    return _forward_all(params, [s.graph for s in samples], feats)


def predict(params: ModelParams, g: DirectedGraph) -> tuple[int, np.ndarray, np.ndarray]:
    """Class id, class probabilities and whole-graph embedding for one graph."""
    if params.stats is None:
        raise DataError("model has no standardization statistics")
    if g.node_count < 1:
        raise DataError("graph has no nodes")
    x = apply_standardizer(build_feature_matrix(g), params.stats)
    logits, emb = model_forward(batch_graphs([(g, 0)]), x, params)
    probs = ad.softmax(logits.data)[0]
    return int(predict_labels(logits.data)[0]), probs, emb.data[0].copy()
