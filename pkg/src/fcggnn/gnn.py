"""GCN / GraphSAGE / GIN layers with jumping-knowledge concatenation.

A model is ``num_layers`` message-passing layers whose outputs are
concatenated, linearly mixed into the final node embedding, max-pooled per
graph, and classified by a dense ReLU layer followed by a linear logit layer.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ShapeError
from .features import StandardizationStats
from .graph import DirectedGraph, GraphBatch

LAYER_KINDS = ("gcn", "sage", "gin")


@dataclass(frozen=True)
class ModelConfig:
    layer_kind: str = "sage"
    num_layers: int = 6
    hidden: int = 128
    head_units: int = 128
    num_classes: int = 2
    input_dim: int = 4
    gin_epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.layer_kind not in LAYER_KINDS:
            raise ValueError(f"layer_kind must be one of {LAYER_KINDS}, got {self.layer_kind!r}")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.hidden <= 0 or self.head_units <= 0 or self.input_dim <= 0:
            raise ValueError("layer widths must be positive")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")

    @property
    def jk_width(self) -> int:
        return self.num_layers * self.hidden

    def to_dict(self) -> dict:
        return asdict(self)


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, int]]:
    """Name -> shape for every trainable array, in a fixed order."""
    shapes: dict[str, tuple[int, int]] = {}
    h = cfg.hidden
    for i in range(cfg.num_layers):
        d_in = cfg.input_dim if i == 0 else h
        p = f"layer{i}."
        if cfg.layer_kind == "gcn":
            shapes[p + "W0"] = (d_in, h)
            shapes[p + "W1"] = (d_in, h)
            shapes[p + "b"] = (1, h)
        elif cfg.layer_kind == "sage":
            shapes[p + "W_pool"] = (d_in, d_in)
            shapes[p + "b_pool"] = (1, d_in)
            shapes[p + "W"] = (2 * d_in, h)
            shapes[p + "b"] = (1, h)
        else:
            shapes[p + "W1"] = (d_in, h)
            shapes[p + "b1"] = (1, h)
            shapes[p + "W2"] = (h, h)
            shapes[p + "b2"] = (1, h)
    shapes["jk.W"] = (cfg.jk_width, h)
    shapes["jk.b"] = (1, h)
    shapes["head.W1"] = (h, cfg.head_units)
    shapes["head.b1"] = (1, cfg.head_units)
    shapes["head.W2"] = (cfg.head_units, cfg.num_classes)
    shapes["head.b2"] = (1, cfg.num_classes)
    return shapes


@dataclass
class ModelParams:
    config: ModelConfig
    weights: dict[str, np.ndarray]
    stats: StandardizationStats | None = None
    class_names: list[str] = field(default_factory=list)

    def copy(self) -> ModelParams:
        return ModelParams(
            self.config,
            {k: v.copy() for k, v in self.weights.items()},
            self.stats,
            list(self.class_names),
        )

    def count(self) -> int:
        return sum(v.size for v in self.weights.values())

    def check(self) -> None:
        expected = parameter_shapes(self.config)
        if list(expected) != list(self.weights):
            raise ShapeError("parameter names do not match the model config")
        for name, shape in expected.items():
            if self.weights[name].shape != shape:
                raise ShapeError(f"{name}: expected {shape}, got {self.weights[name].shape}")


def init_params(cfg: ModelConfig, stats: StandardizationStats | None = None) -> ModelParams:
    """Glorot-uniform weights and zero biases, seeded by ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    weights = {}
    for name, (fan_in, fan_out) in parameter_shapes(cfg).items():
        if name.rsplit(".", 1)[1].startswith("b"):
            weights[name] = np.zeros((fan_in, fan_out), dtype=np.float32)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights[name] = rng.uniform(-limit, limit, (fan_in, fan_out)).astype(np.float32)
    return ModelParams(cfg, weights, stats)


def as_tensors(params: ModelParams, requires_grad: bool = False) -> dict[str, Tensor]:
    # Tensor wraps the float32 arrays without copying, so Adam updates stay visible
    return {k: Tensor(v, requires_grad=requires_grad) for k, v in params.weights.items()}


def _check_input(x: Tensor, g: DirectedGraph, w: Tensor) -> None:
    if x.shape[0] != g.node_count:
        raise ShapeError(f"{x.shape[0]} feature rows for {g.node_count} nodes")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"input width {x.shape[1]} does not match weight {w.shape}")


def gcn_layer(x: Tensor, g: DirectedGraph, W0: Tensor, W1: Tensor, b: Tensor) -> Tensor:
    """``ReLU(X W0 + mean_nbr(X) W1 + b)`` over the symmetrized neighborhood."""
    _check_input(x, g, W0)
    neigh = ad.sparse_apply(g.sym_csr, x, mode="mean")
    return ad.relu(ad.add_bias(ad.add(ad.matmul(x, W0), ad.matmul(neigh, W1)), b))


def sage_layer(x: Tensor, g: DirectedGraph, W_pool: Tensor, b_pool: Tensor,
               W: Tensor, b: Tensor) -> Tensor:
    """Max-pool aggregator over the full neighborhood, then ``ReLU([x ; agg] W + b)``."""
    _check_input(x, g, W_pool)
    pooled = ad.relu(ad.add_bias(ad.matmul(x, W_pool), b_pool))
    agg = ad.neighbor_max(g.sym_csr, pooled)
    return ad.relu(ad.add_bias(ad.matmul(ad.concat_cols([x, agg]), W), b))


def gin_layer(x: Tensor, g: DirectedGraph, mlp: tuple[Tensor, Tensor, Tensor, Tensor],
              epsilon: float = 0.0) -> Tensor:
    """``MLP((1 + eps) x_v + sum of neighbor x_u)`` with a Linear-ReLU-Linear MLP."""
    W1, b1, W2, b2 = mlp
    _check_input(x, g, W1)
    self_term = x if epsilon == 0.0 else ad.scale(x, 1.0 + epsilon)
    h = ad.add(self_term, ad.sparse_apply(g.sym_csr, x, mode="sum"))
    h = ad.relu(ad.add_bias(ad.matmul(h, W1), b1))
    return ad.add_bias(ad.matmul(h, W2), b2)


def jk_combine(layers: list[Tensor], W_jk: Tensor, b_jk: Tensor) -> Tensor:
    """Concatenate per-layer embeddings and apply one linear map (no activation)."""
    if len({t.shape for t in layers}) != 1:
        raise ShapeError("jumping-knowledge inputs must share one shape")
    cat = ad.concat_cols(layers)
    if cat.shape[1] != W_jk.shape[0]:
        raise ShapeError(f"concat width {cat.shape[1]} does not match W_jk {W_jk.shape}")
    return ad.add_bias(ad.matmul(cat, W_jk), b_jk)


def readout(h_final: Tensor, segment_ids, num_graphs: int) -> Tensor:
    return ad.segment_max(h_final, segment_ids, num_graphs)


def head_forward(r: Tensor, W1: Tensor, b1: Tensor, W2: Tensor, b2: Tensor) -> Tensor:
    hidden = ad.relu(ad.add_bias(ad.matmul(r, W1), b1))
    return ad.add_bias(ad.matmul(hidden, W2), b2)


def node_layers(x: Tensor, g: DirectedGraph, w: Mapping[str, Tensor], cfg: ModelConfig) -> list[Tensor]:
    """Outputs ``H_1..H_L`` of the message-passing stack."""
    outs = []
    h = x
    for i in range(cfg.num_layers):
        p = f"layer{i}."
        if cfg.layer_kind == "gcn":
            h = gcn_layer(h, g, w[p + "W0"], w[p + "W1"], w[p + "b"])
        elif cfg.layer_kind == "sage":
            h = sage_layer(h, g, w[p + "W_pool"], w[p + "b_pool"], w[p + "W"], w[p + "b"])
        else:
            mlp = (w[p + "W1"], w[p + "b1"], w[p + "W2"], w[p + "b2"])
            h = gin_layer(h, g, mlp, cfg.gin_epsilon)
        outs.append(h)
    return outs


def model_forward(batch: GraphBatch, features, params: ModelParams | Mapping[str, Tensor],
                  config: ModelConfig | None = None) -> tuple[Tensor, Tensor]:
    """Full forward pass. Returns ``(logits [B x C], graph embeddings [B x hidden])``.

    ``params`` is either a :class:`ModelParams` or a name -> Tensor mapping
    (the latter is what training uses so gradients land on the tensors).
    """
    if isinstance(params, ModelParams):
        if config is not None and config != params.config:
            raise ShapeError("config does not match the parameters' config")
        params.check()
        config = params.config
        w = as_tensors(params)
    else:
        if config is None:
            raise ValueError("config is required with a raw tensor mapping")
        w = dict(params)
        expected = parameter_shapes(config)
        for name, shape in expected.items():
            if name not in w or w[name].shape != shape:
                raise ShapeError(f"parameter {name!r} missing or not of shape {shape}")
    x = features if isinstance(features, Tensor) else Tensor(features)
    if x.shape[1] != config.input_dim:
        raise ShapeError(f"features have {x.shape[1]} columns, model expects {config.input_dim}")
    layers = node_layers(x, batch.merged, w, config)
    h_final = jk_combine(layers, w["jk.W"], w["jk.b"])
    emb = readout(h_final, batch.segment_ids, batch.graph_count)
    logits = head_forward(emb, w["head.W1"], w["head.b1"], w["head.W2"], w["head.b2"])
    return logits, emb
