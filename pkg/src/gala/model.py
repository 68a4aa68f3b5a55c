"""The GALA network: smoothing encoder, sharpening decoder, manual backprop.

Layer ``m`` computes ``H[m+1] = act(P_m @ H[m] @ W[m])`` where ``P_m`` is a
fixed sparse propagation operator. The first half of the layers use the
smoothing operator, the second half a sharpening one.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph_ops import OPERATOR_KINDS, Graph, PropagationOperator, build_operator
from .linalg import spmm

ACTIVATIONS = ("relu", "identity")
CHECKPOINT_FORMAT = "gala-checkpoint"
CHECKPOINT_VERSION = 1


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    operator_kind: str = "smoothing"
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ModelError(f"layer dims must be positive, got {self.in_dim}->{self.out_dim}")
        if self.operator_kind not in OPERATOR_KINDS:
            raise ModelError(f"unknown operator kind {self.operator_kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ModelError(f"unknown activation {self.activation!r}")


@dataclass
class ModelParams:
    weights: list[np.ndarray]

    def copy(self) -> "ModelParams":
        return ModelParams([w.copy() for w in self.weights])

    def __len__(self) -> int:
        return len(self.weights)


@dataclass
class ForwardTrace:
    """Everything the backward pass needs.

    ``activations[0]`` is the input, ``activations[-1]`` the reconstruction.
    ``propagated[m]`` caches ``P_m @ activations[m]``.
    """

    activations: list[np.ndarray]
    pre_activations: list[np.ndarray]
    propagated: list[np.ndarray]

    @property
    def latent(self) -> np.ndarray:
        return self.activations[len(self.pre_activations) // 2]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


@dataclass(frozen=True)
class ModelConfig:
    """Architecture knobs. ``hidden_dims`` lists encoder widths ending at the latent width;
    the decoder mirrors them back to the input width."""

    hidden_dims: tuple[int, ...] = (256, 128)
    decoder: str = "stable_sharpening"
    hidden_activation: str = "relu"
    latent_activation: str = "relu"
    final_activation: str = "identity"


def check_chain(specs: Sequence[LayerSpec]) -> None:
    for m in range(1, len(specs)):
        if specs[m - 1].out_dim != specs[m].in_dim:
            raise ModelError(
                f"layer {m - 1} outputs {specs[m - 1].out_dim} columns"
                f" but layer {m} expects {specs[m].in_dim}"
            )


def build_specs(in_dim: int, config: ModelConfig = ModelConfig()) -> list[LayerSpec]:
    """Symmetric GALA layer stack: ``M = 2 * len(hidden_dims)`` layers."""
    if not config.hidden_dims:
        raise ModelError("need at least one hidden dimension")
    if config.decoder not in OPERATOR_KINDS:
        raise ModelError(f"unknown decoder operator {config.decoder!r}")
    dims = [in_dim, *config.hidden_dims]
    half = len(config.hidden_dims)
    specs = []
    for m in range(half):
        act = config.latent_activation if m == half - 1 else config.hidden_activation
        specs.append(LayerSpec(dims[m], dims[m + 1], "smoothing", act))
    back = dims[::-1]
    for m in range(half):
        act = config.final_activation if m == half - 1 else config.hidden_activation
        specs.append(LayerSpec(back[m], back[m + 1], config.decoder, act))
    return specs


def build_operators(graph: Graph, specs: Sequence[LayerSpec]) -> list[PropagationOperator]:
    """One operator per layer; layers of the same kind share a single instance."""
    cache: dict[str, PropagationOperator] = {}
    out = []
    for spec in specs:
        if spec.operator_kind not in cache:
            cache[spec.operator_kind] = build_operator(graph, spec.operator_kind)
        out.append(cache[spec.operator_kind])
    return out


def init_params(specs: Sequence[LayerSpec], seed: int | np.random.Generator) -> ModelParams:
    """Glorot-uniform weights, ``U(-r, r)`` with ``r = sqrt(6 / (fan_in + fan_out))``."""
    check_chain(specs)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights = []
    for spec in specs:
        r = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        weights.append(rng.uniform(-r, r, size=(spec.in_dim, spec.out_dim)))
    return ModelParams(weights)


def relu_prime(pre) -> np.ndarray:
    return (np.asarray(pre) > 0).astype(np.float64)


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == "relu" else z


def _check_layers(params: ModelParams, operators, specs) -> None:
    if not (len(params.weights) == len(operators) == len(specs)):
        raise ModelError(
            f"got {len(params.weights)} weights, {len(operators)} operators and {len(specs)} specs"
        )


def forward(x, params: ModelParams, operators: Sequence[PropagationOperator], specs: Sequence[LayerSpec]) -> ForwardTrace:
    _check_layers(params, operators, specs)
    h = np.asarray(x, dtype=np.float64)
    acts, pres, props = [h], [], []
    for m, (w, op, spec) in enumerate(zip(params.weights, operators, specs)):
        if h.shape[1] != w.shape[0]:
            raise ModelError(f"layer {m}: input has {h.shape[1]} columns, weights expect {w.shape[0]}")
        if op.n != h.shape[0]:
            raise ModelError(f"layer {m}: operator is {op.n}x{op.n} but input has {h.shape[0]} rows")
        ph = spmm(op.matrix, h)
        z = ph @ w
        h = _activate(z, spec.activation)
        props.append(ph)
        pres.append(z)
        acts.append(h)
    return ForwardTrace(acts, pres, props)


def backward(
    trace: ForwardTrace,
    output_grad,
    params: ModelParams,
    operators: Sequence[PropagationOperator],
    specs: Sequence[LayerSpec],
    latent_grad=None,
) -> tuple[list[np.ndarray], np.ndarray]:
    """Reverse pass.

    ``latent_grad`` (optional) is added to the gradient arriving at the
    latent activations ``H[M/2]``; this is how latent-space objectives enter.
    Returns the weight gradients and the total gradient at the latent.
    """
    _check_layers(params, operators, specs)
    n_layers = len(specs)
    if len(trace.pre_activations) != n_layers:
        raise ModelError(f"trace has {len(trace.pre_activations)} layers, model has {n_layers}")
    delta = np.asarray(output_grad, dtype=np.float64)
    if delta.shape != trace.output.shape:
        raise ModelError(f"output gradient shape {delta.shape} != output shape {trace.output.shape}")
    half = n_layers // 2
    grads: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    latent_total = None
    for m in range(n_layers - 1, -1, -1):
        if m + 1 == half:
            if latent_grad is not None:
                delta = delta + latent_grad
            latent_total = delta
        if specs[m].activation == "relu":
            delta = delta * relu_prime(trace.pre_activations[m])
        grads[m] = trace.propagated[m].T @ delta
        if m > 0 or half == 0:
            delta = spmm(operators[m].matrix.T, delta @ params.weights[m].T)
    if half == 0:
        # single-layer model: the "latent" is the input itself
        latent_total = delta if latent_grad is None else delta + latent_grad
    return grads, latent_total


def save_checkpoint(path, specs: Sequence[LayerSpec], params: ModelParams) -> None:
    """JSON checkpoint; weights row-major with shape headers, floats written with repr precision."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layers": [
            {**asdict(spec), "shape": list(w.shape), "weights": w.ravel().tolist()}
            for spec, w in zip(specs, params.weights)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_checkpoint(path) -> tuple[list[LayerSpec], ModelParams]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ModelError(f"{path} is not a GALA checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ModelError(f"unsupported checkpoint version {doc.get('version')}")
    specs, weights = [], []
    for i, layer in enumerate(doc["layers"]):
        spec = LayerSpec(layer["in_dim"], layer["out_dim"], layer["operator_kind"], layer["activation"])
        shape = tuple(layer["shape"])
        if shape != (spec.in_dim, spec.out_dim):
            raise ModelError(f"layer {i}: weight shape {shape} disagrees with dims")
        w = np.asarray(layer["weights"], dtype=np.float64)
        if w.size != shape[0] * shape[1]:
            raise ModelError(f"layer {i}: expected {shape[0] * shape[1]} weights, found {w.size}")
        specs.append(spec)
        weights.append(w.reshape(shape))
    check_chain(specs)
    return specs, ModelParams(weights)
