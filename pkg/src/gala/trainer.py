"""Full-batch Adam training: pre-training, subspace fine-tuning and link-prediction training.

Training functions take features and a graph but never labels.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .graph_ops import Graph
from .model import (
    LayerSpec,
    ModelConfig,
    ModelParams,
    build_operators,
    build_specs,
    backward,
    forward,
    init_params,
)
from .objectives import LOSS_MODES, LinkConfig, SubspaceConfig, total_loss
from .seeding import substream

log = logging.getLogger(__name__)


class NumericalError(FloatingPointError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    max_epochs: int = 2000
    convergence_window: int = 10
    # None disables the convergence stop (fixed-length runs)
    convergence_rel_tol: float | None = 1e-6
    mode: str = "recon"
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs must be nonnegative, got {self.max_epochs}")
        if self.convergence_window < 2:
            raise ValueError(f"convergence_window must be >= 2, got {self.convergence_window}")
        if self.mode not in LOSS_MODES:
            raise ValueError(f"unknown loss mode {self.mode!r}")


FINETUNE_DEFAULTS = TrainConfig(learning_rate=1e-6, max_epochs=50, convergence_rel_tol=None, mode="recon+subspace")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        return cls([np.zeros_like(w) for w in params.weights], [np.zeros_like(w) for w in params.weights])

    def copy(self) -> "AdamState":
        return replace(self, m=[a.copy() for a in self.m], v=[a.copy() for a in self.v])


def adam_step(params: ModelParams, grads: Sequence[np.ndarray], state: AdamState, lr: float) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    if len(grads) != len(params.weights) or len(state.m) != len(params.weights):
        raise ValueError("params, grads and Adam state disagree on the number of tensors")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_w, new_m, new_v = [], [], []
    for w, g, m, v in zip(params.weights, grads, state.m, state.v):
        if not (w.shape == g.shape == m.shape):
            raise ValueError(f"shape mismatch in Adam step: weight {w.shape}, grad {g.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_w.append(w - lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return ModelParams(new_w), replace(state, m=new_m, v=new_v, t=t)


@dataclass
class TrainReport:
    loss_history: list[float]
    epochs: int
    stop_reason: str
    params: ModelParams = field(repr=False)
    specs: list[LayerSpec] = field(repr=False)
    # largest Frobenius norm over all layer activations, per epoch
    activation_norms: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "stop_reason": self.stop_reason,
            "final_loss": self.loss_history[-1] if self.loss_history else None,
            "loss_history": self.loss_history,
        }


def _converged(history: list[float], window: int, tol: float) -> bool:
    if len(history) <= window:
        return False
    recent = np.asarray(history[-(window + 1):])
    prev = np.maximum(np.abs(recent[:-1]), np.finfo(float).tiny)
    return float(np.mean(np.abs(np.diff(recent)) / prev)) < tol


def train(
    features,
    graph: Graph,
    specs: Sequence[LayerSpec],
    params: ModelParams,
    cfg: TrainConfig,
    subspace: SubspaceConfig | None = None,
    link: LinkConfig | None = None,
    raise_on_nonfinite: bool = True,
) -> TrainReport:
    """Generic full-batch loop minimizing the loss selected by ``cfg.mode``.

    The loss is recorded before each update, so ``loss_history[0]`` is the
    loss at ``params``. With ``raise_on_nonfinite=False`` a blow-up ends the
    run with stop reason ``"nonfinite"`` instead of raising.
    """
    x = np.asarray(features, dtype=np.float64)
    specs = list(specs)
    operators = build_operators(graph, specs)
    state = AdamState.zeros_like(params)
    history: list[float] = []
    norms: list[float] = []
    stop = "max_epochs"
    for epoch in range(cfg.max_epochs):
        trace = forward(x, params, operators, specs)
        norms.append(max(float(np.linalg.norm(h)) for h in trace.activations))
        value, grad_out, grad_latent = total_loss(trace, cfg.mode, subspace, link)
        problem = None
        if not np.isfinite(value):
            problem = f"loss is {value} at epoch {epoch}"
        else:
            grads, _ = backward(trace, grad_out, params, operators, specs, latent_grad=grad_latent)
            bad = [m for m, g in enumerate(grads) if not np.all(np.isfinite(g))]
            if bad:
                problem = f"non-finite gradient in layer {bad[0]} at epoch {epoch}"
        if problem is not None:
            last = f"last finite epoch {epoch - 1} (loss {history[-1]:.6g})" if history else "no finite epoch"
            if raise_on_nonfinite:
                raise NumericalError(f"{problem}; {last}", history)
            log.warning("%s; %s", problem, last)
            stop = "nonfinite"
            break
        history.append(float(value))
        params, state = adam_step(params, grads, state, cfg.learning_rate)
        if cfg.convergence_rel_tol is not None and _converged(history, cfg.convergence_window, cfg.convergence_rel_tol):
            stop = "converged"
            break
    log.debug("training stopped after %d epochs (%s)", len(history), stop)
    return TrainReport(history, len(history), stop, params, specs, norms)


def pretrain(
    features,
    graph: Graph,
    model_config: ModelConfig = ModelConfig(),
    cfg: TrainConfig = TrainConfig(),
    params: ModelParams | None = None,
) -> TrainReport:
    """Minimize reconstruction only, from a seeded Glorot initialization unless ``params`` is given."""
    x = np.asarray(features, dtype=np.float64)
    specs = build_specs(x.shape[1], model_config)
    if params is None:
        params = init_params(specs, substream(cfg.seed, "init"))
    return train(x, graph, specs, params, replace(cfg, mode="recon"))


def finetune(
    params: ModelParams,
    specs: Sequence[LayerSpec],
    features,
    graph: Graph,
    subspace: SubspaceConfig = SubspaceConfig(),
    cfg: TrainConfig = FINETUNE_DEFAULTS,
) -> TrainReport:
    """Reconstruction + subspace cost, fresh Adam state; 50 epochs at lr 1e-6 by default."""
    return train(features, graph, specs, params, replace(cfg, mode="recon+subspace"), subspace=subspace)


def train_linkpred(
    features,
    train_graph: Graph,
    link: LinkConfig,
    model_config: ModelConfig = ModelConfig(),
    cfg: TrainConfig = TrainConfig(),
) -> TrainReport:
    """Reconstruction + link cost; operators come from ``train_graph`` only."""
    x = np.asarray(features, dtype=np.float64)
    specs = build_specs(x.shape[1], model_config)
    params = init_params(specs, substream(cfg.seed, "init"))
    return train(x, train_graph, specs, params, replace(cfg, mode="recon+link"), link=link)


def latent(features, graph: Graph, specs: Sequence[LayerSpec], params: ModelParams) -> np.ndarray:
    """Encoder output ``H[M/2]`` for trained parameters."""
    return forward(features, params, build_operators(graph, specs), specs).latent
