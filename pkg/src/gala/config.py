"""Run configuration: one nested JSON document, overridable by dotted keys.

Every section is a dataclass; unknown keys are rejected and every value is
checked before any computation or file output happens.
"""
from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .graph_ops import OPERATOR_KINDS
from .model import ACTIVATIONS


class ConfigError(ValueError):
    pass


@dataclass
class SynthSection:
    block_sizes: list[int] = field(default_factory=lambda: [40, 40, 40])
    p_in: float = 0.3
    p_out: float = 0.02
    noise: float = 0.3


@dataclass
class DataSection:
    features: Optional[str] = None
    edges: Optional[str] = None
    labels: Optional[str] = None
    synth: Optional[SynthSection] = None


@dataclass
class ModelSection:
    hidden_dims: list[int] = field(default_factory=lambda: [256, 128])
    decoder: str = "stable_sharpening"
    hidden_activation: str = "relu"
    latent_activation: str = "relu"
    final_activation: str = "identity"


@dataclass
class TrainSection:
    learning_rate: float = 1e-4
    max_epochs: int = 2000
    convergence_window: int = 10
    convergence_rel_tol: Optional[float] = 1e-6
    # "recon" or "recon+subspace" (pre-train, then fine-tune)
    mode: str = "recon"
    # k for the encoder graph when the dataset has features only
    k_nn_graph: int = 15


@dataclass
class FinetuneSection:
    learning_rate: float = 1e-6
    epochs: int = 50


@dataclass
class SubspaceSection:
    lam: float = 1.0
    mu: float = 1.0


@dataclass
class LinkSection:
    gamma: float = 1.0
    val_frac: float = 0.05
    test_frac: float = 0.10
    runs: int = 10
    latent_activation: str = "identity"


@dataclass
class EvalSection:
    k_nn: int = 15
    k_clusters: Optional[int] = None
    runs: int = 50
    # "knn" on the latent, or "subspace" for the closed-form LSR affinity
    affinity: str = "knn"


@dataclass
class AblateSection:
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    decoders: list[str] = field(default_factory=lambda: list(OPERATOR_KINDS))
    modes: list[str] = field(default_factory=lambda: ["recon", "recon+subspace"])


@dataclass
class RunConfig:
    seed: int = 0
    out: str = "gala_out"
    data: DataSection = field(default_factory=DataSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    finetune: FinetuneSection = field(default_factory=FinetuneSection)
    subspace: SubspaceSection = field(default_factory=SubspaceSection)
    link: LinkSection = field(default_factory=LinkSection)
    eval: EvalSection = field(default_factory=EvalSection)
    ablate: AblateSection = field(default_factory=AblateSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _unwrap_optional(tp):
    if typing.get_origin(tp) is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return args[0], True
    return tp, False


def _coerce(value: Any, tp, where: str):
    tp, optional = _unwrap_optional(tp)
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{where} may not be null")
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where} must be an object")
        return _build(tp, value, where)
    origin = typing.get_origin(tp)
    if origin is list:
        (item,) = typing.get_args(tp)
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        return [_coerce(v, item, f"{where}[{i}]") for i, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    raise ConfigError(f"{where}: unsupported type {tp}")


def _build(cls, data: dict, where: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    kwargs = {k: _coerce(v, hints[k], f"{where}.{k}" if where else k) for k, v in data.items()}
    return cls(**kwargs)


def _set_dotted(doc: dict, dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot set {dotted}: {k} is not a section")
        node = nxt
    node[keys[-1]] = value


def parse_override_value(text: str) -> Any:
    """JSON literal if it parses (numbers, lists, null, true/false), otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(path=None, overrides: dict[str, Any] | None = None) -> RunConfig:
    doc: dict = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
    for key, value in (overrides or {}).items():
        _set_dotted(doc, key, value)
    cfg = _build(RunConfig, doc)
    validate(cfg)
    return cfg


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def validate(cfg: RunConfig, command: str | None = None) -> None:
    """Check every section against the preconditions of the modules that consume it."""
    d = cfg.data
    if d.synth is not None:
        s = d.synth
        _check(len(s.block_sizes) >= 1 and min(s.block_sizes) >= 1, "data.synth.block_sizes must be positive")
        _check(0 <= s.p_in <= 1 and 0 <= s.p_out <= 1, "data.synth probabilities must lie in [0, 1]")
        _check(s.noise >= 0, "data.synth.noise must be nonnegative")
        _check(d.features is None and d.edges is None and d.labels is None,
               "data.synth cannot be combined with data file paths")
    elif command not in (None, "radius"):
        _check(d.features is not None, "data.features (or data.synth) is required")
    for name in ("features", "edges", "labels"):
        p = getattr(d, name)
        if p is not None:
            _check(Path(p).is_file(), f"data.{name}: file not found: {p}")

    m = cfg.model
    _check(len(m.hidden_dims) >= 1 and min(m.hidden_dims) >= 1, "model.hidden_dims must be positive integers")
    _check(m.decoder in OPERATOR_KINDS, f"model.decoder must be one of {OPERATOR_KINDS}")
    for name in ("hidden_activation", "latent_activation", "final_activation"):
        _check(getattr(m, name) in ACTIVATIONS, f"model.{name} must be one of {ACTIVATIONS}")

    t = cfg.train
    _check(t.learning_rate > 0, "train.learning_rate must be positive")
    _check(t.max_epochs >= 1, "train.max_epochs must be >= 1")
    _check(t.convergence_window >= 2, "train.convergence_window must be >= 2")
    _check(t.convergence_rel_tol is None or t.convergence_rel_tol > 0, "train.convergence_rel_tol must be positive")
    _check(t.mode in ("recon", "recon+subspace"), "train.mode must be 'recon' or 'recon+subspace'")
    _check(t.k_nn_graph >= 1, "train.k_nn_graph must be >= 1")

    _check(cfg.finetune.learning_rate > 0, "finetune.learning_rate must be positive")
    _check(cfg.finetune.epochs >= 1, "finetune.epochs must be >= 1")
    _check(cfg.subspace.lam > 0, "subspace.lam must be positive")
    _check(cfg.subspace.mu > 0, "subspace.mu must be positive")

    lk = cfg.link
    _check(lk.gamma >= 0, "link.gamma must be nonnegative")
    _check(0 < lk.val_frac < 1 and 0 < lk.test_frac < 1 and lk.val_frac + lk.test_frac < 1,
           "link.val_frac and link.test_frac must lie in (0, 1) and sum below 1")
    _check(lk.runs >= 1, "link.runs must be >= 1")
    _check(lk.latent_activation in ACTIVATIONS, f"link.latent_activation must be one of {ACTIVATIONS}")

    e = cfg.eval
    _check(e.k_nn >= 1, "eval.k_nn must be >= 1")
    _check(e.k_clusters is None or e.k_clusters >= 1, "eval.k_clusters must be >= 1")
    _check(e.runs >= 1, "eval.runs must be >= 1")
    _check(e.affinity in ("knn", "subspace"), "eval.affinity must be 'knn' or 'subspace'")

    a = cfg.ablate
    _check(len(a.seeds) >= 1, "ablate.seeds must be nonempty")
    _check(all(dk in OPERATOR_KINDS for dk in a.decoders), f"ablate.decoders must be drawn from {OPERATOR_KINDS}")
    _check(all(md in ("recon", "recon+subspace") for md in a.modes), "ablate.modes must be 'recon' or 'recon+subspace'")
