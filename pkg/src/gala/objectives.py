"""Training objectives: reconstruction, LSR subspace cost and GAE-style link cost.

The subspace functions take the latent in ``k x n`` orientation (one column
per node). The network produces ``n x k`` activations, so ``total_loss``
transposes at the boundary.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .linalg import frobenius_sq, small_inverse
from .model import ForwardTrace

LOSS_MODES = ("recon", "recon+subspace", "recon+link")


@dataclass(frozen=True)
class SubspaceConfig:
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0):
            raise ValueError(f"subspace weights must be positive (lam={self.lam}, mu={self.mu})")


@dataclass(frozen=True)
class LinkConfig:
    gamma: float
    positive_edges: np.ndarray = field(repr=False)
    negative_edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        pos = np.asarray(self.positive_edges, dtype=np.intp).reshape(-1, 2)
        neg = np.asarray(self.negative_edges, dtype=np.intp).reshape(-1, 2)
        if len(pos) == 0 or len(neg) == 0:
            raise ValueError("link cost needs nonempty positive and negative edge lists")
        as_set = lambda e: {(min(i, j), max(i, j)) for i, j in e.tolist()}
        if as_set(pos) & as_set(neg):
            raise ValueError("positive and negative edge lists overlap")
        object.__setattr__(self, "positive_edges", pos)
        object.__setattr__(self, "negative_edges", neg)


def recon_loss(x, x_bar) -> tuple[float, np.ndarray]:
    """``0.5 * ||X - X_bar||_F^2`` and its gradient with respect to ``X_bar``."""
    x = np.asarray(x, dtype=np.float64)
    x_bar = np.asarray(x_bar, dtype=np.float64)
    if x.shape != x_bar.shape:
        raise ValueError(f"shape mismatch: X {x.shape} vs X_bar {x_bar.shape}")
    diff = x_bar - x
    return 0.5 * frobenius_sq(diff), diff


def optimal_affinity(h, cfg: SubspaceConfig) -> np.ndarray:
    """Closed-form LSR self-expression ``(H^T H + (mu/lam) I_n)^-1 H^T H`` for a ``k x n`` latent.

    This is the explicit ``n x n`` path; training never calls it.
    """
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[1]
    gram = h.T @ h
    a = np.linalg.solve(gram + (cfg.mu / cfg.lam) * np.eye(n), gram)
    return 0.5 * (a + a.T)


def lsr_cost_explicit(h, a, cfg: SubspaceConfig) -> float:
    """``(lam/2) ||H - H A||_F^2 + (mu/2) ||A||_F^2`` evaluated directly."""
    h = np.asarray(h, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    n = h.shape[1]
    if a.shape != (n, n):
        raise ValueError(f"affinity must be {n}x{n}, got {a.shape}")
    return 0.5 * cfg.lam * frobenius_sq(h - h @ a) + 0.5 * cfg.mu * frobenius_sq(a)


def subspace_cost(h, cfg: SubspaceConfig) -> tuple[float, np.ndarray]:
    """LSR cost minimized over the affinity, using only a ``k x k`` inverse.

    value = (mu*lam/2) tr((mu I_k + lam H H^T)^-1 H H^T)
    grad  = mu^2 lam (mu I_k + lam H H^T)^-2 H
    """
    h = np.asarray(h, dtype=np.float64)
    k, n = h.shape
    if k > n:
        warnings.warn(f"latent dimension {k} exceeds node count {n}; no O(k^3) saving", stacklevel=2)
    hht = h @ h.T
    m_inv = small_inverse(cfg.mu * np.eye(k) + cfg.lam * hht)
    value = 0.5 * cfg.mu * cfg.lam * float(np.sum(m_inv * hht))
    grad = (cfg.mu**2 * cfg.lam) * (m_inv @ (m_inv @ h))
    return value, grad


def _pair_logits(h: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", h[pairs[:, 0]], h[pairs[:, 1]])


def _check_pairs(pairs: np.ndarray, n: int) -> None:
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise ValueError(f"edge index out of range for {n} nodes")


def link_loss(h, cfg: LinkConfig) -> tuple[float, np.ndarray]:
    """``gamma`` times mean binary cross-entropy of ``sigmoid(h_i . h_j)`` over the sampled pairs.

    ``h`` is ``n x k``. Targets are 1 on positive pairs and 0 on negative pairs.
    """
    h = np.asarray(h, dtype=np.float64)
    pos, neg = cfg.positive_edges, cfg.negative_edges
    _check_pairs(pos, h.shape[0])
    _check_pairs(neg, h.shape[0])
    pairs = np.concatenate([pos, neg])
    target = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    z = _pair_logits(h, pairs)
    # BCE(z, t) = softplus(z) - t z, written to stay finite for large |z|
    value = cfg.gamma * float(np.mean(np.logaddexp(0.0, z) - target * z))
    dz = cfg.gamma * (_sigmoid(z) - target) / len(pairs)
    n = h.shape[0]
    # scatter dz into a symmetric sparse matrix S so that grad = S @ h
    s = sp.coo_matrix(
        (np.concatenate([dz, dz]), (np.concatenate([pairs[:, 0], pairs[:, 1]]), np.concatenate([pairs[:, 1], pairs[:, 0]]))),
        shape=(n, n),
    ).tocsr()
    return value, np.asarray(s @ h)


def link_loss_dense(h, target, gamma: float) -> tuple[float, np.ndarray]:
    """Dense variant over every ordered pair ``(i, j)`` of ``sigmoid(H H^T)`` against ``target``.

    Quadratic in ``n``; meant for small graphs and cross-checks.
    """
    h = np.asarray(h, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    n = h.shape[0]
    if t.shape != (n, n):
        raise ValueError(f"target must be {n}x{n}, got {t.shape}")
    z = h @ h.T
    value = gamma * float(np.mean(np.logaddexp(0.0, z) - t * z))
    dz = gamma * (_sigmoid(z) - t) / (n * n)
    return value, (dz + dz.T) @ h


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid(z) -> np.ndarray:
    return _sigmoid(np.asarray(z, dtype=np.float64))


def edge_scores(h, pairs) -> np.ndarray:
    """Predicted link probabilities ``sigmoid(h_i . h_j)``."""
    h = np.asarray(h, dtype=np.float64)
    pairs = np.asarray(pairs, dtype=np.intp).reshape(-1, 2)
    return _sigmoid(_pair_logits(h, pairs))


def total_loss(
    trace: ForwardTrace,
    mode: str = "recon",
    subspace: SubspaceConfig | None = None,
    link: LinkConfig | None = None,
) -> tuple[float, np.ndarray, np.ndarray | None]:
    """Reconstruction on the output plus the mode's latent term.

    Returns ``(value, grad_output, grad_latent)``; ``grad_latent`` is None for
    plain reconstruction and is fed to ``model.backward`` otherwise.
    """
    value, grad_out = recon_loss(trace.activations[0], trace.output)
    if mode == "recon":
        return value, grad_out, None
    z = trace.latent
    if mode == "recon+subspace":
        if subspace is None:
            raise ValueError("mode 'recon+subspace' needs a SubspaceConfig")
        extra, g = subspace_cost(z.T, subspace)
        return value + extra, grad_out, g.T
    if mode == "recon+link":
        if link is None:
            raise ValueError("mode 'recon+link' needs a LinkConfig")
        extra, g = link_loss(z, link)
        return value + extra, grad_out, g
    raise ValueError(f"unknown loss mode {mode!r}; expected one of {LOSS_MODES}")


__all__ = [
    "LOSS_MODES",
    "LinkConfig",
    "SubspaceConfig",
    "edge_scores",
    "link_loss",
    "link_loss_dense",
    "lsr_cost_explicit",
    "optimal_affinity",
    "recon_loss",
    "sigmoid",
    "subspace_cost",
    "total_loss",
]
