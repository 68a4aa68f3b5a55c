"""Evaluation: spectral clustering, clustering metrics, edge splits and link metrics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.metrics import (
    adjusted_rand_score,
    average_precision_score,
    normalized_mutual_info_score,
    roc_auc_score,
)

from .graph_ops import Graph, degree_vector, knn_graph
from .linalg import sym_eig
from .objectives import SubspaceConfig, optimal_affinity
from .seeding import substream, subseed


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    k: int
    inertia: float | None = None
    centroids: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if self.k < 1:
            raise EvaluationError(f"cluster count must be >= 1, got {self.k}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise EvaluationError("cluster labels must lie in [0, k)")
        object.__setattr__(self, "labels", labels)


def kmeans(points, k: int, seed: int = 0, restarts: int = 10) -> ClusterAssignment:
    """Lloyd's k-means with k-means++ seeding; the restart with the lowest inertia wins."""
    x = np.asarray(points, dtype=np.float64)
    if k < 1 or k > x.shape[0]:
        raise EvaluationError(f"k must satisfy 1 <= k <= n (k={k}, n={x.shape[0]})")
    km = KMeans(n_clusters=k, init="k-means++", n_init=restarts, max_iter=300, tol=1e-8,
                algorithm="lloyd", random_state=seed)
    labels = km.fit_predict(x)
    return ClusterAssignment(labels, k, float(km.inertia_), km.cluster_centers_)


def spectral_embedding(g: Graph, k: int, eig_method: str = "lapack") -> np.ndarray:
    """Rows of the top-``k`` eigenvectors of ``D^-1/2 A D^-1/2``, normalized to unit length."""
    d = degree_vector(g)
    inv_sqrt = np.zeros_like(d)
    nz = d > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    norm_aff = (sp.diags(inv_sqrt) @ g.affinity @ sp.diags(inv_sqrt)).toarray()
    u = sym_eig(norm_aff, method=eig_method).eigenvectors[:, :k]
    lengths = np.linalg.norm(u, axis=1, keepdims=True)
    return np.divide(u, lengths, out=np.zeros_like(u), where=lengths > 0)


def spectral_clustering(g: Graph, k: int, seed: int = 0, restarts: int = 10, eig_method: str = "lapack") -> ClusterAssignment:
    """Ng-Jordan-Weiss spectral clustering."""
    if k < 1 or k > g.n:
        raise EvaluationError(f"k must satisfy 1 <= k <= n (k={k}, n={g.n})")
    return kmeans(spectral_embedding(g, k, eig_method), k, seed=seed, restarts=restarts)


def _labels(a) -> np.ndarray:
    return np.asarray(a.labels if isinstance(a, ClusterAssignment) else a, dtype=np.int64)


def _pair(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t, p = _labels(truth), _labels(pred)
    if t.shape != p.shape:
        raise EvaluationError(f"label arrays differ in length: {t.size} vs {p.size}")
    return t, p


def accuracy(truth, pred) -> float:
    """Best one-to-one matching of clusters to classes (Hungarian), as a fraction of nodes."""
    t, p = _pair(truth, pred)
    if t.size == 0:
        return 1.0
    _, t_idx = np.unique(t, return_inverse=True)
    _, p_idx = np.unique(p, return_inverse=True)
    table = np.zeros((p_idx.max() + 1, t_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (p_idx, t_idx), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum()) / t.size


def nmi(truth, pred) -> float:
    """Mutual information normalized by the arithmetic mean of the two entropies."""
    t, p = _pair(truth, pred)
    return float(normalized_mutual_info_score(t, p, average_method="arithmetic"))


def ari(truth, pred) -> float:
    t, p = _pair(truth, pred)
    return float(adjusted_rand_score(t, p))


def auc_ap(scores_pos, scores_neg) -> tuple[float, float]:
    pos = np.asarray(scores_pos, dtype=np.float64).ravel()
    neg = np.asarray(scores_neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise EvaluationError("AUC/AP need at least one positive and one negative score")
    y = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    s = np.concatenate([pos, neg])
    return float(roc_auc_score(y, s)), float(average_precision_score(y, s))


@dataclass
class LinkSplit:
    train_graph: Graph
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    val_frac: float
    test_frac: float


def _non_edges(g: Graph) -> np.ndarray:
    iu, ju = np.triu_indices(g.n, k=1)
    present = np.asarray(g.affinity[iu, ju]).ravel() != 0
    return np.stack([iu[~present], ju[~present]], axis=1)


def sample_non_edges(g: Graph, count: int, rng: np.random.Generator, exclude: Graph | None = None) -> np.ndarray:
    """``count`` distinct node pairs ``i < j`` that are edges of neither ``g`` nor ``exclude``."""
    cand = _non_edges(g)
    if exclude is not None and len(cand):
        cand = cand[np.asarray(exclude.affinity[cand[:, 0], cand[:, 1]]).ravel() == 0]
    if count > len(cand):
        raise EvaluationError(f"need {count} non-edges but the graph only has {len(cand)}")
    pick = rng.choice(len(cand), size=count, replace=False)
    return cand[np.sort(pick)]


def split_edges(g: Graph, val_frac: float = 0.05, test_frac: float = 0.10, seed: int = 0) -> LinkSplit:
    """Hold out edges for validation/testing and pair each split with as many true non-edges."""
    if not (0 < val_frac < 1 and 0 < test_frac < 1 and val_frac + test_frac < 1):
        raise EvaluationError(f"bad split fractions val={val_frac}, test={test_frac}")
    rng = substream(seed, "split")
    edges = g.edges()
    n_val = int(np.floor(len(edges) * val_frac))
    n_test = int(np.floor(len(edges) * test_frac))
    if n_val < 1 or n_test < 1:
        raise EvaluationError(f"{len(edges)} edges are too few for val={val_frac}, test={test_frac}")
    perm = rng.permutation(len(edges))
    val_pos = edges[np.sort(perm[:n_val])]
    test_pos = edges[np.sort(perm[n_val:n_val + n_test])]
    train_idx = np.sort(perm[n_val + n_test:])

    negatives = sample_non_edges(g, n_val + n_test, rng)
    order = rng.permutation(len(negatives))
    val_neg = negatives[np.sort(order[:n_val])]
    test_neg = negatives[np.sort(order[n_val:])]

    a = g.affinity
    kept = edges[train_idx]
    w = np.asarray(a[kept[:, 0], kept[:, 1]]).ravel()
    train = Graph.from_edges(g.n, kept, w)
    return LinkSplit(train, val_pos, val_neg, test_pos, test_neg, val_frac, test_frac)


@dataclass
class MetricsReport:
    metrics: dict[str, float]
    config: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return {"metrics": self.metrics, "config": self.config, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def subspace_affinity_graph(h, subspace: SubspaceConfig) -> Graph:
    """``(|A*| + |A*|^T) / 2`` of the closed-form LSR affinity, diagonal dropped. ``h`` is ``n x k``."""
    a = np.abs(optimal_affinity(np.asarray(h).T, subspace))
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 0.0)
    return Graph.from_dense(a)


def clustering_graph(h, k_nn: int = 15, affinity: str = "knn", subspace: SubspaceConfig | None = None) -> Graph:
    if affinity == "knn":
        return knn_graph(h, k_nn)
    if affinity == "subspace":
        return subspace_affinity_graph(h, subspace or SubspaceConfig())
    raise EvaluationError(f"unknown clustering affinity {affinity!r}")


def evaluate_node_clustering(
    h,
    truth,
    k_nn: int = 15,
    k_clusters: int | None = None,
    seed: int = 0,
    affinity: str = "knn",
    subspace: SubspaceConfig | None = None,
) -> MetricsReport:
    """Latent -> affinity graph -> spectral clustering -> ACC / NMI / ARI."""
    truth = np.asarray(truth, dtype=np.int64)
    h = np.asarray(h, dtype=np.float64)
    if truth.shape != (h.shape[0],):
        raise EvaluationError(f"need {h.shape[0]} labels, got {truth.size}")
    k = k_clusters or int(np.unique(truth).size)
    g = clustering_graph(h, k_nn, affinity, subspace)
    pred = spectral_clustering(g, k, seed=subseed(seed, "clustering"))
    metrics = {"acc": accuracy(truth, pred), "nmi": nmi(truth, pred), "ari": ari(truth, pred)}
    config = {"k_nn": k_nn, "k_clusters": k, "affinity": affinity}
    return MetricsReport(metrics, config, seed)


def repeated_clustering(
    h,
    truth,
    runs: int = 50,
    seed: int = 0,
    k_nn: int = 15,
    k_clusters: int | None = None,
    affinity: str = "knn",
    subspace: SubspaceConfig | None = None,
) -> MetricsReport:
    """Mean and standard deviation of ACC/NMI/ARI over ``runs`` re-seeded k-means runs.

    The affinity graph and spectral embedding are deterministic, so they are
    computed once; only the k-means seeding changes between runs.
    """
    truth = np.asarray(truth, dtype=np.int64)
    h = np.asarray(h, dtype=np.float64)
    if truth.shape != (h.shape[0],):
        raise EvaluationError(f"need {h.shape[0]} labels, got {truth.size}")
    k = k_clusters or int(np.unique(truth).size)
    emb = spectral_embedding(clustering_graph(h, k_nn, affinity, subspace), k)
    scores = {"acc": [], "nmi": [], "ari": []}
    for r in range(runs):
        pred = kmeans(emb, k, seed=subseed(seed, "clustering", r))
        scores["acc"].append(accuracy(truth, pred))
        scores["nmi"].append(nmi(truth, pred))
        scores["ari"].append(ari(truth, pred))
    metrics = {}
    for name, vals in scores.items():
        metrics[f"{name}_mean"] = float(np.mean(vals))
        metrics[f"{name}_std"] = float(np.std(vals))
    config = {"k_nn": k_nn, "k_clusters": k, "affinity": affinity, "runs": runs}
    return MetricsReport(metrics, config, seed)
