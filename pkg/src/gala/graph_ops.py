"""Graphs, Laplacians and the three propagation operators.

The smoothing operator is the renormalized GCN filter
``D~^-1/2 (A + I) D~^-1/2``. The naive sharpening operator is
``2I - D^-1/2 A D^-1/2`` (spectral radius up to 3). The stable sharpening
operator uses the signed graph ``A^ = 2I - A`` whose absolute-value degree is
``D + 2I``, giving ``D^^-1/2 A^ D^^-1/2`` with spectral radius at most 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .linalg import as_csr, sym_eig

OperatorKind = Literal["smoothing", "naive_sharpening", "stable_sharpening"]
OPERATOR_KINDS: tuple[str, ...] = ("smoothing", "naive_sharpening", "stable_sharpening")


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph: symmetric, nonnegative affinity with an empty diagonal."""

    n: int
    affinity: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        a = as_csr(self.affinity)
        a.eliminate_zeros()
        if a.shape != (self.n, self.n):
            raise GraphError(f"affinity shape {a.shape} does not match n={self.n}")
        if a.nnz:
            if not np.all(np.isfinite(a.data)):
                raise GraphError("affinity has non-finite weights")
            if a.data.min() < 0:
                raise GraphError("affinity weights must be nonnegative")
            if np.any(a.diagonal() != 0):
                raise GraphError("affinity must have a zero diagonal")
            if abs(a - a.T).max() > 1e-12 * max(1.0, a.data.max()):
                raise GraphError("affinity must be symmetric")
        object.__setattr__(self, "affinity", a)

    @classmethod
    def from_dense(cls, a) -> "Graph":
        a = np.asarray(a, dtype=np.float64)
        return cls(a.shape[0], sp.csr_matrix(a))

    @classmethod
    def from_edges(cls, n: int, edges, weights=None) -> "Graph":
        """Build from undirected ``(i, j)`` pairs; both directions are stored."""
        edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
        w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=np.float64)
        if len(edges) and (edges.min() < 0 or edges.max() >= n):
            raise GraphError(f"edge endpoint out of range for n={n}")
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        ww = np.concatenate([w, w])
        # duplicate entries collapse to their maximum weight, not their sum
        keys = rows * n + cols
        order = np.lexsort((-ww, keys))
        first = np.ones(len(order), dtype=bool)
        first[1:] = keys[order][1:] != keys[order][:-1]
        keep = order[first]
        return cls(n, sp.csr_matrix((ww[keep], (rows[keep], cols[keep])), shape=(n, n)))

    def edges(self) -> np.ndarray:
        """Upper-triangular edge list as an ``(m, 2)`` int array, row-major order."""
        upper = sp.triu(self.affinity, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.stack([upper.row[order], upper.col[order]], axis=1).astype(np.intp)

    @property
    def num_edges(self) -> int:
        return self.affinity.nnz // 2

    def dense(self) -> np.ndarray:
        return self.affinity.toarray()


@dataclass(frozen=True)
class PropagationOperator:
    kind: str
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def degree_vector(g: Graph) -> np.ndarray:
    return np.asarray(g.affinity.sum(axis=1)).ravel()


def _require_positive_degree(g: Graph, what: str) -> np.ndarray:
    d = degree_vector(g)
    bad = np.flatnonzero(d <= 0)
    if bad.size:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if bad.size > 20 else "")
        raise GraphError(f"{what} requires positive degrees; zero-degree nodes: {shown}")
    return d


def _scale(a: sp.spmatrix, left: np.ndarray, right: np.ndarray) -> sp.csr_matrix:
    return as_csr(sp.diags(left) @ a @ sp.diags(right))


def laplacian(g: Graph, flavor: str = "symmetric") -> sp.csr_matrix:
    """``D - A`` (unnormalized), ``I - D^-1/2 A D^-1/2`` (symmetric) or ``I - D^-1 A`` (random_walk)."""
    eye = sp.identity(g.n, format="csr")
    if flavor == "unnormalized":
        return as_csr(sp.diags(degree_vector(g)) - g.affinity)
    if flavor == "symmetric":
        d = _require_positive_degree(g, "symmetric Laplacian")
        inv_sqrt = 1.0 / np.sqrt(d)
        return as_csr(eye - _scale(g.affinity, inv_sqrt, inv_sqrt))
    if flavor == "random_walk":
        d = _require_positive_degree(g, "random-walk Laplacian")
        return as_csr(eye - sp.diags(1.0 / d) @ g.affinity)
    raise ValueError(f"unknown Laplacian flavor {flavor!r}")


def smoothing_operator(g: Graph) -> PropagationOperator:
    d_tilde = degree_vector(g) + 1.0
    inv_sqrt = 1.0 / np.sqrt(d_tilde)
    a_tilde = g.affinity + sp.identity(g.n, format="csr")
    return PropagationOperator("smoothing", _scale(a_tilde, inv_sqrt, inv_sqrt))


def naive_sharpening_operator(g: Graph) -> PropagationOperator:
    d = _require_positive_degree(g, "naive sharpening")
    inv_sqrt = 1.0 / np.sqrt(d)
    m = 2.0 * sp.identity(g.n, format="csr") - _scale(g.affinity, inv_sqrt, inv_sqrt)
    return PropagationOperator("naive_sharpening", as_csr(m))


def stable_sharpening_operator(g: Graph) -> PropagationOperator:
    a_hat = 2.0 * sp.identity(g.n, format="csr") - g.affinity
    # signed-graph degree sums absolute weights: |2| + sum_j A_ij
    d_hat = np.asarray(abs(a_hat).sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(d_hat)
    return PropagationOperator("stable_sharpening", _scale(a_hat, inv_sqrt, inv_sqrt))


_BUILDERS = {
    "smoothing": smoothing_operator,
    "naive_sharpening": naive_sharpening_operator,
    "stable_sharpening": stable_sharpening_operator,
}


def build_operator(g: Graph, kind: str) -> PropagationOperator:
    try:
        return _BUILDERS[kind](g)
    except KeyError:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}") from None


def spectral_radius(p: PropagationOperator | sp.spmatrix | np.ndarray, method: str = "jacobi") -> float:
    m = p.matrix if isinstance(p, PropagationOperator) else p
    m = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=np.float64)
    if m.size == 0:
        raise GraphError("spectral radius of an empty operator is undefined")
    return float(np.max(np.abs(sym_eig(m, method=method).eigenvalues)))


def knn_graph(points, k: int) -> Graph:
    """Unit-weight k-nearest-neighbour graph, symmetrized by union.

    Distances are Euclidean; ties go to the lower node index.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise GraphError(f"points must be 2-D, got shape {x.shape}")
    n = x.shape[0]
    if k < 1 or k >= n:
        raise GraphError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    dist = cdist(x, x, metric="sqeuclidean")
    np.fill_diagonal(dist, np.inf)
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    a = sp.csr_matrix((np.ones(n * k), (rows, nbrs.ravel())), shape=(n, n))
    a = a.maximum(a.T)
    return Graph(n, a)
