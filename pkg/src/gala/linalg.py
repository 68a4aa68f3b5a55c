"""Dense/sparse kernels and small symmetric eigen-solvers.

Dense matrices are plain ``float64`` numpy arrays and sparse matrices are
``scipy.sparse.csr_matrix`` instances with sorted column indices. Every
function here is pure: inputs are never modified.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

__all__ = [
    "EigenDecomposition",
    "LinalgError",
    "NotConvergedError",
    "as_csr",
    "frobenius_sq",
    "gemm",
    "small_inverse",
    "spmm",
    "sym_eig",
]


class LinalgError(ValueError):
    """Raised on shape mismatches or inputs outside an operation's domain."""


class NotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order; column ``i`` of ``eigenvectors`` pairs with ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def _as_dense(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise LinalgError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_csr(s) -> sp.csr_matrix:
    """Return ``s`` as a float64 CSR matrix with canonical (sorted, deduplicated) indices."""
    m = sp.csr_matrix(s, dtype=np.float64, copy=True)
    m.sum_duplicates()
    m.sort_indices()
    return m


def gemm(a, b, transpose_a: bool = False, transpose_b: bool = False) -> np.ndarray:
    a = _as_dense(a, "a")
    b = _as_dense(b, "b")
    if transpose_a:
        a = a.T
    if transpose_b:
        b = b.T
    if a.shape[1] != b.shape[0]:
        raise LinalgError(
            f"gemm inner dimensions disagree: {a.shape} x {b.shape}"
            f" (transpose_a={transpose_a}, transpose_b={transpose_b})"
        )
    return a @ b


def spmm(s, d) -> np.ndarray:
    """Sparse-times-dense product; cost is linear in the number of stored entries of ``s``."""
    if not sp.issparse(s):
        raise LinalgError("spmm expects a scipy sparse matrix as its first argument")
    d = _as_dense(d, "d")
    if s.shape[1] != d.shape[0]:
        raise LinalgError(f"spmm dimensions disagree: {s.shape} x {d.shape}")
    return np.asarray(s.tocsr() @ d)


def frobenius_sq(m) -> float:
    m = np.asarray(m, dtype=np.float64)
    return float(np.sum(m * m))


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings for one Jacobi sweep: n-1 rounds of disjoint (p, q) pairs covering all p<q once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < 0 or q < 0:
                continue
            ps.append(min(p, q))
            qs.append(max(p, q))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    v = np.eye(n)
    scale = np.sqrt(frobenius_sq(a))
    if n < 2 or scale == 0.0:
        return np.diag(a).copy(), v
    tol = 1e-12 * scale
    rounds = _round_robin(n)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.max(np.abs(a[off_mask])) < tol:
            return np.diag(a).copy(), v
        # Rotations within a round touch disjoint index pairs, so they commute
        # and can be applied as one block update.
        for p, q in rounds:
            apq = a[p, q]
            active = np.abs(apq) >= tol
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            ap, aq = a[:, p], a[:, q]
            a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
            ap, aq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * ap - s[:, None] * aq, s[:, None] * ap + c[:, None] * aq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    if np.max(np.abs(a[off_mask])) < tol:
        return np.diag(a).copy(), v
    raise NotConvergedError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def sym_eig(m, method: str = "jacobi", max_sweeps: int = 100) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    The input is symmetrized as ``(M + M.T) / 2`` first. ``method="jacobi"``
    runs cyclic Jacobi rotations (round-robin ordering) until every
    off-diagonal entry is below ``1e-12 * ||M||_F``; ``method="lapack"``
    defers to ``numpy.linalg.eigh`` for larger matrices.
    """
    m = _as_dense(m, "m")
    if m.shape[0] != m.shape[1]:
        raise LinalgError(f"sym_eig needs a square matrix, got {m.shape}")
    a = 0.5 * (m + m.T)
    if method == "jacobi":
        w, v = _jacobi(a, max_sweeps)
    elif method == "lapack":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    order = np.argsort(-w, kind="stable")
    return EigenDecomposition(eigenvalues=w[order], eigenvectors=np.ascontiguousarray(v[:, order]))


def small_inverse(m) -> np.ndarray:
    """Inverse of a small symmetric positive definite matrix via Cholesky."""
    m = _as_dense(m, "m")
    if m.shape[0] != m.shape[1]:
        raise LinalgError(f"small_inverse needs a square matrix, got {m.shape}")
    k = m.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    a = 0.5 * (m + m.T)
    smallest = float(np.linalg.eigvalsh(a)[0])
    if smallest <= 1e-12:
        raise LinalgError(f"matrix is not positive definite: smallest eigenvalue {smallest:.3e}")
    factor = scipy.linalg.cho_factor(a, lower=True)
    inv = scipy.linalg.cho_solve(factor, np.eye(k))
    return 0.5 * (inv + inv.T)
