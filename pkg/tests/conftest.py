import numpy as np
import pytest

from gala.graph_ops import Graph


def random_graph(rng, n, p, weighted=False):
    """Erdos-Renyi graph; with ``weighted`` the edge weights are uniform on (0.1, 3)."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    w = rng.uniform(0.1, 3.0, keep.sum()) if weighted else None
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1), w)


def path2():
    return Graph.from_edges(2, [(0, 1)])


def triangle():
    return Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def cliques(*sizes):
    """Disjoint complete graphs, plus the component label of every node."""
    edges, labels, start = [], [], 0
    for c, s in enumerate(sizes):
        edges += [(start + i, start + j) for i in range(s) for j in range(i + 1, s)]
        labels += [c] * s
        start += s
    return Graph.from_edges(start, edges), np.array(labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd_grad(f, params, eps=1e-5):
    """Central finite differences of scalar ``f(weights)`` with respect to every weight entry."""
    out = []
    for w in params.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            old = w[idx]
            w[idx] = old + eps
            up = f()
            w[idx] = old - eps
            down = f()
            w[idx] = old
            g[idx] = (up - down) / (2 * eps)
        out.append(g)
    return out


def rel_err(a, b):
    a = np.concatenate([np.ravel(x) for x in a])
    b = np.concatenate([np.ravel(x) for x in b])
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
