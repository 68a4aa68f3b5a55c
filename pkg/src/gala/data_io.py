"""Plain-text dataset formats and synthetic stochastic-block-model graphs.

Formats
-------
edge list
    One ``src dst [weight]`` per line, 0-based integer ids, whitespace
    separated; ``#`` starts a comment. A ``# nodes N`` comment fixes the node
    count (otherwise it is ``max id + 1``). Each line is an undirected edge.
features CSV
    Comma-separated floats, one node per row.
labels CSV
    One integer per line.
matrix TSV (embeddings / affinities)
    A header line ``# rows R cols C`` followed by tab-separated values written
    with 17 significant digits, so a round trip is exact.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph_ops import Graph
from .seeding import substream

_NODES_RE = re.compile(r"^#\s*nodes\s+(\d+)\s*$")


class DataFormatError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    affinity: Graph | None = None
    labels: np.ndarray | None = None
    name: str = "dataset"

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        n = self.features.shape[0]
        if self.affinity is not None and self.affinity.n != n:
            raise DataFormatError(f"affinity has {self.affinity.n} nodes but features have {n} rows")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DataFormatError(f"expected {n} labels, got {self.labels.shape[0]}")
            if self.labels.size and self.labels.min() < 0:
                raise DataFormatError("labels must be nonnegative")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def num_classes(self) -> int:
        return 0 if self.labels is None else int(self.labels.max()) + 1


@dataclass(frozen=True)
class SbmSpec:
    block_sizes: tuple[int, ...] = (40, 40, 40)
    p_in: float = 0.3
    p_out: float = 0.02
    noise: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not self.block_sizes or min(self.block_sizes) < 1:
            raise ValueError("SBM blocks must be nonempty")
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.noise < 0:
            raise ValueError(f"noise must be nonnegative, got {self.noise}")


def sbm_generate(spec: SbmSpec) -> Dataset:
    """Sample an SBM graph with one-hot-plus-Gaussian-noise features; labels are block ids."""
    rng = substream(spec.seed, "sbm")
    labels = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    n = labels.size
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], spec.p_in, spec.p_out)
    keep = rng.random(iu.size) < prob
    graph = Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))
    features = np.eye(len(spec.block_sizes))[labels] + spec.noise * rng.standard_normal((n, len(spec.block_sizes)))
    return Dataset(features, graph, labels, name=f"sbm-{spec.seed}")


def load_edge_list(path, n: int | None = None) -> Graph:
    edges, weights = [], []
    declared = None
    self_loops = 0
    max_id = -1
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            m = _NODES_RE.match(line)
            if m:
                declared = int(m.group(1))
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise DataFormatError(f"{path}:{lineno}: expected 'src dst [weight]', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-numeric field in {raw!r}") from None
        if i < 0 or j < 0:
            raise DataFormatError(f"{path}:{lineno}: node ids must be nonnegative")
        if not np.isfinite(w) or w < 0:
            raise DataFormatError(f"{path}:{lineno}: weight must be finite and nonnegative, got {w}")
        max_id = max(max_id, i, j)
        if i == j:
            self_loops += 1
            continue
        edges.append((i, j))
        weights.append(w)
    if self_loops:
        warnings.warn(f"{path}: dropped {self_loops} self-loop(s)", stacklevel=2)
    size = n if n is not None else declared
    if size is None:
        size = max_id + 1
    if max_id >= size:
        raise DataFormatError(f"{path}: node id exceeds declared node count {size}")
    _warn_if_directed(path, edges, weights)
    return Graph.from_edges(size, edges, weights)


def _warn_if_directed(path, edges, weights) -> None:
    seen: dict[tuple[int, int], float] = {}
    for (i, j), w in zip(edges, weights):
        if (j, i) in seen and seen[(j, i)] != w:
            warnings.warn(f"{path}: asymmetric weights for ({j}, {i}); keeping the maximum", stacklevel=3)
            return
        seen[(i, j)] = w


def save_edge_list(graph: Graph, path) -> None:
    a = graph.affinity
    lines = [f"# nodes {graph.n}"]
    for i, j in graph.edges():
        lines.append(f"{i} {j} {a[i, j]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def _read_csv_rows(path) -> list[list[str]]:
    rows = []
    for raw in Path(path).read_text().splitlines():
        if raw.strip():
            rows.append([c.strip() for c in raw.split(",")])
    return rows


def load_features_csv(path) -> np.ndarray:
    rows = _read_csv_rows(path)
    if not rows:
        raise DataFormatError(f"{path}: no feature rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataFormatError(f"{path}: row {r} has {len(row)} columns, expected {width}")
        try:
            out[r] = [float(c) for c in row]
        except ValueError:
            raise DataFormatError(f"{path}: non-numeric value in row {r}") from None
    if not np.all(np.isfinite(out)):
        raise DataFormatError(f"{path}: non-finite feature values")
    return out


def load_labels_csv(path) -> np.ndarray:
    labels = []
    for r, raw in enumerate(Path(path).read_text().splitlines()):
        if not raw.strip():
            continue
        try:
            labels.append(int(raw.strip()))
        except ValueError:
            raise DataFormatError(f"{path}: line {r + 1} is not an integer: {raw!r}") from None
    return np.asarray(labels, dtype=np.int64)


def save_features_csv(x, path) -> None:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    Path(path).write_text("".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in x))


def save_labels_csv(labels: Sequence[int], path) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in labels))


def save_matrix_tsv(m, path) -> None:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise DataFormatError(f"expected a 2-D matrix, got shape {m.shape}")
    lines = [f"# rows {m.shape[0]} cols {m.shape[1]}"]
    lines += ["\t".join(f"{v:.17g}" for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def load_matrix_tsv(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    header = re.match(r"^#\s*rows\s+(\d+)\s+cols\s+(\d+)\s*$", lines[0]) if lines else None
    if header is None:
        raise DataFormatError(f"{path}: missing '# rows R cols C' header")
    rows, cols = int(header.group(1)), int(header.group(2))
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows:
        raise DataFormatError(f"{path}: header says {rows} rows, found {len(body)}")
    out = np.empty((rows, cols))
    for r, ln in enumerate(body):
        vals = ln.split("\t")
        if len(vals) != cols:
            raise DataFormatError(f"{path}: row {r} has {len(vals)} values, expected {cols}")
        out[r] = [float(v) for v in vals]
    return out


save_embeddings = save_matrix_tsv
load_embeddings = load_matrix_tsv
save_affinity = save_matrix_tsv
load_affinity = load_matrix_tsv


def load_dataset(features_path, edges_path=None, labels_path=None, name: str | None = None) -> Dataset:
    x = load_features_csv(features_path)
    g = load_edge_list(edges_path, n=x.shape[0]) if edges_path else None
    y = load_labels_csv(labels_path) if labels_path else None
    return Dataset(x, g, y, name=name or Path(features_path).stem)


def save_dataset(ds: Dataset, directory) -> dict[str, str]:
    """Write ``features.csv`` / ``edges.txt`` / ``labels.csv`` into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = {"features": str(d / "features.csv")}
    save_features_csv(ds.features, paths["features"])
    if ds.affinity is not None:
        paths["edges"] = str(d / "edges.txt")
        save_edge_list(ds.affinity, paths["edges"])
    if ds.labels is not None:
        paths["labels"] = str(d / "labels.csv")
        save_labels_csv(ds.labels, paths["labels"])
    return paths
