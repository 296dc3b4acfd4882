"""Vertex embeddings: random-walk skip-gram training, mean-vector propagation,
similarity kernels, and TSV import/export."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import _skipgram
from .errors import MissingEmbedding
from .graph import HeteroGraph, VertexId, VertexKind

logger = logging.getLogger(__name__)

# 4MB stays L3-resident; larger tables stall the training loop on DRAM misses.
_NEG_TABLE_SIZE = 1 << 20


@dataclass(frozen=True)
class WalkConfig:
    """Random-walk and skip-gram hyperparameters; p=q=1 gives uniform walks."""

    walks_per_vertex: int = 10
    walk_length: int = 40
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    p: float = 1.0
    q: float = 1.0
    seed: int = 0
    dim: int = 128

    def __post_init__(self) -> None:
        for name in ("walks_per_vertex", "walk_length", "window", "negatives", "epochs", "dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


class SimilarityKind(Enum):
    COSINE = "cosine"
    RBF = "rbf"


class EmbeddingTable(Mapping[VertexId, np.ndarray]):
    """Vertex -> vector mapping backed by one dense matrix."""

    def __init__(self, vertices: Sequence[VertexId], matrix: np.ndarray):
        if matrix.ndim != 2 or matrix.shape[0] != len(vertices):
            raise ValueError("matrix shape does not match vertex list")
        if not np.isfinite(matrix).all():
            raise ValueError("embedding matrix contains non-finite entries")
        self._vertices = list(vertices)
        self._index = {v: i for i, v in enumerate(self._vertices)}
        self._matrix = matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def vectors(self) -> "EmbeddingTable":
        return self

    def index_of(self, v: VertexId) -> int:
        return self._index[v]

    def __getitem__(self, v: VertexId) -> np.ndarray:
        try:
            return self._matrix[self._index[v]]
        except KeyError:
            raise MissingEmbedding(f"no vector for {v}") from None

    def __contains__(self, v: object) -> bool:
        return v in self._index

    def __iter__(self) -> Iterator[VertexId]:
        return iter(self._vertices)

    def __len__(self) -> int:
        return len(self._vertices)


def _compile_csr(graph: HeteroGraph) -> tuple[list[VertexId], np.ndarray, np.ndarray]:
    """Canonical vertex order plus CSR adjacency with sorted neighbor lists."""
    order = graph.sorted_vertices()
    index = {v: i for i, v in enumerate(order)}
    indptr = np.zeros(len(order) + 1, dtype=np.int64)
    for i, v in enumerate(order):
        indptr[i + 1] = indptr[i] + len(graph.adjacency[v])
    indices = np.empty(indptr[-1], dtype=np.int32)
    for i, v in enumerate(order):
        row = sorted(index[u] for u in graph.adjacency[v])
        indices[indptr[i]: indptr[i + 1]] = row
    return order, indptr, indices


def _negative_table(counts: np.ndarray, size: int = _NEG_TABLE_SIZE) -> np.ndarray:
    weights = counts.astype(np.float64) ** 0.75
    total = weights.sum()
    if total <= 0:
        raise ValueError("no walk tokens to build a sampling table from")
    cumulative = np.cumsum(weights) / total
    grid = (np.arange(size, dtype=np.float64) + 0.5) / size
    return np.searchsorted(cumulative, grid).astype(np.int32)


def train_embeddings(graph: HeteroGraph, cfg: WalkConfig, workers: int = 1) -> EmbeddingTable:
    """Train skip-gram vectors over truncated random walks.

    Deterministic for a given seed when workers == 1; more workers train
    lock-free in parallel and trade bitwise reproducibility for speed.
    Isolated vertices get the zero vector.
    """
    if not graph.adjacency:
        raise ValueError("cannot embed an empty graph")
    order, indptr, indices = _compile_csr(graph)
    n = len(order)
    degrees = np.diff(indptr)
    active = np.flatnonzero(degrees > 0).astype(np.int32)

    rng = np.random.default_rng(cfg.seed)
    matrix = np.zeros((n, cfg.dim), dtype=np.float32)
    if active.size == 0:
        logger.warning("graph has no edges; all vectors are zero")
        return EmbeddingTable(order, matrix)

    starts = np.concatenate(
        [rng.permutation(active) for _ in range(cfg.walks_per_vertex)]
    ).astype(np.int32)
    if cfg.p == 1.0 and cfg.q == 1.0:
        walks = _skipgram.uniform_walks(indptr, indices, starts, cfg.walk_length, cfg.seed)
    else:
        walks = _skipgram.biased_walks(
            indptr, indices, starts, cfg.walk_length, cfg.p, cfg.q, cfg.seed
        )

    counts = np.bincount(walks.ravel(), minlength=n)
    neg_table = _negative_table(counts)

    syn0 = ((rng.random((n, cfg.dim), dtype=np.float32) - 0.5) / cfg.dim).astype(np.float32)
    syn1 = np.zeros((n, cfg.dim), dtype=np.float32)
    sig = _skipgram.sigmoid_table()
    if workers <= 1:
        _skipgram.train_sgns_serial(
            walks, syn0, syn1, cfg.window, cfg.negatives, cfg.epochs,
            cfg.learning_rate, neg_table, sig, cfg.seed,
        )
    else:
        import numba

        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))
        _skipgram.train_sgns_parallel(
            walks, syn0, syn1, cfg.window, cfg.negatives, cfg.epochs,
            cfg.learning_rate, neg_table, sig, cfg.seed,
        )

    matrix[active] = syn0[active]
    return EmbeddingTable(order, matrix)


_PROPAGATION_SOURCES = {
    VertexKind.DOMAIN: VertexKind.URL,
    VertexKind.WORD: VertexKind.URL,
    VertexKind.IP: VertexKind.DOMAIN,
    VertexKind.NAMESERVER: VertexKind.DOMAIN,
}


def propagate_mean_vectors(graph: HeteroGraph, url_vectors: EmbeddingTable) -> EmbeddingTable:
    """Extend URL vectors to all vertices by neighborhood means.

    Order is fixed: domains and words average their URL neighbors, then
    IPs and name servers average the freshly computed domain vectors.
    A non-URL vertex with no source neighbors gets the zero vector and a
    warning (orphan entity).
    """
    order = graph.sorted_vertices()
    dim = url_vectors.dim
    matrix = np.zeros((len(order), dim), dtype=np.float64)
    index = {v: i for i, v in enumerate(order)}

    for v in order:
        if v.kind is VertexKind.URL:
            if v not in url_vectors:
                raise MissingEmbedding(f"no URL vector for {v}")
            matrix[index[v]] = url_vectors[v]

    orphans = 0
    for pass_kinds in ((VertexKind.DOMAIN, VertexKind.WORD), (VertexKind.IP, VertexKind.NAMESERVER)):
        for v in order:
            if v.kind not in pass_kinds:
                continue
            source = _PROPAGATION_SOURCES[v.kind]
            rows = [index[u] for u in graph.adjacency[v] if u.kind is source]
            if rows:
                matrix[index[v]] = matrix[rows].mean(axis=0)
            else:
                orphans += 1
                logger.warning("orphan entity %s has no %s neighbors; zero vector", v, source.value)
    if orphans:
        logger.warning("%d orphan entit(ies) received zero vectors", orphans)
    return EmbeddingTable(order, matrix)


def similarity(
    x: np.ndarray, y: np.ndarray, kind: SimilarityKind = SimilarityKind.COSINE,
    sigma: float | None = None,
) -> float:
    """Similarity in [0,1]: clamped cosine, or RBF exp(-||x-y||^2 / 2 sigma^2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("similarity operands differ in dimension")
    if kind is SimilarityKind.COSINE:
        nx = math.sqrt(float(x @ x))
        ny = math.sqrt(float(y @ y))
        if nx == 0.0 or ny == 0.0:
            logger.warning("cosine similarity with a zero vector; returning 0")
            return 0.0
        return min(1.0, max(0.0, float(x @ y) / (nx * ny)))
    if sigma is None or sigma <= 0:
        raise ValueError("rbf similarity needs sigma > 0")
    d = x - y
    return math.exp(-float(d @ d) / (2.0 * sigma * sigma))


def default_sigma(table: EmbeddingTable, pairs: int = 10000, seed: int = 0) -> float:
    """Median pairwise distance over randomly sampled vertex pairs."""
    n = len(table)
    if n < 2:
        return 1.0
    rng = np.random.default_rng(seed)
    left = rng.integers(0, n, size=pairs)
    right = rng.integers(0, n, size=pairs)
    diffs = table.matrix[left].astype(np.float64) - table.matrix[right].astype(np.float64)
    med = float(np.median(np.linalg.norm(diffs, axis=1)))
    if med <= 0:
        logger.warning("median pair distance is 0; falling back to sigma=1")
        return 1.0
    return med


def save_embeddings(table: EmbeddingTable, path: str | Path) -> Path:
    """TSV export with header: kind:key, dim, then the vector components."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("kind:key\tdim\t" + "\t".join(f"v{i+1}" for i in range(table.dim)) + "\n")
        for v in table:
            vec = table[v]
            fh.write(f"{v}\t{table.dim}\t" + "\t".join(repr(float(c)) for c in vec) + "\n")
    return path


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read a TSV written by save_embeddings; validates dimension uniformity."""
    path = Path(path)
    vertices: list[VertexId] = []
    rows: list[list[float]] = []
    dim: int | None = None
    with path.open(encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("kind:key"):
            raise ValueError(f"{path}: not an embedding TSV (bad header)")
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            if len(cells) < 2:
                continue
            row_dim = int(cells[1])
            if dim is None:
                dim = row_dim
            if row_dim != dim or len(cells) != 2 + dim:
                raise ValueError(f"{path}: inconsistent dimension on row for {cells[0]}")
            vertices.append(VertexId.from_string(cells[0]))
            rows.append([float(c) for c in cells[2:]])
    if dim is None:
        raise ValueError(f"{path}: empty embedding file")
    matrix = np.asarray(rows, dtype=np.float32)
    return EmbeddingTable(vertices, matrix)
