"""Cost-domain (min-sum) loopy belief propagation with similarity-gated edge
potentials, the fixed-potential Polonium baseline, and a random-walk-with-
restart baseline.

Messages follow the synchronous flooding schedule: every iteration
recomputes all messages from the previous iteration's snapshot. Observed
vertices broadcast but never receive messages. Each message is normalized
by subtracting its minimum component, so the smaller entry is exactly 0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .corpus import Label
from .embedding import EmbeddingTable, SimilarityKind, _compile_csr, similarity
from .errors import (
    MissingEmbedding,
    NoObservedVertices,
    UnknownVertex,
)
from .graph import HeteroGraph, VertexId, VertexKind

logger = logging.getLogger(__name__)

PRIOR_OBSERVED = 0.99
PRIOR_HIDDEN = 0.5

_PHISHY, _BENIGN = 0, 1
_AXIS_LABELS = (Label.PHISHY, Label.BENIGN)
_SIM_CHUNK = 1 << 18


class Mode(Enum):
    BPE = "bpe"
    POLONIUM = "pol"


@dataclass(frozen=True)
class CompatibilityConfig:
    """Edge-potential configuration for the two message-passing modes."""

    mode: Mode = Mode.BPE
    ths_pos: float = 0.7
    ths_neg: float = 0.7
    sim_kind: SimilarityKind = SimilarityKind.COSINE
    sigma: float | None = None
    epsilon: float = 0.001

    def __post_init__(self) -> None:
        if not 0.0 <= self.ths_pos <= 1.0 or not 0.0 <= self.ths_neg <= 1.0:
            raise ValueError("ths_pos and ths_neg must be in [0,1]")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError("epsilon must be in (0, 0.5)")
        if self.sim_kind is SimilarityKind.RBF and self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")


def edge_potential(
    x: VertexId,
    y: VertexId,
    lx: Label,
    ly: Label,
    emb: EmbeddingTable | None,
    cfg: CompatibilityConfig,
) -> float:
    """Cost of the joint label pair on one edge.

    Polonium: fixed homophily costs 0.5 -/+ epsilon. The similarity-gated
    mode charges min(ths_pos, 1-sim) for agreement and max(ths_neg, sim)
    for disagreement.
    """
    same = lx is ly
    if cfg.mode is Mode.POLONIUM:
        return 0.5 - cfg.epsilon if same else 0.5 + cfg.epsilon
    if emb is None:
        raise MissingEmbedding("similarity-gated potentials need an embedding table")
    sim = similarity(emb[x], emb[y], cfg.sim_kind, cfg.sigma)
    return min(cfg.ths_pos, 1.0 - sim) if same else max(cfg.ths_neg, sim)


def _edge_similarities(
    emb: EmbeddingTable, src: np.ndarray, dst: np.ndarray,
    kind: SimilarityKind, sigma: float | None,
) -> np.ndarray:
    """Vectorized per-edge similarity over index pairs into emb.matrix."""
    out = np.empty(len(src), dtype=np.float64)
    matrix = emb.matrix
    for lo in range(0, len(src), _SIM_CHUNK):
        hi = min(lo + _SIM_CHUNK, len(src))
        a = matrix[src[lo:hi]].astype(np.float64)
        b = matrix[dst[lo:hi]].astype(np.float64)
        if kind is SimilarityKind.COSINE:
            dots = np.einsum("ij,ij->i", a, b)
            norms = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            sims = np.zeros(hi - lo)
            ok = norms > 0
            sims[ok] = dots[ok] / norms[ok]
            np.clip(sims, 0.0, 1.0, out=sims)
        else:
            if sigma is None or sigma <= 0:
                raise ValueError("rbf similarity needs sigma > 0")
            d2 = np.einsum("ij,ij->i", a - b, a - b)
            sims = np.exp(-d2 / (2.0 * sigma * sigma))
        out[lo:hi] = sims
    return out


class InferenceState:
    """Compiled graph, final messages, costs and the label assignment."""

    def __init__(
        self,
        graph: HeteroGraph,
        order: list[VertexId],
        observed_labels: np.ndarray,
        messages: np.ndarray,
        directed: dict[tuple[int, int], int],
        costs: np.ndarray,
        hidden_mask: np.ndarray,
        config: CompatibilityConfig,
        iterations_run: int,
    ):
        self.graph = graph
        self._order = order
        self._index = {v: i for i, v in enumerate(order)}
        self._observed_labels = observed_labels
        self._messages = messages
        self._directed = directed
        self._costs = costs
        self._hidden = hidden_mask
        self.config = config
        self.iterations_run = iterations_run
        self.assignment: dict[VertexId, Label] = {}
        for i in np.flatnonzero(hidden_mask):
            label = _PHISHY if costs[i, _PHISHY] <= costs[i, _BENIGN] else _BENIGN
            self.assignment[order[i]] = _AXIS_LABELS[label]

    def prior(self, v: VertexId) -> tuple[float, float]:
        """(phi(Phishy), phi(Benign)) for one vertex."""
        i = self._require(v)
        lab = self._observed_labels[i]
        if lab < 0:
            return (PRIOR_HIDDEN, PRIOR_HIDDEN)
        if lab == _PHISHY:
            return (PRIOR_OBSERVED, 1.0 - PRIOR_OBSERVED)
        return (1.0 - PRIOR_OBSERVED, PRIOR_OBSERVED)

    def message(self, x: VertexId, y: VertexId) -> tuple[float, float]:
        """Final message x -> y as (msg(Phishy), msg(Benign))."""
        key = (self._require(x), self._require(y))
        try:
            d = self._directed[key]
        except KeyError:
            raise ValueError(f"no message {x} -> {y}: not adjacent or target observed") from None
        return (float(self._messages[d, _PHISHY]), float(self._messages[d, _BENIGN]))

    def cost(self, v: VertexId) -> tuple[float, float]:
        """(Cost(v, Phishy), Cost(v, Benign)); defined for hidden vertices."""
        i = self._require(v)
        if not self._hidden[i]:
            raise UnknownVertex(f"{v} is observed; costs are defined for hidden vertices")
        return (float(self._costs[i, _PHISHY]), float(self._costs[i, _BENIGN]))

    def hidden_vertices(self) -> list[VertexId]:
        return [self._order[i] for i in np.flatnonzero(self._hidden)]

    def _require(self, v: VertexId) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(f"{v} is not in the inference graph") from None


def _compile_potentials(
    graph: HeteroGraph,
    order: list[VertexId],
    edges: np.ndarray,
    emb: EmbeddingTable | None,
    cfg: CompatibilityConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """(psi_same, psi_diff) per undirected edge."""
    m = len(edges)
    if cfg.mode is Mode.POLONIUM:
        same = np.full(m, 0.5 - cfg.epsilon)
        diff = np.full(m, 0.5 + cfg.epsilon)
        return same, diff
    if emb is None:
        raise MissingEmbedding("similarity-gated potentials need an embedding table")
    rows = np.empty(len(order), dtype=np.int64)
    for i, v in enumerate(order):
        if v not in emb:
            raise MissingEmbedding(f"no vector for {v}")
        rows[i] = emb.index_of(v)
    sims = _edge_similarities(emb, rows[edges[:, 0]], rows[edges[:, 1]], cfg.sim_kind, cfg.sigma)
    same = np.minimum(cfg.ths_pos, 1.0 - sims)
    diff = np.maximum(cfg.ths_neg, sims)
    return same, diff


def run_min_sum(
    graph: HeteroGraph,
    emb: EmbeddingTable | None,
    cfg: CompatibilityConfig,
    iterations: int = 5,
    early_stop: bool = False,
) -> InferenceState:
    """Synchronous min-sum message passing; returns the converged state.

    Observed senders broadcast a fixed message derived from their label
    prior and the edge potential; hidden-to-hidden messages start at 0 and
    are recomputed from the previous snapshot every iteration.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not graph.observed:
        raise NoObservedVertices("inference needs at least one observed vertex")

    order = graph.sorted_vertices()
    index = {v: i for i, v in enumerate(order)}
    n = len(order)

    observed_labels = np.full(n, -1, dtype=np.int8)
    for v in graph.observed:
        observed_labels[index[v]] = _PHISHY if graph.labels[v] is Label.PHISHY else _BENIGN
    hidden_mask = observed_labels < 0

    edges = np.array(
        [(index[u], index[v]) for u, v in graph.edges()], dtype=np.int64
    ).reshape(-1, 2)
    psi_same, psi_diff = _compile_potentials(graph, order, edges, emb, cfg)

    d_src: list[int] = []
    d_dst: list[int] = []
    d_edge: list[int] = []
    directed: dict[tuple[int, int], int] = {}
    for e, (u, v) in enumerate(edges):
        for s, t in ((u, v), (v, u)):
            if hidden_mask[t]:
                directed[(int(s), int(t))] = len(d_src)
                d_src.append(int(s))
                d_dst.append(int(t))
                d_edge.append(e)

    nd = len(d_src)
    src = np.array(d_src, dtype=np.int64)
    dst = np.array(d_dst, dtype=np.int64)
    eid = np.array(d_edge, dtype=np.int64)
    rev = np.array([directed.get((int(t), int(s)), -1) for s, t in zip(src, dst)], dtype=np.int64)

    messages = np.zeros((nd, 2), dtype=np.float64)
    obs_from = ~hidden_mask[src]
    if np.any(obs_from):
        sender_label = observed_labels[src[obs_from]]
        same = psi_same[eid[obs_from]]
        diff = psi_diff[eid[obs_from]]
        static = np.empty((int(obs_from.sum()), 2), dtype=np.float64)
        phishy_sender = sender_label == _PHISHY
        static[:, _PHISHY] = np.where(phishy_sender, same, diff)
        static[:, _BENIGN] = np.where(phishy_sender, diff, same)
        static -= static.min(axis=1, keepdims=True)
        messages[obs_from] = static

    hid_from = np.flatnonzero(hidden_mask[src])
    log_half = math.log(PRIOR_HIDDEN)
    prev_assignment: np.ndarray | None = None
    iterations_run = 0

    for _ in range(iterations):
        total_in = np.zeros((n, 2), dtype=np.float64)
        np.add.at(total_in, dst, messages)
        if hid_from.size:
            a = total_in[src[hid_from]] - messages[rev[hid_from]] + log_half
            same = psi_same[eid[hid_from]]
            diff = psi_diff[eid[hid_from]]
            fresh = np.empty((hid_from.size, 2), dtype=np.float64)
            fresh[:, _PHISHY] = np.minimum(a[:, _PHISHY] + same, a[:, _BENIGN] + diff)
            fresh[:, _BENIGN] = np.minimum(a[:, _PHISHY] + diff, a[:, _BENIGN] + same)
            fresh -= fresh.min(axis=1, keepdims=True)
            messages[hid_from] = fresh
        iterations_run += 1
        if early_stop:
            total_now = np.zeros((n, 2), dtype=np.float64)
            np.add.at(total_now, dst, messages)
            assign_now = (total_now[:, _PHISHY] > total_now[:, _BENIGN]).astype(np.int8)
            if prev_assignment is not None and np.array_equal(assign_now, prev_assignment):
                break
            prev_assignment = assign_now

    total_in = np.zeros((n, 2), dtype=np.float64)
    np.add.at(total_in, dst, messages)
    costs = log_half + total_in

    return InferenceState(
        graph=graph,
        order=order,
        observed_labels=observed_labels,
        messages=messages,
        directed=directed,
        costs=costs,
        hidden_mask=hidden_mask,
        config=cfg,
        iterations_run=iterations_run,
    )


def total_assignment_cost(
    graph: HeteroGraph,
    assignment: Mapping[VertexId, Label],
    emb: EmbeddingTable | None,
    cfg: CompatibilityConfig,
) -> float:
    """Global objective value of a full labeling (observed labels fixed).

    Sum of log(1-phi) vertex terms plus the edge potentials of the joint
    assignment; the quantity the message passing minimizes.
    """
    def label_of(v: VertexId) -> Label:
        if v in graph.observed:
            return graph.labels[v]
        return assignment[v]

    total = 0.0
    for v in graph.adjacency:
        phi = PRIOR_OBSERVED if v in graph.observed else PRIOR_HIDDEN
        total += math.log(1.0 - phi)
    for u, v in graph.edges():
        total += edge_potential(u, v, label_of(u), label_of(v), emb, cfg)
    return total


def classify(
    state: InferenceState, test_urls: Iterable[VertexId]
) -> dict[VertexId, Label]:
    """Assignment restricted to the requested URL vertices.

    Vertices missing from the graph raise UnknownVertex; observed vertices
    are skipped (they have fixed labels, not inferred ones).
    """
    out: dict[VertexId, Label] = {}
    for v in test_urls:
        if v not in state._index:
            raise UnknownVertex(f"{v} is not in the inference graph")
        if v in state.assignment:
            out[v] = state.assignment[v]
    return out


def run_rwr(
    graph: HeteroGraph,
    restart: float = 0.15,
    walks: int = 10000,
    walk_length: int = 20,
    seed: int = 0,
) -> dict[VertexId, float]:
    """Random walk with restart from observed URLs of each class.

    Each walk starts at a random observed URL of its class and teleports
    back to its own start with probability `restart` per step. The score of
    a hidden URL is its phishy-walk visit share with +1 smoothing.
    """
    if not 0 < restart < 1:
        raise ValueError("restart must be in (0,1)")
    order, indptr, indices = _compile_csr(graph)
    index = {v: i for i, v in enumerate(order)}
    degrees = np.diff(indptr)

    seeds_by_class: dict[int, np.ndarray] = {}
    for axis, label in ((_PHISHY, Label.PHISHY), (_BENIGN, Label.BENIGN)):
        seeds = [
            index[v]
            for v in graph.observed
            if v.kind is VertexKind.URL and graph.labels[v] is label
        ]
        seeds_by_class[axis] = np.array(sorted(seeds), dtype=np.int64)

    visits = np.zeros((2, len(order)), dtype=np.float64)
    rng = np.random.default_rng(seed)
    for axis in (_PHISHY, _BENIGN):
        seeds = seeds_by_class[axis]
        if seeds.size == 0:
            continue
        starts = seeds[rng.integers(0, seeds.size, size=walks)]
        pos = starts.copy()
        for _ in range(walk_length):
            teleport = rng.random(walks) < restart
            deg = degrees[pos]
            offsets = rng.integers(0, np.maximum(deg, 1))
            stepped = indices[indptr[pos] + offsets]
            pos = np.where(teleport, starts, np.where(deg > 0, stepped, pos))
            np.add.at(visits[axis], pos, 1.0)

    scores: dict[VertexId, float] = {}
    for v in order:
        if v.kind is not VertexKind.URL or v in graph.observed:
            continue
        i = index[v]
        scores[v] = visits[_PHISHY, i] / (visits[_PHISHY, i] + visits[_BENIGN, i] + 1.0)
    return scores
