"""Heterogeneous network construction: URLs, domains, IPs, name servers, words.

Exactly four edge kinds exist: Url-Domain, Domain-Ip, Domain-NameServer and
Url-Word. Training URLs are observed with their labels; everything else is
hidden unless blacklisted.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from .corpus import Label, ResolutionRecord, UrlRecord
from .errors import EmptyGraph, InsufficientData, MalformedRecord
from .lexer import StopWordModel, apply_stop_words, segment

logger = logging.getLogger(__name__)


class VertexKind(Enum):
    URL = "url"
    DOMAIN = "domain"
    IP = "ip"
    NAMESERVER = "nameserver"
    WORD = "word"


class VertexId(NamedTuple):
    kind: VertexKind
    key: str

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.key}"

    @classmethod
    def from_string(cls, text: str) -> "VertexId":
        kind, _, key = text.partition(":")
        return cls(VertexKind(kind), key)


_ALLOWED_EDGE_KINDS = frozenset(
    {
        frozenset({VertexKind.URL, VertexKind.DOMAIN}),
        frozenset({VertexKind.DOMAIN, VertexKind.IP}),
        frozenset({VertexKind.DOMAIN, VertexKind.NAMESERVER}),
        frozenset({VertexKind.URL, VertexKind.WORD}),
    }
)


@dataclass
class HeteroGraph:
    """Undirected typed graph with observed/hidden vertex state."""

    adjacency: dict[VertexId, set[VertexId]] = field(default_factory=dict)
    labels: dict[VertexId, Label] = field(default_factory=dict)
    observed: set[VertexId] = field(default_factory=set)
    meta: dict = field(default_factory=dict)

    @property
    def vertices(self) -> set[VertexId]:
        return set(self.adjacency)

    def add_vertex(self, v: VertexId) -> None:
        self.adjacency.setdefault(v, set())

    def add_edge(self, u: VertexId, v: VertexId) -> None:
        kinds = frozenset({u.kind, v.kind})
        if kinds not in _ALLOWED_EDGE_KINDS:
            raise ValueError(f"edge kind not permitted: {u.kind.value}-{v.kind.value}")
        self.adjacency.setdefault(u, set()).add(v)
        self.adjacency.setdefault(v, set()).add(u)

    def neighbors(self, v: VertexId) -> set[VertexId]:
        return self.adjacency[v]

    def mark_observed(self, v: VertexId, label: Label) -> None:
        if label not in (Label.PHISHY, Label.BENIGN):
            raise ValueError(f"observed vertex needs a definite label, got {label}")
        self.labels[v] = label
        self.observed.add(v)

    def is_observed(self, v: VertexId) -> bool:
        return v in self.observed

    def num_edges(self) -> int:
        return sum(len(n) for n in self.adjacency.values()) // 2

    def edges(self) -> Iterator[tuple[VertexId, VertexId]]:
        """Each undirected edge once, in canonical sorted order."""
        for u in self.sorted_vertices():
            for v in sorted(self.adjacency[u], key=_vertex_sort_key):
                if _vertex_sort_key(u) < _vertex_sort_key(v):
                    yield u, v

    def sorted_vertices(self) -> list[VertexId]:
        return sorted(self.adjacency, key=_vertex_sort_key)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HeteroGraph):
            return NotImplemented
        return (
            self.adjacency == other.adjacency
            and self.labels == other.labels
            and self.observed == other.observed
        )


def _vertex_sort_key(v: VertexId) -> tuple[str, str]:
    return (v.kind.value, v.key)


def url_vertex(record: UrlRecord) -> VertexId:
    return VertexId(VertexKind.URL, record.raw)


def build_graph(
    records: Sequence[UrlRecord],
    resolutions: Iterable[ResolutionRecord] = (),
    nameservers: Iterable[tuple[str, str]] = (),
    stop_model: StopWordModel | None = None,
    observed_urls: set[str] | None = None,
) -> HeteroGraph:
    """Construct the network from corpus records and DNS history.

    URLs listed in observed_urls (default: every labeled record) become
    observed with their record labels; unknown-labeled URLs are always
    hidden. Resolution and name-server rows for domains that never appear
    as a URL host are skipped and counted in graph.meta.
    """
    if not records:
        raise MalformedRecord("no URL records to build from")

    graph = HeteroGraph()
    seen: dict[str, Label] = {}
    duplicates = 0
    for rec in records:
        if rec.raw in seen:
            duplicates += 1
            if seen[rec.raw] is not rec.label:
                logger.warning("duplicate URL %s with conflicting labels", rec.raw)
            continue
        seen[rec.raw] = rec.label

        url_v = VertexId(VertexKind.URL, rec.raw)
        domain_v = VertexId(VertexKind.DOMAIN, rec.parts.host)
        graph.add_edge(url_v, domain_v)

        words = segment(rec.parts)
        if stop_model is not None:
            words = apply_stop_words(words, stop_model)
        for word in set(words.words):
            graph.add_edge(url_v, VertexId(VertexKind.WORD, word))

        if rec.label is not Label.UNKNOWN and (
            observed_urls is None or rec.raw in observed_urls
        ):
            graph.mark_observed(url_v, rec.label)

    skipped_resolutions = 0
    malformed = 0
    for res in resolutions:
        if not res.domain or not res.ip:
            malformed += 1
            continue
        domain_v = VertexId(VertexKind.DOMAIN, res.domain.lower())
        if domain_v not in graph.adjacency:
            skipped_resolutions += 1
            continue
        graph.add_edge(domain_v, VertexId(VertexKind.IP, res.ip.lower()))

    skipped_nameservers = 0
    for domain, ns in nameservers:
        if not domain or not ns:
            malformed += 1
            continue
        domain_v = VertexId(VertexKind.DOMAIN, domain.lower())
        if domain_v not in graph.adjacency:
            skipped_nameservers += 1
            continue
        graph.add_edge(domain_v, VertexId(VertexKind.NAMESERVER, ns.lower()))

    if graph.num_edges() == 0:
        raise EmptyGraph("graph construction produced zero edges")

    if skipped_resolutions or skipped_nameservers:
        logger.warning(
            "skipped %d resolution and %d nameserver row(s) whose domain is not in the corpus",
            skipped_resolutions,
            skipped_nameservers,
        )
    graph.meta = {
        "duplicate_urls": duplicates,
        "malformed_records": malformed,
        "skipped_resolutions": skipped_resolutions,
        "skipped_nameservers": skipped_nameservers,
    }
    return graph


def apply_blacklists(
    graph: HeteroGraph, domains: Iterable[str] = (), ips: Iterable[str] = ()
) -> HeteroGraph:
    """Turn blacklisted Domain/Ip vertices into observed Phishy vertices."""
    for domain in domains:
        v = VertexId(VertexKind.DOMAIN, domain.strip().lower())
        if v in graph.adjacency:
            graph.mark_observed(v, Label.PHISHY)
    for ip in ips:
        v = VertexId(VertexKind.IP, ip.strip().lower())
        if v in graph.adjacency:
            graph.mark_observed(v, Label.PHISHY)
    return graph


def split_train_test(
    records: Sequence[UrlRecord], ratio: float, seed: int
) -> tuple[list[UrlRecord], list[UrlRecord]]:
    """Stratified deterministic split; unknown-labeled records always go to test."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0,1), got {ratio}")

    phishy = sorted((r for r in records if r.label is Label.PHISHY), key=lambda r: r.raw)
    benign = sorted((r for r in records if r.label is Label.BENIGN), key=lambda r: r.raw)
    unknown = sorted((r for r in records if r.label is Label.UNKNOWN), key=lambda r: r.raw)

    for name, group in (("phishy", phishy), ("benign", benign)):
        if len(group) < 2:
            raise InsufficientData(
                f"need at least 2 {name} URLs to stratify, got {len(group)}"
            )

    rng = random.Random(seed)
    train: list[UrlRecord] = []
    test: list[UrlRecord] = []
    for group in (phishy, benign):
        group = list(group)
        rng.shuffle(group)
        k = min(max(1, round(len(group) * ratio)), len(group) - 1)
        train.extend(group[:k])
        test.extend(group[k:])
    test.extend(unknown)
    return train, test


def save_graph(graph: HeteroGraph, path: str | Path) -> Path:
    """Write the edge list as TSV plus a JSON metadata sidecar."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for u, v in graph.edges():
            fh.write(f"{u}\t{v}\n")

    tallies: dict[str, int] = {}
    for v, label in graph.labels.items():
        key = f"{v.kind.value}_{label.value}"
        tallies[key] = tallies.get(key, 0) + 1
    kind_counts: dict[str, int] = {}
    for v in graph.adjacency:
        kind_counts[v.kind.value] = kind_counts.get(v.kind.value, 0) + 1
    sidecar = {
        "vertices": sum(kind_counts.values()),
        "edges": graph.num_edges(),
        "kind_counts": kind_counts,
        "label_tallies": tallies,
        "observed": sorted(str(v) for v in graph.observed),
        "labels": {str(v): label.value for v, label in sorted(graph.labels.items(), key=lambda kv: _vertex_sort_key(kv[0]))},
        "build_meta": graph.meta,
    }
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    # sort_keys keeps the sidecar byte-stable across build/load roundtrips
    meta_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_graph(path: str | Path) -> HeteroGraph:
    """Read a graph written by save_graph."""
    path = Path(path)
    graph = HeteroGraph()
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            left, _, right = line.partition("\t")
            graph.add_edge(VertexId.from_string(left), VertexId.from_string(right))
    meta_path = path.with_suffix(path.suffix + ".meta.json")
    if meta_path.exists():
        sidecar = json.loads(meta_path.read_text(encoding="utf-8"))
        observed = set(sidecar.get("observed", []))
        for text, value in sidecar.get("labels", {}).items():
            v = VertexId.from_string(text)
            graph.labels[v] = Label(value)
            if text in observed:
                graph.observed.add(v)
        graph.meta = sidecar.get("build_meta", {})
    return graph
