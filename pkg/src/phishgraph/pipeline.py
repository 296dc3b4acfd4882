"""End-to-end orchestration: load, split, evade, build, embed, infer, score.

Every run writes its artifacts plus a manifest JSON capturing the resolved
configuration, environment versions and artifact digests. Anything that
legitimately varies between reruns of one configuration (wall-clock times,
cache hits) lives under the manifest's "timestamps" key, so two runs with
identical config and seed produce manifests identical outside that key.

The graph and the embedding table are cached under <out>/cache keyed by a
content digest of everything that determines them; a rerun with unchanged
inputs loads the cached artifact instead of recomputing it.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

import numba
import numpy as np

from ._version import __version__
from .corpus import (
    Label,
    ResolutionRecord,
    UrlRecord,
    load_blacklist,
    load_nameservers,
    load_resolutions,
    load_url_records,
    save_url_records,
)
from .embedding import (
    EmbeddingTable,
    SimilarityKind,
    WalkConfig,
    default_sigma,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .errors import MissingEmbedding, PhishGraphError
from .evaluation import Metrics, score
from .evasion import EvasionLog, EvasionSpec, apply_evasion
from .graph import (
    HeteroGraph,
    VertexId,
    VertexKind,
    apply_blacklists,
    build_graph,
    load_graph,
    save_graph,
    split_train_test,
)
from .inference import (
    CompatibilityConfig,
    Mode,
    classify,
    run_min_sum,
    run_rwr,
)
from .lexer import StopWordModel, apply_stop_words, fit_stop_words, segment

logger = logging.getLogger(__name__)

MODES = ("bpe", "pol", "rwr")
RWR_THRESHOLD = 0.5

_USE_CONFIG = object()


@dataclass
class PipelineConfig:
    """Resolved run configuration; the manifest echoes it verbatim."""

    urls: str
    seed: int
    resolutions: str | None = None
    nameservers: str | None = None
    blacklist_domains: str | None = None
    blacklist_ips: str | None = None
    split: float = 0.8
    embedding: str = "deepwalk"
    dim: int = 128
    sim: str = "cosine"
    sigma: float | None = None
    ths_pos: float = 0.7
    ths_neg: float = 0.7
    mode: str = "bpe"
    epsilon: float = 0.001
    iterations: int = 5
    evasion: EvasionSpec | None = None
    out_dir: str = "out"
    workers: int = 1
    cache: bool = True

    def validate(self) -> None:
        if not self.urls:
            raise ValueError("urls input path is required")
        for label, candidate in (
            ("urls", self.urls),
            ("resolutions", self.resolutions),
            ("nameservers", self.nameservers),
            ("blacklist-domains", self.blacklist_domains),
            ("blacklist-ips", self.blacklist_ips),
        ):
            if candidate and not Path(candidate).exists():
                raise FileNotFoundError(f"{label} file does not exist: {candidate}")
        if not 0.0 < self.split < 1.0:
            raise ValueError("split must be in (0,1)")
        if self.embedding != "deepwalk":
            raise ValueError(f"unknown embedding {self.embedding!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.sim not in ("cosine", "rbf"):
            raise ValueError("sim must be cosine or rbf")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.dim < 1 or self.iterations < 1 or self.workers < 1:
            raise ValueError("dim, iterations and workers must be >= 1")

    def walk_config(self) -> WalkConfig:
        return WalkConfig(seed=self.seed, dim=self.dim)

    def compat_config(self, sigma: float | None = None) -> CompatibilityConfig:
        return CompatibilityConfig(
            mode=Mode.POLONIUM if self.mode == "pol" else Mode.BPE,
            ths_pos=self.ths_pos,
            ths_neg=self.ths_neg,
            sim_kind=SimilarityKind(self.sim),
            sigma=sigma if sigma is not None else self.sigma,
            epsilon=self.epsilon,
        )

    def as_dict(self) -> dict:
        data = dataclasses.asdict(self)
        if self.evasion is not None:
            data["evasion"] = {
                "method": self.evasion.method.value,
                "ratio": self.evasion.ratio,
                "seed": self.evasion.seed,
            }
        return data


@dataclass
class PreparedRun:
    """Corpus and split context after optional evasion."""

    records: list[UrlRecord]
    resolutions: list[ResolutionRecord]
    nameservers: list[tuple[str, str]]
    blacklist_domains: frozenset[str]
    blacklist_ips: frozenset[str]
    train_urls: set[str]
    test_truth: dict[str, Label]
    test_unknown: list[str] = field(default_factory=list)
    evasion_log: EvasionLog | None = None

    def test_urls(self) -> list[str]:
        return sorted(self.test_truth) + sorted(self.test_unknown)

    def content_digest(self) -> str:
        h = hashlib.sha256()
        for record in sorted(self.records, key=lambda r: r.raw):
            h.update(
                f"record\t{record.raw}\t{record.label.value}\t{record.timestamp or ''}\n".encode()
            )
        for raw in sorted(self.train_urls):
            h.update(f"train\t{raw}\n".encode())
        for res in sorted(self.resolutions, key=lambda r: (r.domain, r.ip)):
            h.update(f"resolution\t{res.domain}\t{res.ip}\n".encode())
        for domain, ns in sorted(self.nameservers):
            h.update(f"nameserver\t{domain}\t{ns}\n".encode())
        for entry in sorted(self.blacklist_domains):
            h.update(f"blacklist_domain\t{entry}\n".encode())
        for entry in sorted(self.blacklist_ips):
            h.update(f"blacklist_ip\t{entry}\n".encode())
        return h.hexdigest()


@dataclass
class Artifacts:
    """Shared per-run artifacts: one graph and one embedding table."""

    prepared: PreparedRun
    stop_model: StopWordModel
    graph: HeteroGraph
    embeddings: EmbeddingTable | None
    sigma: float | None
    cache_status: dict[str, str] = field(default_factory=dict)


@dataclass
class InferenceOutcome:
    predictions: dict[str, Label]
    rows: list[dict]
    info: dict = field(default_factory=dict)


def prepare(config: PipelineConfig, evasion: object = _USE_CONFIG) -> PreparedRun:
    """Load inputs, split train/test, optionally evade test phishing URLs.

    Pass evasion=None to force a clean run even when the config carries an
    evasion spec; by default the config's spec applies.
    """
    spec = config.evasion if evasion is _USE_CONFIG else evasion
    records = load_url_records(config.urls)
    resolutions = load_resolutions(config.resolutions) if config.resolutions else []
    nameservers = load_nameservers(config.nameservers) if config.nameservers else []
    bl_domains = (
        load_blacklist(config.blacklist_domains) if config.blacklist_domains else frozenset()
    )
    bl_ips = load_blacklist(config.blacklist_ips) if config.blacklist_ips else frozenset()

    train, test = split_train_test(records, config.split, config.seed)
    train_urls = {r.raw for r in train}
    test_truth = {r.raw: r.label for r in test if r.label is not Label.UNKNOWN}
    test_unknown = [r.raw for r in test if r.label is Label.UNKNOWN]

    evasion_log = None
    if spec is not None:
        test_phishy = {raw for raw, label in test_truth.items() if label is Label.PHISHY}
        records, evasion_log = apply_evasion(records, test_phishy, spec)
        renamed = evasion_log.url_map()
        test_truth = {renamed.get(raw, raw): label for raw, label in test_truth.items()}

    return PreparedRun(
        records=records,
        resolutions=resolutions,
        nameservers=nameservers,
        blacklist_domains=bl_domains,
        blacklist_ips=bl_ips,
        train_urls=train_urls,
        test_truth=test_truth,
        test_unknown=test_unknown,
        evasion_log=evasion_log,
    )


def prepared_from_records(
    config: PipelineConfig,
    records: list[UrlRecord],
    train_urls: set[str],
    test_truth: dict[str, Label],
) -> PreparedRun:
    """Wrap an externally supplied (e.g. already evaded) corpus with the
    side inputs named by the config; no splitting or evasion happens here."""
    resolutions = load_resolutions(config.resolutions) if config.resolutions else []
    nameservers = load_nameservers(config.nameservers) if config.nameservers else []
    bl_domains = (
        load_blacklist(config.blacklist_domains) if config.blacklist_domains else frozenset()
    )
    bl_ips = load_blacklist(config.blacklist_ips) if config.blacklist_ips else frozenset()
    return PreparedRun(
        records=records,
        resolutions=resolutions,
        nameservers=nameservers,
        blacklist_domains=bl_domains,
        blacklist_ips=bl_ips,
        train_urls=set(train_urls),
        test_truth=dict(test_truth),
    )


def _embedding_digest(config: PipelineConfig, graph_digest: str) -> str:
    walk = json.dumps(dataclasses.asdict(config.walk_config()), sort_keys=True)
    payload = f"{graph_digest}\n{walk}\nworkers={config.workers}\n"
    return hashlib.sha256(payload.encode()).hexdigest()


def build_artifacts(
    config: PipelineConfig,
    prepared: PreparedRun,
    with_embeddings: bool = True,
) -> Artifacts:
    """Fit stop words, build (or load cached) graph and embeddings."""
    cache_dir = Path(config.out_dir) / "cache" if config.cache else None
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
    status: dict[str, str] = {}

    stop_model = fit_stop_words(segment(r.parts) for r in prepared.records)

    graph_digest = prepared.content_digest()
    graph: HeteroGraph | None = None
    graph_cache = cache_dir / f"graph-{graph_digest}.tsv" if cache_dir else None
    if graph_cache is not None and graph_cache.exists():
        graph = load_graph(graph_cache)
        status["graph"] = "hit"
    if graph is None:
        graph = build_graph(
            prepared.records,
            resolutions=prepared.resolutions,
            nameservers=prepared.nameservers,
            stop_model=stop_model,
            observed_urls=prepared.train_urls,
        )
        apply_blacklists(graph, prepared.blacklist_domains, prepared.blacklist_ips)
        if graph_cache is not None:
            save_graph(graph, graph_cache)
            status["graph"] = "miss"
        else:
            status["graph"] = "disabled"

    embeddings: EmbeddingTable | None = None
    sigma: float | None = None
    if with_embeddings:
        emb_digest = _embedding_digest(config, graph_digest)
        emb_cache = cache_dir / f"embeddings-{emb_digest}.tsv" if cache_dir else None
        if emb_cache is not None and emb_cache.exists():
            embeddings = load_embeddings(emb_cache)
            status["embeddings"] = "hit"
        if embeddings is None:
            embeddings = train_embeddings(graph, config.walk_config(), workers=config.workers)
            if emb_cache is not None:
                save_embeddings(embeddings, emb_cache)
                status["embeddings"] = "miss"
            else:
                status["embeddings"] = "disabled"
        if config.sim == "rbf":
            sigma = config.sigma if config.sigma is not None else default_sigma(
                embeddings, seed=config.seed
            )
    else:
        status["embeddings"] = "skipped"

    return Artifacts(
        prepared=prepared,
        stop_model=stop_model,
        graph=graph,
        embeddings=embeddings,
        sigma=sigma,
        cache_status=status,
    )


def infer_targets(
    graph: HeteroGraph,
    embeddings: EmbeddingTable | None,
    method: str,
    targets: Iterable[str],
    compat: CompatibilityConfig,
    iterations: int = 5,
    seed: int = 0,
) -> InferenceOutcome:
    """Classify the given URL raws with one method; returns predictions
    plus the JSON-ready report rows."""
    if method not in MODES:
        raise ValueError(f"method must be one of {MODES}")
    targets = list(targets)

    if method == "rwr":
        scores = run_rwr(graph, seed=seed)
        predictions: dict[str, Label] = {}
        rows = []
        for raw in targets:
            vertex = VertexId(VertexKind.URL, raw)
            value = scores.get(vertex, 0.0)
            label = Label.PHISHY if value >= RWR_THRESHOLD else Label.BENIGN
            predictions[raw] = label
            rows.append(
                {"vertex": str(vertex), "predicted": label.value, "score": value}
            )
        return InferenceOutcome(predictions=predictions, rows=rows)

    if method == "bpe" and embeddings is None:
        raise MissingEmbedding("bpe inference needs embeddings; rebuild artifacts with them")
    emb = embeddings if method == "bpe" else None
    state = run_min_sum(graph, emb, compat, iterations=iterations)
    vertex_map = {VertexId(VertexKind.URL, raw): raw for raw in targets}
    assigned = classify(state, vertex_map.keys())
    predictions = {vertex_map[v]: label for v, label in assigned.items()}
    rows = []
    for raw in targets:
        vertex = VertexId(VertexKind.URL, raw)
        if vertex not in assigned:
            continue
        cost_phishy, cost_benign = state.cost(vertex)
        rows.append(
            {
                "vertex": str(vertex),
                "predicted": assigned[vertex].value,
                "cost_phishy": cost_phishy,
                "cost_benign": cost_benign,
            }
        )
    return InferenceOutcome(
        predictions=predictions,
        rows=rows,
        info={"iterations_run": state.iterations_run},
    )


def infer_method(
    config: PipelineConfig, artifacts: Artifacts, method: str
) -> InferenceOutcome:
    """Classify the prepared test URLs with one method on shared artifacts."""
    compat = dataclasses.replace(
        config.compat_config(artifacts.sigma),
        mode=Mode.POLONIUM if method == "pol" else Mode.BPE,
    )
    return infer_targets(
        artifacts.graph,
        artifacts.embeddings,
        method,
        artifacts.prepared.test_urls(),
        compat=compat,
        iterations=config.iterations,
        seed=config.seed,
    )


@dataclass
class PipelineResult:
    metrics: Metrics
    out_dir: Path
    manifest_path: Path
    manifest: dict


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _artifact_entry(out_dir: Path, path: Path) -> dict:
    return {
        "path": str(path.relative_to(out_dir)),
        "sha256": _sha256_file(path),
        "bytes": path.stat().st_size,
    }


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_stop_words(model: StopWordModel, path: Path) -> Path:
    payload = {
        "threshold_frequency": model.threshold_frequency,
        "stop_words": sorted(model.stop_words),
        "distinct_words": len(model.frequency_table),
        "elbow_index": model.elbow_index,
        "curve_head": list(model.curve[:50]),
    }
    return _write_json(path, payload)


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Full run: prepare, build, embed, infer, score, manifest.

    Returns the metrics over the labeled test URLs; artifacts land under
    config.out_dir.
    """
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    walls: dict[str, float] = {}

    tick = time.perf_counter()
    prepared = prepare(config)
    walls["prepare_ms"] = (time.perf_counter() - tick) * 1000.0

    tick = time.perf_counter()
    artifacts = build_artifacts(config, prepared, with_embeddings=config.mode == "bpe")
    walls["build_embed_ms"] = (time.perf_counter() - tick) * 1000.0

    tick = time.perf_counter()
    outcome = infer_method(config, artifacts, config.mode)
    walls["infer_ms"] = (time.perf_counter() - tick) * 1000.0

    truth = prepared.test_truth
    scoreable = {raw: outcome.predictions[raw] for raw in truth}
    metrics = score(scoreable, truth)

    paths: dict[str, Path] = {}
    paths["stop_words"] = write_stop_words(artifacts.stop_model, out_dir / "stopwords.json")
    paths["graph"] = save_graph(artifacts.graph, out_dir / "graph.tsv")
    paths["graph_meta"] = out_dir / "graph.tsv.meta.json"
    if artifacts.embeddings is not None:
        paths["embeddings"] = save_embeddings(artifacts.embeddings, out_dir / "embeddings.tsv")
    if prepared.evasion_log is not None:
        paths["evasion_log"] = prepared.evasion_log.write_json_lines(
            out_dir / "evasion_log.jsonl"
        )
        paths["evaded_corpus"] = save_url_records(prepared.records, out_dir / "evaded.csv")

    report = {
        "config": {
            "mode": config.mode,
            "ths_pos": config.ths_pos,
            "ths_neg": config.ths_neg,
            "sim": config.sim,
            "sigma": artifacts.sigma if artifacts.sigma is not None else config.sigma,
            "epsilon": config.epsilon,
            "iterations": config.iterations,
            "seed": config.seed,
            "dim": config.dim,
            "workers": config.workers,
        },
        "predictions": outcome.rows,
    }
    paths["predictions"] = _write_json(out_dir / "predictions.json", report)
    paths["metrics"] = _write_json(
        out_dir / "metrics.json",
        {"method": config.mode, **metrics.as_dict()},
    )

    inputs: dict[str, dict | None] = {}
    for name, candidate in (
        ("urls", config.urls),
        ("resolutions", config.resolutions),
        ("nameservers", config.nameservers),
        ("blacklist_domains", config.blacklist_domains),
        ("blacklist_ips", config.blacklist_ips),
    ):
        if candidate:
            p = Path(candidate)
            inputs[name] = {"path": str(candidate), "sha256": _sha256_file(p)}
        else:
            inputs[name] = None

    manifest = {
        "package": {"name": "phishgraph", "version": __version__},
        "config": config.as_dict(),
        "resolved": {"sigma": artifacts.sigma},
        "environment": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
        "inputs": inputs,
        "artifacts": {
            name: _artifact_entry(out_dir, path) for name, path in sorted(paths.items())
        },
        "counts": {
            "records": len(prepared.records),
            "train": len(prepared.train_urls),
            "test_labeled": len(prepared.test_truth),
            "test_unknown": len(prepared.test_unknown),
            "vertices": len(artifacts.graph.adjacency),
            "edges": artifacts.graph.num_edges(),
            "observed": len(artifacts.graph.observed),
            "stop_words": len(artifacts.stop_model.stop_words),
            "evaded": len(prepared.evasion_log.entries) if prepared.evasion_log else 0,
            "build_meta": artifacts.graph.meta,
        },
        "inference": outcome.info,
        "timestamps": {
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "wall_ms": walls,
            "cache": artifacts.cache_status,
        },
    }
    manifest_path = _write_json(out_dir / "manifest.json", manifest)

    return PipelineResult(
        metrics=metrics, out_dir=out_dir, manifest_path=manifest_path, manifest=manifest
    )
