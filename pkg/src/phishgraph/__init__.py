"""Phishing URL detection over a heterogeneous URL/domain/IP/word network:
segmentation, graph construction, random-walk embeddings, similarity-gated
min-sum message passing, evasion simulation and evaluation."""

from ._version import __version__
from .corpus import (
    Label,
    ResolutionRecord,
    UrlRecord,
    load_blacklist,
    load_nameservers,
    load_resolutions,
    load_url_records,
    make_record,
    save_url_records,
)
from .embedding import (
    EmbeddingTable,
    SimilarityKind,
    WalkConfig,
    default_sigma,
    load_embeddings,
    propagate_mean_vectors,
    save_embeddings,
    similarity,
    train_embeddings,
)
from .errors import (
    ConflictingLabel,
    DegenerateCorpus,
    EmptyGraph,
    EmptyTestSet,
    InsufficientData,
    MalformedRecord,
    MalformedUrl,
    MissingEmbedding,
    MissingResource,
    NoDonor,
    NoObservedVertices,
    PhishGraphError,
    UnknownVertex,
)
from .evaluation import Metrics, compare_methods, score
from .evasion import (
    EvasionLog,
    EvasionMethod,
    EvasionSpec,
    apply_evasion,
    rebuild_and_evaluate,
)
from .features import (
    FeatureResources,
    FeatureVector,
    LengthClass,
    default_resources,
    export_features,
    extract_features,
)
from .fixtures import (
    EVASION_SEED,
    SEPARABLE_SEED,
    evasion_corpus,
    fixture_path,
    separable_corpus,
)
from .graph import (
    HeteroGraph,
    VertexId,
    VertexKind,
    apply_blacklists,
    build_graph,
    load_graph,
    save_graph,
    split_train_test,
    url_vertex,
)
from .inference import (
    CompatibilityConfig,
    InferenceState,
    Mode,
    classify,
    edge_potential,
    run_min_sum,
    run_rwr,
    total_assignment_cost,
)
from .lexer import (
    StopWordModel,
    UrlParts,
    WordList,
    apply_stop_words,
    fit_stop_words,
    normalize_url,
    parse_url,
    segment,
    unparse_url,
)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline

__all__ = [
    "__version__",
    "Label",
    "ResolutionRecord",
    "UrlRecord",
    "load_blacklist",
    "load_nameservers",
    "load_resolutions",
    "load_url_records",
    "make_record",
    "save_url_records",
    "EmbeddingTable",
    "SimilarityKind",
    "WalkConfig",
    "default_sigma",
    "load_embeddings",
    "propagate_mean_vectors",
    "save_embeddings",
    "similarity",
    "train_embeddings",
    "ConflictingLabel",
    "DegenerateCorpus",
    "EmptyGraph",
    "EmptyTestSet",
    "InsufficientData",
    "MalformedRecord",
    "MalformedUrl",
    "MissingEmbedding",
    "MissingResource",
    "NoDonor",
    "NoObservedVertices",
    "PhishGraphError",
    "UnknownVertex",
    "Metrics",
    "compare_methods",
    "score",
    "EvasionLog",
    "EvasionMethod",
    "EvasionSpec",
    "apply_evasion",
    "rebuild_and_evaluate",
    "FeatureResources",
    "FeatureVector",
    "LengthClass",
    "default_resources",
    "export_features",
    "extract_features",
    "EVASION_SEED",
    "SEPARABLE_SEED",
    "evasion_corpus",
    "fixture_path",
    "separable_corpus",
    "HeteroGraph",
    "VertexId",
    "VertexKind",
    "apply_blacklists",
    "build_graph",
    "load_graph",
    "save_graph",
    "split_train_test",
    "url_vertex",
    "CompatibilityConfig",
    "InferenceState",
    "Mode",
    "classify",
    "edge_potential",
    "run_min_sum",
    "run_rwr",
    "total_assignment_cost",
    "StopWordModel",
    "UrlParts",
    "WordList",
    "apply_stop_words",
    "fit_stop_words",
    "normalize_url",
    "parse_url",
    "segment",
    "unparse_url",
    "PipelineConfig",
    "PipelineResult",
    "run_pipeline",
]
