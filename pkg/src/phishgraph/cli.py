"""Command line entry points.

Subcommands: segment, features, build, embed, infer, evade, eval, pipeline.
Options may come from flags or from a flat key=value config file (--config);
flags win. Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

from ._version import __version__
from .corpus import Label, load_blacklist, load_url_records, save_url_records
from .embedding import (
    SimilarityKind,
    WalkConfig,
    default_sigma,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .errors import PhishGraphError
from .evaluation import compare_methods
from .evasion import EvasionMethod, EvasionSpec, apply_evasion
from .features import default_resources, export_features
from .graph import VertexKind, load_graph, save_graph, split_train_test
from .inference import CompatibilityConfig, Mode
from .lexer import apply_stop_words, fit_stop_words, normalize_url, segment
from .pipeline import (
    MODES,
    PipelineConfig,
    build_artifacts,
    infer_targets,
    prepare,
    run_pipeline,
    write_stop_words,
    _write_json,
)

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Bad flags, bad config keys, or inconsistent options."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on its own; route through UsageError
    # so the contract (usage errors exit 1) holds
    def error(self, message: str) -> None:
        raise UsageError(message)


def _cast_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


_CASTS: dict[str, Callable[[str], object]] = {
    "input": str,
    "resolutions": str,
    "nameservers": str,
    "blacklist_domains": str,
    "blacklist_ips": str,
    "split": float,
    "seed": int,
    "embedding": str,
    "dim": int,
    "sim": str,
    "sigma": float,
    "ths_pos": float,
    "ths_neg": float,
    "mode": str,
    "epsilon": float,
    "iterations": int,
    "evasion": str,
    "evasion_ratio": float,
    "out": str,
    "workers": int,
    "cache": _cast_bool,
    "graph": str,
    "embeddings": str,
    "test": str,
    "methods": str,
}

_DEFAULTS: dict[str, object] = {
    "split": 0.8,
    "embedding": "deepwalk",
    "dim": 128,
    "sim": "cosine",
    "sigma": None,
    "ths_pos": 0.7,
    "ths_neg": 0.7,
    "mode": "bpe",
    "epsilon": 0.001,
    "iterations": 5,
    "evasion_ratio": 0.1,
    "out": "out",
    "workers": 1,
    "cache": True,
    "methods": "bpe,pol",
}


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key = key.strip().lower().replace("-", "_")
        if key not in _CASTS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


class _Options:
    """Flag values merged over config-file values merged over defaults."""

    def __init__(self, args: argparse.Namespace):
        file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
        self._merged: dict[str, object] = {}
        for key, cast in _CASTS.items():
            flag = getattr(args, key, None)
            if flag is not None:
                self._merged[key] = flag
            elif key in file_values:
                self._merged[key] = cast(file_values[key])

    def get(self, key: str) -> object:
        return self._merged.get(key, _DEFAULTS.get(key))

    def require(self, key: str, flag: str) -> object:
        value = self.get(key)
        if value is None:
            raise UsageError(f"{flag} is required")
        return value

    def choice(self, key: str, allowed: Sequence[str]) -> str:
        value = self.get(key)
        if value not in allowed:
            raise UsageError(f"--{key.replace('_', '-')} must be one of {', '.join(allowed)}")
        return value


def _out_dir(opts: _Options) -> Path:
    out = Path(str(opts.get("out")))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pipeline_config(
    opts: _Options, evasion: EvasionSpec | None = None
) -> PipelineConfig:
    cfg = PipelineConfig(
        urls=str(opts.require("input", "--input")),
        seed=int(opts.require("seed", "--seed")),
        resolutions=opts.get("resolutions"),
        nameservers=opts.get("nameservers"),
        blacklist_domains=opts.get("blacklist_domains"),
        blacklist_ips=opts.get("blacklist_ips"),
        split=float(opts.get("split")),
        embedding=opts.choice("embedding", ("deepwalk",)),
        dim=int(opts.get("dim")),
        sim=opts.choice("sim", ("cosine", "rbf")),
        sigma=opts.get("sigma"),
        ths_pos=float(opts.get("ths_pos")),
        ths_neg=float(opts.get("ths_neg")),
        mode=opts.choice("mode", MODES),
        epsilon=float(opts.get("epsilon")),
        iterations=int(opts.get("iterations")),
        evasion=evasion,
        out_dir=str(opts.get("out")),
        workers=int(opts.get("workers")),
        cache=bool(opts.get("cache")),
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _evasion_spec(opts: _Options, method_text: str) -> EvasionSpec:
    try:
        method = EvasionMethod(method_text.lower())
    except ValueError:
        raise UsageError(f"unknown evasion method {method_text!r}") from None
    ratio = float(opts.get("evasion_ratio"))
    try:
        return EvasionSpec(method=method, ratio=ratio, seed=int(opts.require("seed", "--seed")))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_segment(opts: _Options) -> int:
    records = load_url_records(str(opts.require("input", "--input")))
    out = _out_dir(opts)
    word_lists = [segment(r.parts) for r in records]
    model = fit_stop_words(word_lists)
    write_stop_words(model, out / "stopwords.json")
    with (out / "words.jsonl").open("w", encoding="utf-8") as fh:
        for record, words in zip(records, word_lists):
            kept = apply_stop_words(words, model)
            fh.write(
                json.dumps(
                    {
                        "url": record.raw,
                        "words": list(words.words),
                        "parts": [p.value for p in words.source_parts],
                        "kept": list(kept.words),
                    }
                )
                + "\n"
            )
    print(
        f"segmented {len(records)} urls: {len(model.frequency_table)} distinct words, "
        f"{len(model.stop_words)} stop words -> {out}"
    )
    return 0


def cmd_features(opts: _Options) -> int:
    records = load_url_records(str(opts.require("input", "--input")))
    out = _out_dir(opts)
    bl_domains: frozenset[str] = frozenset()
    bl_ips: frozenset[str] = frozenset()
    if opts.get("blacklist_domains"):
        bl_domains = load_blacklist(str(opts.get("blacklist_domains")))
    if opts.get("blacklist_ips"):
        bl_ips = load_blacklist(str(opts.get("blacklist_ips")))
    resources = default_resources(blacklist_domains=bl_domains, blacklist_ips=bl_ips)
    path = export_features(records, resources, out / "features.csv")
    print(f"wrote {len(records)} feature rows -> {path}")
    return 0


def _write_split(out: Path, train_urls: set[str], test_truth: dict[str, Label],
                 test_unknown: Sequence[str]) -> Path:
    payload = {
        "train": sorted(train_urls),
        "test": {
            **{raw: label.value for raw, label in test_truth.items()},
            **{raw: Label.UNKNOWN.value for raw in test_unknown},
        },
    }
    return _write_json(out / "split.json", payload)


def cmd_build(opts: _Options) -> int:
    cfg = _pipeline_config(opts)
    out = _out_dir(opts)
    prepared = prepare(cfg, evasion=None)
    artifacts = build_artifacts(cfg, prepared, with_embeddings=False)
    write_stop_words(artifacts.stop_model, out / "stopwords.json")
    save_graph(artifacts.graph, out / "graph.tsv")
    _write_split(out, prepared.train_urls, prepared.test_truth, prepared.test_unknown)
    print(
        f"built graph: {len(artifacts.graph.adjacency)} vertices, "
        f"{artifacts.graph.num_edges()} edges, {len(artifacts.graph.observed)} observed -> {out}"
    )
    return 0


def cmd_embed(opts: _Options) -> int:
    graph = load_graph(str(opts.require("graph", "--graph")))
    out = _out_dir(opts)
    cfg = WalkConfig(seed=int(opts.require("seed", "--seed")), dim=int(opts.get("dim")))
    opts.choice("embedding", ("deepwalk",))
    table = train_embeddings(graph, cfg, workers=int(opts.get("workers")))
    path = save_embeddings(table, out / "embeddings.tsv")
    print(f"trained {len(table)} vectors of dim {table.dim} -> {path}")
    return 0


def cmd_infer(opts: _Options) -> int:
    graph = load_graph(str(opts.require("graph", "--graph")))
    mode = opts.choice("mode", MODES)
    out = _out_dir(opts)
    seed = int(opts.require("seed", "--seed"))
    iterations = int(opts.get("iterations"))

    embeddings = None
    if opts.get("embeddings"):
        embeddings = load_embeddings(str(opts.get("embeddings")))
    if mode == "bpe" and embeddings is None:
        raise UsageError("--embeddings is required for bpe mode")

    sigma = opts.get("sigma")
    if mode == "bpe" and opts.get("sim") == "rbf" and sigma is None:
        sigma = default_sigma(embeddings, seed=seed)
    compat = CompatibilityConfig(
        mode=Mode.POLONIUM if mode == "pol" else Mode.BPE,
        ths_pos=float(opts.get("ths_pos")),
        ths_neg=float(opts.get("ths_neg")),
        sim_kind=SimilarityKind(opts.choice("sim", ("cosine", "rbf"))),
        sigma=sigma,
        epsilon=float(opts.get("epsilon")),
    )

    if opts.get("test"):
        targets = []
        with Path(str(opts.get("test"))).open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    targets.append(normalize_url(line))
    else:
        targets = sorted(
            v.key
            for v in graph.adjacency
            if v.kind is VertexKind.URL and v not in graph.observed
        )

    outcome = infer_targets(
        graph, embeddings, mode, targets, compat=compat, iterations=iterations, seed=seed
    )
    report = {
        "config": {
            "mode": mode,
            "ths_pos": compat.ths_pos,
            "ths_neg": compat.ths_neg,
            "sim": compat.sim_kind.value,
            "sigma": compat.sigma,
            "epsilon": compat.epsilon,
            "iterations": iterations,
            "seed": seed,
        },
        "predictions": outcome.rows,
    }
    path = _write_json(out / "predictions.json", report)
    phishy = sum(1 for label in outcome.predictions.values() if label is Label.PHISHY)
    print(f"classified {len(outcome.predictions)} urls ({phishy} phishy) -> {path}")
    return 0


def cmd_evade(opts: _Options) -> int:
    spec = _evasion_spec(opts, str(opts.require("evasion", "--evasion")))
    records = load_url_records(str(opts.require("input", "--input")))
    out = _out_dir(opts)
    split = float(opts.get("split"))
    seed = int(opts.require("seed", "--seed"))
    train, test = split_train_test(records, split, seed)
    test_phishy = {r.raw for r in test if r.label is Label.PHISHY}

    modified, log = apply_evasion(records, test_phishy, spec)
    renamed = log.url_map()
    test_truth = {
        renamed.get(r.raw, r.raw): r.label for r in test if r.label is not Label.UNKNOWN
    }
    test_unknown = [r.raw for r in test if r.label is Label.UNKNOWN]

    save_url_records(modified, out / "evaded.csv")
    log.write_json_lines(out / "evasion_log.jsonl")
    _write_split(out, {r.raw for r in train}, test_truth, test_unknown)
    print(
        f"evaded {len(log.entries)}/{len(log.selected)} selected urls "
        f"({spec.method.value}, ratio {spec.ratio:g}) -> {out}"
    )
    return 0


def cmd_eval(opts: _Options) -> int:
    methods = [m.strip() for m in str(opts.get("methods")).split(",") if m.strip()]
    for method in methods:
        if method not in MODES:
            raise UsageError(f"unknown method {method!r}; choose from {', '.join(MODES)}")
    specs: list[EvasionSpec | None] = []
    evasion_text = opts.get("evasion")
    if evasion_text:
        for token in str(evasion_text).split(","):
            token = token.strip().lower()
            if not token:
                continue
            specs.append(None if token == "none" else _evasion_spec(opts, token))
    if not specs:
        specs = [None]

    cfg = _pipeline_config(opts)
    out = _out_dir(opts)
    path = compare_methods(cfg, methods, specs, out / "comparison.csv")
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    _write_json(out / "comparison.json", {"rows": rows})
    print(f"wrote {len(rows)} comparison rows -> {path}")
    return 0


def cmd_pipeline(opts: _Options) -> int:
    evasion = None
    if opts.get("evasion"):
        evasion = _evasion_spec(opts, str(opts.get("evasion")))
    cfg = _pipeline_config(opts, evasion=evasion)
    result = run_pipeline(cfg)
    m = result.metrics
    print(
        f"{cfg.mode}: f1 {m.f1:.4f}, recall {m.recall_phishy:.4f}, "
        f"precision {m.precision_phishy:.4f}, accuracy {m.accuracy:.4f}, fpr {m.fpr:.4f}"
    )
    print(f"manifest -> {result.manifest_path}")
    return 0


_COMMANDS: dict[str, Callable[[_Options], int]] = {
    "segment": cmd_segment,
    "features": cmd_features,
    "build": cmd_build,
    "embed": cmd_embed,
    "infer": cmd_infer,
    "evade": cmd_evade,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
}


def _add_common(parser: argparse.ArgumentParser, *names: str) -> None:
    spec: dict[str, dict] = {
        "input": {"help": "URL corpus file (csv with url,label or one URL per line)"},
        "resolutions": {"help": "domain,ip[,timestamp] CSV"},
        "nameservers": {"help": "domain,ns CSV"},
        "blacklist-domains": {"help": "blacklisted domains, one per line"},
        "blacklist-ips": {"help": "blacklisted IPs, one per line"},
        "split": {"type": float, "help": "train fraction (default 0.8)"},
        "seed": {"type": int, "help": "master random seed (required)"},
        "embedding": {"help": "embedding algorithm (deepwalk)"},
        "dim": {"type": int, "help": "embedding dimension (default 128)"},
        "sim": {"help": "similarity kind: cosine or rbf"},
        "sigma": {"type": float, "help": "rbf bandwidth (default: median heuristic)"},
        "ths-pos": {"type": float, "help": "same-label potential cap (default 0.7)"},
        "ths-neg": {"type": float, "help": "different-label potential floor (default 0.7)"},
        "mode": {"help": "inference method: bpe, pol or rwr"},
        "epsilon": {"type": float, "help": "polonium epsilon (default 0.001)"},
        "iterations": {"type": int, "help": "message passing iterations (default 5)"},
        "evasion": {"help": "evasion method m1..m7"},
        "evasion-ratio": {"type": float, "help": "fraction of test phishing URLs (default 0.1)"},
        "out": {"help": "output directory (default ./out)"},
        "workers": {"type": int, "help": "parallel workers; 1 = bitwise deterministic"},
        "graph": {"help": "graph TSV from the build step"},
        "embeddings": {"help": "embeddings TSV from the embed step"},
        "test": {"help": "file with URLs to classify, one per line"},
        "methods": {"help": "comma-separated methods for eval (default bpe,pol)"},
        "cache": {"action": "store_true", "default": None, "help": "enable artifact cache"},
        "no-cache": {"action": "store_false", "dest": "cache", "default": None,
                     "help": "disable artifact cache"},
    }
    for name in names:
        parser.add_argument(f"--{name}", **spec[name])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phishgraph", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name: str, help_text: str, *flags: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat key=value config file; flags win")
        _add_common(p, *flags)
        return p

    add("segment", "segment URLs into words and fit the stop-word model",
        "input", "out")
    add("features", "export the lexical feature matrix as CSV",
        "input", "blacklist-domains", "blacklist-ips", "out")
    add("build", "split the corpus and construct the graph",
        "input", "resolutions", "nameservers", "blacklist-domains", "blacklist-ips",
        "split", "seed", "out", "cache", "no-cache")
    add("embed", "train vertex embeddings over a built graph",
        "graph", "embedding", "dim", "seed", "workers", "out")
    add("infer", "run message passing (or rwr) over built artifacts",
        "graph", "embeddings", "mode", "sim", "sigma", "ths-pos", "ths-neg",
        "epsilon", "iterations", "seed", "test", "out")
    add("evade", "apply an evasion method to test phishing URLs",
        "input", "split", "seed", "evasion", "evasion-ratio", "out")
    add("eval", "compare methods across evasion settings",
        "input", "resolutions", "nameservers", "blacklist-domains", "blacklist-ips",
        "split", "seed", "embedding", "dim", "sim", "sigma", "ths-pos", "ths-neg",
        "epsilon", "iterations", "evasion", "evasion-ratio", "methods", "out",
        "workers", "cache", "no-cache")
    add("pipeline", "run the full pipeline end to end",
        "input", "resolutions", "nameservers", "blacklist-domains", "blacklist-ips",
        "split", "seed", "embedding", "dim", "sim", "sigma", "ths-pos", "ths-neg",
        "mode", "epsilon", "iterations", "evasion", "evasion-ratio", "out",
        "workers", "cache", "no-cache")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help / --version exit here with code 0
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1

    try:
        opts = _Options(args)
        return _COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PhishGraphError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
