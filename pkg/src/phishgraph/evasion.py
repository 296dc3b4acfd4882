"""Evasion transformations: swap parts of selected test phishing URLs with
parts donated by benign corpus URLs, and log every change.

The seven methods target the domain, path and query parts in all non-empty
combinations. Each targeted part draws its own donor independently; donors
are sampled uniformly without replacement and the pool reshuffles only when
exhausted, so a donor repeats only when donors are scarce.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .corpus import Label, UrlRecord, make_record
from .errors import NoDonor
from .lexer import unparse_url

if TYPE_CHECKING:
    from .evaluation import Metrics
    from .pipeline import PipelineConfig

logger = logging.getLogger(__name__)


class TargetPart(Enum):
    DOMAIN = "domain"
    PATH = "path"
    QUERY = "query"


class EvasionMethod(Enum):
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"
    M4 = "m4"
    M5 = "m5"
    M6 = "m6"
    M7 = "m7"

    @property
    def parts(self) -> tuple[TargetPart, ...]:
        return _METHOD_PARTS[self]


_METHOD_PARTS: dict[EvasionMethod, tuple[TargetPart, ...]] = {
    EvasionMethod.M1: (TargetPart.DOMAIN,),
    EvasionMethod.M2: (TargetPart.PATH,),
    EvasionMethod.M3: (TargetPart.QUERY,),
    EvasionMethod.M4: (TargetPart.DOMAIN, TargetPart.PATH),
    EvasionMethod.M5: (TargetPart.DOMAIN, TargetPart.QUERY),
    EvasionMethod.M6: (TargetPart.PATH, TargetPart.QUERY),
    EvasionMethod.M7: (TargetPart.DOMAIN, TargetPart.PATH, TargetPart.QUERY),
}


@dataclass(frozen=True)
class EvasionSpec:
    """Which method to apply, to what fraction of test phishing URLs."""

    method: EvasionMethod
    ratio: float
    seed: int

    def __post_init__(self) -> None:
        # ratio 0 is the documented no-evasion limit
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError("ratio must be in [0, 1]")


@dataclass(frozen=True)
class PartChange:
    part: TargetPart
    original: str
    replacement: str
    donor_url: str


@dataclass(frozen=True)
class EvasionEntry:
    original_url: str
    modified_url: str
    changes: tuple[PartChange, ...]


@dataclass
class EvasionLog:
    method: EvasionMethod
    ratio: float
    seed: int
    selected: list[str] = field(default_factory=list)
    entries: list[EvasionEntry] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def url_map(self) -> dict[str, str]:
        """original raw -> modified raw for every evaded URL."""
        return {e.original_url: e.modified_url for e in self.entries}

    def write_json_lines(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            header = {
                "type": "header",
                "method": self.method.value,
                "ratio": self.ratio,
                "seed": self.seed,
                "selected": len(self.selected),
                "modified": len(self.entries),
                "skipped": len(self.skipped),
            }
            fh.write(json.dumps(header) + "\n")
            for entry in self.entries:
                fh.write(
                    json.dumps(
                        {
                            "type": "entry",
                            "url": entry.original_url,
                            "result": entry.modified_url,
                            "changes": [
                                {
                                    "part": c.part.value,
                                    "original": c.original,
                                    "replacement": c.replacement,
                                    "donor": c.donor_url,
                                }
                                for c in entry.changes
                            ],
                        }
                    )
                    + "\n"
                )
            for url, reason in self.skipped:
                fh.write(json.dumps({"type": "skipped", "url": url, "reason": reason}) + "\n")
        return path


class _DonorPool:
    """Uniform without-replacement sampler that reshuffles when drained."""

    def __init__(self, items: Sequence[tuple[str, str]], rng: random.Random):
        self._items = list(items)
        self._rng = rng
        self._queue: list[tuple[str, str]] = []

    def __bool__(self) -> bool:
        return bool(self._items)

    def draw(self) -> tuple[str, str]:
        if not self._queue:
            self._queue = list(self._items)
            self._rng.shuffle(self._queue)
        return self._queue.pop()


def _part_value(record: UrlRecord, part: TargetPart) -> str:
    if part is TargetPart.DOMAIN:
        return record.parts.host
    if part is TargetPart.PATH:
        return record.parts.path
    return record.parts.query or ""


def _donor_pools(
    records: Iterable[UrlRecord], rng: random.Random
) -> dict[TargetPart, _DonorPool]:
    domain: list[tuple[str, str]] = []
    path: list[tuple[str, str]] = []
    query: list[tuple[str, str]] = []
    for record in records:
        if record.label is not Label.BENIGN:
            continue
        domain.append((record.parts.host, record.raw))
        if record.parts.path not in ("", "/"):
            path.append((record.parts.path, record.raw))
        if record.parts.query:
            query.append((record.parts.query, record.raw))
    return {
        TargetPart.DOMAIN: _DonorPool(domain, rng),
        TargetPart.PATH: _DonorPool(path, rng),
        TargetPart.QUERY: _DonorPool(query, rng),
    }


def apply_evasion(
    records: list[UrlRecord], test_phishy: Iterable[str], spec: EvasionSpec
) -> tuple[list[UrlRecord], EvasionLog]:
    """Evade ceil(ratio * |test_phishy|) URLs; return (new records, log).

    A selected URL missing a required donor pool is skipped and logged;
    NoDonor is raised only when every selected URL had to be skipped.
    Records not selected are returned unchanged (same objects).
    """
    test_phishy = set(test_phishy)
    by_raw = {r.raw: r for r in records}
    missing = test_phishy - by_raw.keys()
    if missing:
        raise ValueError(f"test_phishy contains URLs absent from records: {sorted(missing)[:3]}")

    rng = random.Random(spec.seed)
    log = EvasionLog(method=spec.method, ratio=spec.ratio, seed=spec.seed)
    count = math.ceil(spec.ratio * len(test_phishy))
    if count == 0:
        return list(records), log

    selection = rng.sample(sorted(test_phishy), count)
    log.selected = list(selection)
    pools = _donor_pools(records, rng)

    replacements: dict[str, UrlRecord] = {}
    for raw in selection:
        required = spec.method.parts
        empty = [p for p in required if not pools[p]]
        if empty:
            reason = "no benign donors for " + ", ".join(p.value for p in empty)
            log.skipped.append((raw, reason))
            logger.warning("skipping %s: %s", raw, reason)
            continue
        record = by_raw[raw]
        new_parts = record.parts
        changes: list[PartChange] = []
        for part in required:
            donated, donor_raw = pools[part].draw()
            changes.append(
                PartChange(
                    part=part,
                    original=_part_value(record, part),
                    replacement=donated,
                    donor_url=donor_raw,
                )
            )
            if part is TargetPart.DOMAIN:
                new_parts = dataclasses.replace(new_parts, host=donated)
            elif part is TargetPart.PATH:
                new_parts = dataclasses.replace(new_parts, path=donated)
            else:
                new_parts = dataclasses.replace(new_parts, query=donated)
        modified = make_record(
            unparse_url(new_parts), label=record.label, timestamp=record.timestamp
        )
        replacements[raw] = modified
        log.entries.append(
            EvasionEntry(
                original_url=raw,
                modified_url=modified.raw,
                changes=tuple(changes),
            )
        )

    if count > 0 and len(log.skipped) == count:
        raise NoDonor(
            f"every selected URL lacked donors for {spec.method.value}; "
            "benign corpus has no usable parts"
        )

    out = [replacements.get(r.raw, r) for r in records]
    return out, log


def rebuild_and_evaluate(
    records: list[UrlRecord],
    config: "PipelineConfig",
    train_urls: set[str],
    test_truth: Mapping[str, Label],
) -> "Metrics":
    """Rerun segmentation, graph build, embedding and inference on a
    (possibly evaded) corpus and score ALL test URLs.

    The original split cannot be re-derived from modified records, so the
    caller passes the training raws and the test truth (keyed by the raws
    as they appear in `records`, i.e. post-evasion).
    """
    from . import pipeline
    from .evaluation import score

    prepared = pipeline.prepared_from_records(config, records, train_urls, dict(test_truth))
    artifacts = pipeline.build_artifacts(
        config, prepared, with_embeddings=config.mode == "bpe"
    )
    outcome = pipeline.infer_method(config, artifacts, config.mode)
    predictions = {raw: outcome.predictions[raw] for raw in prepared.test_truth}
    return score(predictions, prepared.test_truth)
