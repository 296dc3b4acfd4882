"""URL corpus records and file loaders (URLs, resolutions, name servers, blacklists)."""

from __future__ import annotations

import csv
import ipaddress
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ConflictingLabel, MalformedRecord, MalformedUrl
from .lexer import UrlParts, normalize_url, parse_url

logger = logging.getLogger(__name__)


class Label(Enum):
    PHISHY = "phishy"
    BENIGN = "benign"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class UrlRecord:
    """One corpus URL: normalized raw string, parsed parts, label."""

    raw: str
    parts: UrlParts
    label: Label
    timestamp: str | None = None


@dataclass(frozen=True)
class ResolutionRecord:
    """One historical domain-to-IP resolution."""

    domain: str
    ip: str
    timestamp: str | None = None


def make_record(url: str, label: Label = Label.UNKNOWN, timestamp: str | None = None) -> UrlRecord:
    parts = parse_url(url)
    return UrlRecord(raw=normalize_url(url), parts=parts, label=label, timestamp=timestamp)


def _parse_label(text: str) -> Label:
    try:
        return Label(text.strip().lower())
    except ValueError:
        raise MalformedRecord(f"unknown label {text!r}") from None


def _dedupe_records(records: list[UrlRecord], path: Path) -> list[UrlRecord]:
    """Collapse repeated raw URLs to one record each.

    Downstream stages key everything by the raw string (one graph vertex,
    one train/test slot), so a URL appearing twice must not survive the
    load. A definite label beats unknown; a phishy/benign clash is a
    corpus integrity failure and raises.
    """
    position: dict[str, int] = {}
    kept: list[UrlRecord] = []
    dropped = 0
    for rec in records:
        at = position.get(rec.raw)
        if at is None:
            position[rec.raw] = len(kept)
            kept.append(rec)
            continue
        dropped += 1
        held = kept[at]
        if rec.label is held.label or rec.label is Label.UNKNOWN:
            continue
        if held.label is Label.UNKNOWN:
            kept[at] = rec
            continue
        raise ConflictingLabel(
            f"{path}: {rec.raw} is labeled both {held.label.value} and {rec.label.value}"
        )
    if dropped:
        logger.warning("%s: collapsed %d duplicate URL row(s)", path, dropped)
    return kept


def load_url_records(path: str | Path) -> list[UrlRecord]:
    """Read a URL corpus file.

    A file whose first line is a header starting with ``url,label`` is read
    as CSV with columns url,label[,timestamp]; anything else is read as one
    URL per line with every label unknown. Malformed rows are skipped with
    a logged warning. A URL appearing on several rows yields one record
    (definite label beats unknown; phishy vs benign raises
    ConflictingLabel).
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        first = fh.readline()
        is_csv = first.lower().replace(" ", "").startswith("url,label")
        fh.seek(0)
        records: list[UrlRecord] = []
        skipped = 0
        if is_csv:
            reader = csv.reader(fh)
            next(reader)
            for row in reader:
                if not row or not "".join(row).strip():
                    continue
                try:
                    if len(row) < 2:
                        raise MalformedRecord(f"expected url,label in row {row!r}")
                    ts = row[2].strip() or None if len(row) > 2 else None
                    records.append(make_record(row[0], _parse_label(row[1]), ts))
                except (MalformedRecord, MalformedUrl) as exc:
                    skipped += 1
                    logger.warning("skipping corpus row %r: %s", row, exc)
        else:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(make_record(line))
                except MalformedUrl as exc:
                    skipped += 1
                    logger.warning("skipping URL line %r: %s", line, exc)
    if skipped:
        logger.warning("%s: skipped %d malformed row(s)", path, skipped)
    return _dedupe_records(records, path)


def save_url_records(records: list[UrlRecord], path: str | Path) -> Path:
    """Write a corpus CSV (url,label[,timestamp]) readable by load_url_records."""
    path = Path(path)
    with_ts = any(r.timestamp for r in records)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["url", "label", "timestamp"] if with_ts else ["url", "label"])
        for record in records:
            row = [record.raw, record.label.value]
            if with_ts:
                row.append(record.timestamp or "")
            writer.writerow(row)
    return path


def load_resolutions(path: str | Path) -> list[ResolutionRecord]:
    """Read a resolutions CSV (domain,ip[,timestamp]); bad rows are skipped."""
    path = Path(path)
    records: list[ResolutionRecord] = []
    skipped = 0
    with path.open(encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if i == 0 and row[0].strip().lower() == "domain":
                continue
            domain = row[0].strip().lower()
            ip = row[1].strip().lower() if len(row) > 1 else ""
            ts = row[2].strip() or None if len(row) > 2 else None
            try:
                if not domain:
                    raise MalformedRecord("empty domain")
                ipaddress.ip_address(ip)
            except (MalformedRecord, ValueError) as exc:
                skipped += 1
                logger.warning("skipping resolution row %r: %s", row, exc)
                continue
            records.append(ResolutionRecord(domain=domain, ip=ip, timestamp=ts))
    if skipped:
        logger.warning("%s: skipped %d malformed row(s)", path, skipped)
    return records


def load_nameservers(path: str | Path) -> list[tuple[str, str]]:
    """Read a name-server CSV (domain,ns); bad rows are skipped."""
    path = Path(path)
    pairs: list[tuple[str, str]] = []
    skipped = 0
    with path.open(encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if i == 0 and row[0].strip().lower() == "domain":
                continue
            domain = row[0].strip().lower()
            ns = row[1].strip().lower() if len(row) > 1 else ""
            if not domain or not ns:
                skipped += 1
                logger.warning("skipping nameserver row %r", row)
                continue
            pairs.append((domain, ns))
    if skipped:
        logger.warning("%s: skipped %d malformed row(s)", path, skipped)
    return pairs


def load_blacklist(path: str | Path) -> frozenset[str]:
    """Read a one-entry-per-line blacklist file, lowercased."""
    entries = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip().lower()
            if line and not line.startswith("#"):
                entries.add(line)
    return frozenset(entries)
