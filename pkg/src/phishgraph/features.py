"""The 19 lexical/host features and CSV export.

All features are computed offline from the URL string and its parsed
parts, plus static resource tables (English character frequencies,
suspicious words, brand names, TLDs, optional blacklists).
"""

from __future__ import annotations

import csv
import ipaddress
import logging
import math
from dataclasses import dataclass, fields as dataclass_fields
from enum import Enum
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Label, UrlRecord, make_record
from .errors import MissingResource
from .lexer import PATH_SEPARATORS, _PATH_SPLIT

logger = logging.getLogger(__name__)

PUNCTUATION_SYMBOLS = frozenset(".!&,#$%")
VOWELS = frozenset("aeiou")

_LENGTH_BENIGN_MAX = 53
_LENGTH_NEUTRAL_MAX = 75
_LONG_HOSTNAME_OVER = 22
_SHORT_HOSTNAME_UNDER = 5
_MULTI_SUBDOMAIN_DOTS = 3
_KL_SMOOTHING = 1e-6


class LengthClass(Enum):
    BENIGN = "benign"
    NEUTRAL = "neutral"
    PHISHY = "phishy"


@dataclass(frozen=True)
class FeatureVector:
    """The 19 features, in ranked order."""

    kl_divergence: float
    entropy: float
    digit_letter_ratio: float
    tld_in_path_count: int
    dash_in_path_count: int
    blacklisted: bool
    length_class: LengthClass
    digits_in_domain: bool
    suspicious_word_count: int
    multi_subdomain: bool
    brand_dash_modification: bool
    long_hostname: bool
    domain_prefix_suffix_dash: bool
    punctuation_count: int
    colon_in_hostname_count: int
    ip_as_host: bool
    vowel_consonant_ratio: float
    short_hostname: bool
    at_symbol: bool


FEATURE_NAMES: tuple[str, ...] = tuple(f.name for f in dataclass_fields(FeatureVector))


@dataclass(frozen=True)
class FeatureResources:
    """Static tables the features read from; all user-overridable."""

    english_char_distribution: Mapping[str, float]
    suspicious_words: frozenset[str]
    brand_names: frozenset[str]
    tld_list: frozenset[str]
    blacklist_domains: frozenset[str] = frozenset()
    blacklist_ips: frozenset[str] = frozenset()

    def validate(self) -> None:
        if not self.english_char_distribution:
            raise MissingResource("english_char_distribution is empty")
        total = sum(self.english_char_distribution.values())
        if abs(total - 1.0) > 1e-9:
            raise MissingResource(
                f"english_char_distribution sums to {total}, expected 1"
            )
        for name in ("suspicious_words", "brand_names", "tld_list"):
            if not getattr(self, name):
                raise MissingResource(f"{name} is empty")


def _resource_text(name: str) -> str:
    return (
        importlib_resources.files("phishgraph.resources").joinpath(name).read_text("utf-8")
    )


def load_char_distribution(path: str | Path | None = None) -> dict[str, float]:
    """Read a char,probability CSV; probabilities are renormalized to sum to 1."""
    if path is None:
        text = _resource_text("english_char_freq.csv")
    else:
        text = Path(path).read_text(encoding="utf-8")
    dist: dict[str, float] = {}
    for i, row in enumerate(csv.reader(text.splitlines())):
        if not row or (i == 0 and row[0].strip().lower() == "char"):
            continue
        dist[row[0].strip().lower()] = float(row[1])
    total = sum(dist.values())
    if total <= 0:
        raise MissingResource("character distribution has no mass")
    return {c: p / total for c, p in dist.items()}


def _load_lines(name: str, path: str | Path | None) -> frozenset[str]:
    text = _resource_text(name) if path is None else Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


def default_resources(
    char_distribution: str | Path | None = None,
    suspicious_words: str | Path | None = None,
    brands: str | Path | None = None,
    tlds: str | Path | None = None,
    blacklist_domains: frozenset[str] = frozenset(),
    blacklist_ips: frozenset[str] = frozenset(),
) -> FeatureResources:
    """Bundled resource tables, each replaceable by a file path."""
    res = FeatureResources(
        english_char_distribution=load_char_distribution(char_distribution),
        suspicious_words=_load_lines("suspicious_words.txt", suspicious_words),
        brand_names=_load_lines("brands.txt", brands),
        tld_list=_load_lines("tlds.txt", tlds),
        blacklist_domains=blacklist_domains,
        blacklist_ips=blacklist_ips,
    )
    res.validate()
    return res


def _char_distribution(text: str) -> dict[str, float]:
    counts: dict[str, int] = {}
    for c in text:
        counts[c] = counts.get(c, 0) + 1
    n = len(text)
    return {c: k / n for c, k in counts.items()}


def kl_divergence(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """KL(p || q) in bits; q is restricted to p's support with smoothing fill."""
    support = [c for c in p if p[c] > 0]
    q_fill = {c: q.get(c, _KL_SMOOTHING) for c in support}
    z = sum(q_fill.values())
    return sum(p[c] * math.log2(p[c] * z / q_fill[c]) for c in support)


def shannon_entropy(text: str) -> float:
    """Base-2 entropy of the character distribution."""
    if not text:
        return 0.0
    return -sum(p * math.log2(p) for p in _char_distribution(text).values())


def _registrable_label(host: str, tlds: frozenset[str]) -> str:
    labels = [l for l in host.split(".") if l]
    while labels and labels[-1] in tlds:
        labels.pop()
    return labels[-1] if labels else ""


def _is_ip_host(host: str) -> bool:
    """Dotted-decimal, dotted 0x-hex, or a literal IPv6 host."""
    bare = host[1:-1] if host.startswith("[") and host.endswith("]") else host
    try:
        ipaddress.ip_address(bare)
        return True
    except ValueError:
        pass
    parts = bare.split(".")
    if len(parts) != 4:
        return False
    for part in parts:
        if part.startswith("0x"):
            digits = part[2:]
            if not digits or any(c not in "0123456789abcdef" for c in digits):
                return False
            value = int(digits, 16)
        elif part.isdigit():
            value = int(part)
        else:
            return False
        if value > 255:
            return False
    return True


def _canonical_ip(host: str) -> str | None:
    bare = host[1:-1] if host.startswith("[") and host.endswith("]") else host
    try:
        return str(ipaddress.ip_address(bare))
    except ValueError:
        if not _is_ip_host(bare):
            return None
        octets = [int(p[2:], 16) if p.startswith("0x") else int(p) for p in bare.split(".")]
        return ".".join(str(o) for o in octets)


def extract_features(url: str | UrlRecord, res: FeatureResources) -> FeatureVector:
    """Compute all 19 features for one URL."""
    res.validate()
    record = url if isinstance(url, UrlRecord) else make_record(url)
    raw = record.raw
    parts = record.parts
    host = parts.host

    kl = kl_divergence(_char_distribution(raw), res.english_char_distribution)
    entropy = shannon_entropy(raw)

    digits = sum(c.isdigit() for c in raw)
    letters = sum(c.isascii() and c.isalpha() for c in raw)
    digit_letter_ratio = digits / letters if letters else float(digits)

    path_tokens = [tok for tok in _PATH_SPLIT.split(parts.path) if tok]
    tld_in_path = sum(tok in res.tld_list for tok in path_tokens)
    dash_in_path = parts.path.count("-")

    canonical_ip = _canonical_ip(host)
    blacklisted = host in res.blacklist_domains or (
        canonical_ip is not None and canonical_ip in res.blacklist_ips
    )

    n = len(raw)
    if n <= _LENGTH_BENIGN_MAX:
        length_class = LengthClass.BENIGN
    elif n <= _LENGTH_NEUTRAL_MAX:
        length_class = LengthClass.NEUTRAL
    else:
        length_class = LengthClass.PHISHY

    suspicious = sum(raw.count(w) for w in res.suspicious_words)

    registrable = _registrable_label(host, res.tld_list)
    brand_dash = False
    if "-" in registrable:
        pieces = registrable.split("-")
        brand_dash = pieces[0] in res.brand_names or pieces[-1] in res.brand_names

    host_letters = [c for c in host if c.isascii() and c.isalpha()]
    vowels = sum(c in VOWELS for c in host_letters)
    consonants = len(host_letters) - vowels
    vowel_consonant_ratio = vowels / consonants if consonants else float(vowels)

    return FeatureVector(
        kl_divergence=kl,
        entropy=entropy,
        digit_letter_ratio=digit_letter_ratio,
        tld_in_path_count=tld_in_path,
        dash_in_path_count=dash_in_path,
        blacklisted=blacklisted,
        length_class=length_class,
        digits_in_domain=any(c.isdigit() for c in host),
        suspicious_word_count=suspicious,
        multi_subdomain=host.count(".") > _MULTI_SUBDOMAIN_DOTS,
        brand_dash_modification=brand_dash,
        long_hostname=len(host) > _LONG_HOSTNAME_OVER,
        domain_prefix_suffix_dash="-" in registrable,
        punctuation_count=sum(c in PUNCTUATION_SYMBOLS for c in raw),
        colon_in_hostname_count=host.count(":") + (1 if parts.port is not None else 0),
        ip_as_host=_is_ip_host(host),
        vowel_consonant_ratio=vowel_consonant_ratio,
        short_hostname=len(host) < _SHORT_HOSTNAME_UNDER,
        at_symbol="@" in raw,
    )


_LENGTH_CLASS_CODES = {LengthClass.BENIGN: 0, LengthClass.NEUTRAL: 1, LengthClass.PHISHY: 2}


def _cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, LengthClass):
        return str(_LENGTH_CLASS_CODES[value])
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_features(
    records: Sequence[UrlRecord], res: FeatureResources, out_path: str | Path
) -> Path:
    """Write one CSV row per record, label column last, booleans as 0/1."""
    if not records:
        raise ValueError("no records to export")
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("url",) + FEATURE_NAMES + ("label",))
        for rec in records:
            vec = extract_features(rec, res)
            label = "" if rec.label is Label.UNKNOWN else rec.label.value
            writer.writerow(
                [rec.raw]
                + [_cell(getattr(vec, name)) for name in FEATURE_NAMES]
                + [label]
            )
    return out_path
