"""URL parsing, word segmentation and elbow-based stop-word removal.

URLs are lowercased before parsing and never percent-decoded. The scheme
contributes no words. A trailing ``#fragment`` is kept inside the stored
path string, so fragment text is segmented with the path separators and
reassembly stays lossless.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import DegenerateCorpus, MalformedUrl

logger = logging.getLogger(__name__)

_SCHEME_RE = re.compile(r"^([a-z][a-z0-9+.\-]*)://")

USERINFO_SEPARATORS = frozenset("/:@")
HOST_SEPARATORS = frozenset(".")
PATH_SEPARATORS = frozenset("/.!&,#$%;")
QUERY_SEPARATORS = frozenset("=&")

_USERINFO_SPLIT = re.compile("[" + re.escape("".join(sorted(USERINFO_SEPARATORS))) + "]")
_HOST_SPLIT = re.compile(r"\.")
_PATH_SPLIT = re.compile("[" + re.escape("".join(sorted(PATH_SEPARATORS))) + "]")
_QUERY_SPLIT = re.compile("[" + re.escape("".join(sorted(QUERY_SEPARATORS))) + "]")


class SourcePart(Enum):
    """Which structural part of the URL a word was cut from."""

    USERINFO = "userinfo"
    HOST = "host"
    PATH = "path"
    QUERY = "query"


@dataclass(frozen=True)
class UrlParts:
    """Structural parts of one URL, all lowercase.

    ``query`` is None when the URL has no '?' at all. A fragment, when
    present, is stored at the tail of ``path`` including its '#'.
    """

    scheme: str
    username: str | None
    password: str | None
    host: str
    port: int | None
    path: str
    query: str | None


@dataclass(frozen=True)
class WordList:
    """Ordered segmentation output; ``source_parts[i]`` tells where ``words[i]`` came from."""

    words: tuple[str, ...]
    source_parts: tuple[SourcePart, ...]

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[str]:
        return iter(self.words)

    def items(self) -> Iterator[tuple[str, SourcePart]]:
        return zip(self.words, self.source_parts)


@dataclass(frozen=True)
class StopWordModel:
    """Corpus frequency table with the elbow threshold applied to it.

    stop_words is exactly the set of words whose frequency exceeds
    threshold_frequency, and threshold_frequency is the frequency at the
    elbow of the descending frequency curve.
    """

    frequency_table: Mapping[str, int]
    threshold_frequency: int
    stop_words: frozenset[str]
    curve: tuple[int, ...]
    elbow_index: int


def normalize_url(raw: str) -> str:
    """Lowercase and strip one URL string; reject empties and whitespace."""
    text = raw.strip().lower()
    if not text:
        raise MalformedUrl("empty URL string")
    if any(c.isspace() for c in text):
        raise MalformedUrl(f"whitespace inside URL: {raw!r}")
    return text


def parse_url(raw: str) -> UrlParts:
    """Split a URL into parts; scheme defaults to http when absent."""
    text = normalize_url(raw)

    match = _SCHEME_RE.match(text)
    if match:
        scheme = match.group(1)
        rest = text[match.end():]
    elif text.startswith("//"):
        scheme = "http"
        rest = text[2:]
    else:
        scheme = "http"
        rest = text

    cut = len(rest)
    for stop in "/?#":
        pos = rest.find(stop)
        if pos != -1:
            cut = min(cut, pos)
    authority, tail = rest[:cut], rest[cut:]

    username: str | None = None
    password: str | None = None
    if "@" in authority:
        userinfo, hostport = authority.rsplit("@", 1)
        if ":" in userinfo:
            username, password = userinfo.split(":", 1)
        else:
            username = userinfo
    else:
        hostport = authority

    port: int | None = None
    host = hostport
    if ":" in hostport:
        maybe_host, maybe_port = hostport.rsplit(":", 1)
        if maybe_port.isdigit() and maybe_host:
            port = int(maybe_port)
            if port > 65535:
                raise MalformedUrl(f"port out of range in {raw!r}")
            host = maybe_host

    if not host:
        raise MalformedUrl(f"no host in {raw!r}")

    frag_at = tail.find("#")
    head = tail if frag_at == -1 else tail[:frag_at]
    fragment = "" if frag_at == -1 else tail[frag_at:]

    query: str | None = None
    q_at = head.find("?")
    if q_at == -1:
        path = head
    else:
        path = head[:q_at]
        query = head[q_at + 1:]

    return UrlParts(
        scheme=scheme,
        username=username,
        password=password,
        host=host,
        port=port,
        path=path + fragment,
        query=query,
    )


def unparse_url(parts: UrlParts) -> str:
    """Rebuild the normalized URL string from its parts.

    Inverse of parse_url up to normalization: a bare trailing '?'
    (empty query marker) collapses away.
    """
    out = parts.scheme + "://"
    if parts.username is not None:
        out += parts.username
        if parts.password is not None:
            out += ":" + parts.password
        out += "@"
    out += parts.host
    if parts.port is not None:
        out += f":{parts.port}"

    path = parts.path
    if parts.query is not None:
        frag_at = path.find("#")
        if frag_at == -1:
            out += path + "?" + parts.query
        else:
            out += path[:frag_at] + "?" + parts.query + path[frag_at:]
    else:
        out += path
    return out


def _split(text: str, splitter: re.Pattern[str]) -> list[str]:
    return [tok for tok in splitter.split(text) if tok]


def segment(parts: UrlParts) -> WordList:
    """Cut URL parts into words; the scheme is excluded entirely."""
    words: list[str] = []
    sources: list[SourcePart] = []

    def take(tokens: Iterable[str], source: SourcePart) -> None:
        for tok in tokens:
            words.append(tok)
            sources.append(source)

    if parts.username is not None:
        take(_split(parts.username, _USERINFO_SPLIT), SourcePart.USERINFO)
    if parts.password is not None:
        take(_split(parts.password, _USERINFO_SPLIT), SourcePart.USERINFO)
    take(_split(parts.host, _HOST_SPLIT), SourcePart.HOST)
    take(_split(parts.path, _PATH_SPLIT), SourcePart.PATH)
    if parts.query is not None:
        take(_split(parts.query, _QUERY_SPLIT), SourcePart.QUERY)

    return WordList(words=tuple(words), source_parts=tuple(sources))


def _elbow_index(curve: Sequence[int]) -> int:
    """Index of the point farthest (perpendicular) from the first-last chord."""
    n = len(curve)
    if n < 3:
        return 0
    x0, y0 = 0.0, float(curve[0])
    dx = float(n - 1)
    dy = float(curve[-1]) - y0
    best_i = 0
    best_d = -1.0
    for i, y in enumerate(curve):
        d = abs(dx * (float(y) - y0) - dy * float(i))
        if d > best_d:
            best_d = d
            best_i = i
    return best_i


def fit_stop_words(corpus: Iterable[WordList]) -> StopWordModel:
    """Fit the elbow threshold on the descending word-frequency curve.

    Frequencies count every occurrence (a word repeated inside one URL
    counts each time). Words strictly above the threshold become stop
    words. Fewer than 3 distinct words leaves the stop set empty.
    """
    table: Counter[str] = Counter()
    for wl in corpus:
        table.update(wl.words)
    if not table:
        raise DegenerateCorpus("no words in corpus")

    curve = tuple(sorted(table.values(), reverse=True))
    if len(table) < 3:
        logger.warning(
            "corpus has only %d distinct word(s); no stop words removed", len(table)
        )
        return StopWordModel(
            frequency_table=dict(table),
            threshold_frequency=curve[0],
            stop_words=frozenset(),
            curve=curve,
            elbow_index=0,
        )

    elbow = _elbow_index(curve)
    threshold = curve[elbow]
    stop = frozenset(w for w, c in table.items() if c > threshold)
    return StopWordModel(
        frequency_table=dict(table),
        threshold_frequency=threshold,
        stop_words=stop,
        curve=curve,
        elbow_index=elbow,
    )


def apply_stop_words(words: WordList, model: StopWordModel) -> WordList:
    """Drop stop words, preserving order of the rest."""
    kept = [(w, s) for w, s in words.items() if w not in model.stop_words]
    return WordList(
        words=tuple(w for w, _ in kept),
        source_parts=tuple(s for _, s in kept),
    )
