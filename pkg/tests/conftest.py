"""Shared helpers for the test suite."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from phishgraph.corpus import Label, make_record
from phishgraph.embedding import EmbeddingTable
from phishgraph.graph import HeteroGraph, VertexId, VertexKind


def write_csv(path: Path, rows: list[tuple[str, ...]]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    return path


def url_corpus(path: Path, entries: list[tuple[str, str]]) -> Path:
    """Write a url,label CSV from (raw, label) pairs."""
    return write_csv(path, [("url", "label"), *entries])


def records_from(entries: list[tuple[str, str]]):
    return [make_record(raw, Label(lab)) for raw, lab in entries]


def star_graph(center: str, leaves: list[tuple[str, Label]]) -> HeteroGraph:
    """One hidden URL center, observed word leaves."""
    g = HeteroGraph()
    c = VertexId(VertexKind.URL, center)
    for name, label in leaves:
        v = VertexId(VertexKind.WORD, name)
        g.add_edge(c, v)
        g.mark_observed(v, label)
    return g


def table_for(graph: HeteroGraph, sims_to: dict[tuple[str, str], float], dim: int = 8) -> EmbeddingTable:
    """Build vectors whose pairwise cosines match requested values.

    Only supports the star layout: every requested pair shares the center
    vertex. The center gets e0; a leaf with target cosine s gets
    s*e0 + sqrt(1-s^2)*e_i on its own axis, so cos(center, leaf) = s and
    leaf-leaf cosines are irrelevant to the potentials under test.
    """
    order = sorted(graph.vertices, key=str)
    mat = np.zeros((len(order), dim), dtype=np.float32)
    index = {str(v): i for i, v in enumerate(order)}
    centers = {a for a, _ in sims_to} | {b for _, b in sims_to}
    center = None
    for cand in centers:
        if all(cand in pair for pair in sims_to):
            center = cand
            break
    assert center is not None, "sims_to must share one center vertex"
    mat[index[center], 0] = 1.0
    axis = 1
    for (a, b), s in sims_to.items():
        leaf = b if a == center else a
        mat[index[leaf], 0] = s
        mat[index[leaf], axis] = float(np.sqrt(max(0.0, 1.0 - s * s)))
        axis += 1
        assert axis < dim, "raise dim for this many leaves"
    return EmbeddingTable(order, mat)


@pytest.fixture
def tmp_corpus(tmp_path: Path) -> Path:
    return url_corpus(
        tmp_path / "urls.csv",
        [
            ("http://alpha-site0.com/news/story0", "benign"),
            ("http://alpha-site1.com/news/story1", "benign"),
            ("http://alpha-site2.com/news/story2", "benign"),
            ("http://alpha-site3.com/news/story3", "benign"),
            ("http://bad-login0.tk/verify/account0", "phishy"),
            ("http://bad-login1.tk/verify/account1", "phishy"),
            ("http://bad-login2.tk/verify/account2", "phishy"),
            ("http://bad-login3.tk/verify/account3", "phishy"),
        ],
    )
