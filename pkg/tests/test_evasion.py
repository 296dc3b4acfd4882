"""Part-swap evasion: selection, donor sampling, and the change log."""

from __future__ import annotations

import json
import math
import random

import pytest

from phishgraph.corpus import Label, make_record
from phishgraph.errors import NoDonor
from phishgraph.evasion import (
    EvasionLog,
    EvasionMethod,
    EvasionSpec,
    TargetPart,
    apply_evasion,
)


def benign(url: str):
    return make_record(url, label=Label.BENIGN)


def phishy(url: str):
    return make_record(url, label=Label.PHISHY)


def demo_corpus():
    records = [
        benign("http://www.birdwatch0.com/articles/finch.html?tag=spring"),
        benign("http://www.birdwatch1.com/articles/heron.html?tag=summer"),
        benign("http://www.birdwatch2.com/notes/crane.html?tag=autumn"),
        benign("http://www.birdwatch3.com/notes/egret.html?tag=winter"),
        phishy("http://evil0.top/confirm/account.php?cmd=login"),
        phishy("http://evil1.top/confirm/billing.php?cmd=login"),
        phishy("http://evil2.top/confirm/token.php?cmd=login"),
        phishy("http://evil3.top/confirm/signin.php?cmd=login"),
        phishy("http://evil4.top/confirm/update.php?cmd=login"),
    ]
    test_phishy = [r.raw for r in records if r.label is Label.PHISHY]
    return records, test_phishy


METHOD_PARTS = {
    EvasionMethod.M1: {TargetPart.DOMAIN},
    EvasionMethod.M2: {TargetPart.PATH},
    EvasionMethod.M3: {TargetPart.QUERY},
    EvasionMethod.M4: {TargetPart.DOMAIN, TargetPart.PATH},
    EvasionMethod.M5: {TargetPart.DOMAIN, TargetPart.QUERY},
    EvasionMethod.M6: {TargetPart.PATH, TargetPart.QUERY},
    EvasionMethod.M7: {TargetPart.DOMAIN, TargetPart.PATH, TargetPart.QUERY},
}


class TestSelection:
    def test_count_rounds_up(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M1, ratio=0.5, seed=7)
        _, log = apply_evasion(records, test_phishy, spec)
        assert len(log.selected) == math.ceil(0.5 * 5) == 3

    def test_selection_is_seeded_sample_of_sorted_pool(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M1, ratio=0.6, seed=123)
        _, log = apply_evasion(records, test_phishy, spec)
        assert log.selected == random.Random(123).sample(sorted(test_phishy), 3)

    def test_ratio_zero_is_a_no_op(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M7, ratio=0.0, seed=1)
        out, log = apply_evasion(records, test_phishy, spec)
        assert out == records
        assert log.selected == [] and log.entries == [] and log.skipped == []

    def test_unselected_records_pass_through_unchanged(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M1, ratio=0.2, seed=5)
        out, log = apply_evasion(records, test_phishy, spec)
        changed = set(log.url_map())
        for before, after in zip(records, out):
            if before.raw in changed:
                assert after.raw == log.url_map()[before.raw]
            else:
                assert after is before

    def test_unknown_test_url_rejected(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M1, ratio=1.0, seed=0)
        with pytest.raises(ValueError):
            apply_evasion(records, test_phishy + ["http://ghost.example/x"], spec)

    def test_ratio_bounds(self):
        with pytest.raises(ValueError):
            EvasionSpec(method=EvasionMethod.M1, ratio=1.5, seed=0)
        with pytest.raises(ValueError):
            EvasionSpec(method=EvasionMethod.M1, ratio=-0.1, seed=0)


class TestPartSwaps:
    @pytest.mark.parametrize("method", list(EvasionMethod))
    def test_each_method_touches_exactly_its_parts(self, method):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=method, ratio=1.0, seed=42)
        out, log = apply_evasion(records, test_phishy, spec)
        by_raw = {r.raw: r for r in records}
        out_by_raw = {r.raw: r for r in out}
        assert len(log.entries) == len(test_phishy)
        for entry in log.entries:
            assert {c.part for c in entry.changes} == METHOD_PARTS[method]
            before = by_raw[entry.original_url].parts
            after = out_by_raw[entry.modified_url].parts
            if TargetPart.DOMAIN not in METHOD_PARTS[method]:
                assert after.host == before.host
            if TargetPart.PATH not in METHOD_PARTS[method]:
                assert after.path == before.path
            if TargetPart.QUERY not in METHOD_PARTS[method]:
                assert after.query == before.query

    def test_labels_survive_modification(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M7, ratio=1.0, seed=2)
        out, _ = apply_evasion(records, test_phishy, spec)
        assert sum(r.label is Label.PHISHY for r in out) == 5
        assert sum(r.label is Label.BENIGN for r in out) == 4

    def test_donated_parts_come_from_logged_benign_donor(self):
        records, test_phishy = demo_corpus()
        by_raw = {r.raw: r for r in records}
        spec = EvasionSpec(method=EvasionMethod.M7, ratio=1.0, seed=11)
        _, log = apply_evasion(records, test_phishy, spec)
        for entry in log.entries:
            for change in entry.changes:
                donor = by_raw[change.donor_url]
                assert donor.label is Label.BENIGN
                expected = {
                    TargetPart.DOMAIN: donor.parts.host,
                    TargetPart.PATH: donor.parts.path,
                    TargetPart.QUERY: donor.parts.query,
                }[change.part]
                assert change.replacement == expected

    def test_missing_query_gets_inserted(self):
        records = [
            benign("http://www.safe.com/page.html?topic=knitting"),
            phishy("http://bare.top/steal.php"),
        ]
        spec = EvasionSpec(method=EvasionMethod.M3, ratio=1.0, seed=3)
        out, log = apply_evasion(records, ["http://bare.top/steal.php"], spec)
        modified = log.url_map()["http://bare.top/steal.php"]
        assert modified == "http://bare.top/steal.php?topic=knitting"
        assert any(r.raw == modified for r in out)

    def test_trivial_paths_never_donated(self):
        records = [
            benign("http://rooty.com/"),
            benign("http://rooty2.com"),
            benign("http://deep.com/real/path.html"),
            phishy("http://evil.top/a.php"),
            phishy("http://evil.top/b.php"),
            phishy("http://evil.top/c.php"),
        ]
        test_phishy = [r.raw for r in records if r.label is Label.PHISHY]
        spec = EvasionSpec(method=EvasionMethod.M2, ratio=1.0, seed=8)
        _, log = apply_evasion(records, test_phishy, spec)
        assert len(log.entries) == 3
        for entry in log.entries:
            assert entry.changes[0].replacement == "/real/path.html"
            assert entry.changes[0].donor_url == "http://deep.com/real/path.html"

    def test_scarce_donor_reused_only_after_pool_drains(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M1, ratio=1.0, seed=77)
        _, log = apply_evasion(records, test_phishy, spec)
        donated = [e.changes[0].replacement for e in log.entries]
        # four distinct benign hosts serve five swaps: first cycle uses each
        # host once, the fifth draw starts a fresh shuffle
        assert len(donated) == 5
        assert set(donated[:4]) == {f"www.birdwatch{i}.com" for i in range(4)}
        assert donated[4] in set(donated[:4])


class TestDonorExhaustion:
    def test_no_benign_records_raises(self):
        records = [phishy("http://evil0.top/a.php"), phishy("http://evil1.top/b.php")]
        test_phishy = [r.raw for r in records]
        spec = EvasionSpec(method=EvasionMethod.M1, ratio=1.0, seed=0)
        with pytest.raises(NoDonor):
            apply_evasion(records, test_phishy, spec)

    def test_no_query_donors_raises_for_query_methods(self):
        records = [
            benign("http://plain.com/article.html"),
            phishy("http://evil.top/a.php?cmd=login"),
        ]
        spec = EvasionSpec(method=EvasionMethod.M3, ratio=1.0, seed=0)
        with pytest.raises(NoDonor):
            apply_evasion(records, ["http://evil.top/a.php?cmd=login"], spec)

    def test_skips_are_logged_before_raising(self):
        records = [
            benign("http://plain.com/article.html"),
            phishy("http://evil.top/a.php"),
            phishy("http://evil.top/b.php"),
        ]
        test_phishy = ["http://evil.top/a.php", "http://evil.top/b.php"]
        spec = EvasionSpec(method=EvasionMethod.M5, ratio=1.0, seed=1)
        with pytest.raises(NoDonor):
            apply_evasion(records, test_phishy, spec)
        # domain pool exists but query pool is empty; rerun with a query donor
        records.append(benign("http://www.ok.com/page.html?x=1"))
        out, log = apply_evasion(records, test_phishy, spec)
        assert len(log.entries) == 2 and not log.skipped
        assert all(r.label is not Label.UNKNOWN for r in out)


class TestDeterminismAndLog:
    def test_same_seed_same_outcome(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M4, ratio=0.8, seed=31)
        out_a, log_a = apply_evasion(records, test_phishy, spec)
        out_b, log_b = apply_evasion(records, test_phishy, spec)
        assert [r.raw for r in out_a] == [r.raw for r in out_b]
        assert log_a.entries == log_b.entries
        assert log_a.selected == log_b.selected

    def test_different_seed_changes_donor_pairing(self):
        records, test_phishy = demo_corpus()
        maps = []
        for seed in (1, 2, 3, 4):
            spec = EvasionSpec(method=EvasionMethod.M1, ratio=1.0, seed=seed)
            _, log = apply_evasion(records, test_phishy, spec)
            maps.append(tuple(sorted(log.url_map().items())))
        assert len(set(maps)) > 1

    def test_url_map_covers_entries(self):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M2, ratio=1.0, seed=6)
        _, log = apply_evasion(records, test_phishy, spec)
        mapping = log.url_map()
        assert set(mapping) == set(test_phishy)
        assert all(orig != new for orig, new in mapping.items())

    def test_json_lines_roundtrip(self, tmp_path):
        records, test_phishy = demo_corpus()
        spec = EvasionSpec(method=EvasionMethod.M7, ratio=1.0, seed=9)
        _, log = apply_evasion(records, test_phishy, spec)
        out = log.write_json_lines(tmp_path / "evasion.jsonl")
        lines = [json.loads(line) for line in out.read_text().splitlines()]
        header, rest = lines[0], lines[1:]
        assert header["type"] == "header"
        assert header["method"] == "m7"
        assert header["modified"] == len(log.entries) == 5
        assert header["skipped"] == 0
        entries = [l for l in rest if l["type"] == "entry"]
        assert len(entries) == 5
        for line, entry in zip(entries, log.entries):
            assert line["url"] == entry.original_url
            assert line["result"] == entry.modified_url
            assert {c["part"] for c in line["changes"]} == {"domain", "path", "query"}

    def test_log_types(self):
        log = EvasionLog(method=EvasionMethod.M1, ratio=0.5, seed=0)
        assert log.url_map() == {}
