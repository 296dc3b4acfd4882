"""Command line behavior: exit codes, config merging, artifact outputs."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from phishgraph._version import __version__
from phishgraph.cli import main

from test_pipeline import demo_inputs


@pytest.fixture()
def inputs(tmp_path):
    return demo_inputs(tmp_path)


def run(*argv: str) -> int:
    return main(list(argv))


class TestParsing:
    def test_version_exits_zero(self, capsys):
        assert run("--version") == 0
        assert __version__ in capsys.readouterr().out

    def test_help_exits_zero(self):
        assert run("--help") == 0

    def test_no_command_is_usage_error(self, capsys):
        assert run() == 1

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run("segment", "--frobnicate", "x") == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_command_is_usage_error(self):
        assert run("transmogrify") == 1

    def test_missing_required_flag(self, tmp_path, capsys):
        assert run("segment", "--out", str(tmp_path / "o")) == 1
        assert "--input is required" in capsys.readouterr().err


class TestConfigFile:
    def test_flags_win_over_config(self, inputs, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            f"input = {inputs['urls']}\n"
            "seed = 1\n"
            f"out = {tmp_path / 'from_config'}\n"
            "# comment line\n"
            "\n"
        )
        out_flag = tmp_path / "from_flag"
        code = run(
            "build", "--config", str(config), "--out", str(out_flag), "--split", "0.5"
        )
        assert code == 0
        assert (out_flag / "graph.tsv").exists()
        assert not (tmp_path / "from_config").exists()

    def test_config_supplies_required_values(self, inputs, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(f"input={inputs['urls']}\nseed=3\nout={tmp_path / 'o'}\n")
        assert run("build", "--config", str(config)) == 0
        assert (tmp_path / "o" / "split.json").exists()

    def test_unknown_config_key(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("vibe=good\n")
        assert run("segment", "--config", str(config)) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_config_line(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("just a bare line\n")
        assert run("segment", "--config", str(config)) == 1
        assert "expected key=value" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert run("segment", "--config", str(tmp_path / "ghost.cfg")) == 1

    def test_config_bool_cast(self, inputs, tmp_path):
        config = tmp_path / "run.cfg"
        config.write_text(
            f"input={inputs['urls']}\nseed=3\nout={tmp_path / 'o'}\ncache=off\n"
        )
        assert run("build", "--config", str(config)) == 0
        assert not (tmp_path / "o" / "cache").exists()

    def test_config_bad_bool(self, inputs, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            f"input={inputs['urls']}\nseed=3\nout={tmp_path / 'o'}\ncache=maybe\n"
        )
        assert run("build", "--config", str(config)) == 1
        assert "expected a boolean" in capsys.readouterr().err


class TestSegment:
    def test_writes_words_and_stop_model(self, inputs, tmp_path, capsys):
        out = tmp_path / "seg"
        assert run("segment", "--input", str(inputs["urls"]), "--out", str(out)) == 0
        assert "segmented 12 urls" in capsys.readouterr().out
        lines = (out / "words.jsonl").read_text().splitlines()
        assert len(lines) == 12
        row = json.loads(lines[0])
        assert set(row) == {"url", "words", "parts", "kept"}
        assert set(row["kept"]) <= set(row["words"])
        model = json.loads((out / "stopwords.json").read_text())
        assert model["threshold_frequency"] >= 1
        assert model["distinct_words"] > 0

    def test_missing_corpus_is_data_error(self, tmp_path):
        assert run("segment", "--input", str(tmp_path / "nope.csv")) == 2


class TestFeatures:
    def test_writes_feature_matrix(self, inputs, tmp_path):
        out = tmp_path / "feat"
        assert run("features", "--input", str(inputs["urls"]), "--out", str(out)) == 0
        with (out / "features.csv").open(newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "url" and rows[0][-1] == "label"
        assert len(rows) == 13


class TestBuildEmbedInfer:
    def test_build_then_embed_then_infer(self, inputs, tmp_path, capsys):
        out = tmp_path / "steps"
        code = run(
            "build",
            "--input", str(inputs["urls"]),
            "--resolutions", str(inputs["resolutions"]),
            "--nameservers", str(inputs["nameservers"]),
            "--seed", "5",
            "--split", "0.5",
            "--out", str(out),
        )
        assert code == 0
        split = json.loads((out / "split.json").read_text())
        assert len(split["train"]) == 6 and len(split["test"]) == 6

        code = run(
            "embed",
            "--graph", str(out / "graph.tsv"),
            "--seed", "5",
            "--dim", "8",
            "--out", str(out),
        )
        assert code == 0
        assert (out / "embeddings.tsv").exists()

        code = run(
            "infer",
            "--graph", str(out / "graph.tsv"),
            "--embeddings", str(out / "embeddings.tsv"),
            "--mode", "bpe",
            "--seed", "5",
            "--out", str(out),
        )
        assert code == 0
        report = json.loads((out / "predictions.json").read_text())
        assert report["config"]["mode"] == "bpe"
        assert len(report["predictions"]) == 6
        for row in report["predictions"]:
            assert row["predicted"] in ("phishy", "benign")

    def test_bpe_infer_requires_embeddings(self, inputs, tmp_path, capsys):
        out = tmp_path / "steps"
        run(
            "build", "--input", str(inputs["urls"]), "--seed", "5",
            "--split", "0.5", "--out", str(out),
        )
        code = run(
            "infer", "--graph", str(out / "graph.tsv"),
            "--mode", "bpe", "--seed", "5", "--out", str(out),
        )
        assert code == 1
        assert "--embeddings is required" in capsys.readouterr().err

    def test_infer_pol_with_target_file(self, inputs, tmp_path):
        out = tmp_path / "steps"
        run(
            "build", "--input", str(inputs["urls"]), "--seed", "5",
            "--split", "0.5", "--out", str(out),
        )
        split = json.loads((out / "split.json").read_text())
        targets = tmp_path / "targets.txt"
        targets.write_text("\n".join(list(split["test"])[:3]) + "\n")
        code = run(
            "infer", "--graph", str(out / "graph.tsv"), "--mode", "pol",
            "--seed", "5", "--test", str(targets), "--out", str(out),
        )
        assert code == 0
        report = json.loads((out / "predictions.json").read_text())
        assert len(report["predictions"]) == 3

    def test_infer_unknown_target_is_data_error(self, inputs, tmp_path, capsys):
        out = tmp_path / "steps"
        run(
            "build", "--input", str(inputs["urls"]), "--seed", "5",
            "--split", "0.5", "--out", str(out),
        )
        targets = tmp_path / "targets.txt"
        targets.write_text("http://total-stranger.example/x\n")
        code = run(
            "infer", "--graph", str(out / "graph.tsv"), "--mode", "pol",
            "--seed", "5", "--test", str(targets), "--out", str(out),
        )
        assert code == 2

    def test_missing_graph_is_data_error(self, tmp_path):
        code = run(
            "infer", "--graph", str(tmp_path / "ghost.tsv"), "--mode", "pol",
            "--seed", "1", "--out", str(tmp_path / "o"),
        )
        assert code == 2


class TestEvade:
    def test_writes_evaded_corpus_and_log(self, inputs, tmp_path, capsys):
        out = tmp_path / "ev"
        code = run(
            "evade", "--input", str(inputs["urls"]), "--seed", "5",
            "--split", "0.5", "--evasion", "m1", "--evasion-ratio", "1.0",
            "--out", str(out),
        )
        assert code == 0
        assert "evaded" in capsys.readouterr().out
        assert (out / "evaded.csv").exists()
        header = json.loads((out / "evasion_log.jsonl").read_text().splitlines()[0])
        assert header["method"] == "m1" and header["ratio"] == 1.0
        split = json.loads((out / "split.json").read_text())
        assert len(split["test"]) == 6

    def test_unknown_method_is_usage_error(self, inputs, tmp_path, capsys):
        code = run(
            "evade", "--input", str(inputs["urls"]), "--seed", "5",
            "--evasion", "m9", "--out", str(tmp_path / "o"),
        )
        assert code == 1
        assert "unknown evasion method" in capsys.readouterr().err

    def test_bad_ratio_is_usage_error(self, inputs, tmp_path):
        code = run(
            "evade", "--input", str(inputs["urls"]), "--seed", "5",
            "--evasion", "m1", "--evasion-ratio", "2.0", "--out", str(tmp_path / "o"),
        )
        assert code == 1


class TestEvalAndPipeline:
    def test_eval_writes_comparison(self, inputs, tmp_path):
        out = tmp_path / "cmp"
        code = run(
            "eval",
            "--input", str(inputs["urls"]),
            "--seed", "5", "--split", "0.5",
            "--methods", "pol,rwr",
            "--evasion", "none,m1", "--evasion-ratio", "1.0",
            "--out", str(out),
        )
        assert code == 0
        with (out / "comparison.csv").open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [(r["method"], r["evasion"]) for r in rows] == [
            ("pol", "none"), ("rwr", "none"), ("pol", "m1"), ("rwr", "m1"),
        ]
        mirrored = json.loads((out / "comparison.json").read_text())
        assert mirrored["rows"] == rows

    def test_eval_rejects_unknown_method(self, inputs, tmp_path, capsys):
        code = run(
            "eval", "--input", str(inputs["urls"]), "--seed", "5",
            "--methods", "pol,magic", "--out", str(tmp_path / "o"),
        )
        assert code == 1
        assert "unknown method" in capsys.readouterr().err

    def test_pipeline_end_to_end(self, inputs, tmp_path, capsys):
        out = tmp_path / "run"
        code = run(
            "pipeline",
            "--input", str(inputs["urls"]),
            "--resolutions", str(inputs["resolutions"]),
            "--nameservers", str(inputs["nameservers"]),
            "--seed", "5", "--split", "0.5", "--mode", "pol",
            "--out", str(out),
        )
        assert code == 0
        stdout = capsys.readouterr().out
        assert "pol: f1" in stdout
        assert (out / "manifest.json").exists()

    def test_pipeline_bad_mode_is_usage_error(self, inputs, tmp_path, capsys):
        code = run(
            "pipeline", "--input", str(inputs["urls"]), "--seed", "5",
            "--mode", "svm", "--out", str(tmp_path / "o"),
        )
        assert code == 1
        assert "--mode must be one of" in capsys.readouterr().err


class TestInstalledEntryPoints:
    def test_console_script(self):
        proc = subprocess.run(
            ["phishgraph", "--version"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert __version__ in proc.stdout

    def test_module_execution(self):
        proc = subprocess.run(
            [sys.executable, "-m", "phishgraph", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert __version__ in proc.stdout
