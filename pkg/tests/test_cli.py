"""CLI subcommands: pipeline closure and exit codes."""

import json
from pathlib import Path

import pytest

from synthmt.cli import main

from conftest import RUNNING_SPEC

GOLDEN_TRACE = '{"x": 4}\n{"x": 4}\n{"x": 1}\n{"x": 0}\n{"x": 2}\n'


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "running.spec").write_text(RUNNING_SPEC)
    (tmp_path / "golden.jsonl").write_text(GOLDEN_TRACE)
    return tmp_path


class TestPipelineClosure:
    def test_full_pipeline(self, workdir, capsys):
        assert main(["abstract", "running.spec",
                     "-o", "table.json", "-b", "bspec.json"]) == 0
        assert main(["synth", "bspec.json", "-o", "mealy.json"]) == 0
        assert main(["skolem", "bspec.json", "--mealy", "mealy.json",
                     "-o", "provider.json"]) == 0
        assert main(["emit-c", "provider.json", "-o", "provider.c"]) == 0
        assert main(["run", "running.spec", "--inputs", "golden.jsonl",
                     "-o", "out.jsonl", "--report", "report.json"]) == 0
        assert main(["check", "running.spec", "--trace", "out.jsonl"]) == 0
        assert main(["bench", "running.spec", "--steps", "40",
                     "--repeats", "1", "--seed", "2",
                     "--csv", "bench.csv", "-o", "bench.json"]) == 0

        # artifacts written by one subcommand are accepted by consumers
        report = json.loads(Path("report.json").read_text())
        assert report["ok"] is True
        assert Path("provider.c").read_text().startswith("#include")
        csv = Path("bench.csv").read_text().strip().splitlines()
        assert len(csv) == 1 + 2 * 40  # header + both providers' rows

    def test_import_then_run(self, workdir):
        assert main(["abstract", "running.spec",
                     "-o", "table.json", "-b", "bspec.json"]) == 0
        assert main(["synth", "bspec.json", "-o", "mealy.json"]) == 0
        assert main(["synth", "bspec.json", "--import", "mealy.json",
                     "-o", "mealy2.json"]) == 0
        assert Path("mealy2.json").read_text() == \
            Path("mealy.json").read_text()

    def test_skolem_accepts_table_artifact(self, workdir):
        main(["abstract", "running.spec", "-o", "t.json", "-b", "b.json"])
        main(["synth", "b.json", "-o", "m.json"])
        assert main(["skolem", "t.json", "--mealy", "m.json",
                     "-o", "p.json"]) == 0
        assert main(["skolem", "b.json", "--mealy", "m.json",
                     "-o", "p2.json"]) == 0
        assert Path("p.json").read_text() == Path("p2.json").read_text()

    def test_run_with_skolem_artifact(self, workdir):
        main(["abstract", "running.spec", "-o", "t.json", "-b", "b.json"])
        main(["synth", "b.json", "-o", "m.json"])
        main(["skolem", "b.json", "--mealy", "m.json", "-o", "p.json"])
        assert main(["run", "running.spec", "--inputs", "golden.jsonl",
                     "--mealy", "m.json", "--skolem", "p.json",
                     "-o", "out.jsonl"]) == 0

    def test_dynamic_run(self, workdir):
        assert main(["run", "running.spec", "--inputs", "golden.jsonl",
                     "--provider", "dynamic", "-o", "out.jsonl"]) == 0


class TestExitCodes:
    def test_unrealizable_is_1(self, workdir, capsys):
        Path("bad.spec").write_text(
            "env x: int; sys y: int; property: G (y > x && y <= x)")
        assert main(["abstract", "bad.spec", "-o", "t.json",
                     "-b", "b.json"]) == 0
        code = main(["synth", "b.json", "-o", "m.json"])
        assert code == 1
        err = capsys.readouterr().err
        assert "Unrealizable" in err and "witness" in err

    def test_usage_error_is_2(self, workdir, capsys):
        Path("broken.spec").write_text("env x int property G x < 2")
        assert main(["abstract", "broken.spec", "-o", "t.json",
                     "-b", "b.json"]) == 2

    def test_missing_file_is_2(self, workdir):
        assert main(["abstract", "missing.spec", "-o", "t.json",
                     "-b", "b.json"]) == 2

    def test_violating_trace_is_1(self, workdir):
        main(["run", "running.spec", "--inputs", "golden.jsonl",
              "-o", "out.jsonl"])
        lines = Path("out.jsonl").read_text().splitlines()
        rec = json.loads(lines[0])
        rec["y"] = 0 if rec["choice"][1] == "1" else 2  # falsify literal 1
        lines[0] = json.dumps(rec)
        Path("forged.jsonl").write_text("\n".join(lines) + "\n")
        assert main(["check", "running.spec", "--trace",
                     "forged.jsonl"]) == 1
