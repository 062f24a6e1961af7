import json
import subprocess
import sys

import numpy as np
import pytest

from fdastream.cli import EXIT_DATA, EXIT_OK, EXIT_RUNTIME, main


@pytest.fixture
def constant_csv(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text(
        "ts,a,b,c\n"
        "0,1.0,2.0,3.0\n"
        "1,1.0,2.0,3.0\n"
        "2,1.0,2.0,3.0\n"
        "3,1.0,2.0,3.0\n"
    )
    return path


class TestFit:
    def test_writes_msplot_table(self, constant_csv, tmp_path):
        out = tmp_path / "msplot.csv"
        assert main(["fit", str(constant_csv), "--out", str(out)]) == EXIT_OK
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "id,mo,vo,label,approximate"
        assert lines[1] == "a,-1.0,0.0,outlying,false"
        assert lines[2] == "b,0.0,0.0,central,false"
        assert lines[3] == "c,1.0,0.0,outlying,false"

    def test_stdout_json(self, constant_csv, capsys):
        assert main(["fit", str(constant_csv), "--json"]) == EXIT_OK
        body = json.loads(capsys.readouterr().out)
        assert [p["mo"] for p in body["points"]] == [-1.0, 0.0, 1.0]

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        assert main(["fit", str(tmp_path / "nope.csv")]) == EXIT_DATA
        assert "error" in capsys.readouterr().err

    def test_empty_file_is_data_error(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert main(["fit", str(empty)]) == EXIT_DATA
        assert "empty" in capsys.readouterr().err


class TestGenerate:
    def test_writes_panel_and_labels(self, tmp_path):
        out = tmp_path / "scenario.csv"
        labels = tmp_path / "labels.csv"
        code = main(
            [
                "generate",
                "--central", "5",
                "--magnitude", "1",
                "--shape", "1",
                "--t-points", "30",
                "--seed", "3",
                "--out", str(out),
                "--labels", str(labels),
            ]
        )
        assert code == EXIT_OK
        assert out.read_text().splitlines()[0].startswith("ts,central_000")
        label_lines = labels.read_text().strip().splitlines()
        assert label_lines[0] == "id,label"
        assert len(label_lines) == 8

    def test_deterministic_bytes(self, tmp_path):
        args = ["generate", "--central", "4", "--t-points", "20", "--seed", "9"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(args + ["--out", str(a)])
        main(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestStream:
    def test_inproc_delivers_all(self, constant_csv, capsys):
        assert main(["stream", str(constant_csv), "--rate", "max", "--json"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["delivered"] == 4
        assert report["completed"] is True
        assert report["latency_quantiles"]["p50"] >= 0

    def test_jsonl_events(self, tmp_path, capsys):
        events = tmp_path / "events.jsonl"
        events.write_text(
            '{"kind":"add_time_point","values":[1,2],"series_ids":["a","b"]}\n'
            '{"kind":"add_time_point","values":[2,3]}\n'
            '{"kind":"add_series","id":"c","values":[0,0]}\n'
        )
        assert main(["stream", str(events), "--rate", "max", "--json"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["delivered"] == 3

    def test_unreachable_server_fails_after_retries(self, constant_csv, capsys):
        code = main(
            [
                "stream", str(constant_csv),
                "--rate", "max",
                "--server", "http://127.0.0.1:9",  # reserved port, nothing listens
                "--retries", "1",
                "--json",
            ]
        )
        assert code == EXIT_RUNTIME
        report = json.loads(capsys.readouterr().out)
        assert report["completed"] is False
        assert "unreachable" in report["error"]


class TestBench:
    def test_report_shape(self, capsys):
        assert main(["bench", "--n", "20", "--t", "50", "--runs", "3", "--json"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["n"] == 20 and report["t"] == 50 and report["runs"] == 3
        for key in ("initial_fit_s", "partial_fit_s", "approx_add_s", "full_recompute_s"):
            assert report[key] >= 0.0

    def test_table_output(self, capsys):
        assert main(["bench", "--n", "10", "--t", "30", "--runs", "2"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "partial fit" in out
        assert "full recompute" in out


class TestExport:
    def test_svg_has_one_circle_per_series(self, constant_csv, tmp_path):
        svg = tmp_path / "plot.svg"
        assert main(["export", str(constant_csv), "--svg", str(svg)]) == EXIT_OK
        text = svg.read_text()
        assert text.count("<circle") == 3
        assert 'fill="teal"' in text and 'fill="palevioletred"' in text

    def test_deterministic_bytes(self, constant_csv, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        main(["export", str(constant_csv), "--svg", str(a)])
        main(["export", str(constant_csv), "--svg", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_empty_input_is_error(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert main(["export", str(empty), "--svg", str(tmp_path / "o.svg")]) == EXIT_DATA


class TestUsage:
    def test_no_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_console_entry_point(self, constant_csv):
        result = subprocess.run(
            [sys.executable, "-m", "fdastream.cli", "fit", str(constant_csv)],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert result.stdout.splitlines()[1] == "a,-1.0,0.0,outlying,false"
