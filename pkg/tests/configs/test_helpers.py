import csv
import io
from pathlib import Path

import numpy as np

from src.configs.helpers import emit_output, format_number, render_csv, sibling_path, write_atomic


class TestWriteAtomic:
    def test_creates_parents_and_leaves_no_temp_files(self, tmp_path):
        path = write_atomic(tmp_path / "a" / "b" / "out.txt", "hello\n")
        assert path.read_text() == "hello\n"
        assert [item.name for item in path.parent.iterdir()] == ["out.txt"]

    def test_overwrites(self, tmp_path):
        path = tmp_path / "out.txt"
        write_atomic(path, "first")
        write_atomic(path, "second")
        assert path.read_text() == "second"


class TestFormatting:
    def test_numbers(self):
        assert format_number(None) == ""
        assert format_number(1024) == "1024"
        assert format_number(np.int64(7)) == "7"
        assert format_number(0.759417123) == "0.759417"
        assert format_number(1.0) == "1"

    def test_render_csv(self):
        text = render_csv(["L", "tau", "policy"], [(64, 0.5, "fixed_1"), (128, None, "prop2_aligned")])
        assert text == "L,tau,policy\n64,0.5,fixed_1\n128,,prop2_aligned\n"

    def test_render_csv_quotes_delimiters(self):
        text = render_csv(["layer", "sigma"], [("all, mean", 1.25)])
        assert text == 'layer,sigma\n"all, mean",1.25\n'
        assert list(csv.reader(io.StringIO(text))) == [["layer", "sigma"], ["all, mean", "1.25"]]


class TestOutputPaths:
    def test_sibling_path(self):
        assert sibling_path(Path("runs/run.json"), ".grid.csv") == Path("runs/run.grid.csv")

    def test_emit_to_stdout(self, capsys):
        emit_output("a,b\n", None)
        emit_output("no newline", None)
        assert capsys.readouterr().out == "a,b\nno newline\n"
