import json

import numpy as np
import pandas as pd
import pytest
from openpyxl import load_workbook

from src.core.errors import SchemaError
from src.core.exporter import HANKEL_SHEET, INDEX_SHEET, ResultExporter
from src.core.hankel import build_hankel
from src.core.lss import ModeWord
from src.core.markov import MarkovFamily
from src.core.parser import (
    FileParser,
    load_dataset,
    load_hankel,
    load_inputs,
    load_markov,
    load_system,
    looks_like_hankel,
)
from src.testing.random_systems import random_system


@pytest.fixture
def exporter(tmp_path):
    return ResultExporter(str(tmp_path))


class TestSystemFiles:
    def test_written_system_reads_back_exactly(self, exporter, tmp_path, rng):
        system = random_system(rng, 3, 2, 2, 1)
        path = exporter.export_system(system, "random.json")
        assert path == str((tmp_path / "random.json").absolute())
        loaded = load_system(path)
        for mine, original in zip((*loaded.A, *loaded.B, *loaded.C, loaded.x0),
                                  (*system.A, *system.B, *system.C, system.x0)):
            np.testing.assert_array_equal(mine, original)

    def test_flat_rows_are_accepted(self):
        document = {"D": 1, "n": 2, "m": 1, "p": 1, "A": [[1, 2, 3, 4]], "B": [[1, 0]],
                    "C": [[0, 1]], "x0": [1, 1]}
        system = FileParser().parse_system_document(document)
        np.testing.assert_array_equal(system.A[0], [[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(system.B[0], [[1.0], [0.0]])

    @pytest.mark.parametrize("change, field", [
        ({"n": -1}, "n"),
        ({"A": [[[1.0]]]}, "A"),
        ({"B": [[[0.0], [0.0], [0.0]], [[1.0], [0.0]]]}, "B[1]"),
        ({"x0": [1.0]}, "x0"),
    ])
    def test_schema_errors_name_the_field(self, fixtures_dir, change, field):
        document = json.loads((fixtures_dir / "reachability_gap_min.json").read_text())
        document.update(change)
        with pytest.raises(SchemaError) as excinfo:
            FileParser().parse_system_document(document)
        assert excinfo.value.field == field

    def test_missing_field(self):
        with pytest.raises(SchemaError) as excinfo:
            FileParser().parse_system_document({"D": 1})
        assert excinfo.value.field == "n"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SchemaError):
            load_system(str(path))


class TestMarkovFiles:
    def test_table_reads_back(self, exporter, rank_two_markov):
        path = exporter.export_markov(rank_two_markov.truncate(4), "table.txt")
        loaded = load_markov(path)
        assert (loaded.D, loaded.m, loaded.p, loaded.depth) == (2, 1, 1, 4)
        assert loaded.s0(ModeWord.parse("221")) == pytest.approx([1.0])
        assert loaded.sj(2, ModeWord.parse("2"), 1, 1) == pytest.approx([1.0])

    def test_line_format(self, exporter, rank_two_markov):
        lines = exporter.markov_lines(rank_two_markov.truncate(2))
        assert lines[0] == "# D=2 m=1 p=1 depth=2"
        assert "S0 21 1.0" in lines
        assert "S 1 2 - 1 0.0" in lines

    def test_ten_mode_table_reads_back(self, exporter, rng):
        table = MarkovFamily.from_system(random_system(rng, 2, 10, 1, 1)).truncate(3)
        lines = exporter.markov_lines(table)
        assert any(line.startswith("S0 10 ") for line in lines)
        assert any(line.startswith("S0 1,2 ") for line in lines)
        assert any(line.startswith("S 1 1 10 2 ") for line in lines)

        loaded = load_markov(exporter.export_markov(table, "ten.txt"))
        assert loaded.depth == 3
        for (kind, word, value), (_, _, original) in zip(loaded.items(), table.items()):
            np.testing.assert_array_equal(value, original, err_msg=f"{kind}({word})")

    def test_ten_mode_letter_out_of_range(self, tmp_path):
        path = tmp_path / "eleven.txt"
        path.write_text("# D=10 m=1 p=1 depth=1\nS0 11 0.5\n")
        with pytest.raises(SchemaError, match="line 2"):
            load_markov(str(path))

    def test_missing_entry(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("# D=1 m=1 p=1 depth=2\nS0 1 0.5\nS0 11 0.25\n")
        with pytest.raises(SchemaError, match="S_1 missing"):
            load_markov(str(path))

    def test_missing_header(self, tmp_path):
        path = tmp_path / "headless.txt"
        path.write_text("S0 1 0.5\n")
        with pytest.raises(SchemaError):
            load_markov(str(path))

    def test_bad_channel(self, tmp_path):
        path = tmp_path / "channel.txt"
        path.write_text("# D=1 m=1 p=1 depth=2\nS0 1 0\nS0 11 0\nS 2 1 - 1 0\n")
        with pytest.raises(SchemaError, match="channel 2"):
            load_markov(str(path))


class TestDatasets:
    def test_dataset_answers_recorded_experiments(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("# D=2 m=1 p=1\n1 0 0.0\n12 1 0 2.5\n")
        oracle = load_dataset(str(path))
        assert oracle(ModeWord.parse("12"), np.array([[1.0], [0.0]])) == pytest.approx([2.5])

    def test_token_count_is_checked(self, tmp_path):
        path = tmp_path / "data.txt"
        path.write_text("# D=2 m=1 p=1\n12 1 2.5\n")
        with pytest.raises(SchemaError, match="line 2"):
            load_dataset(str(path))

    def test_inputs_csv(self, tmp_path):
        path = tmp_path / "u.csv"
        path.write_text("1,0\n0,2\n")
        np.testing.assert_array_equal(load_inputs(str(path), 2), [[1.0, 0.0], [0.0, 2.0]])
        with pytest.raises(SchemaError):
            load_inputs(str(path), 3)


class TestHankelFiles:
    def test_csv_reads_back(self, exporter, rank_two_markov):
        H = build_hankel(rank_two_markov, 2, 3)
        paths = exporter.export_hankel_csv(H, "h.csv")
        loaded = load_hankel(paths['matrix'], (2, 1, 1))
        assert (loaded.row_depth, loaded.col_depth) == (2, 3)
        np.testing.assert_array_equal(loaded.data, H.data)

        index = pd.read_csv(paths['index'])
        assert list(index.columns) == ['axis', 'flat', 'word', 'offset']
        first_column = index[index['axis'] == 'column'].iloc[1]
        assert (first_column['flat'], first_column['offset']) == (2, '(1,1)')

    def test_ten_mode_csv_reads_back(self, exporter, rng):
        lazy = MarkovFamily.from_system(random_system(rng, 1, 10, 1, 1))
        H = build_hankel(lazy, 2, 0)
        loaded = load_hankel(exporter.export_hankel_csv(H, "ten.csv")["matrix"], (10, 1, 1))
        assert loaded.row_labels() == H.row_labels()
        np.testing.assert_array_equal(loaded.data, H.data)

    def test_wrong_dims_are_rejected(self, exporter, rank_two_markov):
        paths = exporter.export_hankel_csv(build_hankel(rank_two_markov, 1, 1), "h.csv")
        with pytest.raises(SchemaError):
            load_hankel(paths['matrix'], (2, 2, 1))

    def test_workbook(self, exporter, rank_two_markov):
        path = exporter.export_hankel_xlsx(build_hankel(rank_two_markov, 1, 1), "h.xlsx")
        workbook = load_workbook(path)
        assert workbook.sheetnames == [HANKEL_SHEET, INDEX_SHEET]
        assert workbook[HANKEL_SHEET]["B1"].value == "-:0"
        assert workbook[HANKEL_SHEET].freeze_panes == "B2"

    def test_workbook_survives_a_formatting_failure(self, exporter, rank_two_markov, monkeypatch, caplog):
        def broken(path):
            raise OSError("styles unavailable")

        monkeypatch.setattr("src.core.exporter.load_workbook", broken)
        with caplog.at_level("WARNING", logger="src.core.exporter"):
            path = exporter.export_hankel_xlsx(build_hankel(rank_two_markov, 1, 1), "plain.xlsx")
        assert exporter.get_file_size(path) > 0
        assert any(record.levelname == "WARNING" and "styles unavailable" in record.getMessage()
                   for record in caplog.records)

    def test_suffix_heuristic(self):
        assert looks_like_hankel("data/h.CSV")
        assert not looks_like_hankel("data/markov.txt")


def test_matrix_csv(exporter):
    path = exporter.export_matrix_csv(np.array([[1.0, 0.5], [0.25, 2.0]]), "t.csv")
    np.testing.assert_array_equal(pd.read_csv(path, header=None).to_numpy(), [[1.0, 0.5], [0.25, 2.0]])
    assert exporter.get_file_size(path) > 0
    assert exporter.get_file_size("missing.csv") is None
