import pathlib

import pytest

from plotkit.reader import COLUMN_NAMES, ResultRow, SchemaError, read_rows


def _columns(path):
    lines = pathlib.Path(path).read_text().strip().splitlines()
    return [line.split(",") for line in lines]


def _write(tmp_path, table):
    p = tmp_path / "t.csv"
    p.write_text("\n".join(",".join(cells) for cells in table) + "\n")
    return str(p)


def test_reads_golden_fixture(rate_region_csv):
    rows = read_rows(rate_region_csv)
    assert len(rows) == 22  # 2 schemes x 11 weight points
    assert all(isinstance(r, ResultRow) for r in rows)
    assert {r.scheme for r in rows} == {"rs", "noma"}
    assert all(r.study == "rate-region" for r in rows)
    assert all(isinstance(r.mean_wsr, float) for r in rows)
    assert all(isinstance(r.trials, int) for r in rows)


def test_missing_column_is_schema_error(rate_region_csv, tmp_path):
    table = _columns(rate_region_csv)
    drop = table[0].index("mean_rate_edge")
    table = [row[:drop] + row[drop + 1 :] for row in table]
    with pytest.raises(SchemaError, match="missing columns: mean_rate_edge"):
        read_rows(_write(tmp_path, table))


def test_unexpected_column_is_schema_error(rate_region_csv, tmp_path):
    table = _columns(rate_region_csv)
    table = [row + (["bogus"] if i == 0 else ["0"]) for i, row in enumerate(table)]
    with pytest.raises(SchemaError, match="unexpected columns: bogus"):
        read_rows(_write(tmp_path, table))


def test_reordered_header_is_schema_error(rate_region_csv, tmp_path):
    table = _columns(rate_region_csv)
    table[0] = table[0][::-1]
    with pytest.raises(SchemaError, match="out of order|missing|unexpected"):
        read_rows(_write(tmp_path, table))


def test_bad_cell_names_row_and_column(rate_region_csv, tmp_path):
    table = _columns(rate_region_csv)
    col = table[0].index("mean_wsr")
    table[3][col] = "not-a-number"
    with pytest.raises(SchemaError, match=r"row 4, column mean_wsr"):
        read_rows(_write(tmp_path, table))


def test_short_row_names_row(rate_region_csv, tmp_path):
    table = _columns(rate_region_csv)
    table[2] = table[2][:5]
    with pytest.raises(SchemaError, match=r"row 3 has 5 fields"):
        read_rows(_write(tmp_path, table))


def test_header_only_is_no_data(tmp_path):
    path = _write(tmp_path, [list(COLUMN_NAMES)])
    with pytest.raises(SchemaError, match="no data rows"):
        read_rows(path)


def test_empty_file_is_schema_error(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(SchemaError, match="empty file"):
        read_rows(str(p))
