import numpy as np
import pytest

from matcpd.errors import ParseError, SchemaError
from matcpd.io import ingest, read_long_csv, write_curves_csv, write_long_csv
from matcpd.simulate import CovarianceSpec, ScenarioSpec, generate_series, scenario_shift


def _write(tmp_path, text, name="x.csv", newline="\n"):
    path = tmp_path / name
    path.write_bytes(text.replace("\n", newline).encode("utf-8"))
    return path


SMALL = "t,i,j,x\n1,1,1,1\n1,1,2,2\n2,1,1,3\n2,1,2,4\n"


@pytest.mark.parametrize("newline", ["\n", "\r\n"])
def test_small_file(tmp_path, newline):
    x = read_long_csv(_write(tmp_path, SMALL, newline=newline))
    assert x.shape == (2, 1, 2)
    assert x.data.tolist() == [[[1.0, 2.0]], [[3.0, 4.0]]]


def test_row_order_irrelevant(tmp_path):
    lines = SMALL.strip().split("\n")
    shuffled = "\n".join([lines[0], *reversed(lines[1:])]) + "\n"
    assert read_long_csv(_write(tmp_path, shuffled)).data.tolist() == [[[1.0, 2.0]], [[3.0, 4.0]]]


def test_missing_cell_named(tmp_path):
    text = "t,i,j,x\n1,1,1,1\n1,1,2,2\n2,1,1,3\n"
    with pytest.raises(SchemaError, match=r"\(t=2,i=1,j=2\)"):
        read_long_csv(_write(tmp_path, text))


def test_missing_cells_capped_at_ten(tmp_path):
    text = "t,i,j,x\n1,1,1,0\n20,1,1,0\n"
    with pytest.raises(SchemaError) as err:
        read_long_csv(_write(tmp_path, text))
    assert "18 missing" in str(err.value)
    assert str(err.value).count("(t=") == 10


def test_duplicate_cell(tmp_path):
    with pytest.raises(SchemaError, match="duplicate"):
        read_long_csv(_write(tmp_path, SMALL + "2,1,2,5\n"))


@pytest.mark.parametrize(
    "row, lineno",
    [("2,1,2,abc", 5), ("2,1,2,nan", 5), ("2,x,2,4", 5), ("2,0,2,4", 5), ("2,1,2", 5)],
)
def test_parse_errors_carry_line_number(tmp_path, row, lineno):
    text = "t,i,j,x\n1,1,1,1\n1,1,2,2\n2,1,1,3\n" + row + "\n"
    with pytest.raises(ParseError, match=f"line {lineno}"):
        read_long_csv(_write(tmp_path, text))


def test_decimal_comma_rejected(tmp_path):
    with pytest.raises(ParseError):
        read_long_csv(_write(tmp_path, 't,i,j,x\n1,1,1,"1,5"\n2,1,1,2\n'))


@pytest.mark.parametrize("text", ["", "a,b,c,d\n1,1,1,1\n", "t,i,j,x\n"])
def test_header_and_empty(tmp_path, text):
    with pytest.raises(SchemaError):
        read_long_csv(_write(tmp_path, text))


def test_utf8_bom_header(tmp_path):
    assert read_long_csv(_write(tmp_path, "﻿" + SMALL)).N == 2


def test_round_trip_bitwise(tmp_path):
    spec = ScenarioSpec(30, 3, 4, ((15, scenario_shift("10-random", 0.3, 1)),), CovarianceSpec("cov2", seed=2), seed=8)
    x = generate_series(spec)
    path = tmp_path / "sim.csv"
    write_long_csv(x, path)
    assert read_long_csv(path).data.tobytes() == x.data.tobytes()


def test_ingest_mad_flag(tmp_path):
    text = "t,i,j,x\n" + "".join(f"{t},1,1,{2 * t - 1}\n" for t in range(1, 6))
    path = _write(tmp_path, text)
    scaled, zero = ingest(path)
    np.testing.assert_allclose(scaled.data.ravel(), [0.5, 1.5, 2.5, 3.5, 4.5])
    raw, zero_raw = ingest(path, mad=False)
    np.testing.assert_array_equal(raw.data.ravel(), [1, 3, 5, 7, 9])
    assert not zero.any() and not zero_raw.any()


def test_curves_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_curves_csv({"mode1": np.array([1.0, 2.5]), "max": np.array([0.5, 0.25])}, 7, path)
    assert path.read_text().splitlines() == ["epoch,mode1,max", "7,1.0,0.5", "8,2.5,0.25"]
