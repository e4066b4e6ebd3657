import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabmeasure import PointSet
from stabmeasure.estimators import DataFormatError, read_regression_data, write_regression_data


def write(tmp_path, text, name="data.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_csv_with_header(tmp_path):
    data = read_regression_data(write(tmp_path, "x1,x2,y\n0.1,0.2,1.5\n0.3,0.4,-2\n"))
    assert data.d == 2 and data.n == 2
    assert data.marks.tolist() == [1.5, -2.0]


def test_whitespace_and_comments(tmp_path):
    data = read_regression_data(write(tmp_path, "# generated\n0.5   1.0\n\n0.25 3\n"))
    assert data.locations[:, 0].tolist() == [0.5, 0.25]


@pytest.mark.parametrize("text, line", [
    ("0.1,0.2,1\n0.3,0.4\n", 2),
    ("0.1,0.2,1\nx,y,z\n", 2),
    ("0.1,nan,1\n", 1),
    ("x,y\n1,2\n0.1,abc\n", 3),
])
def test_malformed_row_names_line(tmp_path, text, line):
    with pytest.raises(DataFormatError) as exc:
        read_regression_data(write(tmp_path, text))
    assert exc.value.lineno == line
    assert f":{line}:" in str(exc.value)


def test_dimension_check(tmp_path):
    with pytest.raises(DataFormatError):
        read_regression_data(write(tmp_path, "0.1,0.2,1\n"), d=1)


def test_empty_file(tmp_path):
    with pytest.raises(DataFormatError):
        read_regression_data(write(tmp_path, "x,y\n"))


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from([",", "\t", ";"]))
@settings(max_examples=25, deadline=None)
def test_round_trip_exact(tmp_path_factory, seed, d, delim):
    g = np.random.default_rng(seed)
    data = PointSet(g.normal(size=(7, d)) * 10.0 ** g.integers(-8, 8), g.normal(size=7))
    p = tmp_path_factory.mktemp("rt") / "d.txt"
    write_regression_data(p, data, delimiter=delim)
    back = read_regression_data(p)
    assert np.array_equal(back.locations, data.locations)
    assert np.array_equal(back.marks, data.marks)
