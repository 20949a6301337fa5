import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multistep_ensembles.errors import FormatError, InsufficientLengthError, IntegrityError, ParseError
from multistep_ensembles.series import (TimeSeries, difference, embed, invert_forecast, load_catalog,
                                        write_long_csv)


def _csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_catalog_direct_mapping(tmp_path):
    cat = load_catalog(_csv(tmp_path, "series_id,timestamp,value\na,1,1.0\na,2,2.0\nb,1,5.0\n"))
    assert sorted(cat.series) == ["a", "b"]
    np.testing.assert_array_equal(cat["a"].values, [1.0, 2.0])
    np.testing.assert_array_equal(cat["b"].values, [5.0])


def test_load_catalog_sorts_by_timestamp(tmp_path):
    cat = load_catalog(_csv(tmp_path, "series_id,timestamp,value\na,3,30\na,1,10\na,10,100\na,2,20\n"))
    # numeric order, not lexicographic ("10" < "2")
    np.testing.assert_array_equal(cat["a"].values, [10, 20, 30, 100])


def test_load_catalog_lexicographic_timestamps(tmp_path):
    text = "series_id,timestamp,value\nx,2020-03-01,3\nx,2020-01-01,1\nx,2020-02-01,2\n"
    np.testing.assert_array_equal(load_catalog(_csv(tmp_path, text))["x"].values, [1, 2, 3])


def test_load_catalog_missing_column(tmp_path):
    with pytest.raises(FormatError, match="value"):
        load_catalog(_csv(tmp_path, "series_id,timestamp\na,1\n"))


def test_load_catalog_non_numeric_reports_row(tmp_path):
    with pytest.raises(ParseError) as info:
        load_catalog(_csv(tmp_path, "series_id,timestamp,value\na,1,1.0\na,2,oops\n"))
    assert info.value.row == 3
    assert "row 3" in str(info.value)


def test_load_catalog_rejects_gaps(tmp_path):
    with pytest.raises(ParseError):
        load_catalog(_csv(tmp_path, "series_id,timestamp,value\na,1,1.0\na,2,\n"))


def test_load_catalog_duplicate_key(tmp_path):
    with pytest.raises(IntegrityError):
        load_catalog(_csv(tmp_path, "series_id,timestamp,value\na,1,1.0\na,1,2.0\n"))


def test_write_then_load_roundtrip(tmp_path):
    series = [TimeSeries("s1", [0.1, 0.2, 1e-17]), TimeSeries("s2", [3.0])]
    write_long_csv(series, tmp_path / "out.csv")
    cat = load_catalog(tmp_path / "out.csv")
    for s in series:
        np.testing.assert_array_equal(cat[s.id].values, s.values)


def test_difference_examples():
    d = difference([5, 7, 4])
    np.testing.assert_array_equal(d.diffs, [2, -3])
    assert d.last_level == 4
    np.testing.assert_array_equal(difference([3, 3, 3]).diffs, [0, 0])
    with pytest.raises(InsufficientLengthError):
        difference([1])


@pytest.mark.parametrize("diffs, level, expected", [
    ([1, 1], 4, [5, 6]),
    ([0, 0, 0], 2.5, [2.5, 2.5, 2.5]),
    ([2, -3], 4, [6, 3]),
])
def test_invert_forecast(diffs, level, expected):
    np.testing.assert_array_equal(invert_forecast(diffs, level), expected)


def test_embed_example():
    ds = embed(np.arange(1, 9), 3, 2)
    np.testing.assert_array_equal(ds.X, [[3, 2, 1], [4, 3, 2], [5, 4, 3], [6, 5, 4]])
    np.testing.assert_array_equal(ds.Y, [[4, 5], [5, 6], [6, 7], [7, 8]])
    assert ds.m == 4


def test_embed_boundaries():
    assert embed(np.arange(5.0), 3, 2).m == 1
    with pytest.raises(InsufficientLengthError, match="at least 5"):
        embed(np.arange(4.0), 3, 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=60))
def test_difference_roundtrip(values):
    values = np.asarray(values)
    d = difference(values)
    rebuilt = d.levels()
    np.testing.assert_allclose(rebuilt, values, rtol=1e-12, atol=1e-12 * np.abs(values).max() + 1e-300)
    np.testing.assert_allclose(invert_forecast(d.diffs, values[0]), values[1:], rtol=1e-12,
                               atol=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 40))
def test_embed_row_count_and_alignment(q, H, extra):
    n = q + H + extra
    s = np.random.default_rng(n).normal(size=n)
    ds = embed(s, q, H)
    assert ds.m == n - q - H + 1
    assert np.all(np.diff(ds.origin_index) == 1)
    for i, t in enumerate(ds.origin_index):
        assert np.array_equal(ds.X[i], s[t - np.arange(q)])
        for h in range(1, H + 1):
            assert ds.Y[i, h - 1] == s[t + h]
