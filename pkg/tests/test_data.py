import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sgmvcg.data import (
    Dataset,
    DimensionError,
    EmptyInputError,
    LibsvmParseError,
    dump_libsvm,
    load_libsvm,
    maxmin_scale,
    parse_libsvm,
    synth_ridge,
)
from sgmvcg.preprocessing import MaxMinScaler

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_parse_two_rows():
    ds = parse_libsvm("1 1:0.5 3:2.0\n-1 2:1.0")
    assert (ds.n, ds.d) == (2, 3)
    np.testing.assert_array_equal(ds.features, [[0.5, 0, 2.0], [0, 1.0, 0]])
    np.testing.assert_array_equal(ds.targets, [1, -1])


def test_parse_empty_stream():
    with pytest.raises(EmptyInputError):
        parse_libsvm("")
    with pytest.raises(EmptyInputError):
        parse_libsvm(io.StringIO("\n# only a comment\n"))


def test_parse_non_increasing_index_reports_line():
    with pytest.raises(LibsvmParseError, match="line 1") as err:
        parse_libsvm("1 2:1 1:1")
    assert err.value.lineno == 1


@pytest.mark.parametrize("text, lineno", [
    ("1 1:1\n0 0:3", 2),
    ("1 1:1\n2 1:1\nabc 1:2", 3),
    ("1 1:x", 1),
    ("1 a:1", 1),
    ("1 1:1 1:2", 1),
    ("1 1", 1),
    ("1 1:nan", 1),
])
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(LibsvmParseError) as err:
        parse_libsvm(text)
    assert err.value.lineno == lineno
    assert f"line {lineno}" in str(err.value)


def test_expected_dim():
    ds = parse_libsvm("1 1:1", expected_dim=4)
    assert ds.d == 4
    with pytest.raises(DimensionError, match="line 2"):
        parse_libsvm("1 1:1\n1 5:1", expected_dim=4)


def test_comments_and_blank_lines_skipped():
    ds = parse_libsvm("# header\n\n1 1:2 # trailing\n\n")
    assert ds.n == 1 and ds.features[0, 0] == 2


def test_load_libsvm(tmp_path):
    p = tmp_path / "toy.libsvm"
    p.write_text("3 2:1.5\n")
    ds = load_libsvm(p)
    assert ds.name == "toy" and ds.features.tolist() == [[0.0, 1.5]]


@st.composite
def datasets(draw):
    n = draw(st.integers(1, 8))
    d = draw(st.integers(1, 6))
    X = draw(arrays(np.float64, (n, d), elements=st.one_of(st.just(0.0), finite)))
    y = draw(arrays(np.float64, (n,), elements=finite))
    return Dataset(X, y)


@given(datasets())
def test_libsvm_round_trip(ds):
    back = parse_libsvm(dump_libsvm(ds), expected_dim=ds.d)
    assert back == ds


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.ones(3))
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]), np.ones(1))
    ds = Dataset(np.ones((2, 2)), np.ones(2))
    with pytest.raises(ValueError):
        ds.features[0, 0] = 5.0


@pytest.mark.parametrize("col, expected", [
    ([0, 5, 10], [-1, 0, 1]),
    ([3, 3, 3], [0, 0, 0]),
    ([-1, 1], [-1, 1]),
])
def test_maxmin_examples(col, expected):
    ds = Dataset(np.array(col, dtype=float)[:, None], np.zeros(len(col)))
    np.testing.assert_allclose(maxmin_scale(ds).features[:, 0], expected)


@given(datasets())
def test_maxmin_range_and_idempotence(ds):
    once = maxmin_scale(ds)
    assert np.all(once.features >= -1) and np.all(once.features <= 1)
    np.testing.assert_allclose(maxmin_scale(once).features, once.features, atol=1e-12)


def test_maxmin_scaler_matches_function():
    ds, _ = synth_ridge(30, 4, seed=2)
    X = ds.features * 7 + 3
    sc = MaxMinScaler().fit(X)
    np.testing.assert_allclose(sc.transform(X),
                               maxmin_scale(Dataset(X, ds.targets)).features)
    assert list(sc.get_feature_names_out()) == ["x0", "x1", "x2", "x3"]


def test_synth_determinism_and_noiseless():
    a, wa = synth_ridge(4, 2, noise_sd=0, seed=7)
    b, wb = synth_ridge(4, 2, noise_sd=0, seed=7)
    assert a == b and np.array_equal(wa, wb)
    np.testing.assert_array_equal(a.targets, a.features @ wa)


def test_synth_range_and_errors():
    ds, w = synth_ridge(100, 5, noise_sd=0.1, seed=1)
    assert ds.features.min() >= -1 and ds.features.max() <= 1 and w.shape == (5,)
    with pytest.raises(ValueError):
        synth_ridge(0, 3)
    with pytest.raises(ValueError):
        synth_ridge(3, 0)
