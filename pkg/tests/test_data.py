import json
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from hullscope.data import (
    RunRecord,
    SyntheticSpec,
    correlation_matrix,
    dumps_record,
    gen_synthetic,
    parse_libsvm,
    planted_beta,
    read_csv,
    read_libsvm,
    read_points_csv,
    read_run,
    write_csv,
    write_libsvm,
    write_points_csv,
    write_run,
)
from hullscope.errors import ConfigError, DataError
from hullscope.model import Dataset


def test_demo_designs():
    ds, beta = gen_synthetic(SyntheticSpec("example2d"))
    np.testing.assert_array_equal(ds.X, [[1, 1], [1, 1.025]])
    np.testing.assert_array_equal(ds.y, [1, 1])
    assert beta is None
    ds, _ = gen_synthetic(SyntheticSpec("example3d", epsilon=0.1))
    np.testing.assert_allclose(ds.X, [[1, 1, 1], [1, 1.1, 1], [1, 1, 1.2]])


def test_planted_beta():
    b = planted_beta(100)
    assert np.count_nonzero(b) == 10
    assert np.all(b[::10] == 0.1) and b[0] == 0.1 and b[1] == 0.0


def test_correlation_structure():
    S = correlation_matrix(10)
    assert S[0, 1] == pytest.approx(math.exp(-0.1))
    assert S[2, 7] == pytest.approx(math.exp(-0.5))
    assert np.all(np.linalg.eigvalsh(S) > 0)


def test_correlated_sample_covariance():
    ds, _ = gen_synthetic(SyntheticSpec("correlated", p=10, n=50_000, noise_sd=0.1))
    C = np.cov(ds.X, rowvar=False)
    np.testing.assert_allclose(C, correlation_matrix(10), atol=0.03)
    assert C[0, 1] == pytest.approx(math.exp(-0.1), abs=0.02)


def test_correlated_defaults_and_noise():
    ds, beta = gen_synthetic(SyntheticSpec("correlated", p=100))
    assert ds.X.shape == (50, 100)
    resid = ds.y - ds.X @ beta
    assert 0.05 < resid.std() < 0.2
    again, _ = gen_synthetic(SyntheticSpec("correlated", p=100))
    np.testing.assert_array_equal(ds.X, again.X)
    other, _ = gen_synthetic(SyntheticSpec("correlated", p=100, seed=1))
    assert not np.array_equal(ds.X, other.X)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SyntheticSpec("correlated")
    with pytest.raises(ConfigError):
        SyntheticSpec("correlated", p=7)
    with pytest.raises(ConfigError):
        SyntheticSpec("example2d", p=5)
    with pytest.raises(ConfigError):
        SyntheticSpec("mystery")


def test_parse_libsvm():
    text = ["# header comment", "1 1:0.5 3:2", "", "-1 2:1.5  # trailing", "0 1:1 2:1 3:1"]
    ds = parse_libsvm(text)
    np.testing.assert_array_equal(ds.y, [1, -1, 0])
    np.testing.assert_array_equal(ds.dense(), [[0.5, 0, 2], [0, 1.5, 0], [1, 1, 1]])
    assert ds.is_sparse
    # padding with unseen features creates zero columns, which are rejected
    with pytest.raises(DataError, match="zero column.*4, 5"):
        parse_libsvm(text, n_features=5)


@pytest.mark.parametrize(
    "lines, msg",
    [
        (["1 1:2", "x 1:2"], "line 2: bad label"),
        (["1 1:2 3"], "line 1: expected index:value"),
        (["1 2:1 1:1"], "line 1: non-increasing"),
        (["1 0:1"], "not 1-based"),
        (["1 a:1"], "malformed"),
        ([], "empty"),
        (["1 1:1", "2 3:1"], r"zero column\(s\) in X: 2 "),
    ],
)
def test_libsvm_errors(lines, msg):
    with pytest.raises(DataError, match=msg):
        parse_libsvm(lines)


def test_libsvm_n_features_too_small():
    with pytest.raises(DataError, match="n_features"):
        parse_libsvm(["1 4:1"], n_features=2)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        read_libsvm(tmp_path / "nope.svm")


@settings(max_examples=25, deadline=None)
@given(
    X=hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=st.floats(-1e6, 1e6, width=64)),
    seed=st.integers(0, 1000),
)
def test_round_trips_are_exact(tmp_path_factory, X, seed):
    X = X.copy()
    X[0] = np.where(X[0] == 0, 1.0, X[0])  # no zero columns
    y = np.random.default_rng(seed).normal(size=X.shape[0])
    ds = Dataset(X, y)
    d = tmp_path_factory.mktemp("rt")
    write_libsvm(ds, d / "a.svm")
    back = read_libsvm(d / "a.svm", n_features=X.shape[1])
    np.testing.assert_array_equal(back.dense(), X)
    np.testing.assert_array_equal(back.y, y)
    write_csv(ds, d / "a.csv")
    back = read_csv(d / "a.csv")
    np.testing.assert_array_equal(back.dense(), X)
    np.testing.assert_array_equal(back.y, y)


def test_csv_label_column_and_errors(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("5,1,2\n6,3,4\n")
    ds = read_csv(f, label_column=0)
    np.testing.assert_array_equal(ds.y, [5, 6])
    np.testing.assert_array_equal(ds.X, [[1, 2], [3, 4]])
    f.write_text("1,2\n3\n")
    with pytest.raises(DataError, match="row 2"):
        read_csv(f)
    f.write_text("1,abc\n")
    with pytest.raises(DataError, match="non-numeric"):
        read_csv(f)
    f.write_text("")
    with pytest.raises(DataError, match="empty"):
        read_csv(f)


def test_points_csv(tmp_path):
    P = np.random.default_rng(0).normal(size=(4, 3))
    write_points_csv(P, tmp_path / "p.csv")
    np.testing.assert_array_equal(read_points_csv(tmp_path / "p.csv"), P)
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(DataError):
        read_points_csv(tmp_path / "e.csv")


def test_sparse_dataset_from_libsvm_fits_like_dense():
    from hullscope.model import LossModel, fit

    lines = ["1 1:1 2:0.5", "2 2:1 3:1", "0.5 1:0.2 3:2", "1.5 1:1 2:1 3:1"]
    ds = parse_libsvm(lines)
    dense = Dataset(ds.dense(), ds.y)
    a = fit(LossModel("squared", 0.1, ds)).beta
    b = fit(LossModel("squared", 0.1, dense)).beta
    np.testing.assert_allclose(a, b, atol=1e-9)
    assert sp.issparse(ds.X)


def test_run_record_serialisation(tmp_path):
    rec = RunRecord(
        config={"seed": 1, "nu": 0.1, "flag": True, "name": None},
        cloud={"beta": np.array([1 / 3, 2.0]), "n": np.int64(4)},
        selection={"indices": [0, 2], "points": np.eye(2)},
        evaluation={"inf": math.inf, "empty": []},
        timings={"total": 0.5},
    )
    text = dumps_record(rec)
    assert "0.33333333333333331" in text
    write_run(rec, tmp_path / "r.json")
    back = read_run(tmp_path / "r.json")
    assert list(back) == ["config", "cloud", "selection", "evaluation", "timings"]
    assert back["cloud"]["beta"][0] == 1 / 3
    assert back["evaluation"]["inf"] == math.inf
    assert back["selection"]["points"] == [[1.0, 0.0], [0.0, 1.0]]
    assert json.loads(text) == back
