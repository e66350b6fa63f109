import numpy as np
import pytest

from advact.data import (SYNTH_NAMES, load_csv, split_indices, standardize, synth_dataset,
                         write_csv)
from advact.errors import ContractError, ParseError


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_three_rows_split_two_one(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n"), "y", normalize=False)
    assert ds.x_train.shape == (2, 2) and ds.x_test.shape == (1, 2)
    assert ds.y_train.shape == (2, 1)
    assert ds.feature_names == ["a", "b"]
    # every row lands in exactly one split, labels stay attached
    rows = np.vstack([np.hstack([ds.x_train, ds.y_train]), np.hstack([ds.x_test, ds.y_test])])
    assert sorted(map(tuple, rows)) == [(1, 2, 3), (4, 5, 6), (7, 8, 9)]


@pytest.mark.parametrize("n, n_train", [(1, 0), (3, 2), (5, 4), (10, 8), (11, 8)])
def test_split_floor_rule(n, n_train):
    tr, te = split_indices(n, seed=4)
    assert len(tr) == n_train and len(te) == n - n_train
    assert sorted(np.concatenate([tr, te])) == list(range(n))


def test_header_only_is_empty_dataset(tmp_path):
    with pytest.raises(ContractError):
        load_csv(_write(tmp_path, "a,y\n"), "y")


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("a,b\n1,2\n", 1),
    ("a,y\n1,2\n3\n", 3),
    ("a,y\n1,2\n3,x\n", 3),
    ("a,y\n1,2\n\n4,5,6\n", 4),
    ("a,y\n1,nan\n", 2),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    with pytest.raises(ParseError) as info:
        load_csv(_write(tmp_path, text), "y")
    assert info.value.line == line


def test_standardize_moments(rng, tmp_path):
    x = rng.normal(5.0, 3.0, size=(200, 4))
    y = rng.normal(size=(200, 1))
    path = tmp_path / "s.csv"
    np.savetxt(path, np.hstack([x, y]), delimiter=",", header="a,b,c,d,y", comments="")
    ds = load_csv(path, "y", normalize=True)
    np.testing.assert_allclose(ds.x_train.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(ds.x_train.std(axis=0), 1.0, atol=1e-9)


def test_standardize_constant_column():
    tr, te = standardize(np.array([[1.0, 2.0], [1.0, 4.0]]), np.array([[1.0, 3.0]]))
    np.testing.assert_array_equal(tr[:, 0], [0.0, 0.0])
    np.testing.assert_array_equal(te, [[0.0, 0.0]])


def test_classification_labels(tmp_path):
    ds = load_csv(_write(tmp_path, "a,y\n0.1,0\n0.2,1\n0.3,2\n0.4,1\n0.5,0\n"), "y",
                  task="classification")
    assert ds.y_train.dtype == np.int64 and ds.y_train.ndim == 1
    assert ds.output_dim == 3


def test_regress_sin_formula_at_origin():
    ds = synth_dataset("regress-sin", n=50, noise=0.0, seed=1)
    x = np.vstack([ds.x_train, ds.x_test])
    y = np.vstack([ds.y_train, ds.y_test])[:, 0]
    np.testing.assert_allclose(y, np.sin(3 * x[:, 0]) + x[:, 1] ** 2 - 0.5 * x[:, 2], atol=1e-15)
    assert np.sin(3 * 0.0) + 0.0 ** 2 - 0.5 * 0.0 == 0.0


def test_blobs_linearly_separable():
    ds = synth_dataset("blobs-2class", n=1000, noise=0.1, seed=3, separation=10.0)
    # least-squares linear classifier as an independent oracle
    design = np.hstack([ds.x_train, np.ones((len(ds.x_train), 1))])
    w, *_ = np.linalg.lstsq(design, 2.0 * ds.y_train - 1.0, rcond=None)
    pred = np.hstack([ds.x_test, np.ones((len(ds.x_test), 1))]) @ w > 0
    assert np.mean(pred == ds.y_test.astype(bool)) == 1.0


@pytest.mark.parametrize("name", SYNTH_NAMES)
def test_synth_is_seed_deterministic(name):
    a = synth_dataset(name, n=100, seed=9)
    b = synth_dataset(name, n=100, seed=9)
    c = synth_dataset(name, n=100, seed=10)
    np.testing.assert_array_equal(a.x_train, b.x_train)
    np.testing.assert_array_equal(a.y_test, b.y_test)
    assert not np.array_equal(a.x_train, c.x_train)


def test_spirals_are_balanced():
    ds = synth_dataset("spirals-2class", n=400, noise=0.0, seed=0)
    y = np.concatenate([ds.y_train, ds.y_test])
    assert y.sum() == 200
    r = np.linalg.norm(np.vstack([ds.x_train, ds.x_test]), axis=1)
    assert r.max() <= 1.0


@pytest.mark.parametrize("kwargs", [{"name": "moons"}, {"name": "blobs-2class", "n": 0},
                                    {"name": "blobs-2class", "noise": -1.0}])
def test_synth_rejects_bad_arguments(kwargs):
    with pytest.raises(ContractError):
        synth_dataset(**kwargs)


@pytest.mark.parametrize("name", SYNTH_NAMES)
def test_write_then_load_round_trip(name, tmp_path):
    ds = synth_dataset(name, n=30, seed=2)
    path = tmp_path / "rt.csv"
    write_csv(ds, path)
    task = "classification" if name != "regress-sin" else "regression"
    back = load_csv(path, "y", normalize=False, seed=5, task=task)
    x = np.vstack([ds.x_train, ds.x_test])
    got = np.vstack([back.x_train, back.x_test])
    assert sorted(map(tuple, got)) == sorted(map(tuple, x))
