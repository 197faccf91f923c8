import json
import os

import numpy as np
import pytest

from zilr.data_io import (Bindings, ColumnSpec, LoadError, RunManifest,
                          load_csv, parse_vector, read_kv, save_dataset_csv,
                          sha256_file, write_csv, write_kv_report)
from zilr.model import Dataset


def write(tmp_path, name, text):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def numeric_bindings(*names, standardize=(), complete_case=True,
                     add_intercept=True, outcome="y"):
    return Bindings(
        outcome=ColumnSpec(outcome),
        covariates=[ColumnSpec(n, standardize=n in standardize)
                    for n in names],
        complete_case=complete_case,
        add_intercept=add_intercept,
    )


def test_load_basic(tmp_path):
    path = write(tmp_path, "d.csv", "y,a,b\n1,2.0,3.5\n0,1.0,-1.0\n")
    d = load_csv(path, numeric_bindings("a", "b"))
    assert d.n == 2 and d.d == 3
    assert np.array_equal(d.y, [1.0, 0.0])
    assert np.array_equal(d.X[:, 0], [1.0, 1.0])
    assert np.array_equal(d.X[:, 1], [2.0, 1.0])
    assert d.column_names == ["intercept", "a", "b"]


def test_complete_case_filtering(tmp_path):
    path = write(tmp_path, "d.csv", "y,a\n1,2.0\n0,\n0,3.0\n")
    info = {}
    d = load_csv(path, numeric_bindings("a"), info=info)
    assert d.n == 2
    assert info["rows_read"] == 3 and info["rows_dropped"] == 1


def test_recode_and_unmapped_counts(tmp_path):
    path = write(tmp_path, "d.csv", "diq,a\n1,2.0\n2,1.0\n9,3.0\n2,0.5\n")
    b = Bindings(outcome=ColumnSpec("diq", recode={"1": 1.0, "2": 0.0}),
                 covariates=[ColumnSpec("a")])
    info = {}
    d = load_csv(path, b, info=info)
    assert d.n == 3
    assert np.array_equal(d.y, [1.0, 0.0, 0.0])
    assert info["unmapped_counts"] == {"diq": 1}


def test_standardization_post_filter(tmp_path):
    path = write(tmp_path, "d.csv", "y,a\n1,10\n0,\n0,20\n1,30\n0,40\n")
    d = load_csv(path, numeric_bindings("a", standardize=("a",)))
    col = d.X[:, 1]
    assert d.n == 4
    assert abs(col.mean()) < 1e-12
    assert abs(col.std(ddof=0) - 1.0) < 1e-12


def test_missing_column_error(tmp_path):
    path = write(tmp_path, "d.csv", "y,a\n1,2\n")
    with pytest.raises(LoadError, match="zz"):
        load_csv(path, numeric_bindings("zz"))


def test_non_numeric_cell_addressed(tmp_path):
    path = write(tmp_path, "d.csv", "y,a\n1,2.0\n0,oops\n")
    with pytest.raises(LoadError, match="row 3.*'a'"):
        load_csv(path, numeric_bindings("a"))


def test_empty_after_filtering(tmp_path):
    path = write(tmp_path, "d.csv", "y,a\n1,\n0,\n")
    with pytest.raises(LoadError, match="no rows remain"):
        load_csv(path, numeric_bindings("a"))


def test_zero_variance_standardize_rejected(tmp_path):
    path = write(tmp_path, "d.csv", "y,a\n1,3\n0,3\n")
    with pytest.raises(LoadError, match="zero variance"):
        load_csv(path, numeric_bindings("a", standardize=("a",)))


def test_round_trip_exact(tmp_path):
    rng = np.random.default_rng(0)
    X = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
    y = (rng.random(20) < 0.5).astype(float)
    d = Dataset(y=y, X=X, column_names=["intercept", "a", "b"])
    path = os.path.join(tmp_path, "out.csv")
    save_dataset_csv(d, path)
    loaded = load_csv(path, numeric_bindings("a", "b"))
    assert np.array_equal(loaded.y, d.y)
    assert np.array_equal(loaded.X, d.X)


def test_manifest_lifecycle(tmp_path):
    out = os.path.join(tmp_path, "run")
    m = RunManifest(command="fit", config={"seed": 3}, seed=3, out_dir=out)
    m.write()
    body = json.load(open(m.path))
    assert body["status"] == "running"
    assert body["seed"] == 3
    produced = os.path.join(out, "report.txt")
    write_kv_report(produced, {"x": 1.5})
    m.add(produced)
    m.finalize()
    body = json.load(open(m.path))
    assert body["status"] == "complete"
    assert body["produced"] == ["report.txt"]
    assert body["finished"] is not None


def test_kv_report_round_trip(tmp_path):
    path = os.path.join(tmp_path, "r.txt")
    write_kv_report(path, {"a": 1.5, "vec": np.array([1.0, 2.0]),
                           "name": "hello"})
    kv = read_kv(path)
    assert kv["a"] == "1.5"
    assert parse_vector(kv["vec"]).tolist() == [1.0, 2.0]
    assert kv["name"] == "hello"


def test_read_kv_comments_and_errors(tmp_path):
    path = write(tmp_path, "c.txt", "# comment\nkey = 5\n\nbad line\n")
    with pytest.raises(LoadError, match="c.txt:4"):
        read_kv(path)
    path2 = write(tmp_path, "c2.txt", "key = 5  # trailing\n")
    assert read_kv(path2) == {"key": "5"}


def test_write_csv_and_hash(tmp_path):
    path = os.path.join(tmp_path, "t.csv")
    write_csv(path, ["a", "b"], [[1, 2], [3, 4]])
    h1 = sha256_file(path)
    write_csv(path, ["a", "b"], [[1, 2], [3, 4]])
    assert sha256_file(path) == h1
