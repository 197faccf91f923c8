import csv
import os

import numpy as np
import pytest

from zilr.analysis import export_traces, histogram_edges, kmeans2, pca2


def two_blob_draws(n=300, gap=6.0, frac=0.3, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    n1 = int(n * frac)
    a = rng.normal(0.0, 0.3, size=(n1, dim))
    b = rng.normal(gap, 0.3, size=(n - n1, dim))
    return np.vstack([a, b])


def test_kmeans_recovers_two_blobs():
    x = two_blob_draws()
    rep = kmeans2(x, seed=1)
    assert not rep.degenerate
    assert rep.sizes.tolist() == [90, 210]
    assert rep.proportions[0] == pytest.approx(0.3)
    # cluster 1 is the smaller cluster, centered near the origin blob
    assert np.max(np.abs(rep.centroids[0])) < 0.2
    assert np.max(np.abs(rep.centroids[1] - 6.0)) < 0.2
    assert np.all(np.isin(rep.assignments, (1, 2)))


def test_kmeans_deterministic_given_seed():
    x = two_blob_draws(seed=2)
    a = kmeans2(x, seed=3)
    b = kmeans2(x, seed=3)
    assert np.array_equal(a.assignments, b.assignments)
    assert np.array_equal(a.centroids, b.centroids)


def test_kmeans_degenerate_single_point_cloud():
    x = np.zeros((50, 3))
    rep = kmeans2(x, seed=0)
    assert rep.degenerate
    assert rep.inertia == pytest.approx(0.0)


def test_kmeans_restarts_improve_inertia():
    x = two_blob_draws(seed=4)
    best = kmeans2(x, seed=5, restarts=10).inertia
    single = kmeans2(x, seed=5, restarts=1).inertia
    assert best <= single + 1e-9


def test_pca_identifies_separation_axis():
    x = two_blob_draws(seed=6)
    proj = pca2(x)
    assert proj.components.shape == (2, 4)
    # rows orthonormal
    assert np.allclose(proj.components @ proj.components.T, np.eye(2),
                       atol=1e-10)
    assert proj.explained_variance[0] > proj.explained_variance[1]
    # the top component is the blob-separation direction (1,1,1,1)/2
    assert np.allclose(np.abs(proj.components[0]), 0.5, atol=0.05)
    # sign convention: largest-magnitude loading positive
    for row in proj.components:
        assert row[np.argmax(np.abs(row))] > 0
    # scores reproduce the centered projection
    centered = x - x.mean(axis=0)
    assert np.allclose(proj.scores, centered @ proj.components.T)


def test_pca_rank_deficient_input():
    rng = np.random.default_rng(7)
    line = np.outer(rng.standard_normal(100), np.array([1.0, 2.0, 0.0]))
    proj = pca2(line)
    assert proj.components.shape[0] == 1


def test_histogram_edges():
    e = histogram_edges(0.0, 1.0, bins=50)
    assert e.shape == (51,)
    assert e[0] == 0.0 and e[-1] == 1.0
    degen = histogram_edges(2.0, 2.0)
    assert degen.tolist() == [1.5, 2.5]


def test_export_traces_files_and_contents(tmp_path):
    x = two_blob_draws(n=80, dim=2, seed=8)
    out = str(tmp_path)
    produced = export_traces(x, out, param_names=["beta_0", "gamma_0"])
    assert len(produced) == 6
    for path in produced:
        assert os.path.exists(path)
    with open(os.path.join(out, "trace_beta_0.csv")) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iteration", "beta_0"]
    assert len(rows) == 81
    assert float(rows[1][1]) == pytest.approx(x[0, 0])
    with open(os.path.join(out, "hist_gamma_0.csv")) as fh:
        hrows = list(csv.reader(fh))
    counts = sum(int(r[2]) for r in hrows[1:])
    assert counts == 80
