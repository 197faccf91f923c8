"""Posterior draw analysis: 2-cluster k-means++, 2-component PCA, and
trace / histogram export.

The exchange symmetry of the shared-design model shows up as two
swap-related posterior modes; k-means with k=2 on the concatenated
(beta || gamma) draws recovers them, and PCA projection gives the
two-dimensional scatter used to visualize the separation.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .sampler import PosteriorDraws


@dataclass
class ClusterReport:
    assignments: np.ndarray          # values in {1, 2}
    centroids: np.ndarray            # (2, n_params)
    sizes: np.ndarray
    proportions: np.ndarray
    inertia: float
    degenerate: bool = False


@dataclass
class PcaProjection:
    components: np.ndarray           # (n_kept_components, n_params), orthonormal rows
    scores: np.ndarray               # (n_draws, n_kept_components)
    explained_variance: np.ndarray


def _draw_matrix(draws) -> np.ndarray:
    if isinstance(draws, PosteriorDraws):
        return draws.draws
    return np.asarray(draws, dtype=float)


def _kmeans_pp_init(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    first = rng.integers(n)
    centers = [x[first]]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    total = d2.sum()
    if total <= 0.0:
        second = rng.integers(n)
    else:
        second = rng.choice(n, p=d2 / total)
    centers.append(x[second])
    return np.array(centers)


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int):
    assign = None
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(2):
            mask = assign == j
            if np.any(mask):
                centers[j] = x[mask].mean(axis=0)
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(x.shape[0]), assign].sum())
    return assign, centers, inertia


def kmeans2(draws, seed: int = 0, restarts: int = 10,
            max_iter: int = 100) -> ClusterReport:
    """k-means++ with k=2: best of ``restarts`` seeded runs by inertia.

    Clusters are numbered so cluster 1 is the smaller one (ties by first
    centroid coordinate), which keeps reports deterministic.
    """
    x = _draw_matrix(draws)
    if x.shape[0] < 2:
        raise ValueError("need at least two draws to cluster")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    best = None
    for _ in range(restarts):
        centers = _kmeans_pp_init(x, rng)
        assign, centers, inertia = _lloyd(x, centers.copy(), max_iter)
        if best is None or inertia < best[2]:
            best = (assign, centers, inertia)
    assign, centers, inertia = best
    sizes = np.array([(assign == 0).sum(), (assign == 1).sum()])
    degenerate = bool(np.any(sizes == 0))
    order = np.lexsort((centers[:, 0], sizes))
    assign = np.where(assign == order[0], 1, 2)
    centers = centers[order]
    sizes = sizes[order]
    return ClusterReport(
        assignments=assign,
        centroids=centers,
        sizes=sizes,
        proportions=sizes / sizes.sum(),
        inertia=inertia,
        degenerate=degenerate,
    )


def pca2(draws) -> PcaProjection:
    """Top-2 principal components of the centered draw covariance.

    Sign convention: the largest-magnitude loading of each component is
    positive.  Rank-deficient covariances return however many components
    have positive variance.
    """
    x = _draw_matrix(draws)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / max(x.shape[0] - 1, 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:2]
    keep = [i for i in order if vals[i] > 1e-12 * max(vals.max(), 1.0)]
    if not keep:
        keep = [int(order[0])]
    comps = []
    for i in keep:
        v = vecs[:, i]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        comps.append(v)
    components = np.array(comps)
    return PcaProjection(
        components=components,
        scores=centered @ components.T,
        explained_variance=vals[keep],
    )


def histogram_edges(lo: float, hi: float, bins: int = 50) -> np.ndarray:
    """Deterministic equal-width bin edges over [lo, hi]; degenerate
    ranges get a unit-width bin centered on the value."""
    if hi <= lo:
        return np.array([lo - 0.5, lo + 0.5])
    return np.linspace(lo, hi, bins + 1)


def export_traces(draws, out_dir: str, param_names: list[str] | None = None,
                  bins: int = 50) -> list[str]:
    """Write per-parameter trace and histogram CSVs plus SVG renderings.

    Returns the list of produced file paths.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = _draw_matrix(draws)
    n, k = x.shape
    if param_names is None:
        param_names = [f"param_{j}" for j in range(k)]
    os.makedirs(out_dir, exist_ok=True)
    produced = []
    for j, name in enumerate(param_names):
        col = x[:, j]
        trace_path = os.path.join(out_dir, f"trace_{name}.csv")
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", name])
            writer.writerows((i, f"{v:.10g}") for i, v in enumerate(col))
        produced.append(trace_path)

        edges = histogram_edges(float(col.min()), float(col.max()), bins)
        counts, _ = np.histogram(col, bins=edges)
        hist_path = os.path.join(out_dir, f"hist_{name}.csv")
        with open(hist_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_left", "bin_right", "count"])
            writer.writerows(
                (f"{edges[i]:.10g}", f"{edges[i + 1]:.10g}", int(c))
                for i, c in enumerate(counts))
        produced.append(hist_path)

        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 2.5))
        ax1.plot(col, linewidth=0.4)
        ax1.set_title(f"trace {name}")
        ax2.hist(col, bins=edges)
        ax2.set_title(f"hist {name}")
        fig.tight_layout()
        svg_path = os.path.join(out_dir, f"{name}.svg")
        fig.savefig(svg_path)
        plt.close(fig)
        produced.append(svg_path)
    return produced
