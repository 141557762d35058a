"""Density radius estimation and DBSCAN aggregation of feature points."""

from __future__ import annotations

import csv
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import TooFewPoints


@dataclass(frozen=True)
class DensityParams:
    K: int = 50
    MinPts: int = 5
    epsilon: float | None = None  # None: estimate from the K-th neighbour distance

    def __post_init__(self):
        if self.K < 1 or self.MinPts < 1:
            raise ValueError("K and MinPts must be >= 1")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass
class Cluster:
    points: np.ndarray
    member_ids: np.ndarray  # indices into the feature point set
    label: int
    small: bool = False


@dataclass
class Clustering:
    clusters: list[Cluster]
    noise_ids: np.ndarray
    epsilon: float
    labels: np.ndarray = field(repr=False)  # per input point, 0 = noise


def _coords(X):
    return np.asarray(getattr(X, "points", X), dtype=float)


def knn_epsilon(X, K: int = 50) -> float:
    """Mean distance from each point to its K-th nearest other point."""
    P = _coords(X)
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(P) <= K:
        raise TooFewPoints(f"need more than K={K} points, got {len(P)}")
    d, _ = cKDTree(P).query(P, k=K + 1)
    return float(np.mean(d[:, K]))


def dbscan(X, params: DensityParams = DensityParams(), small_factor: int = 3) -> Clustering:
    """Cluster ``X`` with DBSCAN.

    A point is core when at least ``MinPts`` points (itself included) lie
    within ``epsilon``. Seeds are taken in index order and each cluster is
    expanded completely before the next seed, so a border point reachable from
    several clusters joins the one discovered first. Clusters are returned by
    decreasing size (ties: smallest member id) and labelled 1..m. A cluster
    left with fewer than ``MinPts`` members after its border points were
    claimed elsewhere is released to noise. Clusters
    with fewer than ``small_factor * MinPts`` members are flagged ``small``.
    """
    P = _coords(X)
    n = len(P)
    eps = params.epsilon if params.epsilon is not None else knn_epsilon(P, params.K)
    labels = np.zeros(n, dtype=np.int64)
    if n == 0:
        return Clustering([], np.zeros(0, dtype=np.int64), eps, labels)

    tree = cKDTree(P)
    neigh = tree.query_ball_point(P, r=eps)
    core = np.fromiter((len(nb) >= params.MinPts for nb in neigh), bool, n)

    raw = 0
    for seed in range(n):
        if labels[seed] or not core[seed]:
            continue
        raw += 1
        labels[seed] = raw
        queue = deque([seed])
        while queue:
            q = queue.popleft()
            for r in neigh[q]:
                if labels[r] == 0:
                    labels[r] = raw
                    if core[r]:
                        queue.append(r)

    groups = [np.nonzero(labels == k)[0] for k in range(1, raw + 1)]
    # border points claimed by an earlier cluster can leave a later one short
    groups = [g for g in groups if len(g) >= params.MinPts]
    groups.sort(key=lambda g: (-len(g), g[0]))
    final = np.zeros(n, dtype=np.int64)
    clusters = []
    for lab, ids in enumerate(groups, 1):
        final[ids] = lab
        clusters.append(Cluster(P[ids], ids, lab, small=len(ids) < small_factor * params.MinPts))
    return Clustering(clusters, np.nonzero(final == 0)[0], eps, final)


def dump_labels_csv(clustering: Clustering, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["point_index", "cluster_label"])
        for i, lab in enumerate(clustering.labels):
            w.writerow([i, int(lab)])
