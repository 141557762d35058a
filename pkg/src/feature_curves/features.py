"""Per-vertex property fields and histogram-threshold feature-point extraction.

Curvatures come from a local quadric fit: each vertex gets a frame aligned
with its normal, the neighbourhood is fitted with
``z = A x^2 + B xy + C y^2 + D x + E y`` and the principal curvatures are
the eigenvalues of the Weingarten map of that height function. Curvature is
signed so that convex regions (a sphere seen from outside) are positive.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import EmptyField, LengthMismatch, MissingColor, TooFewPoints
from .model_io import SurfaceModel, rgb_array_to_lab

log = logging.getLogger(__name__)


class Property(str, Enum):
    CMIN = "cmin"
    CMAX = "cmax"
    CMEAN = "cmean"
    CGAUSS = "cgauss"
    CTOT = "ctot"
    LUMINOSITY = "luminosity"

    @property
    def is_curvature(self) -> bool:
        return self is not Property.LUMINOSITY

    @property
    def low_is_salient(self) -> bool:
        # low minimal curvature and dark regions are the salient tails
        return self in (Property.CMIN, Property.LUMINOSITY)


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    property: Property
    degenerate: np.ndarray | None = None  # vertices where the estimator gave up

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("a scalar field is one value per vertex")
        if not np.all(np.isfinite(v)):
            raise ValueError("scalar field contains non-finite values")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "property", Property(self.property))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def min_value(self) -> float:
        return float(self.bin_edges[0])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])


@dataclass(frozen=True)
class FeaturePointSet:
    points: np.ndarray
    vertex_ids: np.ndarray

    def __len__(self):
        return len(self.vertex_ids)


# --- curvature ----------------------------------------------------------------

def _vertex_normals(vertices, faces):
    tri = vertices[faces]
    fn = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])  # area weighted
    normals = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(normals, faces[:, k], fn)
    return normals


def _ring_neighbourhoods(n, faces, k, max_rings=6):
    """Smallest complete k-ring per vertex holding at least ``k`` other vertices."""
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    i = np.concatenate([a, b, c, b, c, a])
    j = np.concatenate([b, c, a, a, b, c])
    adj = sp.csr_matrix((np.ones(len(i), dtype=np.int8), (i, j)), shape=(n, n))
    adj = ((adj + sp.identity(n, dtype=np.int8, format="csr")) > 0).astype(np.int8)
    reach = adj.copy()
    chosen = [None] * n
    pending = np.arange(n)
    for ring in range(1, max_rings + 1):
        counts = np.diff(reach.indptr) - 1
        done = pending[counts[pending] >= k]
        for v in done:
            chosen[v] = reach.indices[reach.indptr[v]:reach.indptr[v + 1]]
        pending = pending[counts[pending] < k]
        if not len(pending):
            break
        if ring < max_rings:
            reach = ((reach @ adj) > 0).astype(np.int8)
    for v in pending:  # isolated or boundary-starved vertices keep what they reach
        chosen[v] = reach.indices[reach.indptr[v]:reach.indptr[v + 1]]
    width = max(len(c) for c in chosen)
    idx = np.full((n, width), -1, dtype=np.int64)
    for v, c in enumerate(chosen):
        c = c[c != v]
        idx[v, :len(c)] = c
    return idx


def _knn_neighbourhoods(vertices, k):
    tree = cKDTree(vertices)
    _, idx = tree.query(vertices, k=k + 1)
    return idx[:, 1:]


def _orthonormal_frames(normals):
    n = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    helper = np.where(np.abs(n[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(n, e1)
    return e1, e2, n


def estimate_principal_curvatures(model: SurfaceModel, neighborhood: int = 16):
    """Principal curvatures per vertex from a local quadric fit.

    Parameters
    ----------
    model : SurfaceModel
        Mesh (k-ring neighbourhoods) or point cloud (k nearest neighbours).
    neighborhood : int
        Minimum neighbour count. Mesh rings are grown until this is reached.

    Returns
    -------
    (ScalarField, ScalarField)
        ``Cmin`` and ``Cmax`` with ``Cmin <= Cmax``. Vertices whose patch is
        degenerate get 0 and are flagged in ``ScalarField.degenerate``.
    """
    V = model.vertices
    n = len(V)
    if neighborhood < 1 or n < neighborhood + 1:
        raise TooFewPoints(f"need more than {neighborhood} vertices, got {n}")
    if model.is_mesh:
        idx = _ring_neighbourhoods(n, model.faces, neighborhood)
        normals = _vertex_normals(V, model.faces)
    else:
        if neighborhood < 6:
            raise ValueError("point clouds need neighborhood >= 6")
        idx = _knn_neighbourhoods(V, neighborhood)
        normals = None

    mask = idx >= 0
    nb = V[np.where(mask, idx, 0)]
    d = (nb - V[:, None, :]) * mask[..., None]

    if normals is None:
        # PCA normal; sign chosen to point away from the cloud centroid
        cnt = mask.sum(1, keepdims=True)
        mu = d.sum(1) / cnt
        dc = (d - mu[:, None]) * mask[..., None]
        cov = np.einsum("nki,nkj->nij", dc, dc)
        _, vecs = np.linalg.eigh(cov)
        normals = vecs[:, :, 0]
        flip = np.einsum("ij,ij->i", normals, V - V.mean(0)) < 0
        normals[flip] *= -1
    bad_normal = np.linalg.norm(normals, axis=1) < 1e-300
    normals[bad_normal] = [0.0, 0.0, 1.0]

    e1, e2, nz = _orthonormal_frames(normals)
    x = np.einsum("nki,ni->nk", d, e1)
    y = np.einsum("nki,ni->nk", d, e2)
    z = np.einsum("nki,ni->nk", d, nz)
    scale = np.sqrt((x**2 + y**2).sum(1) / np.maximum(mask.sum(1), 1))
    scale[scale == 0] = 1.0
    xs, ys, zs = x / scale[:, None], y / scale[:, None], z / scale[:, None]
    A = np.stack([xs**2, xs * ys, ys**2, xs, ys], axis=-1) * mask[..., None]
    AtA = np.einsum("nki,nkj->nij", A, A)
    Atz = np.einsum("nki,nk->ni", A, zs * mask)

    cond = np.linalg.cond(AtA)
    degenerate = (~np.isfinite(cond)) | (cond > 1e10) | (mask.sum(1) < 5) | bad_normal
    AtA[degenerate] = np.eye(5)
    Atz[degenerate] = 0.0
    coef = np.linalg.solve(AtA, Atz[..., None])[..., 0]
    a2, b2, c2 = coef[:, 0] / scale, coef[:, 1] / scale, coef[:, 2] / scale
    gx, gy = coef[:, 3], coef[:, 4]

    E, F, G = 1 + gx**2, gx * gy, 1 + gy**2
    w = np.sqrt(1 + gx**2 + gy**2)
    L, M, N = 2 * a2 / w, b2 / w, 2 * c2 / w
    det_I = E * G - F**2
    K = (L * N - M**2) / det_I
    H = (E * N - 2 * F * M + G * L) / (2 * det_I)
    disc = np.sqrt(np.maximum(H**2 - K, 0.0))
    # height grows along the normal, so convex patches come out negative; flip
    k1, k2 = -(H + disc), -(H - disc)
    k1[degenerate] = 0.0
    k2[degenerate] = 0.0
    if degenerate.any():
        log.warning("%d vertices have degenerate neighbourhoods; curvature set to 0",
                    int(degenerate.sum()))
    return (ScalarField(np.minimum(k1, k2), Property.CMIN, degenerate),
            ScalarField(np.maximum(k1, k2), Property.CMAX, degenerate))


def derive_property(cmin: ScalarField, cmax: ScalarField, prop) -> ScalarField:
    prop = Property(prop)
    if len(cmin) != len(cmax):
        raise LengthMismatch(f"field lengths differ: {len(cmin)} vs {len(cmax)}")
    lo, hi = cmin.values, cmax.values
    if prop is Property.CMIN:
        vals = lo
    elif prop is Property.CMAX:
        vals = hi
    elif prop is Property.CMEAN:
        vals = (lo + hi) / 2
    elif prop is Property.CGAUSS:
        vals = lo * hi
    elif prop is Property.CTOT:
        vals = np.abs(lo) + np.abs(hi)
    else:
        raise ValueError(f"{prop.value} is not a curvature property")
    return ScalarField(vals, prop, cmin.degenerate)


def luminosity(model: SurfaceModel) -> ScalarField:
    if model.colors is None:
        raise MissingColor("luminosity requested on a model without vertex colours")
    return ScalarField(rgb_array_to_lab(model.colors)[:, 0], Property.LUMINOSITY)


def compute_property(model: SurfaceModel, prop, neighborhood: int = 16) -> ScalarField:
    prop = Property(prop)
    if prop is Property.LUMINOSITY:
        return luminosity(model)
    cmin, cmax = estimate_principal_curvatures(model, neighborhood)
    return derive_property(cmin, cmax, prop)


# --- histogram filtering ------------------------------------------------------

def build_histogram(field, nbins: int = 256) -> Histogram:
    values = np.asarray(getattr(field, "values", field), dtype=float)
    if values.size == 0:
        raise EmptyField("cannot build a histogram of an empty field")
    if nbins < 2:
        raise ValueError("nbins must be at least 2")
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        # single populated bin, widened just enough to keep edges distinct
        width = 4 * np.spacing(max(abs(lo), np.finfo(float).tiny))
        edges = lo + width * np.arange(nbins + 1)
    else:
        edges = np.linspace(lo, hi, nbins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return Histogram(edges, counts)


def filter_threshold(h: Histogram, p: float) -> float:
    """Cut value at which the cumulative bin count first reaches ``p`` of the samples."""
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")
    cum = np.cumsum(h.counts)
    hit = np.nonzero(cum >= p * h.total)[0]
    k = int(hit[0]) + 1 if len(hit) else len(h.counts)
    return h.min_value + k * h.bin_width


def extract_feature_points(model: SurfaceModel, prop, p: float = 0.8, nbins: int = 256,
                           neighborhood: int = 16, field: ScalarField | None = None
                           ) -> FeaturePointSet:
    """Select the vertices in the salient tail of ``prop``.

    A precomputed ``field`` may be passed to skip curvature estimation.
    """
    prop = Property(prop)
    if field is None:
        field = compute_property(model, prop, neighborhood)
    f = -field.values if prop.low_is_salient else field.values
    v = filter_threshold(build_histogram(f, nbins), p)
    ids = np.nonzero(f > v)[0]
    return FeaturePointSet(model.vertices[ids], ids)


def combine_feature_sets(model: SurfaceModel, a: FeaturePointSet, b: FeaturePointSet,
                         mode: str) -> FeaturePointSet:
    if mode == "intersect":
        ids = np.intersect1d(a.vertex_ids, b.vertex_ids)
    elif mode == "union":
        ids = np.union1d(a.vertex_ids, b.vertex_ids)
    else:
        raise ValueError(f"unknown combiner {mode!r}")
    return FeaturePointSet(model.vertices[ids], ids)


def dump_field_csv(field: ScalarField, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex_id", "value"])
        for i, val in enumerate(field.values):
            w.writerow([i, repr(float(val))])
