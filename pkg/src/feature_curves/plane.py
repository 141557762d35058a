"""Best-fit plane of a cluster and the rigid map taking it onto z = 0."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCluster, SingularFit

log = logging.getLogger(__name__)

COND_LIMIT = 1e8


@dataclass(frozen=True)
class Frame:
    """Rigid frame: local ``q`` maps to world ``centroid + rotation.T @ q``.

    Rows of ``rotation`` are the in-plane axes u, v and the unit normal.
    """

    centroid: np.ndarray
    rotation: np.ndarray
    flipped: bool = False  # v axis was negated to make the basis right-handed
    method: str = "regression"  # or "pca"

    def to_local(self, pts) -> np.ndarray:
        return (np.asarray(pts, float) - self.centroid) @ self.rotation.T

    def to_world(self, pts) -> np.ndarray:
        pts = np.asarray(pts, float)
        if pts.shape[-1] == 2:
            pts = np.concatenate([pts, np.zeros(pts.shape[:-1] + (1,))], axis=-1)
        return pts @ self.rotation + self.centroid

    @property
    def normal(self) -> np.ndarray:
        return self.rotation[2]


@dataclass(frozen=True)
class PlanarSet:
    points2d: np.ndarray
    frame: Frame
    offsets: np.ndarray  # signed distance of each input point along the normal

    @property
    def residuals(self) -> np.ndarray:
        return np.abs(self.offsets)

    def __len__(self):
        return len(self.points2d)

    def lift(self) -> np.ndarray:
        """Reconstruct the input 3D points, offsets included."""
        return self.frame.to_world(np.c_[self.points2d, self.offsets])

    @classmethod
    def from_2d(cls, points2d) -> "PlanarSet":
        """Planar set sitting in the world xy plane (identity frame)."""
        p = np.asarray(points2d, float)
        return cls(p, Frame(np.zeros(3), np.eye(3)), np.zeros(len(p)))


def fit_plane(Y) -> tuple[float, float]:
    """Least-squares ``z = b1 x + b2 y`` of centred points."""
    Y = np.asarray(Y, float)
    if len(Y) < 3:
        raise DegenerateCluster("need at least 3 points to fit a plane")
    XY = Y[:, :2]
    cov = XY.T @ XY
    cond = np.linalg.cond(cov)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularFit(f"xy covariance is ill-conditioned (cond={cond:.3g})")
    b, *_ = np.linalg.lstsq(XY, Y[:, 2], rcond=None)
    return float(b[0]), float(b[1])


def _pca_rotation(Yc):
    _, vecs = np.linalg.eigh(Yc.T @ Yc)
    n = vecs[:, 0]
    # first in-plane axis follows world x unless the plane is (nearly) normal to it
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = ref - n * (ref @ n)
    u /= np.linalg.norm(u)
    return np.vstack([u, np.cross(n, u), n])


def project_to_plane(Y, collision_tol: float = 1e-9) -> PlanarSet:
    """Centre the cluster, fit its plane and rotate it onto z = 0."""
    P = np.asarray(getattr(Y, "points", Y), float)
    if len(P) < 3:
        raise DegenerateCluster("need at least 3 points")
    centroid = P.mean(0)
    Yc = P - centroid
    sv = np.linalg.svd(Yc, compute_uv=False)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateCluster("cluster points are collinear")

    flipped = False
    try:
        b1, b2 = fit_plane(Yc)
        n = np.array([b1, b2, -1.0])
        v1 = np.array([1.0, 0.0, b1])
        v2 = np.cross(v1, n)
        R = np.vstack([v1 / np.linalg.norm(v1), v2 / np.linalg.norm(v2), n / np.linalg.norm(n)])
        if np.linalg.det(R) < 0:
            R[1] *= -1
            flipped = True
        method = "regression"
    except SingularFit:
        log.info("regression plane ill-conditioned, using PCA plane")
        R = _pca_rotation(Yc)
        method = "pca"

    local = Yc @ R.T
    frame = Frame(centroid, R, flipped, method)
    out = PlanarSet(local[:, :2], frame, local[:, 2])
    _warn_collisions(out.points2d, collision_tol)
    return out


def _warn_collisions(pts, tol):
    from scipy.spatial import cKDTree

    if len(pts) < 2:
        return
    pairs = cKDTree(pts).query_pairs(tol, output_type="ndarray")
    hit = len(np.unique(pairs)) if len(pairs) else 0
    if hit > 0.01 * len(pts):
        log.warning("%d of %d projected points collide; projection may not be injective",
                    hit, len(pts))


def dump_points_csv(Z: PlanarSet, path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for x, y in Z.points2d:
            w.writerow([repr(float(x)), repr(float(y))])
