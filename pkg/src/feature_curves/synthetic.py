"""Synthetic surfaces with known geometry: analytic shapes and embossed reliefs."""

from __future__ import annotations

import numpy as np

from .model_io import SurfaceModel


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> SurfaceModel:
    t = (1 + 5**0.5) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.asarray(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return SurfaceModel(np.asarray(verts) * radius, np.asarray(faces))


def _grid_faces(nu, nv, wrap_u=False, wrap_v=False):
    """Triangles of an ``nu x nv`` vertex grid indexed ``i * nv + j``."""
    faces = []
    iu = nu if wrap_u else nu - 1
    iv = nv if wrap_v else nv - 1
    for i in range(iu):
        for j in range(iv):
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            faces += [(a, b, c), (a, c, d)]
    return np.asarray(faces)


def cylinder(radius: float = 2.0, height: float = 4.0, n_around: int = 96,
             n_along: int = 49) -> SurfaceModel:
    """Open cylinder about the z axis, outward-facing triangles."""
    th = np.linspace(0, 2 * np.pi, n_around, endpoint=False)
    z = np.linspace(-height / 2, height / 2, n_along)
    T, Z = np.meshgrid(th, z, indexing="ij")
    V = np.stack([radius * np.cos(T), radius * np.sin(T), Z], -1).reshape(-1, 3)
    return SurfaceModel(V, _grid_faces(n_around, n_along, wrap_u=True))


def torus(R: float = 2.0, r: float = 0.5, n_major: int = 160, n_minor: int = 64):
    """Torus mesh plus the (u, v) angles of each vertex (v = tube angle)."""
    u = np.linspace(0, 2 * np.pi, n_major, endpoint=False)
    v = np.linspace(0, 2 * np.pi, n_minor, endpoint=False)
    U, W = np.meshgrid(u, v, indexing="ij")
    ring = R + r * np.cos(W)
    V = np.stack([ring * np.cos(U), ring * np.sin(U), r * np.sin(W)], -1).reshape(-1, 3)
    return SurfaceModel(V, _grid_faces(n_major, n_minor, True, True)), U.ravel(), W.ravel()


def torus_curvatures(R: float, r: float, v) -> tuple[np.ndarray, np.ndarray]:
    """Analytic (Cmin, Cmax) of a torus at tube angle ``v``, convex positive."""
    v = np.asarray(v, dtype=float)
    k_tube = np.full_like(v, 1.0 / r)
    k_ring = np.cos(v) / (R + r * np.cos(v))
    return np.minimum(k_tube, k_ring), np.maximum(k_tube, k_ring)


def height_field(fn, xlim=(-1, 1), ylim=(-1, 1), spacing=0.02) -> SurfaceModel:
    """Triangulated graph ``z = fn(x, y)`` over a rectangle, normals facing +z."""
    xs = np.arange(xlim[0], xlim[1] + spacing / 2, spacing)
    ys = np.arange(ylim[0], ylim[1] + spacing / 2, spacing)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = np.stack([X, Y, fn(X, Y)], -1).reshape(-1, 3)
    return SurfaceModel(V, _grid_faces(len(xs), len(ys)))


def ridge(dist, height=0.05, width=0.03):
    """Gaussian bump profile as a function of distance to a ridge locus."""
    return height * np.exp(-0.5 * (dist / width) ** 2)


def embossed_circles(centers, radii, xlim, ylim, spacing=0.02, height=0.05, width=0.03,
                     frame=None) -> SurfaceModel:
    """Plane carrying one circular ridge per (center, radius).

    ``frame`` is an optional ``(origin, rotation)`` rigid map applied to the
    finished mesh.
    """
    centers = np.asarray(centers, dtype=float)

    def fn(X, Y):
        z = np.zeros_like(X)
        for (cx, cy), r in zip(centers, radii):
            z += ridge(np.hypot(X - cx, Y - cy) - r, height, width)
        return z

    return _apply_frame(height_field(fn, xlim, ylim, spacing), frame)


def embossed_spirals(specs, xlim, ylim, spacing=0.02, height=0.05, width=0.03, turns=1.0,
                     frame=None) -> SurfaceModel:
    """Plane carrying spiral ridges ``rho = a + b t + c t^2`` for ``t`` in [0, 2 pi turns].

    ``specs`` is a list of ``(center, (a, b, c))``. The ridge height follows the
    distance to a dense polyline of the spiral.
    """
    from scipy.spatial import cKDTree

    pts = []
    for (cx, cy), (a, b, c) in specs:
        t = np.linspace(0, 2 * np.pi * turns, 4000)
        rho = a + b * t + c * t**2
        pts.append(np.c_[cx + rho * np.cos(t), cy + rho * np.sin(t)])
    tree = cKDTree(np.vstack(pts))

    def fn(X, Y):
        d, _ = tree.query(np.c_[X.ravel(), Y.ravel()])
        return ridge(d, height, width).reshape(X.shape)

    return _apply_frame(height_field(fn, xlim, ylim, spacing), frame)


def _apply_frame(model, frame):
    if frame is None:
        return model
    origin, rot = frame
    V = model.vertices @ np.asarray(rot).T + np.asarray(origin)
    return SurfaceModel(V, model.faces, model.colors)


def rotation_matrix(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis /= np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
