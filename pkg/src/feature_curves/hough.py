"""Accumulator voting over a discretised parameter region.

Each point votes for every cell its Hough-transform hypersurface
``{lam : F(p; lam) = 0}`` crosses. Crossing is decided with two analytic
bounds on ``|F|`` at the cell centre: above the outer bound the hypersurface
cannot reach the cell, below the inner bound it certainly does. Cells in
between are settled by a sign-change test on the residual sampled over the
cell.

The bounds are evaluated in per-cell normalised coordinates
``u = (lam - centre) / halfwidth`` so that every cell is the unit cube. For
cubic cells this changes nothing; for elongated cells it keeps the inner
bound valid. The suprema of the Hessian norm and of the pseudo-inverse norm
over a cell are approximated by their maxima over the ``3**t`` points of the
cell's half-step lattice (centre, corners, edge and face midpoints).
"""

from __future__ import annotations

import csv
import enum
import itertools
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .curves import POLAR, Annulus, Box, CurveFamily, ParameterRegion, bounding_box
from .errors import (AllFailed, EmptyLocus, FeatureCurveError, GridTooLarge, NoVotes,
                     NonFiniteEvaluation, TooFewPoints, UnsupportedFamily)
from .plane import Frame, PlanarSet

log = logging.getLogger(__name__)

MAX_CELLS = 10**7
MAX_BRANCHES = 12
_BATCH_ELEMENTS = 200_000


class CrossingResult(enum.Enum):
    CROSSES = "Crosses"
    NOT_CROSSES = "NotCrosses"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class CellGrid:
    """Cells ``[lam_j - d/2, lam_j + d/2)`` centred at ``lam_j = lo + j * d``."""

    region: ParameterRegion
    J: tuple[int, ...]

    @property
    def t(self) -> int:
        return len(self.J)

    @property
    def lo(self) -> np.ndarray:
        return self.region.lo

    @property
    def step(self) -> np.ndarray:
        return self.region.step

    @property
    def n_cells(self) -> int:
        return math.prod(self.J)

    def axis_centers(self, k: int) -> np.ndarray:
        return self.lo[k] + np.arange(self.J[k]) * self.step[k]

    def center(self, index) -> np.ndarray:
        return self.lo + np.asarray(index, float) * self.step

    def cell_of(self, lam) -> tuple[int, ...] | None:
        """Multi-index of the cell containing ``lam``, or None when outside the grid."""
        lam = np.asarray(lam, float)
        J = np.asarray(self.J)
        j = np.floor((lam - self.lo + self.step / 2) / self.step).astype(int)
        # the closed upper end of the region can sit on the last cell's open edge
        j = np.where((j == J) & (lam <= self.region.hi), J - 1, j)
        if np.any(j < 0) or np.any(j >= J):
            return None
        return tuple(int(x) for x in j)

    def lattice_axes(self) -> list[np.ndarray]:
        """Half-step lattice per axis: cell ``j`` spans nodes ``2j, 2j+1, 2j+2``."""
        return [self.lo[k] - self.step[k] / 2 + np.arange(2 * self.J[k] + 1) * self.step[k] / 2
                for k in range(self.t)]


def samples_per_axis(a: float, b: float, d: float) -> int:
    return math.ceil((b - a - d / 2) / d) + 1


def build_grid(region: ParameterRegion, max_cells: int = MAX_CELLS) -> CellGrid:
    J = tuple(samples_per_axis(a, b, d) for a, b, d in zip(region.lo, region.hi, region.step))
    n = math.prod(J)
    if n > max_cells:
        raise GridTooLarge(f"grid {J} has {n} cells, above the cap of {max_cells}")
    return CellGrid(region, J)


@dataclass
class Accumulator:
    votes: np.ndarray
    grid: CellGrid
    n_points: int

    def dump_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"j{k + 1}" for k in range(self.grid.t)] + ["votes"])
            for idx in itertools.product(*(range(j) for j in self.grid.J)):
                w.writerow(list(idx) + [int(self.votes[idx])])


# --- bounds -------------------------------------------------------------------

def _pinv_norm(g, axis=0):
    """``max|g_k| / ||g||_2^2`` without overflow; inf where ``g = 0``."""
    m = np.max(np.abs(g), axis=axis)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.sum((g / np.expand_dims(np.where(m == 0, 1.0, m), axis)) ** 2, axis=axis)
        return np.where(m == 0, np.inf, 1.0 / (m * s))


def _inner_bound(g1, Hc, Jc, t):
    """Certified-crossing threshold on the unit cube (halfwidth 1)."""
    c = max(2.0, math.sqrt(t))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        R = 0.9 * np.minimum(1.0, g1 / Hc)
        B2 = np.where(Hc > 0, 2 * R / (Jc * (c + t**2.5 * Hc * Jc * R)), 2.0 / (Jc * c))
    B2 = np.where(np.isfinite(B2) & (g1 > 0), B2, 0.0)
    return B2


def cell_offsets(t: int) -> np.ndarray:
    """The ``3**t`` normalised sample offsets of a cell, centre first."""
    return np.array(list(itertools.product((0.0, -1.0, 1.0), repeat=t)))


def crossing_bounds(F0, g0, samples_grad, samples_hess, halfwidth):
    """``(B1, B2)`` for one cell from centre values and derivative samples.

    ``samples_grad`` is ``(k, t)`` and ``samples_hess`` ``(k, t, t)``; both are
    taken over the cell (centre included) and scaled into normalised coordinates.
    """
    h = np.asarray(halfwidth, float)
    t = len(h)
    g = h * np.asarray(g0, float)
    G = np.asarray(samples_grad, float) * h
    Hs = np.asarray(samples_hess, float) * np.outer(h, h)
    Hc = np.max(np.abs(Hs).sum(axis=2).max(axis=1))
    Jc = np.max(_pinv_norm(G, axis=1))
    g1 = np.abs(g).sum()
    B1 = g1 + 0.5 * t * Hc
    B2 = float(_inner_bound(np.float64(g1), np.float64(Hc), np.float64(Jc), t))
    return float(B1), B2


def crossing_cell(residual, grad, hess, center, halfwidth) -> CrossingResult:
    """Classify whether ``residual(lam) = 0`` meets the cell ``center +- halfwidth``.

    ``residual``, ``grad`` and ``hess`` are callables of ``lam``. The verdict is
    ``NotCrosses`` when ``|F(center)|`` exceeds the outer bound and no sign
    change shows up among the cell samples, ``Crosses`` when it is below the
    inner bound, and ``Undetermined`` otherwise (always so when the gradient at
    the centre vanishes).
    """
    center = np.asarray(center, float)
    h = np.asarray(halfwidth, float)
    pts = center + cell_offsets(len(center)) * h
    Fs = np.array([float(residual(p)) for p in pts])
    Gs = np.array([np.asarray(grad(p), float).reshape(-1) for p in pts])
    Hs = np.array([np.asarray(hess(p), float).reshape(len(center), len(center)) for p in pts])
    if not (np.all(np.isfinite(Fs)) and np.all(np.isfinite(Gs)) and np.all(np.isfinite(Hs))):
        raise NonFiniteEvaluation(f"non-finite residual or derivative near {center}")
    if not np.any(Gs[0]):
        return CrossingResult.UNDETERMINED
    B1, B2 = crossing_bounds(Fs[0], Gs[0], Gs, Hs, h)
    f0 = abs(Fs[0])
    if f0 < B2:
        return CrossingResult.CROSSES
    if f0 > B1 and (Fs.min() > 0 or Fs.max() < 0):
        return CrossingResult.NOT_CROSSES
    return CrossingResult.UNDETERMINED


def resolve_undetermined(residual, center, halfwidth) -> CrossingResult:
    """Sign-change test over the ``3**t`` cell samples (an exact zero counts)."""
    center = np.asarray(center, float)
    pts = center + cell_offsets(len(center)) * np.asarray(halfwidth, float)
    Fs = np.array([float(residual(p)) for p in pts])
    if Fs.min() <= 0 <= Fs.max():
        return CrossingResult.CROSSES
    return CrossingResult.NOT_CROSSES


# --- vectorised accumulation --------------------------------------------------

def _pool(A, first_axis):
    """Max over each cell's three lattice nodes along every parameter axis."""
    for ax in range(first_axis, A.ndim):
        n = A.shape[ax]
        s0 = [slice(None)] * A.ndim
        s1 = list(s0)
        s2 = list(s0)
        s0[ax], s1[ax], s2[ax] = slice(0, n - 2, 2), slice(1, n - 1, 2), slice(2, n, 2)
        A = np.maximum(np.maximum(A[tuple(s0)], A[tuple(s1)]), A[tuple(s2)])
    return A


def _vote_batch(family: CurveFamily, u, v, axes, grid: CellGrid) -> np.ndarray:
    """Per-point crossing indicators, shape ``(P, J1, ..., Jt)``.

    A product vanishes exactly where one of its factors does, so compounds
    are tested factor by factor; this avoids the double roots a product has
    where two of its component curves touch.
    """
    if family.factors:
        out = None
        for f in family.factors:
            vb = _vote_batch(f, u, v, axes, grid)
            out = vb if out is None else out | vb
        return out
    t = grid.t
    P = len(u)
    lead = (P,) + (1,) * t
    L = tuple(ax.reshape((1,) + tuple(-1 if i == k else 1 for i in range(t)))
              for k, ax in enumerate(axes))
    with np.errstate(all="ignore"):
        F, G, H = family.fgh(u.reshape(lead), v.reshape(lead), L)
    shape = (P,) + tuple(len(ax) for ax in axes)
    h = grid.step / 2
    F = np.broadcast_to(F, shape)
    Gs = [np.broadcast_to(np.abs(G[k]) * h[k], shape) for k in range(t)]
    gmax = Gs[0]
    for k in range(1, t):
        gmax = np.maximum(gmax, Gs[k])
    with np.errstate(all="ignore"):
        safe = np.where(gmax == 0, 1.0, gmax)
        ssum = sum((g / safe) ** 2 for g in Gs)
        Jn = np.where(gmax == 0, np.inf, 1.0 / (gmax * ssum))
        Hn = None
        for i in range(t):
            row = sum(np.abs(H[i][j]) * (h[i] * h[j]) for j in range(t))
            row = np.broadcast_to(row, shape)
            Hn = row if Hn is None else np.maximum(Hn, row)
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(Hn)) and np.all(np.isfinite(gmax))):
        raise NonFiniteEvaluation(f"{family.label}: non-finite residual or derivative "
                                  "on the parameter lattice")

    centre = (slice(None),) + (slice(1, None, 2),) * t
    Fc = F[centre]
    g1 = sum(g[centre] for g in Gs)
    B2 = _inner_bound(g1, _pool(Hn, 1), _pool(Jn, 1), t)
    sign = (_pool(F, 1) >= 0) & (-_pool(-F, 1) <= 0)
    return (np.abs(Fc) < B2) | sign


def _branch_count(family: CurveFamily, native_pts, grid: CellGrid) -> int:
    if not family_has_branches(family):
        return 0
    a_min, b_min = grid.region.lo[0], grid.region.lo[1]
    rho_max = native_pts[:, 0].max()
    if b_min <= 0:
        return MAX_BRANCHES
    k = math.ceil((rho_max - a_min) / (2 * math.pi * b_min)) + 1
    return int(min(max(k, 0), MAX_BRANCHES))


def family_has_branches(family: CurveFamily) -> bool:
    """Polar families whose residual is not periodic in theta (spirals)."""
    if family.factors:
        return any(family_has_branches(f) for f in family.factors)
    return family.form == POLAR and family.name.startswith("spiral")


def accumulate(points, family: CurveFamily, grid: CellGrid, workers: int = 1) -> Accumulator:
    """Vote counts per cell for the planar ``points`` (Cartesian ``(n, 2)``)."""
    xy = np.asarray(getattr(points, "points2d", points), float).reshape(-1, 2)
    if family.t != grid.t:
        raise ValueError(f"{family.label} has {family.t} parameters but the grid has {grid.t}")
    nat = family.native(xy)
    K = _branch_count(family, nat, grid) if len(nat) else 0
    axes = grid.lattice_axes()
    lattice = math.prod(len(a) for a in axes)
    batch = max(1, _BATCH_ELEMENTS // lattice)
    chunks = [nat[i:i + batch] for i in range(0, len(nat), batch)]

    def work(chunk):
        hit = None
        for k in range(K + 1):
            vb = _vote_batch(family, chunk[:, 0], chunk[:, 1] + 2 * math.pi * k, axes, grid)
            hit = vb if hit is None else hit | vb
        return hit.sum(axis=0, dtype=np.int64)

    votes = np.zeros(grid.J, dtype=np.int64)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            for part in pool.map(work, chunks):
                votes += part
    else:
        for c in chunks:
            votes += work(c)
    return Accumulator(votes, grid, len(xy))


# --- detection ----------------------------------------------------------------

@dataclass
class DetectedCurve:
    family: CurveFamily
    lam: np.ndarray
    score: int
    runner_up: int
    cell_index: tuple[int, ...]
    ties: list[tuple[int, ...]]
    frame: Frame
    region: ParameterRegion
    data_box: Box | None = None
    rho_max: float | None = None
    accumulator: Accumulator | None = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.family.name

    @property
    def label(self) -> str:
        return self.family.label

    @property
    def fixed(self) -> dict:
        return dict(self.family.fixed)

    @property
    def equation(self) -> str:
        return self.family.equation(self.lam)

    def as_dict(self) -> dict:
        return {"family": self.name, "fixed": self.fixed,
                "lambda": [float(x) for x in self.lam], "score": int(self.score),
                "runner_up": int(self.runner_up), "cell_index": list(self.cell_index),
                "equation": self.equation}


def detect_curve(Z, family: CurveFamily, region: ParameterRegion,
                 max_cells: int = MAX_CELLS, workers: int = 1) -> DetectedCurve:
    """Curve of ``family`` at the accumulator maximum over ``region``.

    Ties are broken by the lexicographically smallest multi-index; every tied
    cell is reported in ``ties``.
    """
    if not isinstance(Z, PlanarSet):
        Z = PlanarSet.from_2d(Z)
    if len(Z) < family.t + 1:
        raise TooFewPoints(f"{family.label} needs at least {family.t + 1} points, got {len(Z)}")
    if region.t != family.t:
        raise ValueError(f"{family.label} has {family.t} parameters, region has {region.t}")
    grid = build_grid(region, max_cells)
    acc = accumulate(Z.points2d, family, grid, workers=workers)
    flat = acc.votes.ravel()
    best = int(flat.max())
    if best == 0:
        raise NoVotes(f"{family.label}: no point votes inside the region")
    i = int(np.argmax(flat))
    idx = tuple(int(x) for x in np.unravel_index(i, grid.J))
    ties = [tuple(int(x) for x in np.unravel_index(k, grid.J))
            for k in np.flatnonzero(flat == best)]
    runner = int(np.partition(flat, -2)[-2]) if flat.size > 1 else 0
    p = Z.points2d
    box = Box(p[:, 0].min(), p[:, 0].max(), p[:, 1].min(), p[:, 1].max())
    return DetectedCurve(family, grid.center(idx), best, runner, idx, ties, Z.frame, region,
                         data_box=box, rho_max=float(np.hypot(p[:, 0], p[:, 1]).max()),
                         accumulator=acc)


def compete_families(Z, candidates, workers: int = 1) -> list[DetectedCurve]:
    """Detect every ``(family, region)`` candidate and rank the successes.

    Ranking is by score, then fewer parameters, then family label. Failed
    candidates are logged and left out; if all fail :class:`AllFailed` is raised.
    """
    if not candidates:
        raise AllFailed("no candidate families")
    found, errors = [], []
    for fam, region in candidates:
        try:
            found.append(detect_curve(Z, fam, region, workers=workers))
        except FeatureCurveError as exc:
            log.info("%s failed: %s", fam.label, exc)
            errors.append(f"{fam.label}: {exc}")
    if not found:
        raise AllFailed("; ".join(errors))
    found.sort(key=lambda d: (-d.score, d.family.t, d.label))
    return found


# --- curve loci -------------------------------------------------------------

def _polar_polylines(family, lam, samples, rho_max=None, turns=None):
    if family.polar_sampler is None:
        raise UnsupportedFamily(f"{family.label} has no polar sampler")
    lam = np.asarray(lam, float)
    if family_has_branches(family):
        if turns is None and rho_max is not None:
            th = np.linspace(0, 2 * math.pi * MAX_BRANCHES, samples * MAX_BRANCHES)
            lines = [pl[(pl[:, 0] >= 0) & (pl[:, 0] <= rho_max)]
                     for pl in family.polar_sampler(lam, th)]
        else:
            turns = 1.0 if turns is None else turns
            th = np.linspace(0, 2 * math.pi * turns, max(2, int(samples * turns)))
            lines = [pl[pl[:, 0] >= 0] for pl in family.polar_sampler(lam, th)]
    else:
        th = np.linspace(0, 2 * math.pi, samples)
        lines = [pl[np.isfinite(pl[:, 0]) & (pl[:, 0] >= 0)]
                 for pl in family.polar_sampler(lam, th)]
    return [np.c_[pl[:, 0] * np.cos(pl[:, 1]), pl[:, 0] * np.sin(pl[:, 1])]
            for pl in lines if len(pl) >= 2]


def _window(family, lam, fallback: Box | None) -> Box:
    try:
        b = bounding_box(family, lam)
        if isinstance(b, Annulus):
            b = Box(-b.r_outer, b.r_outer, -b.r_outer, b.r_outer)
    except FeatureCurveError:
        if fallback is None:
            raise
        b = fallback
    pad = 0.1 * max(b.xmax - b.xmin, b.ymax - b.ymin, 1e-9)
    return Box(b.xmin - pad, b.xmax + pad, b.ymin - pad, b.ymax + pad)


def _cartesian_polylines(family, lam, samples, window: Box):
    from skimage.measure import find_contours

    lam = tuple(np.asarray(lam, float))
    n = samples + samples % 2  # even count keeps symmetry axes off the nodes
    xs = np.linspace(window.xmin, window.xmax, n)
    ys = np.linspace(window.ymin, window.ymax, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")

    def F(x, y):
        with np.errstate(all="ignore"):
            val, _, _ = family.fgh(x, y, lam)
        return np.broadcast_to(val, np.broadcast_shapes(np.shape(x), np.shape(y))).astype(float)

    out = [_refine(F, c, xs, ys) for c in find_contours(np.sign(F(X, Y)), 0.0)]
    return [pl for pl in out if len(pl) >= 2]


def _refine(F, contour, xs, ys, iters=60):
    """Move marching-squares vertices onto the zero set by bisection along grid edges."""
    r, c = contour[:, 0], contour[:, 1]
    on_row = np.abs(r - np.round(r)) < 1e-9
    i0 = np.clip(np.where(on_row, np.round(r), np.floor(r)).astype(int), 0, len(xs) - 1)
    j0 = np.clip(np.where(on_row, np.floor(c), np.round(c)).astype(int), 0, len(ys) - 1)
    i1 = np.clip(np.where(on_row, i0, i0 + 1), 0, len(xs) - 1)
    j1 = np.clip(np.where(on_row, j0 + 1, j0), 0, len(ys) - 1)
    ax, ay, bx, by = xs[i0], ys[j0], xs[i1], ys[j1]
    fa = np.sign(F(ax, ay))
    lo, hi = np.zeros(len(r)), np.ones(len(r))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        same = np.sign(F(ax + mid * (bx - ax), ay + mid * (by - ay))) == fa
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    s = 0.5 * (lo + hi)
    # edges without a sign change keep the interpolated vertex
    ok = (fa != np.sign(F(bx, by))) | (fa == 0)
    x = np.where(ok, ax + s * (bx - ax), np.interp(r, np.arange(len(xs)), xs))
    y = np.where(ok, ay + s * (by - ay), np.interp(c, np.arange(len(ys)), ys))
    return np.c_[x, y]


def curve_locus(family: CurveFamily, lam, samples: int = 400, window: Box | None = None,
                rho_max: float | None = None, turns: float | None = None) -> list[np.ndarray]:
    """Polylines tracing ``F(.; lam) = 0`` in the plane.

    Cartesian curves are contoured over ``window`` (default: the analytic
    bounding box grown by 10%); polar curves are swept in theta. Spirals run
    for ``turns`` turnings, or until ``rho_max`` when only that is given.
    """
    if family.form == POLAR:
        lines = _polar_polylines(family, lam, samples, rho_max, turns)
    else:
        lines = _cartesian_polylines(family, lam, samples, _window(family, lam, window))
    if not lines:
        raise EmptyLocus(f"{family.label}: no zero crossings in the sampled window")
    return lines


def sample_curve(family: CurveFamily, lam, n: int, rng=None, **locus_kw) -> np.ndarray:
    """``n`` points on the curve.

    Points are vertices of the traced locus, so they satisfy the equation to
    rounding. Without ``rng`` they are spread evenly by arc length; with it,
    ``n`` distinct vertices are drawn with probability proportional to the
    arc length they represent.
    """
    lines = curve_locus(family, lam, samples=locus_kw.pop("samples", 800), **locus_kw)
    verts = np.vstack(lines)
    w = np.concatenate([_vertex_weights(pl) for pl in lines])
    if rng is not None:
        if n > np.count_nonzero(w):
            raise ValueError(f"only {np.count_nonzero(w)} locus vertices for {n} samples")
        idx = np.sort(rng.choice(len(verts), size=n, replace=False, p=w / w.sum()))
        return verts[idx]
    cum = np.cumsum(w)
    s = (np.arange(n) + 0.5) * cum[-1] / n
    return verts[np.searchsorted(cum, s).clip(max=len(verts) - 1)]


def _vertex_weights(pl):
    seg = np.hypot(*np.diff(pl, axis=0).T)
    w = np.zeros(len(pl))
    w[:-1] += seg / 2
    w[1:] += seg / 2
    return w


def locus_2d(curve: DetectedCurve, samples: int = 400) -> list[np.ndarray]:
    """Zero set of a detected curve in its own plane coordinates."""
    return curve_locus(curve.family, curve.lam, samples, window=curve.data_box,
                       rho_max=None if curve.rho_max is None else 1.05 * curve.rho_max)


def lift_to_3d(curve: DetectedCurve, samples: int = 400) -> list[np.ndarray]:
    """Sample the detected curve's zero set and map it back to world coordinates."""
    return [curve.frame.to_world(pl) for pl in locus_2d(curve, samples)]
