"""Catalogue families with a reference parameter vector and on-curve samplers."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from feature_curves import curves as C
from feature_curves.hough import sample_curve
from oracles import fd_grad, fd_hess

# name -> (constructor, lambda*, keyword arguments for sample_curve)
CASES = {
    "line": (C.make_line, [0.6, -0.3], {"window": C.Box(-1, 1, -1, 1)}),
    "circle": (C.make_circle, [0.1, -0.2, 0.7], {}),
    "ellipse": (C.make_ellipse, [1.5, 0.8], {}),
    "lamet": (lambda: C.make_lamet(4), [2.0, 1.0], {}),
    "citrus": (C.make_citrus, [2.0], {}),
    "citrus_stretched": (lambda: C.make_citrus(True), [2.0, 1.5], {}),
    "spiral": (C.make_spiral, [0.4, 0.12], {"turns": 1}),
    "spiral_generalized": (lambda: C.make_spiral(True), [0.4, 0.12, 0.004], {"turns": 1}),
    "m_convexities": (lambda: C.make_m_convexities(5), [1.0, 0.2], {}),
    "petal": (lambda: C.make_petal(1), [4.0], {}),
    "petal_stretched": (lambda: C.make_petal(3, True), [4.0, 0.5], {}),
    "citrus_circle": (C.make_citrus_circle, [2.0], {}),
    "citrus_line": (C.make_citrus_line, [2.0], {"window": C.Box(-1.2, 1.2, -0.3, 0.3)}),
    "convexities_circle": (lambda: C.make_convexities_circle(5), [1.0, 0.2, 0.5], {}),
    "three_ellipses": (C.make_three_ellipses, [2.0, 1.0], {}),
}

NAMES = list(CASES)


def case(name):
    """``(family, lambda*, sample kwargs)`` for a catalogue entry."""
    ctor, lam, kw = CASES[name]
    return ctor(), np.asarray(lam, float), dict(kw)


def samples(name, n, rng=None):
    fam, lam, kw = case(name)
    return sample_curve(fam, lam, n, rng=rng, **kw)


@lru_cache(maxsize=None)
def cached_samples(name, n):
    """Evenly spaced samples, computed once per ``(name, n)``; do not mutate."""
    return samples(name, n)


def region_around(lam, frac=0.45, cells=10):
    """Region of width ``0.4|lam| + 0.01`` whose step is a tenth of that width.

    ``lam`` sits ``frac`` of a step above the centre of its cell, which keeps
    exact-data ties away from its lexicographic predecessors.
    """
    lam = np.asarray(lam, float)
    width = 0.4 * np.abs(lam) + 0.01
    step = width / cells
    lo = lam - frac * step - 4 * step
    return C.ParameterRegion(lo, lo + width, step)


def random_points(fam, lam, rng, n):
    """Off-curve test points roughly at the scale of the curve."""
    try:
        b = C.bounding_box(fam, lam)
        if isinstance(b, C.Annulus):
            b = C.Box(-b.r_outer, b.r_outer, -b.r_outer, b.r_outer)
    except Exception:
        b = C.Box(-1, 1, -1, 1)
    w = max(b.xmax - b.xmin, b.ymax - b.ymin, 1e-3)
    x = rng.uniform(b.xmin - 0.2 * w, b.xmax + 0.2 * w, n)
    y = rng.uniform(b.ymin - 0.2 * w, b.ymax + 0.2 * w, n)
    return np.c_[x, y]


def derivative_errors(fam, lam0, rng, n):
    """Worst relative grad / hess discrepancy against central differences.

    The part of a discrepancy explained by the differences' own rounding is
    not counted.
    """
    worst_g = worst_h = 0.0
    pts = fam.native(random_points(fam, lam0, rng, n))
    for p in pts:
        lam = lam0 * rng.uniform(0.8, 1.2, size=len(lam0))
        F = lambda l: float(fam.residual(p, l))  # noqa: E731
        G = lambda l: fam.grad(p, l)  # noqa: E731
        g, h = fam.grad(p, lam), fam.hess(p, lam)
        sg = np.abs(g).max() + 1e-300
        sh = np.abs(h).max() + 1e-300
        fd, noise = fd_grad(F, lam)
        worst_g = max(worst_g, np.max(np.maximum(np.abs(g - fd) - noise, 0)) / sg)
        fdh, noise = fd_hess(G, lam)
        worst_h = max(worst_h, np.max(np.maximum(np.abs(h - fdh) - noise, 0)) / sh)
    return worst_g, worst_h
