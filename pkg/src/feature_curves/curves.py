"""Implicit plane-curve families used as Hough-transform models.

Every family is a residual ``F(point; lam)`` whose zero set in the plane is
the curve with parameters ``lam``. For a fixed point the same residual,
seen as a function of ``lam``, is the point's Hough transform; the detector
needs its gradient and Hessian with respect to ``lam``, which each family
provides analytically.

Cartesian families take points as ``(x, y)``; polar families take
``(rho, theta)``. Integer shape constants (Lamet degree, number of
convexities, petal exponent) are fixed when the family is built and are not
searched over.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (DomainError, LayoutMismatch, RatioOutOfRange, TooFewPoints,
                     UnsupportedFamily)

CARTESIAN = "cartesian"
POLAR = "polar"


@dataclass(frozen=True)
class Box:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def union(self, other: "Box") -> "Box":
        return Box(min(self.xmin, other.xmin), max(self.xmax, other.xmax),
                   min(self.ymin, other.ymin), max(self.ymax, other.ymax))

    def contains(self, pts, tol=0.0) -> np.ndarray:
        pts = np.asarray(pts, float)
        return ((pts[:, 0] >= self.xmin - tol) & (pts[:, 0] <= self.xmax + tol)
                & (pts[:, 1] >= self.ymin - tol) & (pts[:, 1] <= self.ymax + tol))


@dataclass(frozen=True)
class Annulus:
    r_inner: float
    r_outer: float

    def union(self, other: "Annulus") -> "Annulus":
        return Annulus(min(self.r_inner, other.r_inner), max(self.r_outer, other.r_outer))


@dataclass(frozen=True)
class ParameterRegion:
    """Box ``[lo_k, hi_k]`` of the parameter space and its discretisation step."""

    lo: np.ndarray
    hi: np.ndarray
    step: np.ndarray

    def __post_init__(self):
        lo, hi, step = (np.atleast_1d(np.asarray(a, float)) for a in (self.lo, self.hi, self.step))
        if not (lo.shape == hi.shape == step.shape) or lo.ndim != 1:
            raise ValueError("lo, hi and step must be 1-D and the same length")
        if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(~np.isfinite(step)):
            raise ValueError("region bounds must be finite")
        if np.any(hi < lo):
            raise ValueError(f"region has hi < lo: {lo} .. {hi}")
        if np.any(step <= 0):
            raise ValueError("steps must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "step", step)

    @property
    def t(self) -> int:
        return len(self.lo)

    @classmethod
    def with_fraction(cls, lo, hi, fraction: float = 1 / 20) -> "ParameterRegion":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        return cls(lo, hi, (hi - lo) * fraction)

    def contains(self, lam) -> bool:
        lam = np.asarray(lam, float)
        return bool(np.all(lam >= self.lo) and np.all(lam <= self.hi))


Evaluator = Callable[..., tuple]


@dataclass(frozen=True, eq=False)
class CurveFamily:
    """A family of implicit plane curves ``F(point; lam) = 0``.

    ``fgh(u, v, L)`` returns ``(F, G, H)`` with ``G`` a length-``t`` list and
    ``H`` a ``t x t`` nested list of arrays (or scalars) broadcastable against
    ``u``, ``v`` and the entries of ``L``.
    """

    name: str
    param_names: tuple[str, ...]
    form: str
    fgh: Evaluator = field(repr=False)
    fixed: dict = field(default_factory=dict)
    template: str = ""
    symmetric: bool = False
    box_fn: Callable | None = field(default=None, repr=False)
    hint_fn: Callable | None = field(default=None, repr=False)
    polar_sampler: Callable | None = field(default=None, repr=False)
    factors: tuple = ()

    @property
    def t(self) -> int:
        return len(self.param_names)

    @property
    def label(self) -> str:
        if not self.fixed:
            return self.name
        return self.name + ":" + ",".join(f"{k}={v}" for k, v in self.fixed.items())

    # -- evaluation ------------------------------------------------------------
    def _split(self, point, lam):
        point = np.asarray(point, float)
        lam = np.asarray(lam, float)
        if lam.shape[0] != self.t:
            raise LayoutMismatch(f"{self.name} expects {self.t} parameters, got {lam.shape[0]}")
        return point[..., 0], point[..., 1], tuple(lam)

    def evaluate(self, point, lam):
        """``(F, G, H)`` as arrays; ``G`` has a leading axis of size t, ``H`` two."""
        u, v, L = self._split(point, lam)
        F, G, H = self.fgh(u, v, L)
        shape = np.broadcast_shapes(np.shape(u), np.shape(v), *(np.shape(x) for x in L))
        F = np.broadcast_to(F, shape).astype(float)
        G = np.stack([np.broadcast_to(g, shape) for g in G]).astype(float)
        H = np.stack([np.stack([np.broadcast_to(h, shape) for h in row]) for row in H])
        H = H.astype(float)
        return F, G, H

    def residual(self, point, lam):
        return self.evaluate(point, lam)[0]

    def grad(self, point, lam):
        return self.evaluate(point, lam)[1]

    def hess(self, point, lam):
        return self.evaluate(point, lam)[2]

    def native(self, xy) -> np.ndarray:
        """Cartesian points to the coordinates this family's residual expects."""
        xy = np.asarray(xy, float)
        if self.form == POLAR:
            return np.stack([np.hypot(xy[..., 0], xy[..., 1]),
                             np.arctan2(xy[..., 1], xy[..., 0])], axis=-1)
        return xy

    def equation(self, lam) -> str:
        vals = {n: f"{float(x):.6g}" for n, x in zip(self.param_names, np.atleast_1d(lam))}
        out = self.template
        for n in sorted(vals, key=len, reverse=True):
            out = out.replace("{" + n + "}", vals[n])
        out = out.replace("- -", "+ ").replace("+ -", "- ")
        return out + " = 0"


# --- helpers ----------------------------------------------------------------

def _pw(x, k):
    """``x**k`` that is identically zero for negative ``k`` (vanishing coefficient terms)."""
    if k < 0:
        return 0.0
    return x**k


def _zeros(t):
    return [[0.0] * t for _ in range(t)]


# --- elementary families ----------------------------------------------------

def make_line() -> CurveFamily:
    def fgh(x, y, L):
        a, b = L
        return y - a * x - b, [-x, -1.0], _zeros(2)

    def hint(xy, fam):
        A = np.c_[xy[:, 0], np.ones(len(xy))]
        (a0, b0), *_ = np.linalg.lstsq(A, xy[:, 1], rcond=None)
        span = np.ptp(xy[:, 1]) + 1e-12
        return [a0 - 0.25 * abs(a0) - 0.25, b0 - 0.25 * abs(b0) - 0.25 * span], \
               [a0 + 0.25 * abs(a0) + 0.25, b0 + 0.25 * abs(b0) + 0.25 * span]

    return CurveFamily("line", ("a", "b"), CARTESIAN, fgh, template="y - {a}*x - {b}",
                       hint_fn=hint)


def make_circle() -> CurveFamily:
    def fgh(x, y, L):
        A, B, R = L
        dx, dy = x - A, y - B
        return (dx**2 + dy**2 - R**2, [-2 * dx, -2 * dy, -2 * R],
                [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, -2.0]])

    def box(lam, fam, **_):
        A, B, R = lam
        return Box(A - abs(R), A + abs(R), B - abs(R), B + abs(R))

    def hint(xy, fam):
        lo, hi = xy.min(0), xy.max(0)
        half_diag = 0.5 * np.hypot(*(hi - lo))
        return [lo[0], lo[1], half_diag / 20], [hi[0], hi[1], half_diag]

    return CurveFamily("circle", ("A", "B", "R"), CARTESIAN, fgh,
                       template="(x - {A})^2 + (y - {B})^2 - {R}^2", box_fn=box, hint_fn=hint)


def make_ellipse() -> CurveFamily:
    def fgh(x, y, L):
        a, b = L
        return (x**2 / a**2 + y**2 / b**2 - 1,
                [-2 * x**2 / a**3, -2 * y**2 / b**3],
                [[6 * x**2 / a**4, 0.0], [0.0, 6 * y**2 / b**4]])

    def box(lam, fam, **_):
        a, b = np.abs(lam)
        return Box(-a, a, -b, b)

    def hint(xy, fam):
        a0, b0 = np.abs(xy).max(0)
        return [0.7 * a0, 0.7 * b0], [1.3 * a0, 1.3 * b0]

    return CurveFamily("ellipse", ("a", "b"), CARTESIAN, fgh,
                       template="x^2/{a}^2 + y^2/{b}^2 - 1", symmetric=True,
                       box_fn=box, hint_fn=hint)


def make_lamet(m: int = 4) -> CurveFamily:
    """Curve of Lamet ``b x^m + a^m y^m - a^m b`` with even degree ``m``."""
    if m < 2 or m % 2:
        raise ValueError("Lamet degree m must be an even integer >= 2")

    def fgh(x, y, L):
        a, b = L
        am, ym = a**m, y**m
        F = b * x**m + am * ym - am * b
        Ga = m * _pw(a, m - 1) * (ym - b)
        Gb = x**m - am
        Haa = m * (m - 1) * _pw(a, m - 2) * (ym - b)
        Hab = -m * _pw(a, m - 1)
        return F, [Ga, Gb], [[Haa, Hab], [Hab, 0.0]]

    def box(lam, fam, **_):
        a, b = lam
        if a <= 0 or b <= 0:
            raise DomainError("Lamet needs a, b > 0")
        yb = b ** (1.0 / m)
        return Box(-a, a, -yb, yb)

    def hint(xy, fam):
        a0, y0 = np.abs(xy).max(0)
        return [0.7 * a0, (0.8 * y0) ** m], [1.3 * a0, (1.2 * y0) ** m]

    return CurveFamily("lamet", ("a", "b"), CARTESIAN, fgh, fixed={"m": m},
                       template=f"{{b}}*x^{m} + {{a}}^{m}*y^{m} - {{a}}^{m}*{{b}}",
                       symmetric=True, box_fn=box, hint_fn=hint)


def make_citrus(stretched: bool = False) -> CurveFamily:
    """Citrus sextic ``a^4 c^2 y^2 + (x - a/2)^3 (x + a/2)^3`` (``c = 1`` unless stretched)."""

    def core(x, y, a, c):
        q = x**2 - a**2 / 4
        F = a**4 * c**2 * y**2 + q**3
        Ga = 4 * a**3 * c**2 * y**2 - 1.5 * a * q**2
        Gc = 2 * a**4 * c * y**2
        Haa = 12 * a**2 * c**2 * y**2 - 1.5 * q**2 + 1.5 * a**2 * q
        Hac = 8 * a**3 * c * y**2
        Hcc = 2 * a**4 * y**2
        return F, Ga, Gc, Haa, Hac, Hcc

    if stretched:
        def fgh(x, y, L):
            a, c = L
            F, Ga, Gc, Haa, Hac, Hcc = core(x, y, a, c)
            return F, [Ga, Gc], [[Haa, Hac], [Hac, Hcc]]
        names, template = ("a", "c"), "{a}^4*{c}^2*y^2 + (x - {a}/2)^3*(x + {a}/2)^3"
    else:
        def fgh(x, y, L):
            (a,) = L
            F, Ga, _, Haa, _, _ = core(x, y, a, 1.0)
            return F, [Ga], [[Haa]]
        names, template = ("a",), "{a}^4*y^2 + (x - {a}/2)^3*(x + {a}/2)^3"

    def box(lam, fam, **_):
        a = abs(lam[0])
        c = abs(lam[1]) if stretched else 1.0
        return Box(-a / 2, a / 2, -a / (8 * c), a / (8 * c))

    def hint(xy, fam):
        a0 = 2 * np.abs(xy[:, 0]).max()
        if not stretched:
            return [0.7 * a0], [1.3 * a0]
        c0 = a0 / (8 * np.abs(xy[:, 1]).max())
        return [0.7 * a0, 0.5 * c0], [1.3 * a0, 1.5 * c0]

    return CurveFamily("citrus_stretched" if stretched else "citrus", names, CARTESIAN, fgh,
                       template=template, symmetric=True, box_fn=box, hint_fn=hint)


def make_spiral(generalized: bool = False) -> CurveFamily:
    """Archimedean spiral ``rho = a + b theta`` (plus ``c theta^2`` when generalized)."""
    t = 3 if generalized else 2

    def fgh(r, th, L):
        a, b = L[0], L[1]
        F = r - a - b * th
        G = [-1.0, -th]
        if generalized:
            F = F - L[2] * th**2
            G.append(-th**2)
        return F, G, _zeros(t)

    def box(lam, fam, turn=1, **_):
        theta = 2 * np.pi * np.array([turn - 1, turn])
        radii = sum(p * theta**k for k, p in enumerate(lam))
        return Annulus(float(radii.min()), float(radii.max()))

    def hint(xy, fam):
        rho = np.hypot(xy[:, 0], xy[:, 1])
        a0 = rho.min()
        b0 = max(rho.max() - a0, 1e-9) / (2 * np.pi)
        if not generalized:
            return [0.9 * a0, 0.8 * b0], [1.15 * a0, 1.25 * b0]
        return [0.9 * a0, 0.6 * b0, 0.0], [1.15 * a0, 1.25 * b0, 0.08 * b0]

    def sampler(lam, thetas):
        rho = sum(p * thetas**k for k, p in enumerate(lam))
        return [np.c_[rho, thetas]]

    names = ("a", "b", "c") if generalized else ("a", "b")
    template = "rho - {a} - {b}*theta" + (" - {c}*theta^2" if generalized else "")
    return CurveFamily("spiral_generalized" if generalized else "spiral", names, POLAR, fgh,
                       template=template, box_fn=box, hint_fn=hint, polar_sampler=sampler)


def make_m_convexities(m: int = 5) -> CurveFamily:
    """``rho (1 + b cos(m theta)) - a``, the cleared form of ``rho = a / (1 + b cos(m theta))``."""
    if m < 2:
        raise ValueError("m must be >= 2")

    def fgh(r, th, L):
        a, b = L
        cm = np.cos(m * th)
        return r * (1 + b * cm) - a, [-1.0, r * cm], _zeros(2)

    def box(lam, fam, **_):
        a, b = lam
        if not (a > 0 and 0 < b < 1):
            raise DomainError("m-convexities need a > 0 and 0 < b < 1")
        return Annulus(a / (1 + b), a / (1 - b))

    def hint(xy, fam):
        rho = np.hypot(xy[:, 0], xy[:, 1])
        return _convexity_hint(rho)

    def sampler(lam, thetas):
        a, b = lam
        return [np.c_[a / (1 + b * np.cos(m * thetas)), thetas]]

    return CurveFamily("m_convexities", ("a", "b"), POLAR, fgh, fixed={"m": m},
                       template=f"rho*(1 + {{b}}*cos({m}*theta)) - {{a}}",
                       box_fn=box, hint_fn=hint, polar_sampler=sampler)


def _convexity_hint(rho):
    r_in, r_out = rho.min(), rho.max()
    b0 = (r_out - r_in) / (r_out + r_in)
    a0 = r_in * (1 + b0)
    return [0.85 * a0, 0.5 * b0], [1.15 * a0, min(1.5 * b0 + 0.01, 0.99)]


def petal_extent_factor(n: int) -> float:
    """x half-extent of the unit petal: ``(2n/(2n+1)) (1/(2n+1))^(1/2n)``."""
    return (2 * n / (2 * n + 1)) * (1 / (2 * n + 1)) ** (1 / (2 * n))


def make_petal(n: int = 1, stretched: bool = False) -> CurveFamily:
    """Geometric petal ``(c x^2 + y^2)^(2n+1) - a [(c x^2 + y^2)^n - c^n x^(2n)]^2``.

    ``a`` is the squared half-height; ``c`` (stretched form) squeezes x by ``sqrt(c)``.
    """
    if n < 1:
        raise ValueError("petal exponent n must be >= 1")

    if stretched:
        def fgh(x, y, L):
            a, c = L
            x2 = x**2
            s = c * x2 + y**2
            x2n = x2**n
            w = s**n - c**n * x2n
            w_c = n * _pw(s, n - 1) * x2 - n * _pw(c, n - 1) * x2n
            w_cc = n * (n - 1) * (_pw(s, n - 2) * x2**2 - _pw(c, n - 2) * x2n)
            F = s ** (2 * n + 1) - a * w**2
            Fa = -w**2
            Fc = (2 * n + 1) * s ** (2 * n) * x2 - 2 * a * w * w_c
            Fac = -2 * w * w_c
            Fcc = (2 * n + 1) * 2 * n * s ** (2 * n - 1) * x2**2 - 2 * a * (w_c**2 + w * w_cc)
            return F, [Fa, Fc], [[0.0, Fac], [Fac, Fcc]]
        names = ("a", "c")
        template = (f"({{c}}*x^2 + y^2)^{2 * n + 1} - {{a}}*(({{c}}*x^2 + y^2)^{n}"
                    f" - {{c}}^{n}*x^{2 * n})^2")
    else:
        def fgh(x, y, L):
            (a,) = L
            s = x**2 + y**2
            w = s**n - x ** (2 * n)
            return s ** (2 * n + 1) - a * w**2, [-w**2], [[0.0]]
        names = ("a",)
        template = f"(x^2 + y^2)^{2 * n + 1} - {{a}}*((x^2 + y^2)^{n} - x^{2 * n})^2"

    k = petal_extent_factor(n)

    def box(lam, fam, **_):
        a = lam[0]
        c = lam[1] if stretched else 1.0
        if a <= 0 or c <= 0:
            raise DomainError("petal needs a > 0 (and c > 0)")
        xe = k * math.sqrt(a / c)
        return Box(-xe, xe, -math.sqrt(a), math.sqrt(a))

    def hint(xy, fam):
        a0 = np.abs(xy[:, 1]).max() ** 2
        if not stretched:
            return [0.5 * a0], [1.5 * a0]
        c0 = k**2 * a0 / np.abs(xy[:, 0]).max() ** 2
        return [0.5 * a0, 0.8 * c0], [1.5 * a0, 1.2 * c0]

    return CurveFamily("petal_stretched" if stretched else "petal", names, CARTESIAN, fgh,
                       fixed={"n": n}, template=template, symmetric=True,
                       box_fn=box, hint_fn=hint)


def petal_ratio(n) -> np.ndarray:
    """y of the widest petal point over the petal half-height, as a function of n."""
    n = np.asarray(n, float)
    return (2 * n / (2 * n + 1)) * np.sqrt(1 - (1 / (2 * n + 1)) ** (1 / n))


def estimate_petal_exponent(yA: float, yB: float, n_max: int = 200) -> int:
    """Petal exponent whose height ratio best matches ``yB / yA``.

    ``yA`` is the petal half-height and ``yB`` the height of its widest point.
    The ratio is not monotone in ``n`` (it peaks near ``n = 2``); the smallest
    minimiser is returned and a warning is issued when the fit sits at
    ``n_max`` or the ratio exceeds the attainable maximum.
    """
    if not (yA > 0 and yB > 0) or not yB / yA < 1:
        raise RatioOutOfRange(f"need 0 < yB/yA < 1, got yA={yA}, yB={yB}")
    ratio = yB / yA
    ns = np.arange(1, n_max + 1)
    lhs = petal_ratio(ns)
    best = int(ns[np.argmin(np.abs(lhs - ratio))])
    if ratio > lhs.max():
        warnings.warn(f"ratio {ratio:.4g} exceeds the largest attainable value "
                      f"{lhs.max():.4g}; using n={best}", RuntimeWarning, stacklevel=2)
    elif best == n_max:
        warnings.warn(f"petal exponent capped at n_max={n_max}", RuntimeWarning, stacklevel=2)
    return best


def petal_exponent_from_points(xy, n_max: int = 200) -> int:
    """Estimate the petal exponent from a centred, axis-aligned planar cluster."""
    xy = np.asarray(xy, float)
    yA = np.abs(xy[:, 1]).max()
    yB = abs(xy[np.argmax(np.abs(xy[:, 0])), 1])
    return estimate_petal_exponent(yA, max(yB, 1e-12 * yA), n_max)


# --- compound curves ----------------------------------------------------------

def _product_rule(parts, t):
    """``(F, G, H)`` of a product from the factors' ``(F, G, H)``."""
    Fs = [p[0] for p in parts]
    k = len(parts)

    def prod_except(*skip):
        out = 1.0
        for i in range(k):
            if i not in skip:
                out = out * Fs[i]
        return out

    F = prod_except()
    others = [prod_except(i) for i in range(k)]
    G = [sum(parts[i][1][a] * others[i] for i in range(k)) for a in range(t)]
    H = _zeros(t)
    for a in range(t):
        for b in range(a, t):
            acc = 0.0
            for i in range(k):
                acc = acc + parts[i][2][a][b] * others[i]
                for j in range(k):
                    if j != i:
                        acc = acc + parts[i][1][a] * parts[j][1][b] * prod_except(i, j)
            H[a][b] = H[b][a] = acc
    return F, G, H


def make_compound(families, name: str | None = None, template: str | None = None,
                  hint_fn=None) -> CurveFamily:
    """Product of residuals that share one parameter vector.

    The zero set is the union of the factors' zero sets. Gradient and Hessian
    follow from the product rule.
    """
    families = list(families)
    if not families:
        raise LayoutMismatch("a compound needs at least one factor")
    first = families[0]
    for f in families[1:]:
        if f.param_names != first.param_names or f.form != first.form:
            raise LayoutMismatch(
                f"{f.name} {f.form}{f.param_names} does not share the layout of "
                f"{first.name} {first.form}{first.param_names}")
    t = first.t

    def fgh(u, v, L):
        return _product_rule([f.fgh(u, v, L) for f in families], t)

    def box(lam, fam, **kw):
        out = None
        for f in families:
            if f.box_fn is None:
                raise UnsupportedFamily(f"factor {f.name} has no analytic bounding region")
            b = f.box_fn(lam, f, **kw)
            out = b if out is None else out.union(b)
        return out

    sampler = None
    if first.form == POLAR and all(f.polar_sampler for f in families):
        def sampler(lam, thetas):
            return [pl for f in families for pl in f.polar_sampler(lam, thetas)]

    fixed = {}
    for f in families:
        fixed.update(f.fixed)
    return CurveFamily(
        name or "*".join(f.name for f in families), first.param_names, first.form, fgh,
        fixed=fixed,
        template=template or " * ".join(f"({f.template})" for f in families),
        symmetric=all(f.symmetric for f in families), box_fn=box,
        hint_fn=hint_fn or first.hint_fn, polar_sampler=sampler, factors=tuple(families))


def _embed(fam: CurveFamily, names: tuple[str, ...], offset: int) -> CurveFamily:
    """View ``fam`` on a longer parameter vector, its own block starting at ``offset``."""
    t, T = fam.t, len(names)
    sl = slice(offset, offset + t)

    def fgh(u, v, L):
        F, G, H = fam.fgh(u, v, tuple(L[sl]))
        Gfull = [0.0] * T
        Hfull = _zeros(T)
        for i in range(t):
            Gfull[offset + i] = G[i]
            for j in range(t):
                Hfull[offset + i][offset + j] = H[i][j]
        return F, Gfull, Hfull

    def box(lam, f, **kw):
        return fam.box_fn(np.asarray(lam)[sl], fam, **kw)

    sampler = None
    if fam.polar_sampler is not None:
        def sampler(lam, thetas):
            return fam.polar_sampler(np.asarray(lam)[sl], thetas)

    template = fam.template
    for n in fam.param_names:
        new = names[offset + fam.param_names.index(n)]
        template = template.replace("{" + n + "}", "{" + new + "}")
    return CurveFamily(fam.name, names, fam.form, fgh, fixed=dict(fam.fixed), template=template,
                       symmetric=fam.symmetric, box_fn=box if fam.box_fn else None,
                       polar_sampler=sampler)


def make_independent_product(*families: CurveFamily) -> CurveFamily:
    """Compound whose factors keep separate parameters, concatenated in order."""
    forms = {f.form for f in families}
    if len(forms) != 1:
        raise LayoutMismatch("cannot multiply Cartesian and polar residuals")
    names = tuple(f"{n}{i + 1}" for i, f in enumerate(families) for n in f.param_names)
    embedded, off = [], 0
    for f in families:
        embedded.append(_embed(f, names, off))
        off += f.t

    def hint(xy, fam):
        lo, hi = [], []
        for f in families:
            if f.hint_fn is None:
                raise UnsupportedFamily(f"{f.name} has no region heuristic")
            a, b = f.hint_fn(xy, f)
            lo += list(a)
            hi += list(b)
        return lo, hi

    return make_compound(embedded, name="*".join(f.name for f in families), hint_fn=hint)


def make_citrus_circle() -> CurveFamily:
    """Citrus curve together with the circle of radius a/8 about its centre."""
    def circle_fgh(x, y, L):
        (a,) = L
        return x**2 + y**2 - a**2 / 64, [-a / 32], [[-1.0 / 32]]

    def circle_box(lam, fam, **_):
        r = abs(lam[0]) / 8
        return Box(-r, r, -r, r)

    circle = CurveFamily("circle_a8", ("a",), CARTESIAN, circle_fgh,
                         template="x^2 + y^2 - {a}^2/64", symmetric=True, box_fn=circle_box)
    return make_compound([make_citrus(), circle], name="citrus_circle")


def make_citrus_line() -> CurveFamily:
    """Citrus curve together with its symmetry axis y = 0."""
    axis = CurveFamily("x_axis", ("a",), CARTESIAN, lambda x, y, L: (y, [0.0], [[0.0]]),
                       template="y")

    def hint(xy, fam):
        # points on the axis say nothing about a; use those off it
        off = np.abs(xy[:, 1]) > 0.02 * np.abs(xy[:, 1]).max()
        a0 = 2 * np.abs(xy[off if off.sum() >= 2 else slice(None), 0]).max()
        return [0.7 * a0], [1.3 * a0]

    return make_compound([make_citrus(), axis], name="citrus_line", hint_fn=hint)


def make_convexities_circle(m: int = 5) -> CurveFamily:
    """m-convexity curve with an inner circle ``rho = r``; parameters ``(a, b, r)``."""
    names = ("a", "b", "r")
    star = _embed(make_m_convexities(m), names, 0)

    def ring_fgh(r_, th, L):
        return r_ - L[2], [0.0, 0.0, -1.0], _zeros(3)

    def ring_sampler(lam, thetas):
        return [np.c_[np.full_like(thetas, lam[2]), thetas]]

    ring = CurveFamily("ring", names, POLAR, ring_fgh, template="rho - {r}",
                       box_fn=lambda lam, f, **_: Annulus(lam[2], lam[2]),
                       polar_sampler=ring_sampler)

    def hint(xy, fam):
        rho = np.hypot(xy[:, 0], xy[:, 1])
        r0 = rho.min()
        outer = rho[rho > r0 + 0.5 * (rho.max() - r0)]
        if len(outer) < 3:
            outer = rho
        lo, hi = _convexity_hint(outer)
        return lo + [0.85 * r0], hi + [1.15 * r0]

    return make_compound([star, ring], name="convexities_circle", hint_fn=hint)


def make_three_ellipses() -> CurveFamily:
    """Three stacked ellipses driven by ``(a, b)``."""
    names = ("a", "b")

    def outer(x, y, L):
        a, b = L
        return (x**2 / a**2 + y**2 / b**2 - 1,
                [-2 * x**2 / a**3, -2 * y**2 / b**3],
                [[6 * x**2 / a**4, 0.0], [0.0, 6 * y**2 / b**4]])

    def upper(x, y, L):
        a, b = L
        r = 2 * y / b - 1
        return (16 * x**2 / (9 * a**2) + r**2 - 1,
                [-32 * x**2 / (9 * a**3), -4 * r * y / b**2],
                [[96 * x**2 / (9 * a**4), 0.0], [0.0, 8 * y**2 / b**4 + 8 * r * y / b**3]])

    def inner(x, y, L):
        a, b = L
        q = 4 * x**2 + y**2
        return q / b**2 - 1, [0.0, -2 * q / b**3], [[0.0, 0.0], [0.0, 6 * q / b**4]]

    def box1(lam, f, **_):
        a, b = np.abs(lam)
        return Box(-a, a, -b, b)

    def box2(lam, f, **_):
        a, b = np.abs(lam)
        return Box(-0.75 * a, 0.75 * a, 0.0, b)

    def box3(lam, f, **_):
        b = abs(lam[1])
        return Box(-b / 2, b / 2, -b, b)

    parts = [
        CurveFamily("ellipse_outer", names, CARTESIAN, outer,
                    template="x^2/{a}^2 + y^2/{b}^2 - 1", box_fn=box1),
        CurveFamily("ellipse_upper", names, CARTESIAN, upper,
                    template="16*x^2/(9*{a}^2) + (2*y - {b})^2/{b}^2 - 1", box_fn=box2),
        CurveFamily("ellipse_inner", names, CARTESIAN, inner,
                    template="4*x^2/{b}^2 + y^2/{b}^2 - 1", box_fn=box3),
    ]

    def hint(xy, fam):
        a0, b0 = np.abs(xy).max(0)
        return [0.7 * a0, 0.7 * b0], [1.3 * a0, 1.3 * b0]

    return make_compound(parts, name="three_ellipses", hint_fn=hint)


COMPOUND_RECIPES = {
    "citrus_circle": make_citrus_circle,
    "citrus_line": make_citrus_line,
    "convexities_circle": make_convexities_circle,
    "three_ellipses": make_three_ellipses,
}


# --- catalogue ----------------------------------------------------------------

def catalogue() -> dict[str, Callable[..., CurveFamily]]:
    """Constructors by name; integer constants are keyword arguments."""
    return {
        "line": make_line,
        "circle": make_circle,
        "ellipse": make_ellipse,
        "lamet": make_lamet,
        "citrus": lambda: make_citrus(False),
        "citrus_stretched": lambda: make_citrus(True),
        "spiral": lambda: make_spiral(False),
        "spiral_generalized": lambda: make_spiral(True),
        "m_convexities": make_m_convexities,
        "petal": lambda n=1: make_petal(n, False),
        "petal_stretched": lambda n=1: make_petal(n, True),
        **COMPOUND_RECIPES,
    }


def family_from_spec(spec: str) -> CurveFamily:
    """Build a family from ``name`` or ``name:k=v,...``, e.g. ``petal_stretched:n=50``."""
    name, _, rest = spec.partition(":")
    kwargs = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        kwargs[k.strip()] = int(v)
    table = catalogue()
    if name not in table:
        raise ValueError(f"unknown curve family {name!r}; known: {', '.join(table)}")
    try:
        return table[name](**kwargs)
    except TypeError as exc:
        raise ValueError(f"bad constants for {name}: {kwargs}") from exc


def describe_catalogue() -> list[dict]:
    rows = []
    defaults = {"lamet": {"m": 4}, "m_convexities": {"m": 5}, "petal": {"n": 1},
                "petal_stretched": {"n": 1}, "convexities_circle": {"m": 5}}
    for name, ctor in catalogue().items():
        fam = ctor(**defaults.get(name, {}))
        sym = {p: p for p in fam.param_names}
        eq = fam.template
        for p in sym:
            eq = eq.replace("{" + p + "}", p)
        rows.append({"name": name, "t": fam.t, "form": fam.form, "fixed": fam.fixed,
                     "parameters": list(fam.param_names), "equation": eq + " = 0"})
    return rows


# --- bounding regions and search regions -------------------------------------

def bounding_box(family: CurveFamily, lam, **kw):
    """Analytic bounding rectangle (Cartesian) or annulus (polar) of one curve.

    Spirals accept ``turn=k`` for the annulus of the k-th turning.
    """
    if family.box_fn is None:
        raise UnsupportedFamily(f"{family.name} has no analytic bounding region")
    lam = np.asarray(lam, float)
    if lam.shape != (family.t,):
        raise LayoutMismatch(f"{family.name} expects {family.t} parameters")
    return family.box_fn(lam, family, **kw)


def suggest_region(family: CurveFamily, Z, fraction: float = 1 / 20) -> ParameterRegion:
    """Data-driven parameter box for ``family`` on the planar set ``Z``.

    ``Z`` is a :class:`~feature_curves.plane.PlanarSet` or an ``(n, 2)`` array.
    The step on each axis is ``fraction`` of that axis' width.
    """
    xy = np.asarray(getattr(Z, "points2d", Z), float)
    if len(xy) < family.t + 1:
        raise TooFewPoints(f"{family.name} needs at least {family.t + 1} points")
    if family.hint_fn is None:
        raise UnsupportedFamily(f"{family.name} has no region heuristic")
    lo, hi = (np.asarray(x, float) for x in family.hint_fn(xy, family))
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    width = hi - lo
    flat = width <= 0
    pad = np.where(flat, np.maximum(np.abs(lo), 1.0) * 0.05, 0.0)
    lo, hi = lo - pad, hi + pad
    return ParameterRegion(lo, hi, (hi - lo) * fraction)
