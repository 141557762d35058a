"""End-to-end run: feature points, clusters, planes, curve detection and outputs."""

from __future__ import annotations

import json
import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cluster import DensityParams, dbscan
from .curves import ParameterRegion, family_from_spec, petal_exponent_from_points, suggest_region
from .errors import ConfigError, EmptyLocus, FeatureCurveError
from .features import Property, combine_feature_sets, extract_feature_points
from .hough import DetectedCurve, compete_families, lift_to_3d, locus_2d
from .model_io import SurfaceModel, load_model
from .plane import PlanarSet, project_to_plane

log = logging.getLogger(__name__)

COMBINERS = ("single", "intersect", "union")


@dataclass
class RunConfig:
    """Settings of one run.

    ``families`` holds specs such as ``"circle"`` or ``"petal_stretched:n=50"``;
    ``n=auto`` picks the petal exponent from each cluster's shape. ``regions``
    maps a family spec to ``{"lo": [...], "hi": [...], "step": [...]}``
    (``step`` optional); families without an entry get a data-driven region.
    """

    model: str = ""
    property: str = "cmax"
    threshold: float = 0.8
    combine: str = "single"
    property2: str | None = None
    K: int = 50
    MinPts: int = 5
    epsilon: float | None = None
    families: list[str] = field(default_factory=lambda: ["circle"])
    regions: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    neighborhood: int = 16
    nbins: int = 256
    workers: int = 1

    def validate(self) -> "RunConfig":
        if not self.model:
            raise ConfigError("a model path is required")
        if not (isinstance(self.threshold, (int, float)) and 0 < self.threshold < 1):
            raise ConfigError(f"threshold p must lie in (0, 1), got {self.threshold}")
        for name in (self.property, self.property2):
            if name is not None and name not in {p.value for p in Property}:
                raise ConfigError(f"unknown property {name!r}")
        if self.combine not in COMBINERS:
            raise ConfigError(f"combine must be one of {COMBINERS}")
        if self.combine != "single" and self.property2 is None:
            raise ConfigError(f"combine={self.combine} needs a second property")
        if self.K < 1 or self.MinPts < 1:
            raise ConfigError("K and MinPts must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.families:
            raise ConfigError("select at least one curve family")
        for spec in self.families:
            try:
                _family_for(spec, None)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        for spec, reg in self.regions.items():
            if spec not in self.families:
                raise ConfigError(f"region given for unselected family {spec!r}")
            try:
                _region_from(reg)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad region for {spec}: {exc}") from exc
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def _region_from(reg: dict) -> ParameterRegion:
    lo, hi = np.asarray(reg["lo"], float), np.asarray(reg["hi"], float)
    if reg.get("step") is None:
        return ParameterRegion.with_fraction(lo, hi)
    return ParameterRegion(lo, hi, reg["step"])


def _family_for(spec: str, xy):
    if "n=auto" in spec:
        n = 1 if xy is None else petal_exponent_from_points(xy)
        spec = spec.replace("n=auto", f"n={n}")
    return family_from_spec(spec)


@dataclass
class ClusterRecord:
    id: int
    size: int
    planar: PlanarSet | None = None
    detections: list[DetectedCurve] = field(default_factory=list)
    error: str | None = None

    @property
    def best(self) -> DetectedCurve | None:
        return self.detections[0] if self.detections else None

    def as_dict(self) -> dict:
        out = {"id": self.id, "size": self.size}
        if self.planar is not None:
            fr = self.planar.frame
            out["frame"] = {"centroid": [float(x) for x in fr.centroid],
                            "rotation": [[float(x) for x in row] for row in fr.rotation]}
            res = self.planar.residuals
            out["residuals"] = {"max": float(res.max()), "mean": float(res.mean())}
        out["detections"] = [d.as_dict() for d in self.detections]
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class RunReport:
    config: RunConfig
    clusters: list[ClusterRecord]
    timings: dict
    n_feature_points: int = 0
    noise: int = 0
    skipped: list[int] = field(default_factory=list)

    @property
    def n_detections(self) -> int:
        return sum(1 for c in self.clusters if c.detections)

    def as_dict(self, timings: bool = True) -> dict:
        out = {"config": self.config.to_dict(),
               "feature_points": self.n_feature_points,
               "noise_points": self.noise,
               "skipped_small_clusters": list(self.skipped),
               "clusters": [c.as_dict() for c in self.clusters]}
        if timings:
            out["timings"] = {k: round(v, 6) for k, v in self.timings.items()}
        return out

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.as_dict(timings), indent=2)


def _detect_cluster(cid, points, config: RunConfig) -> ClusterRecord:
    rec = ClusterRecord(cid, len(points))
    try:
        Z = project_to_plane(points)
        rec.planar = Z
        candidates = []
        for spec in config.families:
            fam = _family_for(spec, Z.points2d)
            reg = config.regions.get(spec)
            region = _region_from(reg) if reg else suggest_region(fam, Z)
            candidates.append((fam, region))
        rec.detections = compete_families(Z, candidates)
    except FeatureCurveError as exc:
        log.warning("cluster %d: %s", cid, exc)
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def run_pipeline(config: RunConfig, model: SurfaceModel | None = None) -> RunReport:
    """Run every stage on ``config.model`` (or on ``model`` when given).

    Per-cluster failures are recorded in the report rather than raised. When
    ``config.out`` is set the report, an OBJ overlay and one SVG per cluster
    are written there.
    """
    config.validate()
    timings = {}
    t0 = time.perf_counter()
    if model is None:
        model = load_model(config.model)
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    X = extract_feature_points(model, config.property, config.threshold, config.nbins,
                               config.neighborhood)
    if config.combine != "single":
        X2 = extract_feature_points(model, config.property2, config.threshold, config.nbins,
                                    config.neighborhood)
        X = combine_feature_sets(model, X, X2, config.combine)
    timings["features"] = time.perf_counter() - t0
    log.info("%d feature points", len(X))

    t0 = time.perf_counter()
    clustering = dbscan(X.points, DensityParams(config.K, config.MinPts, config.epsilon))
    timings["clustering"] = time.perf_counter() - t0
    todo = [c for c in clustering.clusters if not c.small]
    skipped = [c.label for c in clustering.clusters if c.small]
    log.info("%d clusters (%d small, skipped), epsilon=%.4g", len(clustering.clusters),
             len(skipped), clustering.epsilon)

    t0 = time.perf_counter()
    if config.workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            records = list(pool.map(lambda c: _detect_cluster(c.label, c.points, config), todo))
    else:
        records = [_detect_cluster(c.label, c.points, config) for c in todo]
    records.sort(key=lambda r: r.id)
    timings["detection"] = time.perf_counter() - t0

    report = RunReport(config, records, timings, len(X), len(clustering.noise_ids), skipped)
    if config.out:
        write_outputs(report, model, config.out)
    return report


def write_outputs(report: RunReport, model: SurfaceModel, out: str | os.PathLike) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    best = [r.best for r in report.clusters if r.best is not None]
    emit_overlay(model, best, out / "overlay.obj")
    for rec in report.clusters:
        if rec.planar is not None:
            emit_cluster_plot(rec.planar, rec.best, out / f"cluster_{rec.id}.svg")


# --- artefacts ----------------------------------------------------------------

def emit_overlay(model: SurfaceModel, curves, path: str | os.PathLike, samples: int = 400) -> Path:
    """OBJ with the model plus one ``l`` polyline group per lifted curve."""
    path = Path(path)
    lines = ["# feature curve overlay"]
    for i, v in enumerate(model.vertices):
        row = "v " + " ".join(repr(float(x)) for x in v)
        if model.colors is not None:
            row += " " + " ".join(repr(float(c) / 255) for c in model.colors[i])
        lines.append(row)
    if model.faces is not None:
        lines += ["f " + " ".join(str(int(k) + 1) for k in f) for f in model.faces]
    count = model.n_vertices
    for ci, curve in enumerate(curves):
        try:
            polys = lift_to_3d(curve, samples)
        except EmptyLocus as exc:
            log.warning("overlay: %s", exc)
            continue
        lines.append(f"g curve_{ci}_{curve.name}")
        for poly in polys:
            lines += ["v " + " ".join(repr(float(x)) for x in p) for p in poly]
            lines.append("l " + " ".join(str(count + k + 1) for k in range(len(poly))))
            count += len(poly)
    path.write_text("\n".join(lines) + "\n")
    return path


def emit_cluster_plot(Z: PlanarSet, curve: DetectedCurve | None, path: str | os.PathLike,
                      size: int = 600) -> Path:
    """Equal-aspect SVG of the planar cluster with the detected locus in red."""
    path = Path(path)
    pts = np.asarray(Z.points2d, float)
    polys, note = [], None
    if curve is None:
        note = "no curve detected"
    else:
        try:
            polys = locus_2d(curve)
        except EmptyLocus:
            note = "empty curve locus"
            warnings.warn(f"{curve.label}: empty locus, plotting points only", RuntimeWarning)
    allp = np.vstack([pts] + polys) if polys else pts
    lo, hi = allp.min(0), allp.max(0)
    span = max(float((hi - lo).max()), 1e-12)
    margin = 20
    scale = (size - 2 * margin) / span

    def xy(p):
        return (margin + (p[..., 0] - lo[0]) * scale,
                size - margin - (p[..., 1] - lo[1]) * scale)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>',
           '<g fill="#1f4e9a">']
    X, Y = xy(pts)
    out += [f'<circle cx="{x:.3f}" cy="{y:.3f}" r="2"/>' for x, y in zip(X, Y)]
    out.append("</g>")
    for poly in polys:
        X, Y = xy(poly)
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(X, Y))
        out.append(f'<polyline points="{coords}" fill="none" stroke="red" stroke-width="1.5"/>')
    title = curve.equation if curve is not None else ""
    if title:
        out.append(f'<text x="{margin}" y="14" font-size="11" font-family="monospace">'
                   f'{_xml_escape(title)}</text>')
    if note:
        out.append(f'<text x="{margin}" y="{size - 4}" font-size="12" fill="#b00">'
                   f'warning: {note}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def summarize(report: RunReport) -> list[str]:
    rows = []
    for rec in report.clusters:
        if rec.best is None:
            rows.append(f"cluster {rec.id} ({rec.size} pts): {rec.error or 'no detection'}")
            continue
        d = rec.best
        rows.append(f"cluster {rec.id} ({rec.size} pts): {d.label} score={d.score} "
                    f"runner_up={d.runner_up}  {d.equation}")
    return rows

