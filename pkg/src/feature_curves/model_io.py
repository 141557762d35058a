"""Reading and writing ASCII OBJ / PLY / XYZ models, and sRGB to CIELab conversion."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, FeatureCurveError, ParseError

log = logging.getLogger(__name__)

FORMATS = ("OBJ", "PLY", "XYZ")


class MeshIndexError(FeatureCurveError, IndexError):
    """A face references a vertex that does not exist."""


@dataclass(frozen=True)
class SurfaceModel:
    """A triangle mesh or point cloud with optional per-vertex colour.

    ``vertices`` is ``(n, 3)`` float, ``faces`` is ``(m, 3)`` int or None for a
    point cloud, ``colors`` is ``(n, 3)`` float RGB in [0, 255] or None.
    """

    vertices: np.ndarray
    faces: np.ndarray | None = None
    colors: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ParseError(f"vertices must have shape (n, 3), got {v.shape}")
        object.__setattr__(self, "vertices", v)
        if self.faces is not None:
            f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
            if f.size and (f.min() < 0 or f.max() >= len(v)):
                raise MeshIndexError(
                    f"face index out of range for {len(v)} vertices "
                    f"(min {f.min()}, max {f.max()})")
            degenerate = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if degenerate.any():
                log.warning("dropping %d degenerate faces", int(degenerate.sum()))
                f = f[~degenerate]
            object.__setattr__(self, "faces", f)
        if self.colors is not None:
            c = np.asarray(self.colors, dtype=float)
            if c.shape != v.shape:
                raise ParseError(f"colors shape {c.shape} does not match vertices {v.shape}")
            if c.size and (c.min() < 0 or c.max() > 255):
                raise DomainError("colors must lie in [0, 255]")
            object.__setattr__(self, "colors", c)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def is_mesh(self) -> bool:
        return self.faces is not None and len(self.faces) > 0


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        fmt = fmt.upper()
    else:
        fmt = path.suffix.lstrip(".").upper()
    if fmt not in FORMATS:
        raise ParseError(f"unsupported model format {fmt!r} for {path}")
    return fmt


def load_model(path: str | os.PathLike, format: str | None = None) -> SurfaceModel:
    """Load an ASCII OBJ, PLY or XYZ file.

    The format is taken from ``format`` if given, otherwise from the file
    extension.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    try:
        text = path.read_text()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not an ASCII file") from exc
    reader = {"OBJ": _parse_obj, "PLY": _parse_ply, "XYZ": _parse_xyz}[fmt]
    return reader(text, str(path))


def _parse_obj(text: str, name: str) -> SurfaceModel:
    verts, cols, faces = [], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0]
        try:
            if tag == "v":
                vals = [float(x) for x in parts[1:]]
                if len(vals) not in (3, 4, 6, 7):
                    raise ValueError("expected 3 or 6 values")
                verts.append(vals[:3])
                if len(vals) >= 6:
                    cols.append(vals[3:6] if len(vals) == 6 else vals[4:7])
            elif tag == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) < 3:
                    raise ValueError("face with fewer than 3 vertices")
                n = len(verts)
                idx = [i - 1 if i > 0 else n + i for i in idx]
                for k in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
        except ValueError as exc:
            raise ParseError(f"{name}:{lineno}: {exc}") from exc
    if not verts:
        raise ParseError(f"{name}: no vertices")
    colors = None
    if cols:
        if len(cols) != len(verts):
            raise ParseError(f"{name}: vertex colours given for only some vertices")
        colors = np.clip(np.asarray(cols) * 255.0, 0, 255)
    return SurfaceModel(np.asarray(verts), np.asarray(faces, dtype=np.int64).reshape(-1, 3)
                        if faces else None, colors)


def _parse_ply(text: str, name: str) -> SurfaceModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError(f"{name}: missing 'ply' magic")
    elements = []  # (name, count, [(prop_name, is_list)])
    i = 1
    fmt = None
    while i < len(lines):
        parts = lines[i].split()
        i += 1
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError(f"{name}: property before element")
            is_list = parts[1] == "list"
            elements[-1][2].append((parts[-1], is_list))
        elif parts[0] == "end_header":
            break
    else:
        raise ParseError(f"{name}: missing end_header")
    if fmt != "ascii":
        raise ParseError(f"{name}: only ASCII PLY is supported (got {fmt})")

    body = [ln.split() for ln in lines[i:] if ln.strip()]
    pos = 0
    verts = colors = faces = None
    for el_name, count, props in elements:
        rows = body[pos:pos + count]
        if len(rows) < count:
            raise ParseError(f"{name}: expected {count} {el_name} records, got {len(rows)}")
        pos += count
        if el_name == "vertex":
            names = [p for p, _ in props]
            try:
                data = np.array([[float(x) for x in r[:len(names)]] for r in rows])
                xyz = [names.index(c) for c in ("x", "y", "z")]
            except ValueError as exc:
                raise ParseError(f"{name}: bad vertex record ({exc})") from exc
            verts = data[:, xyz] if count else np.zeros((0, 3))
            if all(c in names for c in ("red", "green", "blue")):
                colors = data[:, [names.index(c) for c in ("red", "green", "blue")]]
        elif el_name == "face":
            try:
                tri = []
                for r in rows:
                    k = int(r[0])
                    idx = [int(x) for x in r[1:1 + k]]
                    if len(idx) != k or k < 3:
                        raise ValueError("short face record")
                    tri.extend((idx[0], idx[j], idx[j + 1]) for j in range(1, k - 1))
            except ValueError as exc:
                raise ParseError(f"{name}: bad face record ({exc})") from exc
            faces = np.asarray(tri, dtype=np.int64).reshape(-1, 3)
    if verts is None:
        raise ParseError(f"{name}: no vertex element")
    return SurfaceModel(verts, faces if faces is not None and len(faces) else None, colors)


def _parse_xyz(text: str, name: str) -> SurfaceModel:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split("#", 1)[0].replace(",", " ").split()
        if not parts:
            continue
        try:
            vals = [float(x) for x in parts]
        except ValueError as exc:
            raise ParseError(f"{name}:{lineno}: {exc}") from exc
        if len(vals) not in (3, 6):
            raise ParseError(f"{name}:{lineno}: expected 3 or 6 columns, got {len(vals)}")
        rows.append(vals)
    if not rows:
        raise ParseError(f"{name}: no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"{name}: inconsistent column count")
    data = np.asarray(rows)
    colors = data[:, 3:6] if data.shape[1] == 6 else None
    return SurfaceModel(data[:, :3], None, colors)


def _fmt(values) -> str:
    return " ".join(repr(float(x)) for x in values)


def save_model(model: SurfaceModel, path: str | os.PathLike, format: str | None = None) -> Path:
    """Write ``model`` as ASCII; coordinates use ``repr`` precision so they round-trip exactly."""
    path = Path(path)
    fmt = _infer_format(path, format)
    v = model.vertices
    out = []
    if fmt == "OBJ":
        for i, p in enumerate(v):
            line = "v " + _fmt(p)
            if model.colors is not None:
                c = model.colors[i] / 255.0
                line += " " + _fmt(c)
            out.append(line)
        if model.faces is not None:
            out.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in model.faces)
    elif fmt == "PLY":
        nf = 0 if model.faces is None else len(model.faces)
        out += ["ply", "format ascii 1.0", f"element vertex {len(v)}",
                "property double x", "property double y", "property double z"]
        if model.colors is not None:
            out += ["property uchar red", "property uchar green", "property uchar blue"]
        if nf:
            out += [f"element face {nf}", "property list uchar int vertex_indices"]
        out.append("end_header")
        for i, p in enumerate(v):
            line = _fmt(p)
            if model.colors is not None:
                line += " " + " ".join(str(int(round(c))) for c in model.colors[i])
            out.append(line)
        if nf:
            out.extend(f"3 {a} {b} {c}" for a, b, c in model.faces)
    else:
        for i, p in enumerate(v):
            line = _fmt(p)
            if model.colors is not None:
                line += " " + _fmt(model.colors[i])
            out.append(line)
    path.write_text("\n".join(out) + "\n")
    return path


# --- colour -----------------------------------------------------------------

# sRGB primaries, D65 white.
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_D65_WHITE = _RGB_TO_XYZ.sum(axis=1)


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float


def rgb_array_to_lab(rgb) -> np.ndarray:
    """Vectorised sRGB (0..255) to CIELab (D65). Returns ``(..., 3)`` array of L, a, b."""
    rgb = np.asarray(rgb, dtype=float)
    if rgb.shape[-1] != 3:
        raise DomainError("expected RGB triples")
    if np.any(~np.isfinite(rgb)) or rgb.min(initial=0) < 0 or rgb.max(initial=0) > 255:
        raise DomainError("RGB channels must lie in [0, 255]")
    c = rgb / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T / _D65_WHITE
    delta = 6.0 / 29.0
    f = np.where(xyz > delta**3, np.cbrt(xyz), xyz / (3 * delta**2) + 4.0 / 29.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([np.clip(L, 0.0, 100.0), a, b], axis=-1)


def rgb_to_cielab(rgb) -> LabColor:
    L, a, b = rgb_array_to_lab(np.asarray(rgb, dtype=float).reshape(3))
    return LabColor(float(L), float(a), float(b))
