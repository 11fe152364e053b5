"""Shape primitives, directional projections, and shadow intersections.

Shapes are validated at construction; every operation below may assume a
valid shape.  Projections map a shape onto the axis (2D) or plane (3D)
orthogonal to an illumination direction; intersections of the resulting
shadow regions are exact for intervals and convex polygons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

__all__ = [
    "Direction",
    "Segment",
    "ConvexPolygon",
    "Disc",
    "TriangleMesh",
    "Sphere",
    "PlanarPolygon",
    "ShadowInterval",
    "ShadowPolygon",
    "project_shape_2d",
    "project_shape_3d",
    "interval_intersection",
    "convex_polygon_intersection",
    "circle_intersection_area",
    "interval_union_length",
    "polygon_union_area",
    "convex_hull_2d",
    "polygon_area",
    "shape_centroid",
    "mesh_plate",
    "mesh_disc",
    "mesh_sphere",
]

# Default number of vertices when a sphere/disc outline is polygonized.
# A regular inscribed 256-gon has a relative area deficit below 1e-4.
N_ARC_DEFAULT = 256

_UNIT_TOL = 1e-12


def _as_array(x, dim, name):
    a = np.asarray(x, dtype=float)
    if a.shape != (dim,):
        raise ValueError(f"{name} must have shape ({dim},), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite components")
    return a


@dataclass(frozen=True)
class Direction:
    """Illumination direction: azimuth ``phi`` (2D) plus polar ``theta`` (3D)."""

    phi: float
    theta: float | None = None

    @property
    def is_3d(self) -> bool:
        return self.theta is not None

    @property
    def khat(self) -> np.ndarray:
        if self.theta is None:
            return np.array([math.cos(self.phi), math.sin(self.phi)])
        st, ct = math.sin(self.theta), math.cos(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), ct])

    @property
    def phat(self) -> np.ndarray:
        """2D projection axis perpendicular to the direction."""
        if self.theta is not None:
            raise ValueError("phat is defined for 2D directions only")
        return np.array([-math.sin(self.phi), math.cos(self.phi)])

    def plane_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Orthonormal (theta_hat, phi_hat) basis of the projection plane.

        At the poles (sin(theta) = 0) the basis is fixed to (x, y) to avoid
        the coordinate singularity.
        """
        if self.theta is None:
            raise ValueError("plane basis is defined for 3D directions only")
        st, ct = math.sin(self.theta), math.cos(self.theta)
        if abs(st) < 1e-14:
            return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
        cp, sp = math.cos(self.phi), math.sin(self.phi)
        theta_hat = np.array([ct * cp, ct * sp, -st])
        phi_hat = np.array([-sp, cp, 0.0])
        return theta_hat, phi_hat


# ---------------------------------------------------------------------------
# 2D shapes


@dataclass(frozen=True, eq=False)
class Segment:
    start: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "start", _as_array(self.start, 2, "start"))
        object.__setattr__(self, "end", _as_array(self.end, 2, "end"))
        if np.allclose(self.start, self.end):
            raise ValueError("segment endpoints must be distinct")

    @property
    def dimension(self) -> int:
        return 2


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray  # (m, 2), strictly convex, CCW

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least 3 two-dimensional vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon has non-finite vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = float(np.abs(v).max()) or 1.0
        if np.any(cross <= 1e-12 * scale * scale):
            raise ValueError("vertices must be strictly convex in CCW order")
        object.__setattr__(self, "vertices", v)

    @property
    def dimension(self) -> int:
        return 2


@dataclass(frozen=True, eq=False)
class Disc:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_array(self.center, 2, "center"))
        if not (self.radius > 0):
            raise ValueError("disc radius must be positive")

    @property
    def dimension(self) -> int:
        return 2


# ---------------------------------------------------------------------------
# 3D shapes


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray  # (n, 3)
    triangles: np.ndarray  # (m, 3) int indices
    normals: np.ndarray  # (m, 3) unit outward normals
    closed: bool = False  # closed convex surface (ray crosses twice)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=int)
        n = np.asarray(self.normals, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("mesh vertices must have shape (n, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("mesh triangles must have shape (m, 3)")
        if n.shape != (t.shape[0], 3):
            raise ValueError("one unit normal per triangle required")
        if t.min() < 0 or t.max() >= v.shape[0]:
            raise ValueError("triangle indices out of range")
        areas = _triangle_areas(v, t)
        if np.any(areas <= 0):
            raise ValueError("mesh contains degenerate triangles")
        if np.any(np.abs(np.linalg.norm(n, axis=1) - 1.0) > 1e-9):
            raise ValueError("normals must be unit length")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "normals", n)

    @property
    def dimension(self) -> int:
        return 3

    @property
    def areas(self) -> np.ndarray:
        return _triangle_areas(self.vertices, self.triangles)

    @property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def crossings(self) -> float:
        """Ray/boundary crossing count: 2 for a closed convex surface, 1 planar."""
        return 2.0 if self.closed else 1.0


def _triangle_areas(vertices, triangles) -> np.ndarray:
    p = vertices[triangles]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_array(self.center, 3, "center"))
        if not (self.radius > 0):
            raise ValueError("sphere radius must be positive")

    @property
    def dimension(self) -> int:
        return 3


@dataclass(frozen=True, eq=False)
class PlanarPolygon:
    vertices: np.ndarray  # (m, 3), coplanar
    normal: np.ndarray  # unit plane normal

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        n = _as_array(self.normal, 3, "normal")
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
            raise ValueError("planar polygon needs at least 3 three-dimensional vertices")
        if abs(np.linalg.norm(n) - 1.0) > _UNIT_TOL:
            n = n / np.linalg.norm(n)
        scale = float(np.abs(v).max()) or 1.0
        offsets = (v - v[0]) @ n
        if np.any(np.abs(offsets) > 1e-9 * scale):
            raise ValueError("vertices are not coplanar with the given normal")
        # require a convex ring so projections stay convex without hulling
        e1 = v[1] - v[0]
        e1 = e1 / np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        flat = np.column_stack([(v - v[0]) @ e1, (v - v[0]) @ e2])
        edges = np.roll(flat, -1, axis=0) - flat
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        if not (np.all(cross > 1e-12 * scale * scale) or np.all(cross < -1e-12 * scale * scale)):
            raise ValueError("planar polygon must be strictly convex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "normal", n)

    @property
    def dimension(self) -> int:
        return 3


# ---------------------------------------------------------------------------
# Shadow regions


@dataclass(frozen=True)
class ShadowInterval:
    """Projection of a 2D shape on the axis perpendicular to the direction."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("interval needs lo <= hi")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def is_empty(self) -> bool:
        return self.length == 0.0


@dataclass(frozen=True, eq=False)
class ShadowPolygon:
    """Convex CCW polygon in the projection plane; zero vertices means empty."""

    vertices: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def is_empty(self) -> bool:
        return self.vertices.shape[0] < 3 or self.area <= 0.0


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area; positive for CCW vertex order."""
    v = np.asarray(vertices, dtype=float)
    if v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(x @ np.roll(y, -1) - y @ np.roll(x, -1))


def _regular_circle_offsets(n_arc: int) -> np.ndarray:
    t = 2.0 * np.pi * (np.arange(n_arc) + 0.5) / n_arc
    return np.column_stack([np.cos(t), np.sin(t)])


# ---------------------------------------------------------------------------
# Projections


def project_shape_2d(shape, direction: Direction) -> ShadowInterval:
    """Interval of p = phat . r over the shape, phat = (-sin phi, cos phi)."""
    phat = direction.phat
    if isinstance(shape, Segment):
        p = np.array([shape.start @ phat, shape.end @ phat])
        return ShadowInterval(float(p.min()), float(p.max()))
    if isinstance(shape, ConvexPolygon):
        p = shape.vertices @ phat
        return ShadowInterval(float(p.min()), float(p.max()))
    if isinstance(shape, Disc):
        c = float(shape.center @ phat)
        return ShadowInterval(c - shape.radius, c + shape.radius)
    raise TypeError(f"not a 2D shape: {type(shape).__name__}")


def project_shape_3d(shape, direction: Direction, n_arc: int = N_ARC_DEFAULT) -> ShadowPolygon:
    """Convex shadow polygon in the (theta_hat, phi_hat) plane of the direction."""
    e1, e2 = direction.plane_basis()
    basis = np.column_stack([e1, e2])
    if isinstance(shape, Sphere):
        c2 = shape.center @ basis
        return ShadowPolygon(c2 + shape.radius * _regular_circle_offsets(n_arc))
    if isinstance(shape, PlanarPolygon):
        # projection of a convex ring stays a convex ring (up to orientation)
        flat = shape.vertices @ basis
        area = polygon_area(flat)
        scale = max(float(np.abs(flat).max()), 1.0)
        if abs(area) <= 1e-12 * scale * scale:
            return ShadowPolygon()
        return ShadowPolygon(flat if area > 0 else flat[::-1])
    if isinstance(shape, TriangleMesh):
        return ShadowPolygon(convex_hull_2d(shape.vertices @ basis))
    raise TypeError(f"not a 3D shape: {type(shape).__name__}")


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """CCW convex hull vertices; degenerate (collinear) inputs give an empty set."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 3:
        return np.zeros((0, 2))
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return np.zeros((0, 2))
    return pts[hull.vertices]


# ---------------------------------------------------------------------------
# Intersections


def interval_intersection(a: ShadowInterval, b: ShadowInterval) -> ShadowInterval:
    """Overlap of two shadow intervals; touching endpoints count as empty."""
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if hi <= lo:
        return ShadowInterval(0.0, 0.0)
    return ShadowInterval(lo, hi)


def _clip_halfplane(poly: np.ndarray, p: np.ndarray, q: np.ndarray, eps: float) -> np.ndarray:
    """Keep the part of a polygon left of the directed edge p -> q."""
    d = q - p
    out = []
    n = poly.shape[0]
    cr = d[0] * (poly[:, 1] - p[1]) - d[1] * (poly[:, 0] - p[0])
    for i in range(n):
        j = (i + 1) % n
        ci, cj = cr[i], cr[j]
        if ci >= -eps:
            out.append(poly[i])
        if (ci > eps and cj < -eps) or (ci < -eps and cj > eps):
            t = ci / (ci - cj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.asarray(out).reshape(-1, 2)


def _dedupe_ring(poly: np.ndarray, eps: float) -> np.ndarray:
    if poly.shape[0] == 0:
        return poly
    keep = [poly[0]]
    for v in poly[1:]:
        if np.abs(v - keep[-1]).max() > eps:
            keep.append(v)
    if len(keep) > 1 and np.abs(keep[0] - keep[-1]).max() <= eps:
        keep.pop()
    return np.asarray(keep).reshape(-1, 2)


def convex_polygon_intersection(a: ShadowPolygon, b: ShadowPolygon) -> ShadowPolygon:
    """Sutherland-Hodgman clip of convex polygon a by convex polygon b."""
    if a.is_empty or b.is_empty:
        return ShadowPolygon()
    scale = max(float(np.abs(a.vertices).max()), float(np.abs(b.vertices).max()), 1.0)
    eps = 1e-12 * scale * scale
    poly = a.vertices
    bv = b.vertices
    for i in range(bv.shape[0]):
        poly = _clip_halfplane(poly, bv[i], bv[(i + 1) % bv.shape[0]], eps)
        if poly.shape[0] < 3:
            return ShadowPolygon()
    poly = _dedupe_ring(poly, 1e-12 * scale)
    if poly.shape[0] < 3 or polygon_area(poly) <= eps:
        return ShadowPolygon()
    return ShadowPolygon(poly)


def circle_intersection_area(a1: float, a2: float, d: float) -> float:
    """Lens area of two discs with radii a1, a2 and center distance d."""
    if a1 <= 0 or a2 <= 0:
        raise ValueError("radii must be positive")
    if d < 0:
        raise ValueError("center distance must be nonnegative")
    if d >= a1 + a2:
        return 0.0
    if d <= abs(a1 - a2):
        return math.pi * min(a1, a2) ** 2
    total = 0.0
    for an in (a1, a2):
        dn = (d * d + 2 * an * an - a1 * a1 - a2 * a2) / (2 * d * an)
        dn = min(1.0, max(-1.0, dn))
        total += an * an * (math.acos(dn) - dn * math.sqrt(1.0 - dn * dn))
    return total


# ---------------------------------------------------------------------------
# Unions (multi-part shadows)


def interval_union_length(intervals) -> float:
    """Total length of a union of intervals (exact sweep)."""
    segs = sorted((iv.lo, iv.hi) for iv in intervals if not iv.is_empty)
    total = 0.0
    cur_lo = cur_hi = None
    for lo, hi in segs:
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def polygon_union_area(polys, raster_cells: int = 1024) -> float:
    """Area of a union of convex polygons.

    Exact inclusion-exclusion for up to 8 polygons (intersections of convex
    polygons stay convex); a rasterization fallback is used beyond that.
    """
    parts = [p for p in polys if not p.is_empty]
    if not parts:
        return 0.0
    if len(parts) == 1:
        return parts[0].area
    if len(parts) <= 8:
        total = 0.0

        def descend(current: ShadowPolygon, start: int, sign: float):
            nonlocal total
            for i in range(start, len(parts)):
                inter = convex_polygon_intersection(current, parts[i])
                if inter.is_empty:
                    continue
                total += sign * inter.area
                descend(inter, i + 1, -sign)

        for i, p in enumerate(parts):
            total += p.area
            descend(p, i + 1, -1.0)
        return total
    return _raster_union_area(parts, raster_cells)


def _raster_union_area(parts, n_cells: int) -> float:
    allv = np.vstack([p.vertices for p in parts])
    lo = allv.min(axis=0)
    hi = allv.max(axis=0)
    span = hi - lo
    if span[0] <= 0 or span[1] <= 0:
        return 0.0
    xs = lo[0] + (np.arange(n_cells) + 0.5) * span[0] / n_cells
    ys = lo[1] + (np.arange(n_cells) + 0.5) * span[1] / n_cells
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inside = np.zeros(pts.shape[0], dtype=bool)
    for p in parts:
        inside |= points_in_convex_polygon(pts, p.vertices)
    return float(inside.mean()) * span[0] * span[1]


def points_in_convex_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Vectorized inside-or-on test against a convex CCW polygon."""
    v = np.asarray(vertices, dtype=float)
    inside = np.ones(points.shape[0], dtype=bool)
    for i in range(v.shape[0]):
        p, q = v[i], v[(i + 1) % v.shape[0]]
        d = q - p
        cr = d[0] * (points[:, 1] - p[1]) - d[1] * (points[:, 0] - p[0])
        inside &= cr >= 0.0
    return inside


# ---------------------------------------------------------------------------
# Centroids


def shape_centroid(shape) -> np.ndarray:
    """Geometric centroid used for the shadow-ordering convention."""
    if isinstance(shape, Segment):
        return 0.5 * (shape.start + shape.end)
    if isinstance(shape, ConvexPolygon):
        v = shape.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum()
        cx = ((x + xn) * cross).sum() / (6.0 * area)
        cy = ((y + yn) * cross).sum() / (6.0 * area)
        return np.array([cx, cy])
    if isinstance(shape, (Disc, Sphere)):
        return shape.center.copy()
    if isinstance(shape, PlanarPolygon):
        return shape.vertices.mean(axis=0)
    if isinstance(shape, TriangleMesh):
        areas = shape.areas
        return (shape.centroids * areas[:, None]).sum(axis=0) / areas.sum()
    raise TypeError(f"not a shape: {type(shape).__name__}")


# ---------------------------------------------------------------------------
# Mesh builders


def mesh_plate(origin, u_vec, v_vec, h: float) -> TriangleMesh:
    """Structured triangulation of the parallelogram origin + s*u + t*v, s,t in [0,1]."""
    origin = _as_array(origin, 3, "origin")
    u = _as_array(u_vec, 3, "u_vec")
    v = _as_array(v_vec, 3, "v_vec")
    nu = max(1, int(round(np.linalg.norm(u) / h)))
    nv = max(1, int(round(np.linalg.norm(v) / h)))
    si = np.linspace(0.0, 1.0, nu + 1)
    ti = np.linspace(0.0, 1.0, nv + 1)
    verts = (origin[None, :] + si[:, None, None] * u[None, None, :]
             + ti[None, :, None] * v[None, None, :]).reshape(-1, 3)
    tris = []
    for i in range(nu):
        for j in range(nv):
            a = i * (nv + 1) + j
            b = (i + 1) * (nv + 1) + j
            tris.append([a, b, a + 1])
            tris.append([b, b + 1, a + 1])
    tris = np.asarray(tris, dtype=int)
    n = np.cross(u, v)
    n = n / np.linalg.norm(n)
    normals = np.tile(n, (tris.shape[0], 1))
    return TriangleMesh(verts, tris, normals, closed=False)


def mesh_disc(center, normal, radius: float, h: float) -> TriangleMesh:
    """Delaunay triangulation of concentric rings with spacing ~h."""
    from scipy.spatial import Delaunay

    center = _as_array(center, 3, "center")
    normal = _as_array(normal, 3, "normal")
    normal = normal / np.linalg.norm(normal)
    e1 = np.cross(normal, [0.0, 0.0, 1.0])
    if np.linalg.norm(e1) < 1e-9:
        e1 = np.cross(normal, [0.0, 1.0, 0.0])
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(normal, e1)
    n_rings = max(2, int(round(radius / h)))
    pts2 = [np.zeros((1, 2))]
    for i in range(1, n_rings + 1):
        r = radius * i / n_rings
        m = max(6, int(round(2 * np.pi * r / h)))
        t = 2 * np.pi * np.arange(m) / m + (0.5 * np.pi * i / n_rings)
        pts2.append(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    pts2 = np.vstack(pts2)
    tri = Delaunay(pts2)
    verts = center[None, :] + pts2[:, 0:1] * e1[None, :] + pts2[:, 1:2] * e2[None, :]
    tris = tri.simplices.copy()
    # enforce consistent in-plane orientation
    p = pts2[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    cr = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    flip = cr < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    normals = np.tile(normal, (tris.shape[0], 1))
    return TriangleMesh(verts, tris, normals, closed=False)


def mesh_sphere(center, radius: float, h: float) -> TriangleMesh:
    """Latitude/longitude triangulation of a sphere surface with spacing ~h."""
    center = _as_array(center, 3, "center")
    n_theta = max(4, int(round(np.pi * radius / h)))
    n_phi = max(6, int(round(2 * np.pi * radius / h)))
    thetas = np.pi * np.arange(1, n_theta) / n_theta
    verts = [np.array([0.0, 0.0, radius])]
    rows = []
    for th in thetas:
        row = []
        for j in range(n_phi):
            ph = 2 * np.pi * j / n_phi
            row.append(len(verts))
            verts.append(radius * np.array([
                math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]))
        rows.append(row)
    south = len(verts)
    verts.append(np.array([0.0, 0.0, -radius]))
    verts = np.asarray(verts) + center[None, :]
    tris = []
    for j in range(n_phi):
        tris.append([0, rows[0][j], rows[0][(j + 1) % n_phi]])
    for i in range(len(rows) - 1):
        for j in range(n_phi):
            a, b = rows[i][j], rows[i][(j + 1) % n_phi]
            c, d = rows[i + 1][j], rows[i + 1][(j + 1) % n_phi]
            tris.append([a, c, b])
            tris.append([b, c, d])
    for j in range(n_phi):
        tris.append([south, rows[-1][(j + 1) % n_phi], rows[-1][j]])
    tris = np.asarray(tris, dtype=int)
    p = verts[tris]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    # orient outward
    out = p.mean(axis=1) - center[None, :]
    sign = np.sign(np.einsum("ij,ij->i", normals, out))
    normals *= sign[:, None]
    return TriangleMesh(verts, tris, normals, closed=True)
