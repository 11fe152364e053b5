"""Mutual shadow totals, closed forms, the mesh surface integral, and NDoF estimates.

The mutual shadow of a transmitting and a receiving region at one
illumination direction is the overlap of their projected shadows, counted
only when the transmitter precedes the receiver along the propagation
direction (the reverse shadow is excluded).  Integrating the overlap over
all directions gives the total mutual shadow length L_TR (2D) or area
A_TR (3D), from which the analytic NDoF estimate follows:

    N_a = L_TR / lambda          (2D, one polarization)
    N_a = A_TR / lambda**2       (3D scalar)
    N_a = 2 A_TR / lambda**2     (3D electromagnetic, two polarizations)
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import OrderingUndefinedError, PanelsTooCloseError, SpheresOverlapError
from .geometry import (
    ConvexPolygon,
    Direction,
    Disc,
    PlanarPolygon,
    Segment,
    Sphere,
    TriangleMesh,
    circle_intersection_area,
    convex_polygon_intersection,
    interval_intersection,
    interval_union_length,
    points_in_convex_polygon,
    polygon_union_area,
    project_shape_2d,
    project_shape_3d,
    shape_centroid,
)
from .quadrature import (
    DirectionQuadrature,
    gauss_legendre,
    scene_circle_quadrature,
    scene_sphere_quadrature,
)

__all__ = [
    "Region",
    "MutualShadowResult",
    "NdofEstimate",
    "mutual_shadow_direction",
    "transmitter_shadow_direction",
    "total_mutual_shadow",
    "total_shadow",
    "shadow_length_two_lines",
    "shadow_area_two_discs",
    "shadow_area_two_spheres",
    "mesh_mutual_shadow",
    "ndof_from_shadow",
    "reference_ndof",
    "wavelength_for_ndof",
    "region_min_distance",
]

NDOF_MODELS = ("scalar2d", "scalar3d", "em3d")

_CHUNK = 256  # directions per work unit; fixed so results ignore thread count


@dataclass(frozen=True, eq=False)
class Region:
    """A transmitter or receiver support made of one or more shapes."""

    parts: tuple
    label: str = "T"

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("region needs at least one part")
        dims = {p.dimension for p in parts}
        if len(dims) != 1:
            raise ValueError("all parts of a region must share the dimension")
        object.__setattr__(self, "parts", parts)

    @property
    def dimension(self) -> int:
        return self.parts[0].dimension

    @property
    def centroids(self) -> list[np.ndarray]:
        return [shape_centroid(p) for p in self.parts]


@dataclass(frozen=True, eq=False)
class MutualShadowResult:
    """Weighted per-direction mutual shadow values and their total."""

    total: float
    angles: np.ndarray  # (N,) phi or (N, 2) [theta, phi]
    weights: np.ndarray
    values: np.ndarray
    dim: int
    rule: str

    def __post_init__(self):
        recomputed = math.fsum(w * v for w, v in zip(self.weights, self.values))
        scale = max(abs(self.total), 1e-300)
        if abs(recomputed - self.total) > 1e-12 * scale:
            raise ValueError("total does not match the weighted sum of per-direction values")

    @property
    def n_directions(self) -> int:
        return self.weights.shape[0]

    def per_direction(self):
        if self.dim == 2:
            for phi, v in zip(self.angles, self.values):
                yield Direction(float(phi)), float(v)
        else:
            for (theta, phi), v in zip(self.angles, self.values):
                yield Direction(float(phi), float(theta)), float(v)


@dataclass(frozen=True)
class NdofEstimate:
    n_a: float
    model: str
    wavelength: float


# ---------------------------------------------------------------------------
# Per-direction shadows


def _ordering(khat: np.ndarray, t_cents, r_cents) -> bool:
    """True when every transmitter part precedes every receiver part along khat."""
    kt = [float(khat @ c) for c in t_cents]
    kr = [float(khat @ c) for c in r_cents]
    if max(kt) <= min(kr):
        return True
    if max(kr) <= min(kt):
        return False
    raise OrderingUndefinedError(
        "transmitter and receiver parts interleave along the illumination direction"
    )


def _mutual_value(t_parts, r_parts, t_cents, r_cents, direction: Direction, n_arc: int) -> float:
    if not _ordering(direction.khat, t_cents, r_cents):
        return 0.0
    if direction.is_3d:
        if len(t_parts) == 1 and len(r_parts) == 1 \
                and isinstance(t_parts[0], Sphere) and isinstance(r_parts[0], Sphere):
            e1, e2 = direction.plane_basis()
            basis = np.column_stack([e1, e2])
            d = float(np.linalg.norm((t_parts[0].center - r_parts[0].center) @ basis))
            return circle_intersection_area(t_parts[0].radius, r_parts[0].radius, d)
        st = [project_shape_3d(p, direction, n_arc) for p in t_parts]
        sr = [project_shape_3d(p, direction, n_arc) for p in r_parts]
        if len(st) == 1 and len(sr) == 1:
            return convex_polygon_intersection(st[0], sr[0]).area
        pieces = [convex_polygon_intersection(a, b) for a in st for b in sr]
        return polygon_union_area(pieces)
    it = [project_shape_2d(p, direction) for p in t_parts]
    ir = [project_shape_2d(p, direction) for p in r_parts]
    if len(it) == 1 and len(ir) == 1:
        return interval_intersection(it[0], ir[0]).length
    pieces = [interval_intersection(a, b) for a in it for b in ir]
    return interval_union_length(pieces)


def mutual_shadow_direction(T: Region, R: Region, direction: Direction, n_arc: int = 256) -> float:
    """Overlap measure of the T and R shadows at one illumination direction.

    Counted only when the transmitter casts onto the receiver (every T part
    centroid precedes every R part centroid along the direction); raises
    OrderingUndefinedError when the part centroids interleave.
    """
    if T.dimension != R.dimension:
        raise ValueError("regions must share the dimension")
    return _mutual_value(T.parts, R.parts, T.centroids, R.centroids, direction, n_arc)


def transmitter_shadow_direction(T: Region, direction: Direction, n_arc: int = 256) -> float:
    """Shadow measure of the transmitter alone (far-field receiver)."""
    if T.dimension == 2:
        return interval_union_length([project_shape_2d(p, direction) for p in T.parts])
    shadows = [project_shape_3d(p, direction, n_arc) for p in T.parts]
    if len(shadows) == 1:
        return shadows[0].area
    return polygon_union_area(shadows)


# ---------------------------------------------------------------------------
# Direction-quadrature totals


def _evaluate(quad: DirectionQuadrature, fn, threads: int) -> tuple[float, np.ndarray]:
    """Apply fn per direction and sum w*f in fixed index order (thread-safe)."""
    values = np.empty(quad.n)
    dirs = list(quad.directions())

    def work(lo: int, hi: int):
        for i in range(lo, hi):
            values[i] = fn(dirs[i])

    spans = [(lo, min(lo + _CHUNK, quad.n)) for lo in range(0, quad.n, _CHUNK)]
    if threads <= 1 or len(spans) == 1:
        for lo, hi in spans:
            work(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda s: work(*s), spans))
    total = math.fsum(w * v for w, v in zip(quad.weights, values))
    return total, values


def _support_intervals_2d(part, phats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Projection interval bounds of one 2D shape for a whole direction batch."""
    if isinstance(part, Segment):
        p = np.stack([part.start, part.end]) @ phats.T
        return p.min(axis=0), p.max(axis=0)
    if isinstance(part, ConvexPolygon):
        p = part.vertices @ phats.T
        return p.min(axis=0), p.max(axis=0)
    if isinstance(part, Disc):
        c = part.center @ phats.T
        return c - part.radius, c + part.radius
    raise TypeError(f"not a 2D shape: {type(part).__name__}")


def _fast_2d_values(T: Region, R: Region | None, quad: DirectionQuadrature) -> np.ndarray:
    """Vectorized per-direction shadows for single-part 2D scenes."""
    phis = quad.angles
    phats = np.column_stack([-np.sin(phis), np.cos(phis)])
    lo_t, hi_t = _support_intervals_2d(T.parts[0], phats)
    if R is None:
        return hi_t - lo_t
    lo_r, hi_r = _support_intervals_2d(R.parts[0], phats)
    khats = np.column_stack([np.cos(phis), np.sin(phis)])
    kt = np.asarray(T.centroids[0]) @ khats.T
    kr = np.asarray(R.centroids[0]) @ khats.T
    overlap = np.minimum(hi_t, hi_r) - np.maximum(lo_t, lo_r)
    return np.where((kt <= kr) & (overlap > 0.0), overlap, 0.0)


def _fast_2d_applicable(region: Region | None) -> bool:
    if region is None:
        return True
    return len(region.parts) == 1 and isinstance(
        region.parts[0], (Segment, ConvexPolygon, Disc))


def scene_quadrature(T: Region, R: Region | None, n_directions: int = 4096,
                     n_theta: int = 128, n_phi: int = 256,
                     arc=None) -> DirectionQuadrature:
    """Default direction rule for a scene, panelized at its shadow kinks."""
    shapes = list(T.parts) + (list(R.parts) if R is not None else [])
    if T.dimension == 2:
        pairs = []
        if R is not None:
            pairs = [(ct, cr) for ct in T.centroids for cr in R.centroids]
        kwargs = {} if arc is None else {"arc": arc}
        return scene_circle_quadrature(shapes, n_directions, perpendicular_pairs=pairs, **kwargs)
    kwargs = {}
    if arc is not None:
        kwargs = {"theta_range": arc[0], "phi_range": arc[1]}
    return scene_sphere_quadrature(shapes, n_theta, n_phi, **kwargs)


def total_mutual_shadow(T: Region, R: Region, quad: DirectionQuadrature | None = None,
                        n_directions: int = 4096, n_theta: int = 128, n_phi: int = 256,
                        threads: int = 1, n_arc: int = 256) -> MutualShadowResult:
    """Total mutual shadow L_TR (2D) or A_TR (3D) over a direction quadrature."""
    if T.dimension != R.dimension:
        raise ValueError("regions must share the dimension")
    if quad is None:
        quad = scene_quadrature(T, R, n_directions, n_theta, n_phi)
    if (quad.dim == 2) != (T.dimension == 2):
        raise ValueError("quadrature dimension does not match the regions")
    if quad.dim == 2 and _fast_2d_applicable(T) and _fast_2d_applicable(R):
        values = _fast_2d_values(T, R, quad)
        total = math.fsum(w * v for w, v in zip(quad.weights, values))
    else:
        t_parts, r_parts = T.parts, R.parts
        t_cents, r_cents = T.centroids, R.centroids
        total, values = _evaluate(
            quad, lambda d: _mutual_value(t_parts, r_parts, t_cents, r_cents, d, n_arc),
            threads)
    return MutualShadowResult(total, quad.angles, quad.weights, values, quad.dim, quad.rule)


def total_shadow(T: Region, quad: DirectionQuadrature | None = None,
                 n_directions: int = 4096, n_theta: int = 128, n_phi: int = 256,
                 threads: int = 1, n_arc: int = 256) -> MutualShadowResult:
    """Total transmitter shadow over a (possibly partial) far-field coverage."""
    if quad is None:
        quad = scene_quadrature(T, None, n_directions, n_theta, n_phi)
    if quad.dim == 2 and T.dimension == 2 and _fast_2d_applicable(T):
        values = _fast_2d_values(T, None, quad)
        total = math.fsum(w * v for w, v in zip(quad.weights, values))
    else:
        total, values = _evaluate(
            quad, lambda d: transmitter_shadow_direction(T, d, n_arc), threads)
    return MutualShadowResult(total, quad.angles, quad.weights, values, quad.dim, quad.rule)


# ---------------------------------------------------------------------------
# Closed forms


def shadow_length_two_lines(l1: float, l2: float, d: float) -> float:
    """Total mutual shadow length of two parallel lines separated by d.

    L_TR = 2 d (sqrt(1 + beta**2) - sqrt(1 + delta**2)) with
    beta = (l1 + l2)/(2 d) and delta = |l1 - l2|/(2 d); the limits are
    2 min(l1, l2) as d -> 0 and l1 l2 / d as d -> infinity.
    """
    if l1 <= 0 or l2 <= 0 or d <= 0:
        raise ValueError("lengths and separation must be positive")
    beta = (l1 + l2) / (2.0 * d)
    delta = abs(l1 - l2) / (2.0 * d)
    return 2.0 * d * (math.sqrt(1.0 + beta * beta) - math.sqrt(1.0 + delta * delta))


def shadow_area_two_discs(a: float, d: float) -> float:
    """Total mutual shadow area of two parallel coaxial discs with radius a.

    A_TR = (pi**2/4) (sqrt(4 a**2 + d**2) - d)**2, approaching pi * A for
    d -> 0 and A**2/d**2 for d -> infinity (A = pi a**2).
    """
    if a <= 0 or d <= 0:
        raise ValueError("radius and separation must be positive")
    root = math.sqrt(4.0 * a * a + d * d)
    return (math.pi ** 2 / 4.0) * (root - d) ** 2


def shadow_area_two_spheres(a1: float, a2: float, h: float, n_theta: int = 2048) -> float:
    """Total mutual shadow area of two spheres with center distance h.

    Containment contributes 2 pi**2 min(a1,a2)**2 (1 - cos theta1); the
    partial-overlap band theta1..theta2 (sin theta1 = |a1-a2|/h,
    sin theta2 = (a1+a2)/h) is integrated with weight 2 pi sin(theta)
    using the two-disc lens area at center distance d = h sin(theta).
    """
    if a1 <= 0 or a2 <= 0:
        raise ValueError("radii must be positive")
    if h <= a1 + a2:
        raise SpheresOverlapError("sphere separation must exceed the sum of radii")
    theta1 = math.asin(abs(a1 - a2) / h)
    theta2 = math.asin((a1 + a2) / h)
    amin = min(a1, a2)
    contained = 2.0 * math.pi ** 2 * amin * amin * (1.0 - math.cos(theta1))
    xs, ws = gauss_legendre(n_theta)
    theta = 0.5 * (theta1 + theta2) + 0.5 * (theta2 - theta1) * xs
    w = 0.5 * (theta2 - theta1) * ws
    vals = np.array([circle_intersection_area(a1, a2, h * math.sin(t)) * math.sin(t)
                     for t in theta])
    return contained + 2.0 * math.pi * float(w @ vals)


# ---------------------------------------------------------------------------
# Mesh surface integral


def _gather_panels(region: Region):
    cents, areas, normals, diams = [], [], [], []
    for part in region.parts:
        if not isinstance(part, TriangleMesh):
            raise TypeError("mesh_mutual_shadow needs TriangleMesh parts; "
                            "mesh spheres/discs/plates first")
        cents.append(part.centroids)
        areas.append(part.areas)
        normals.append(part.normals)
        p = part.vertices[part.triangles]
        e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
        diams.append(np.linalg.norm(e, axis=2).max(axis=1))
    return (np.vstack(cents), np.concatenate(areas), np.vstack(normals), np.concatenate(diams))


def _region_crossings(region: Region, override) -> float:
    if override is not None:
        return float(override)
    values = {p.crossings for p in region.parts}
    if len(values) != 1:
        raise ValueError("parts disagree on ray-crossing count; pass xi explicitly")
    return values.pop()


def mesh_mutual_shadow(T: Region, R: Region, xi_t: float | None = None,
                       xi_r: float | None = None, threads: int = 1) -> float:
    """Total mutual shadow area from the panel-pair surface integral.

    Midpoint rule over triangle pairs of |n_T (dot) R| |n_R (dot) R| / |R|**4
    times the panel areas.  The double surface integral counts every ray
    once per boundary crossing, so the sum is divided by the crossing counts
    xi_T xi_R (2 for closed convex surfaces, 1 for planar patches).
    """
    ct, at, nt, dt = _gather_panels(T)
    cr, ar, nr, dr = _gather_panels(R)
    xt = _region_crossings(T, xi_t)
    xr = _region_crossings(R, xi_r)

    def work(lo: int, hi: int) -> float:
        rvec = cr[None, :, :] - ct[lo:hi, None, :]  # (m, n, 3)
        dist = np.linalg.norm(rvec, axis=2)
        limit = 2.0 * np.maximum.outer(dt[lo:hi], dr)
        if np.any(dist < limit):
            raise PanelsTooCloseError(
                "panel centroids closer than twice the local panel diameter; refine the mesh")
        num = np.abs(np.einsum("mj,mnj->mn", nt[lo:hi], rvec)) \
            * np.abs(np.einsum("nj,mnj->mn", nr, rvec))
        vals = num / dist ** 4 * at[lo:hi, None] * ar[None, :]
        return float(vals.sum())

    spans = [(lo, min(lo + 128, ct.shape[0])) for lo in range(0, ct.shape[0], 128)]
    if threads <= 1 or len(spans) == 1:
        partials = [work(*s) for s in spans]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda s: work(*s), spans))
    return math.fsum(partials) / (xt * xr)


# ---------------------------------------------------------------------------
# NDoF estimates


def _total_of(msr) -> float:
    return float(msr.total) if isinstance(msr, MutualShadowResult) else float(msr)


def ndof_from_shadow(msr, wavelength: float, model: str) -> NdofEstimate:
    """Analytic NDoF from a total mutual shadow: L/lambda, A/lambda**2, or 2A/lambda**2."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    total = _total_of(msr)
    if model == "scalar2d":
        n_a = total / wavelength
    elif model == "scalar3d":
        n_a = total / wavelength ** 2
    elif model == "em3d":
        n_a = 2.0 * (total / wavelength ** 2)
    else:
        raise ValueError(f"unknown NDoF model {model!r}; expected one of {NDOF_MODELS}")
    return NdofEstimate(n_a, model, wavelength)


def wavelength_for_ndof(msr, n_a: float, model: str) -> float:
    """Wavelength that makes the shadow-based NDoF equal n_a (inverse of ndof_from_shadow)."""
    if n_a <= 0:
        raise ValueError("target NDoF must be positive")
    total = _total_of(msr)
    if total <= 0:
        raise ValueError("total mutual shadow must be positive")
    if model == "scalar2d":
        return total / n_a
    if model == "scalar3d":
        return math.sqrt(total / n_a)
    if model == "em3d":
        return math.sqrt(2.0 * total / n_a)
    raise ValueError(f"unknown NDoF model {model!r}; expected one of {NDOF_MODELS}")


def reference_ndof(kind: str, **params) -> float:
    """Closed-form NDoF references (Weyl, total-shadow, paraxial)."""
    lam = params.get("wavelength")
    if lam is None or lam <= 0:
        raise ValueError("wavelength must be positive")

    def positive(name):
        v = params.get(name)
        if v is None or v <= 0:
            raise ValueError(f"{name} must be positive")
        return float(v)

    if kind == "weyl2d":
        return 2.0 * positive("length") / lam
    if kind == "weyl3d":
        return math.pi * positive("area") / lam ** 2
    if kind == "shadow2d":
        return positive("shadow_length") / lam
    if kind == "shadow3d":
        return positive("shadow_area") / lam ** 2
    if kind == "paraxial2d":
        return positive("l_t") * positive("l_r") / (positive("distance") * lam)
    if kind == "paraxial3d":
        return positive("a_t") * positive("a_r") / (positive("distance") ** 2 * lam ** 2)
    raise ValueError(f"unknown reference kind {kind!r}")


# ---------------------------------------------------------------------------
# Region separation (validation helper)


def _boundary_points(shape, n: int = 128) -> np.ndarray:
    if isinstance(shape, Segment):
        t = np.linspace(0.0, 1.0, n)[:, None]
        return shape.start[None, :] * (1 - t) + shape.end[None, :] * t
    if isinstance(shape, ConvexPolygon):
        v = shape.vertices
        pts = []
        per_edge = max(2, n // v.shape[0])
        for i in range(v.shape[0]):
            t = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None]
            pts.append(v[i][None, :] * (1 - t) + v[(i + 1) % v.shape[0]][None, :] * t)
        return np.vstack(pts)
    if isinstance(shape, Disc):
        t = 2 * np.pi * np.arange(n) / n
        return shape.center[None, :] + shape.radius * np.column_stack([np.cos(t), np.sin(t)])
    if isinstance(shape, Sphere):
        m = max(4, int(math.sqrt(n)))
        th = np.pi * (np.arange(m) + 0.5) / m
        ph = 2 * np.pi * np.arange(m) / m
        tt, pp = np.meshgrid(th, ph, indexing="ij")
        offs = np.column_stack([
            (np.sin(tt) * np.cos(pp)).ravel(),
            (np.sin(tt) * np.sin(pp)).ravel(),
            np.cos(tt).ravel(),
        ])
        return shape.center[None, :] + shape.radius * offs
    if isinstance(shape, PlanarPolygon):
        v = shape.vertices
        pts = []
        per_edge = max(2, n // v.shape[0])
        for i in range(v.shape[0]):
            t = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None]
            pts.append(v[i][None, :] * (1 - t) + v[(i + 1) % v.shape[0]][None, :] * t)
        return np.vstack(pts)
    if isinstance(shape, TriangleMesh):
        return shape.vertices
    raise TypeError(f"not a shape: {type(shape).__name__}")


def _point_inside(shape, pts: np.ndarray) -> np.ndarray:
    if isinstance(shape, Disc):
        return np.linalg.norm(pts - shape.center[None, :], axis=1) <= shape.radius
    if isinstance(shape, Sphere):
        return np.linalg.norm(pts - shape.center[None, :], axis=1) <= shape.radius
    if isinstance(shape, ConvexPolygon):
        return points_in_convex_polygon(pts, shape.vertices)
    return np.zeros(pts.shape[0], dtype=bool)


def region_min_distance(T: Region, R: Region, n_boundary: int = 256) -> float:
    """Approximate minimum distance between two regions (0 when overlapping).

    Boundary-sampled; accurate to the boundary sampling density, which is
    sufficient for the disjointness validation it backs.
    """
    from scipy.spatial.distance import cdist

    t_pts = [(_boundary_points(p, n_boundary), p) for p in T.parts]
    r_pts = [(_boundary_points(p, n_boundary), p) for p in R.parts]
    best = math.inf
    for pa, sa in t_pts:
        for pb, sb in r_pts:
            if np.any(_point_inside(sb, pa)) or np.any(_point_inside(sa, pb)):
                return 0.0
            best = min(best, float(cdist(pa, pb).min()))
    return best
